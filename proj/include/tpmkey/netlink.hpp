#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tpmkey/protocol.hpp"
#include "tpmkey/tpm.hpp"

namespace tpmkey::net {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint64_t kDefaultProbeInterval = 25;
inline constexpr std::size_t kHeaderBytes = 5;
inline constexpr std::uint32_t kMaxBodyBytes = 1u << 24;
inline constexpr std::size_t kDigestBytes = 32;

enum class Tag : std::uint8_t {
  Hello = 1,
  Input = 2,
  Output = 3,
  SyncProbe = 4,
  SyncConfirm = 5,
  Abort = 6,
};

enum class AbortReason : std::uint8_t {
  VersionMismatch = 1,
  ParamMismatch = 2,
  RoleConflict = 3,
  MaxRounds = 4,
  ProtocolViolation = 5,
};

std::string_view to_string(AbortReason reason);

struct Hello {
  std::uint16_t protocol_version = kProtocolVersion;
  TpmParams params;
  Role role = Role::Sender;
  std::uint64_t session_id = 0;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct Input {
  std::uint32_t round = 0;
  std::vector<std::int16_t> values;  // K*N, row-major
  friend bool operator==(const Input&, const Input&) = default;
};

struct Output {
  std::uint32_t round = 0;
  std::int8_t o = 1;
  friend bool operator==(const Output&, const Output&) = default;
};

struct SyncProbe {
  std::uint32_t round = 0;
  std::array<std::uint8_t, kDigestBytes> digest{};
  friend bool operator==(const SyncProbe&, const SyncProbe&) = default;
};

struct SyncConfirm {
  std::uint32_t round = 0;
  friend bool operator==(const SyncConfirm&, const SyncConfirm&) = default;
};

struct Abort {
  AbortReason reason = AbortReason::ProtocolViolation;
  friend bool operator==(const Abort&, const Abort&) = default;
};

using Message = std::variant<Hello, Input, Output, SyncProbe, SyncConfirm, Abort>;

Tag tag_of(const Message& m);

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DecodeErrorKind { UnknownTag, Truncated, LengthMismatch, InvalidValue };

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

/// Frame: u32 LE body length, u8 tag, body. All integers little-endian.
std::vector<std::uint8_t> encode_message(const Message& m);
/// Decodes exactly one frame; trailing bytes are a LengthMismatch.
Message decode_message(std::span<const std::uint8_t> frame);
/// Decodes a body whose header has already been read.
Message decode_body(Tag tag, std::span<const std::uint8_t> body);

InputVector to_input_vector(const Input& m, const TpmParams& params);
Input from_input_vector(std::uint32_t round, const InputVector& x);

// --- transports -----------------------------------------------------------

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reliable ordered byte stream.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
  /// Fills `out` completely or throws TransportError.
  virtual void receive(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;
};

void send_message(Transport& t, const Message& m);
Message receive_message(Transport& t);

class TcpTransport : public Transport {
 public:
  explicit TcpTransport(int fd);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  static std::unique_ptr<TcpTransport> connect(const std::string& host, std::uint16_t port);

  void send(std::span<const std::uint8_t> bytes) override;
  void receive(std::span<std::uint8_t> out) override;
  void close() override;

 private:
  int fd_;
};

/// Listening socket; port 0 picks an ephemeral port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port, const std::string& host = "0.0.0.0");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<TcpTransport> accept();

 private:
  int fd_;
  std::uint16_t port_;
};

/// Two connected in-memory endpoints.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_pipe();

struct WireRecord {
  bool outbound = false;
  std::vector<std::uint8_t> bytes;
};

/// Passes traffic through and keeps a copy of every chunk.
class RecordingTransport : public Transport {
 public:
  explicit RecordingTransport(Transport& inner) : inner_(inner) {}
  void send(std::span<const std::uint8_t> bytes) override;
  void receive(std::span<std::uint8_t> out) override;
  void close() override { inner_.close(); }

  std::vector<WireRecord> records() const;
  /// All bytes in one direction, concatenated.
  std::vector<std::uint8_t> stream(bool outbound) const;

 private:
  Transport& inner_;
  mutable std::mutex mutex_;
  std::vector<WireRecord> records_;
};

/// Splits a byte stream into messages.
std::vector<Message> split_messages(std::span<const std::uint8_t> stream);

// --- session --------------------------------------------------------------

struct RemoteOptions {
  std::uint64_t weight_seed = 1;
  std::uint64_t input_seed = 3;  // Sender only
  std::uint64_t session_id = 0;
  std::uint64_t max_rounds = 0;  // 0: default_max_rounds(params)
  std::uint64_t probe_interval = kDefaultProbeInterval;
  std::string hash = "sha256";
  std::uint16_t protocol_version = kProtocolVersion;
};

struct RemoteReport {
  SessionReport report;
  std::optional<AbortReason> abort;  // sent or received
  std::string error;                 // empty on success
  std::uint64_t peer_session_id = 0;
  bool ok() const { return report.status == SessionStatus::Synchronized; }
};

/// Runs one party of the mutual learning protocol over `t`. Never throws for
/// peer or transport problems; those end in status Failed.
RemoteReport run_remote_session(Transport& t, const TpmParams& params, Role role, const RemoteOptions& opts);

}  // namespace tpmkey::net
