#include "tpmkey/netlink.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <limits>
#include <thread>

#include "tpmkey/distill.hpp"
#include "tpmkey/hash.hpp"

namespace tpmkey::net {

std::string_view to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::VersionMismatch: return "version-mismatch";
    case AbortReason::ParamMismatch: return "param-mismatch";
    case AbortReason::RoleConflict: return "role-conflict";
    case AbortReason::MaxRounds: return "max-rounds";
    case AbortReason::ProtocolViolation: return "protocol-violation";
  }
  return "unknown";
}

Tag tag_of(const Message& m) { return static_cast<Tag>(m.index() + 1); }

// --- codec ----------------------------------------------------------------

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  void bytes(std::span<std::uint8_t> out) {
    for (auto& b : out) b = u8();
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t le(int width) {
    if (remaining() < static_cast<std::size_t>(width)) {
      throw DecodeError(DecodeErrorKind::LengthMismatch, "body shorter than its message type requires");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t non_negative(int v, const char* field) {
  if (v < 0) throw EncodeError(std::string("negative ") + field);
  return static_cast<std::uint32_t>(v);
}

int checked_int(std::uint32_t v) {
  if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw DecodeError(DecodeErrorKind::InvalidValue, "parameter out of range");
  }
  return static_cast<int>(v);
}

void encode_body(Writer& w, const Hello& m) {
  w.u16(m.protocol_version);
  w.u32(non_negative(m.params.k, "K"));
  w.u32(non_negative(m.params.l, "L"));
  w.u32(non_negative(m.params.m, "M"));
  w.u32(non_negative(m.params.n, "N"));
  w.u8(static_cast<std::uint8_t>(m.params.rule));
  w.u8(m.params.allow_m_above_l ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(m.role));
  w.u64(m.session_id);
}

void encode_body(Writer& w, const Input& m) {
  w.u32(m.round);
  for (auto v : m.values) w.i16(v);
}

void encode_body(Writer& w, const Output& m) {
  if (m.o != 1 && m.o != -1) throw EncodeError("output must be -1 or +1");
  w.u32(m.round);
  w.u8(static_cast<std::uint8_t>(m.o));
}

void encode_body(Writer& w, const SyncProbe& m) {
  w.u32(m.round);
  w.bytes(m.digest);
}

void encode_body(Writer& w, const SyncConfirm& m) { w.u32(m.round); }

void encode_body(Writer& w, const Abort& m) { w.u8(static_cast<std::uint8_t>(m.reason)); }

Hello decode_hello(Reader& r) {
  Hello m;
  m.protocol_version = r.u16();
  m.params.k = checked_int(r.u32());
  m.params.l = checked_int(r.u32());
  m.params.m = checked_int(r.u32());
  m.params.n = checked_int(r.u32());
  const auto rule = r.u8();
  const auto allow = r.u8();
  const auto role = r.u8();
  if (rule > static_cast<std::uint8_t>(LearningRule::RandomWalk)) {
    throw DecodeError(DecodeErrorKind::InvalidValue, "unknown learning rule");
  }
  if (allow > 1) throw DecodeError(DecodeErrorKind::InvalidValue, "bad flag byte");
  if (role > static_cast<std::uint8_t>(Role::Recipient)) throw DecodeError(DecodeErrorKind::InvalidValue, "unknown role");
  m.params.rule = static_cast<LearningRule>(rule);
  m.params.allow_m_above_l = allow == 1;
  m.role = static_cast<Role>(role);
  m.session_id = r.u64();
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
  Writer w;
  for (int i = 0; i < 5; ++i) w.u8(0);
  std::visit([&](const auto& msg) { encode_body(w, msg); }, m);
  auto& out = w.data();
  const std::size_t body = out.size() - kHeaderBytes;
  if (body > kMaxBodyBytes) throw EncodeError("message body too large");
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(body >> (8 * i));
  out[4] = static_cast<std::uint8_t>(tag_of(m));
  return std::move(out);
}

Message decode_body(Tag tag, std::span<const std::uint8_t> body) {
  Reader r(body);
  auto exact = [&](std::size_t n) {
    if (body.size() != n) throw DecodeError(DecodeErrorKind::LengthMismatch, "body length does not match message type");
  };
  Message result;
  switch (tag) {
    case Tag::Hello:
      exact(29);
      result = decode_hello(r);
      break;
    case Tag::Input: {
      if (body.size() < 4 || (body.size() - 4) % 2 != 0) {
        throw DecodeError(DecodeErrorKind::LengthMismatch, "input body must be a round plus 16-bit values");
      }
      Input m;
      m.round = r.u32();
      m.values.resize((body.size() - 4) / 2);
      for (auto& v : m.values) v = r.i16();
      result = std::move(m);
      break;
    }
    case Tag::Output: {
      exact(5);
      Output m;
      m.round = r.u32();
      m.o = static_cast<std::int8_t>(r.u8());
      if (m.o != 1 && m.o != -1) throw DecodeError(DecodeErrorKind::InvalidValue, "output must be -1 or +1");
      result = m;
      break;
    }
    case Tag::SyncProbe: {
      exact(4 + kDigestBytes);
      SyncProbe m;
      m.round = r.u32();
      r.bytes(m.digest);
      result = m;
      break;
    }
    case Tag::SyncConfirm:
      exact(4);
      result = SyncConfirm{r.u32()};
      break;
    case Tag::Abort: {
      exact(1);
      const auto reason = r.u8();
      if (reason < 1 || reason > static_cast<std::uint8_t>(AbortReason::ProtocolViolation)) {
        throw DecodeError(DecodeErrorKind::InvalidValue, "unknown abort reason");
      }
      result = Abort{static_cast<AbortReason>(reason)};
      break;
    }
    default:
      throw DecodeError(DecodeErrorKind::UnknownTag, "unknown message tag " + std::to_string(static_cast<int>(tag)));
  }
  return result;
}

namespace {

std::uint32_t header_length(std::span<const std::uint8_t> header) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= std::uint32_t{header[static_cast<std::size_t>(i)]} << (8 * i);
  if (len > kMaxBodyBytes) throw DecodeError(DecodeErrorKind::LengthMismatch, "declared body length too large");
  return len;
}

Tag header_tag(std::span<const std::uint8_t> header) {
  const auto tag = header[4];
  if (tag < static_cast<std::uint8_t>(Tag::Hello) || tag > static_cast<std::uint8_t>(Tag::Abort)) {
    throw DecodeError(DecodeErrorKind::UnknownTag, "unknown message tag " + std::to_string(tag));
  }
  return static_cast<Tag>(tag);
}

}  // namespace

Message decode_message(std::span<const std::uint8_t> frame) {
  if (frame.size() < kHeaderBytes) throw DecodeError(DecodeErrorKind::Truncated, "frame shorter than header");
  const auto len = header_length(frame);
  const auto tag = header_tag(frame);
  if (frame.size() < kHeaderBytes + len) throw DecodeError(DecodeErrorKind::Truncated, "frame shorter than declared length");
  if (frame.size() > kHeaderBytes + len) throw DecodeError(DecodeErrorKind::LengthMismatch, "bytes after declared body");
  return decode_body(tag, frame.subspan(kHeaderBytes));
}

std::vector<Message> split_messages(std::span<const std::uint8_t> stream) {
  std::vector<Message> out;
  std::size_t pos = 0;
  while (pos < stream.size()) {
    const auto rest = stream.subspan(pos);
    if (rest.size() < kHeaderBytes) throw DecodeError(DecodeErrorKind::Truncated, "stream ends inside a header");
    const auto len = header_length(rest);
    if (rest.size() < kHeaderBytes + len) throw DecodeError(DecodeErrorKind::Truncated, "stream ends inside a body");
    out.push_back(decode_message(rest.first(kHeaderBytes + len)));
    pos += kHeaderBytes + len;
  }
  return out;
}

InputVector to_input_vector(const Input& m, const TpmParams& params) {
  if (m.values.size() != params.size()) throw ProtocolError("input has wrong number of values");
  InputVector x(params.k, params.n, std::vector<int>(m.values.begin(), m.values.end()));
  x.check(params);
  return x;
}

Input from_input_vector(std::uint32_t round, const InputVector& x) {
  Input m;
  m.round = round;
  m.values.reserve(x.size());
  for (int v : x.values()) {
    if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max()) {
      throw EncodeError("input value outside 16-bit range");
    }
    m.values.push_back(static_cast<std::int16_t>(v));
  }
  return m;
}

// --- transports -------------------------------------------------------------

void send_message(Transport& t, const Message& m) { t.send(encode_message(m)); }

Message receive_message(Transport& t) {
  std::array<std::uint8_t, kHeaderBytes> header{};
  t.receive(header);
  const auto len = header_length(header);
  const auto tag = header_tag(header);
  std::vector<std::uint8_t> body(len);
  t.receive(body);
  return decode_body(tag, body);
}

TcpTransport::TcpTransport(int fd) : fd_(fd) {
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<TcpTransport> TcpTransport::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found, &::freeaddrinfo);
  // The listener may still be starting up.
  for (int attempt = 0; attempt < 50; ++attempt) {
    for (auto* ai = list.get(); ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) return std::make_unique<TcpTransport>(fd);
      ::close(fd);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
}

void TcpTransport::send(std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    if (fd_ < 0) throw TransportError("send on closed connection");
    const auto n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

void TcpTransport::receive(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (fd_ < 0) throw TransportError("receive on closed connection");
    const auto n = ::recv(fd_, out.data() + done, out.size() - done, 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("receive failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

TcpListener::TcpListener(std::uint16_t port, const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* found = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found, &::freeaddrinfo);
  fd_ = ::socket(list->ai_family, list->ai_socktype, list->ai_protocol);
  if (fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, list->ai_addr, list->ai_addrlen) != 0 || ::listen(fd_, 8) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw TransportError("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                     : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

TcpListener::~TcpListener() { ::close(fd_); }

std::unique_ptr<TcpTransport> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpTransport>(fd);
    if (errno != EINTR) throw TransportError(std::string("accept failed: ") + std::strerror(errno));
  }
}

namespace {

struct Channel {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::uint8_t> data;
  bool closed = false;
};

class PipeEnd : public Transport {
 public:
  PipeEnd(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out) : in_(std::move(in)), out_(std::move(out)) {}
  ~PipeEnd() override { close(); }

  void send(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(out_->mutex);
    if (out_->closed) throw TransportError("pipe closed");
    out_->data.insert(out_->data.end(), bytes.begin(), bytes.end());
    out_->ready.notify_all();
  }

  void receive(std::span<std::uint8_t> out) override {
    std::unique_lock lock(in_->mutex);
    in_->ready.wait(lock, [&] { return in_->data.size() >= out.size() || in_->closed; });
    if (in_->data.size() < out.size()) throw TransportError("pipe closed");
    std::copy_n(in_->data.begin(), out.size(), out.begin());
    in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(out.size()));
  }

  void close() override {
    for (auto* c : {in_.get(), out_.get()}) {
      std::lock_guard lock(c->mutex);
      c->closed = true;
      c->ready.notify_all();
    }
  }

 private:
  std::shared_ptr<Channel> in_;
  std::shared_ptr<Channel> out_;
};

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_pipe() {
  auto ab = std::make_shared<Channel>();
  auto ba = std::make_shared<Channel>();
  return {std::make_unique<PipeEnd>(ba, ab), std::make_unique<PipeEnd>(ab, ba)};
}

void RecordingTransport::send(std::span<const std::uint8_t> bytes) {
  inner_.send(bytes);
  std::lock_guard lock(mutex_);
  records_.push_back({true, {bytes.begin(), bytes.end()}});
}

void RecordingTransport::receive(std::span<std::uint8_t> out) {
  inner_.receive(out);
  std::lock_guard lock(mutex_);
  records_.push_back({false, {out.begin(), out.end()}});
}

std::vector<WireRecord> RecordingTransport::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<std::uint8_t> RecordingTransport::stream(bool outbound) const {
  std::lock_guard lock(mutex_);
  std::vector<std::uint8_t> out;
  for (const auto& r : records_) {
    if (r.outbound == outbound) out.insert(out.end(), r.bytes.begin(), r.bytes.end());
  }
  return out;
}

// --- session ----------------------------------------------------------------

namespace {

struct LocalAbort {
  AbortReason reason;
  std::string what;
};

struct PeerAbort {
  AbortReason reason;
};

class Party {
 public:
  Party(Transport& t, const TpmParams& params, Role role, const RemoteOptions& opts)
      : t_(t),
        params_(params),
        role_(role),
        opts_(opts),
        hasher_(opts.hash),
        session_(params, role, opts.weight_seed),
        max_rounds_(opts.max_rounds == 0 ? default_max_rounds(params) : opts.max_rounds) {
    if (hasher_.digest_bytes() < kDigestBytes) throw ParamError("sync digest needs a hash of at least 256 bits");
    if (opts_.probe_interval < 1) throw ParamError("probe interval must be >= 1");
    if (max_rounds_ > std::numeric_limits<std::uint32_t>::max()) throw ParamError("max_rounds exceeds 32-bit rounds");
    if (role == Role::Sender) inputs_.emplace(params, opts.input_seed);
  }

  Session& session() { return session_; }
  std::uint64_t peer_session_id() const { return peer_session_id_; }

  void handshake() {
    send_message(t_, Hello{opts_.protocol_version, params_, role_, opts_.session_id});
    const auto peer = expect<Hello>();
    peer_session_id_ = peer.session_id;
    if (peer.protocol_version != opts_.protocol_version) {
      throw LocalAbort{AbortReason::VersionMismatch, "peer speaks protocol version " + std::to_string(peer.protocol_version)};
    }
    if (!(peer.params == params_)) throw LocalAbort{AbortReason::ParamMismatch, "peer uses different parameters"};
    if (peer.role == role_) throw LocalAbort{AbortReason::RoleConflict, "peer claims the same role"};
  }

  void run() {
    for (std::uint32_t r = 1;; ++r) {
      if (role_ == Role::Sender ? sender_round(r) : recipient_round(r)) return;
      if (r >= max_rounds_) throw LocalAbort{AbortReason::MaxRounds, "no synchronization within max_rounds"};
    }
  }

 private:
  template <class T>
  T expect() {
    Message m = receive_message(t_);
    if (const auto* a = std::get_if<Abort>(&m)) throw PeerAbort{a->reason};
    if (auto* wanted = std::get_if<T>(&m)) return std::move(*wanted);
    throw LocalAbort{AbortReason::ProtocolViolation, "unexpected message type"};
  }

  template <class T>
  T expect_round(std::uint32_t r) {
    auto m = expect<T>();
    if (m.round != r) throw LocalAbort{AbortReason::ProtocolViolation, "round desynchronization"};
    return m;
  }

  bool probe_due(std::uint32_t r) const { return r % opts_.probe_interval == 0 || r >= max_rounds_; }

  std::array<std::uint8_t, kDigestBytes> digest() const {
    const auto d = weight_digest(session_.weights(), params_.l, hasher_);
    std::array<std::uint8_t, kDigestBytes> out{};
    std::copy_n(d.begin(), kDigestBytes, out.begin());
    return out;
  }

  bool sender_round(std::uint32_t r) {
    const auto x = inputs_->next();
    send_message(t_, from_input_vector(r, x));
    const int o = session_.respond(x);
    const auto peer = expect_round<Output>(r);
    send_message(t_, Output{r, static_cast<std::int8_t>(o)});
    session_.conclude(peer.o);
    if (!probe_due(r)) return false;
    const auto mine = digest();
    send_message(t_, SyncProbe{r, mine});
    if (expect_round<SyncProbe>(r).digest != mine) return false;
    send_message(t_, SyncConfirm{r});
    session_.mark_synchronized();
    return true;
  }

  bool recipient_round(std::uint32_t r) {
    const auto in = expect_round<Input>(r);
    InputVector x;
    try {
      x = to_input_vector(in, params_);
    } catch (const std::exception& e) {
      throw LocalAbort{AbortReason::ProtocolViolation, e.what()};
    }
    const int o = session_.respond(x);
    send_message(t_, Output{r, static_cast<std::int8_t>(o)});
    session_.conclude(expect_round<Output>(r).o);
    if (!probe_due(r)) return false;
    const auto peer = expect_round<SyncProbe>(r);
    const auto mine = digest();
    send_message(t_, SyncProbe{r, mine});
    if (peer.digest != mine) return false;
    expect_round<SyncConfirm>(r);
    session_.mark_synchronized();
    return true;
  }

  Transport& t_;
  TpmParams params_;
  Role role_;
  RemoteOptions opts_;
  Hasher hasher_;
  Session session_;
  std::uint64_t max_rounds_;
  std::optional<InputGenerator> inputs_;
  std::uint64_t peer_session_id_ = 0;
};

}  // namespace

RemoteReport run_remote_session(Transport& t, const TpmParams& params, Role role, const RemoteOptions& opts) {
  RemoteReport out;
  out.report.role = role;
  out.report.status = SessionStatus::Failed;
  std::optional<Party> party;
  try {
    party.emplace(t, params, role, opts);
  } catch (const std::exception& e) {
    out.error = e.what();
    t.close();
    return out;
  }

  auto send_abort = [&](AbortReason reason) {
    try {
      send_message(t, Abort{reason});
    } catch (const std::exception&) {
      // Peer already gone.
    }
  };

  try {
    party->handshake();
    party->run();
  } catch (const LocalAbort& a) {
    out.abort = a.reason;
    out.error = a.what;
    send_abort(a.reason);
  } catch (const PeerAbort& a) {
    out.abort = a.reason;
    out.error = "peer aborted: " + std::string(to_string(a.reason));
  } catch (const DecodeError& e) {
    out.abort = AbortReason::ProtocolViolation;
    out.error = e.what();
    send_abort(AbortReason::ProtocolViolation);
  } catch (const TransportError& e) {
    out.error = e.what();
  } catch (const std::exception& e) {
    out.abort = AbortReason::ProtocolViolation;
    out.error = e.what();
    send_abort(AbortReason::ProtocolViolation);
  }

  auto& s = party->session();
  if (s.status() == SessionStatus::Learning) s.mark_failed();
  if (s.status() != SessionStatus::Synchronized) t.close();
  out.report = make_report(s, opts.hash);
  out.peer_session_id = party->peer_session_id();
  return out;
}

}  // namespace tpmkey::net
