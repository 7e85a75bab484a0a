#pragma once

#include <random>

#include "tpmkey/netlink.hpp"

namespace tpmkey::testing {

/// Any valid message, fields drawn uniformly.
inline net::Message random_message(std::mt19937_64& rng) {
  auto u32 = [&] { return static_cast<std::uint32_t>(rng()); };
  switch (rng() % 6) {
    case 0: {
      net::Hello h;
      h.protocol_version = static_cast<std::uint16_t>(rng());
      h.params.k = static_cast<int>(rng() % 100000);
      h.params.l = static_cast<int>(rng() % 100000);
      h.params.m = static_cast<int>(rng() % 100000);
      h.params.n = static_cast<int>(rng() % 100000);
      h.params.rule = static_cast<LearningRule>(rng() % 3);
      h.params.allow_m_above_l = rng() & 1u;
      h.role = static_cast<Role>(rng() % 2);
      h.session_id = rng();
      return h;
    }
    case 1: {
      net::Input in;
      in.round = u32();
      in.values.resize(rng() % 400);
      for (auto& v : in.values) v = static_cast<std::int16_t>(rng());
      return in;
    }
    case 2: return net::Output{u32(), static_cast<std::int8_t>((rng() & 1u) ? 1 : -1)};
    case 3: {
      net::SyncProbe p;
      p.round = u32();
      for (auto& b : p.digest) b = static_cast<std::uint8_t>(rng());
      return p;
    }
    case 4: return net::SyncConfirm{u32()};
    default: return net::Abort{static_cast<net::AbortReason>(1 + rng() % 5)};
  }
}

}  // namespace tpmkey::testing
