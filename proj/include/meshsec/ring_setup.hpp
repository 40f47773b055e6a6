#pragma once

#include <cstdio>

#include "meshsec/ring_auth.hpp"

namespace meshsec {

/// A ready-to-use deployment: n users each with their own group and trapdoor key,
/// plus an authentication server. Used by the CLI, the simulator and the tests.
struct RingSetup {
  RingDirectory ring;
  std::vector<TrapdoorPrivate> secrets;  // secrets[i] pairs with ring[i]
  ServerKeys server;
  CombiningConfig cfg;
};

inline std::string member_id(std::string_view prefix, std::size_t index, std::size_t width = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", static_cast<int>(width), index + 1);
  return std::string(prefix) + buf;
}

inline RingSetup build_ring(std::size_t n, std::size_t p_bits, std::size_t q_bits, std::string_view seed,
                            std::string_view id_prefix = "U") {
  if (n == 0) throw DomainError("ring size must be at least 1");
  const Bytes root = to_bytes(seed);
  std::vector<RingMember> members;
  std::vector<TrapdoorPrivate> secrets;
  for (std::size_t i = 0; i < n; ++i) {
    Bytes member_seed = root;
    put_be(member_seed, i, 8);
    auto group = gen_group_params(p_bits, q_bits, member_seed);
    auto kp = keygen(group, member_seed);
    members.push_back({member_id(id_prefix, i), kp.pub});
    secrets.push_back(kp.priv);
  }
  Bytes server_seed = root;
  append(server_seed, to_bytes("/server"));
  auto server_group = gen_group_params(p_bits, q_bits, server_seed);
  auto server = server_keygen(server_group, server_seed);
  RingDirectory ring(std::move(members), false);
  auto cfg = combining_for(ring);
  return {std::move(ring), std::move(secrets), std::move(server), cfg};
}

}  // namespace meshsec
