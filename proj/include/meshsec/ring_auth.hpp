#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "meshsec/combining.hpp"
#include "meshsec/trapdoor.hpp"

namespace meshsec {

class SigningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerPublic {
  GroupParams group;
  BigInt y;
};

/// Authentication server key pair over its own group: y = g^x mod p.
struct ServerKeys {
  GroupParams group;
  BigInt x;
  BigInt y;

  ServerPublic public_half() const { return {group, y}; }
};

inline ServerKeys server_keygen(const GroupParams& group, ByteView seed) {
  if (!is_valid_group(group)) throw DomainError("server_keygen: invalid group parameters");
  Drbg rng(seed, "server-keygen");
  BigInt x = rng.range(1, group.q);
  BigInt y = mod_exp(group.g, x, group.p);
  return {group, std::move(x), std::move(y)};
}

struct RingMember {
  std::string id;
  TrapdoorPublic key;
};

/// Ordered set of ring members, looked up by stable identifier.
class RingDirectory {
 public:
  RingDirectory() = default;

  /// Validates the member list. Group validation runs the full primality check, so pass
  /// `check_groups = false` only for directories that were already validated.
  explicit RingDirectory(std::vector<RingMember> members, bool check_groups = true)
      : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("ring directory must contain at least one member");
    std::unordered_set<std::string> seen;
    for (const auto& m : members_) {
      if (!seen.insert(m.id).second) throw DomainError("duplicate ring member id: " + m.id);
      if (check_groups && !is_valid_group(m.key.group))
        throw DomainError("ring member " + m.id + " has an invalid group");
    }
  }

  std::size_t size() const { return members_.size(); }
  const RingMember& operator[](std::size_t i) const { return members_.at(i); }
  const std::vector<RingMember>& members() const { return members_; }

  const RingMember* find(std::string_view id) const {
    for (const auto& m : members_)
      if (m.id == id) return &m;
    return nullptr;
  }

  std::size_t max_modulus_bits() const {
    std::size_t bits = 0;
    for (const auto& m : members_) bits = std::max(bits, bit_length(m.key.group.p));
    return bits;
  }

 private:
  std::vector<RingMember> members_;
};

/// Smallest block width that embeds every member's function range.
inline CombiningConfig combining_for(const RingDirectory& ring,
                                     PermutationKind kind = PermutationKind::kFeistel) {
  return {ring.max_modulus_bits(), kind};
}

struct RingSignature {
  std::vector<std::string> member_ids;
  Block v;
  BigInt V;
  BigInt R;
  std::vector<Preimage> pairs;

  friend bool operator==(const RingSignature&, const RingSignature&) = default;
};

/// Client-side state carried from the signing round to the confirmation round.
struct ClientSession {
  GroupParams group;
  BigInt blinding_exp;   // x_i
  BigInt exchange_exp;   // x_A
  BigInt X;
  BigInt R;
  BigInt Q;
  BigInt V;
  Digest binding_key{};  // l
  Bytes identity;        // I
};

struct ServerResponse {
  Digest h{};
  BigInt Y;
  Bytes identity_ack;  // I'

  friend bool operator==(const ServerResponse&, const ServerResponse&) = default;
};

struct SignResult {
  RingSignature signature;
  ClientSession session;
  int retries = 0;
};

inline constexpr int kSigningRetryBudget = 64;

inline Digest binding_key(const BigInt& X, const BigInt& Q, const BigInt& V, const BigInt& y_server,
                          ByteView identity) {
  return hash_parts({magnitude_bytes(X), magnitude_bytes(Q), magnitude_bytes(V),
                     magnitude_bytes(y_server), identity});
}

inline Digest confirmation_digest(const BigInt& session_key, const BigInt& X, const BigInt& Y,
                                  ByteView identity) {
  return hash_parts({magnitude_bytes(session_key), magnitude_bytes(X), magnitude_bytes(Y), identity});
}

inline Bytes identity_ack(ByteView identity) {
  auto tag = to_bytes("identity-ack");
  auto d = hash_parts({tag, identity});
  return Bytes(d.begin(), d.end());
}

/// Client round: blind an ephemeral DH share X under the server key, then produce a ring
/// signature whose combining key is bound to X. `signer_index` is 0-based.
inline SignResult sign_and_initiate(const RingDirectory& ring, std::size_t signer_index,
                                    const TrapdoorPrivate& signer_priv, const ServerPublic& server,
                                    ByteView identity, const CombiningConfig& cfg, ByteView seed) {
  const std::size_t n = ring.size();
  if (signer_index >= n) throw DomainError("signer index outside the ring");
  const auto& signer = ring[signer_index].key;
  if (!keys_match(signer, signer_priv)) throw DomainError("signer private key does not match ring member");
  if (cfg.b < ring.max_modulus_bits()) throw DomainError("block width b too small for ring moduli");

  const auto& [p, q, g] = server.group;
  Drbg rng(seed, "ring-sign");

  ClientSession s;
  s.group = server.group;
  s.identity.assign(identity.begin(), identity.end());
  s.blinding_exp = rng.range(1, q);
  s.exchange_exp = rng.range(1, q);
  s.R = mod_exp(g, s.blinding_exp, p);
  s.Q = mod(mod_exp(server.y, s.blinding_exp, p), q);
  s.X = mod_exp(g, s.exchange_exp, p);
  s.V = s.X * mod_inv(mod_exp(g, s.Q, p), p) % p;
  s.binding_key = binding_key(s.X, s.Q, s.V, server.y, identity);

  RingSignature sig;
  sig.R = s.R;
  sig.V = s.V;
  sig.pairs.resize(n);
  std::vector<Block> ys(n);
  for (std::size_t t = 0; t < n; ++t) {
    sig.member_ids.push_back(ring[t].id);
    if (t == signer_index) continue;
    const auto& member = ring[t].key;
    sig.pairs[t] = {rng.range(1, member.group.p), rng.below(member.group.q)};
    ys[t] = f_eval(member, sig.pairs[t]);
  }

  std::span<const Block> all(ys);
  auto before = all.first(signer_index);
  auto after = all.subspan(signer_index + 1);
  for (int attempt = 0; attempt < kSigningRetryBudget; ++attempt) {
    Block v = rng.bits(cfg.b);
    Block y_signer = solve_ring_gap(cfg, s.binding_key, v, before, after);
    if (y_signer < 1 || y_signer >= signer.group.p) continue;
    BigInt nonce = rng.below(signer.group.q);
    sig.pairs[signer_index] = f_invert(signer, signer_priv, y_signer, nonce);
    sig.v = std::move(v);
    return {std::move(sig), std::move(s), attempt};
  }
  throw SigningError("ring gap fell outside the signer's range on every retry");
}

enum class RejectReason {
  kNone,
  kUnknownMember,
  kRingEquation,
  kReplay,
};

inline const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "none";
    case RejectReason::kUnknownMember: return "unknown-member";
    case RejectReason::kRingEquation: return "ring-equation";
    case RejectReason::kReplay: return "replay";
  }
  return "?";
}

struct VerifyOutcome {
  RejectReason reason = RejectReason::kNone;
  std::optional<ServerResponse> response;
  BigInt session_key;  // K_s; meaningful only when accepted

  bool accepted() const { return response.has_value(); }
};

/// Server round. A failed ring equation is a reject value; structurally malformed
/// signatures (length mismatch, out-of-range fields) throw DomainError.
inline VerifyOutcome server_verify_and_respond(const ServerKeys& keys, const RingDirectory& ring,
                                               const RingSignature& sig, ByteView identity,
                                               const CombiningConfig& cfg, ByteView seed) {
  const auto& [p, q, g] = keys.group;
  const std::size_t n = sig.member_ids.size();
  if (n == 0) throw DomainError("signature names no ring members");
  if (sig.pairs.size() != n) throw DomainError("signature pair count differs from member count");
  if (sig.v < 0 || bit_length(sig.v) > cfg.b) throw DomainError("signature v wider than b bits");
  if (sig.V < 1 || sig.V >= p || sig.R < 1 || sig.R >= p) throw DomainError("signature V or R out of range");

  std::vector<const RingMember*> members;
  members.reserve(n);
  for (const auto& id : sig.member_ids) {
    const auto* m = ring.find(id);
    if (m == nullptr) return {RejectReason::kUnknownMember, std::nullopt, 0};
    if (bit_length(m->key.group.p) > cfg.b) throw DomainError("block width b too small for ring moduli");
    members.push_back(m);
  }
  for (std::size_t t = 0; t < n; ++t) {
    const auto& grp = members[t]->key.group;
    const auto& pr = sig.pairs[t];
    if (pr.alpha < 1 || pr.alpha >= grp.p || pr.beta < 0 || pr.beta >= grp.q)
      throw DomainError("signature pair out of range for member " + sig.member_ids[t]);
  }

  const BigInt Q = mod(mod_exp(sig.R, keys.x, p), q);
  const BigInt X = sig.V * mod_exp(g, Q, p) % p;
  const Digest k = binding_key(X, Q, sig.V, keys.y, identity);

  std::vector<Block> ys(n);
  for (std::size_t t = 0; t < n; ++t) ys[t] = f_eval(members[t]->key, sig.pairs[t]);
  if (combine(cfg, k, sig.v, ys) != sig.v) return {RejectReason::kRingEquation, std::nullopt, 0};

  Drbg rng(seed, "server-respond");
  const BigInt xb = rng.range(1, q);
  ServerResponse resp;
  resp.Y = mod_exp(g, xb, p);
  BigInt session_key = mod_exp(X, xb, p);
  resp.h = confirmation_digest(session_key, X, resp.Y, identity);
  resp.identity_ack = identity_ack(identity);
  return {RejectReason::kNone, std::move(resp), std::move(session_key)};
}

enum class ConfirmStatus { kAccepted, kBadAck, kBadDigest };

struct ConfirmOutcome {
  ConfirmStatus status = ConfirmStatus::kBadDigest;
  BigInt session_key;  // K_s'; meaningful only when accepted

  bool accepted() const { return status == ConfirmStatus::kAccepted; }
};

/// Client confirmation: recompute K_s' = Y^x_A and check it against the server digest.
inline ConfirmOutcome client_confirm(const ClientSession& session, const ServerResponse& resp) {
  if (resp.identity_ack != identity_ack(session.identity)) return {ConfirmStatus::kBadAck, 0};
  const auto& p = session.group.p;
  if (resp.Y < 1 || resp.Y >= p) return {ConfirmStatus::kBadDigest, 0};
  BigInt key = mod_exp(resp.Y, session.exchange_exp, p);
  if (confirmation_digest(key, session.X, resp.Y, session.identity) != resp.h)
    return {ConfirmStatus::kBadDigest, 0};
  return {ConfirmStatus::kAccepted, std::move(key)};
}

/// Stateful authentication server: wraps server_verify_and_respond with a bounded window
/// of identities already accepted, so a replayed (sigma, I) is refused.
class AuthServer {
 public:
  AuthServer(ServerKeys keys, RingDirectory ring, CombiningConfig cfg, std::size_t replay_window = 4096)
      : keys_(std::move(keys)), ring_(std::move(ring)), cfg_(cfg), capacity_(replay_window) {}

  VerifyOutcome handle(const RingSignature& sig, ByteView identity, ByteView seed) {
    std::string key(identity.begin(), identity.end());
    std::lock_guard lock(mu_);
    if (seen_.contains(key)) return {RejectReason::kReplay, std::nullopt, 0};
    auto outcome = server_verify_and_respond(keys_, ring_, sig, identity, cfg_, seed);
    if (outcome.accepted()) {
      seen_.insert(key);
      order_.push_back(std::move(key));
      if (order_.size() > capacity_) {
        seen_.erase(order_.front());
        order_.pop_front();
      }
    }
    return outcome;
  }

  const ServerKeys& keys() const { return keys_; }
  const RingDirectory& ring() const { return ring_; }
  const CombiningConfig& config() const { return cfg_; }

 private:
  ServerKeys keys_;
  RingDirectory ring_;
  CombiningConfig cfg_;
  std::size_t capacity_;
  std::mutex mu_;
  std::unordered_set<std::string> seen_;
  std::deque<std::string> order_;
};

}  // namespace meshsec
