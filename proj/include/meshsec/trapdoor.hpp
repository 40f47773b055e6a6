#pragma once

#include <utility>

#include "meshsec/group_math.hpp"

namespace meshsec {

/// Public half of a user's trapdoor function: the user's own group and y = g^x mod p.
struct TrapdoorPublic {
  GroupParams group;
  BigInt y;

  friend bool operator==(const TrapdoorPublic&, const TrapdoorPublic&) = default;
};

struct TrapdoorPrivate {
  BigInt x;

  friend bool operator==(const TrapdoorPrivate&, const TrapdoorPrivate&) = default;
};

/// Argument pair of the trapdoor function; alpha in [1, p), beta in [0, q).
struct Preimage {
  BigInt alpha;
  BigInt beta;

  friend bool operator==(const Preimage&, const Preimage&) = default;
};

struct TrapdoorKeyPair {
  TrapdoorPublic pub;
  TrapdoorPrivate priv;
};

inline TrapdoorKeyPair keypair_from_private(const GroupParams& group, const BigInt& x) {
  if (x < 1 || x >= group.q) throw DomainError("trapdoor private key must lie in [1, q)");
  return {TrapdoorPublic{group, mod_exp(group.g, x, group.p)}, TrapdoorPrivate{x}};
}

inline TrapdoorKeyPair keygen(const GroupParams& group, ByteView seed) {
  if (!is_valid_group(group)) throw DomainError("keygen: invalid group parameters");
  Drbg rng(seed, "trapdoor-keygen");
  return keypair_from_private(group, rng.range(1, group.q));
}

inline bool keys_match(const TrapdoorPublic& pub, const TrapdoorPrivate& priv) {
  return priv.x >= 1 && priv.x < pub.group.q && mod_exp(pub.group.g, priv.x, pub.group.p) == pub.y;
}

/// f(alpha, beta) = alpha * y^(alpha mod q) * g^beta mod p.
inline BigInt f_eval(const TrapdoorPublic& pub, const Preimage& pre) {
  const auto& [p, q, g] = pub.group;
  if (pre.alpha == 0) throw DomainError("f_eval: alpha must be non-zero");
  if (pre.alpha < 1 || pre.alpha >= p) throw DomainError("f_eval: alpha out of range");
  if (pre.beta < 0 || pre.beta >= q) throw DomainError("f_eval: beta out of range");
  BigInt r = pre.alpha * mod_exp(pub.y, mod(pre.alpha, q), p) % p;
  return r * mod_exp(g, pre.beta, p) % p;
}

/// Trapdoor inversion with nonce K in [0, q). The blinding exponent e = K*(g^K mod p) mod q
/// gives alpha = y * g^-e and beta = e - x*(alpha mod q), so that
/// f(alpha, beta) = alpha * g^(x*alpha) * g^(e - x*alpha) = y.
inline Preimage f_invert(const TrapdoorPublic& pub, const TrapdoorPrivate& priv, const BigInt& y,
                         const BigInt& nonce) {
  const auto& [p, q, g] = pub.group;
  if (y < 1 || y >= p) throw DomainError("f_invert: target out of range [1, p)");
  if (nonce < 0 || nonce >= q) throw DomainError("f_invert: nonce out of range [0, q)");
  const BigInt e = mod(nonce * mod_exp(g, nonce, p), q);
  BigInt alpha = y * mod_exp(g, mod(-e, q), p) % p;
  BigInt beta = mod(e - priv.x * mod(alpha, q), q);
  return {std::move(alpha), std::move(beta)};
}

}  // namespace meshsec
