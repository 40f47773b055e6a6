#pragma once

#include <vector>

#include "meshsec/bigint.hpp"
#include "meshsec/drbg.hpp"

namespace meshsec {

/// Keyed permutation family used inside the combining function.
enum class PermutationKind {
  kFeistel,  ///< 4-round Feistel network over SHA-256; the production choice.
  kXor,      ///< m XOR key; only for hand-checkable tests.
};

/// b-bit blocks are carried as integers in [0, 2^b).
using Block = BigInt;

struct CombiningConfig {
  std::size_t b = 0;
  PermutationKind kind = PermutationKind::kFeistel;

  std::size_t block_bytes() const { return (b + 7) / 8; }
};

namespace detail {

inline void check_width(const CombiningConfig& cfg, const Block& m) {
  if (cfg.b == 0) throw DomainError("combining: block width must be positive");
  if (m < 0 || bit_length(m) > cfg.b) throw DomainError("combining: value wider than b bits");
}

inline BigInt low_bits(const BigInt& v, std::size_t bits) {
  BigInt r;
  mpz_fdiv_r_2exp(r.get_mpz_t(), v.get_mpz_t(), bits);
  return r;
}

inline BigInt feistel_round(ByteView key, unsigned round, const BigInt& half, std::size_t out_bits) {
  const std::uint8_t r[1] = {static_cast<std::uint8_t>(round)};
  auto half_bytes = magnitude_bytes(half);
  auto material = hash_parts({key, r, half_bytes});
  return Drbg(material, "feistel-round").bits(out_bits);
}

struct Halves {
  std::size_t left_bits;
  std::size_t right_bits;
  BigInt left;
  BigInt right;
};

inline Halves split(const CombiningConfig& cfg, const Block& m) {
  const std::size_t left_bits = cfg.b / 2;
  const std::size_t right_bits = cfg.b - left_bits;
  BigInt left;
  mpz_fdiv_q_2exp(left.get_mpz_t(), m.get_mpz_t(), right_bits);
  return {left_bits, right_bits, left, low_bits(m, right_bits)};
}

inline Block join(const Halves& h) { return (h.left << h.right_bits) | h.right; }

inline constexpr unsigned kFeistelRounds = 4;

}  // namespace detail

/// E_k(m). Bijective in m for every key.
inline Block prp_forward(const CombiningConfig& cfg, ByteView key, const Block& m) {
  detail::check_width(cfg, m);
  if (cfg.kind == PermutationKind::kXor) return m ^ detail::low_bits(from_magnitude(key), cfg.b);
  if (cfg.b < 2) throw DomainError("feistel permutation needs b >= 2");
  auto h = detail::split(cfg, m);
  for (unsigned round = 0; round < detail::kFeistelRounds; ++round) {
    if (round % 2 == 0)
      h.left ^= detail::feistel_round(key, round, h.right, h.left_bits);
    else
      h.right ^= detail::feistel_round(key, round, h.left, h.right_bits);
  }
  return detail::join(h);
}

/// E_k^-1(c).
inline Block prp_inverse(const CombiningConfig& cfg, ByteView key, const Block& c) {
  detail::check_width(cfg, c);
  if (cfg.kind == PermutationKind::kXor) return c ^ detail::low_bits(from_magnitude(key), cfg.b);
  if (cfg.b < 2) throw DomainError("feistel permutation needs b >= 2");
  auto h = detail::split(cfg, c);
  for (unsigned round = detail::kFeistelRounds; round-- > 0;) {
    if (round % 2 == 0)
      h.left ^= detail::feistel_round(key, round, h.right, h.left_bits);
    else
      h.right ^= detail::feistel_round(key, round, h.left, h.right_bits);
  }
  return detail::join(h);
}

/// Chain z_0 = v, z_t = E_k(y_t XOR z_{t-1}); returns z_n.
inline Block combine(const CombiningConfig& cfg, ByteView key, const Block& v, std::span<const Block> ys) {
  detail::check_width(cfg, v);
  Block z = v;
  for (const auto& y : ys) {
    detail::check_width(cfg, y);
    z = prp_forward(cfg, key, y ^ z);
  }
  return z;
}

/// The unique y_i such that combine(before ++ [y_i] ++ after) == v: chain forward through
/// `before`, unwind backward from v through `after`, and close the gap in the middle.
inline Block solve_ring_gap(const CombiningConfig& cfg, ByteView key, const Block& v,
                            std::span<const Block> before, std::span<const Block> after) {
  const Block forward = combine(cfg, key, v, before);
  Block backward = v;
  for (auto it = after.rbegin(); it != after.rend(); ++it) {
    detail::check_width(cfg, *it);
    backward = prp_inverse(cfg, key, backward) ^ *it;
  }
  return prp_inverse(cfg, key, backward) ^ forward;
}

}  // namespace meshsec
