#pragma once

#include <array>
#include <stdexcept>

#include "meshsec/bigint.hpp"
#include "meshsec/drbg.hpp"

namespace meshsec {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prime-order subgroup of Z_p^*: q | p - 1 and g has order exactly q.
struct GroupParams {
  BigInt p;
  BigInt q;
  BigInt g;

  friend bool operator==(const GroupParams&, const GroupParams&) = default;
};

inline BigInt mod_exp(const BigInt& base, const BigInt& exp, const BigInt& m) {
  if (m <= 1) throw DomainError("mod_exp: modulus must exceed 1");
  if (exp < 0) throw DomainError("mod_exp: negative exponent");
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), m.get_mpz_t());
  return r;
}

inline BigInt mod_inv(const BigInt& a, const BigInt& m) {
  if (m <= 1) throw DomainError("mod_inv: modulus must exceed 1");
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0)
    throw DomainError("mod_inv: value is not invertible");
  return r;
}

/// Non-negative residue of a mod m.
inline BigInt mod(const BigInt& a, const BigInt& m) {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

namespace detail {

inline constexpr std::size_t kSmallPrimeBound = 2000;

inline const std::vector<unsigned long>& small_primes() {
  static const std::vector<unsigned long> primes = [] {
    std::vector<bool> composite(kSmallPrimeBound, false);
    std::vector<unsigned long> out;
    for (std::size_t i = 2; i < kSmallPrimeBound; ++i) {
      if (composite[i]) continue;
      out.push_back(i);
      for (std::size_t j = i * i; j < kSmallPrimeBound; j += i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

}  // namespace detail

inline constexpr int kMillerRabinRounds = 64;

/// Trial division by primes below 2000, then 64 Miller-Rabin rounds whose witnesses
/// are drawn from a stream seeded by n itself (error < 4^-64, fully reproducible).
inline bool is_probable_prime(const BigInt& n) {
  if (n < 2) return false;
  for (auto sp : detail::small_primes()) {
    if (n == sp) return true;
    if (mpz_divisible_ui_p(n.get_mpz_t(), sp)) return false;
  }
  if (n < BigInt(detail::kSmallPrimeBound) * detail::kSmallPrimeBound) return true;

  BigInt d = n - 1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

  const BigInt n_minus_1 = n - 1;
  Drbg witnesses(encode_int(n), "miller-rabin");
  for (int round = 0; round < kMillerRabinRounds; ++round) {
    BigInt a = witnesses.range(2, n_minus_1);
    BigInt x = mod_exp(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (unsigned long r = 1; r < s; ++r) {
      x = x * x % n;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

inline bool is_valid_group(const GroupParams& params) {
  const auto& [p, q, g] = params;
  if (p < 3 || q < 2 || q >= p) return false;
  if (g <= 1 || g >= p) return false;
  if (mod(p - 1, q) != 0) return false;
  if (!is_probable_prime(q) || !is_probable_prime(p)) return false;
  return mod_exp(g, q, p) == 1;
}

/// True when y lies in the order-q subgroup generated by params.g.
inline bool in_subgroup(const GroupParams& params, const BigInt& y) {
  return y >= 1 && y < params.p && mod_exp(y, params.q, params.p) == 1;
}

/// Schnorr-group search: random prime q of q_bits, then random even cofactor k until
/// p = kq + 1 is a p_bits-bit prime, then g = h^((p-1)/q) != 1.
inline GroupParams gen_group_params(std::size_t p_bits, std::size_t q_bits, ByteView seed) {
  if (q_bits < 2) throw DomainError("gen_group_params: q_bits must be at least 2");
  if (q_bits >= p_bits) throw DomainError("gen_group_params: q_bits must be below p_bits");

  Drbg rng(seed, "group-params");
  const BigInt p_lo = BigInt(1) << (p_bits - 1);
  const BigInt p_hi = BigInt(1) << p_bits;  // exclusive
  constexpr int kPrimeAttempts = 256;
  const std::size_t cofactor_attempts = 64 * p_bits + 64;

  for (int q_attempt = 0; q_attempt < kPrimeAttempts; ++q_attempt) {
    BigInt q;
    bool found_q = false;
    for (std::size_t i = 0; i < 64 * q_bits + 64; ++i) {
      q = rng.bits(q_bits);
      mpz_setbit(q.get_mpz_t(), q_bits - 1);
      if (q_bits > 2) mpz_setbit(q.get_mpz_t(), 0);
      if (is_probable_prime(q)) {
        found_q = true;
        break;
      }
    }
    if (!found_q) continue;

    // p = kq + 1 in [p_lo, p_hi)  <=>  k in [ceil((p_lo - 1)/q), floor((p_hi - 2)/q)]
    BigInt k_lo, k_hi;
    mpz_cdiv_q(k_lo.get_mpz_t(), BigInt(p_lo - 1).get_mpz_t(), q.get_mpz_t());
    mpz_fdiv_q(k_hi.get_mpz_t(), BigInt(p_hi - 2).get_mpz_t(), q.get_mpz_t());
    if (k_lo < 1) k_lo = 1;
    if (k_hi < k_lo) continue;

    for (std::size_t i = 0; i < cofactor_attempts; ++i) {
      BigInt k = rng.range(k_lo, k_hi + 1);
      if (q != 2 && mpz_odd_p(k.get_mpz_t())) {
        if (k == k_hi) continue;
        k += 1;
      }
      BigInt p = k * q + 1;
      if (!is_probable_prime(p)) continue;

      const BigInt cofactor = (p - 1) / q;
      for (int h_attempt = 0; h_attempt < 256; ++h_attempt) {
        BigInt h = rng.range(2, p - 1 > 2 ? p - 1 : BigInt(3));
        BigInt g = mod_exp(h, cofactor, p);
        if (g != 1) return GroupParams{p, q, g};
      }
    }
  }
  throw GenerationError("gen_group_params: no group found within the attempt budget");
}

inline GroupParams gen_group_params(std::size_t p_bits, std::size_t q_bits, std::string_view seed) {
  return gen_group_params(p_bits, q_bits, to_bytes(seed));
}

}  // namespace meshsec
