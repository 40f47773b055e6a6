#pragma once

#include <string_view>

#include "meshsec/bigint.hpp"
#include "meshsec/hash.hpp"

namespace meshsec {

/// Deterministic byte stream: SHA-256 in counter mode keyed by (label, seed).
/// Every random choice in the library is drawn from one of these, so equal seeds
/// replay identically.
class Drbg {
 public:
  Drbg(ByteView seed, std::string_view label) {
    auto tag = to_bytes("meshsec/drbg/v1");
    auto lbl = to_bytes(label);
    key_ = hash_parts({tag, lbl, seed});
  }

  explicit Drbg(std::string_view seed) : Drbg(to_bytes(seed), "") {}

  /// Independent child stream; the parent is not advanced.
  Drbg fork(std::string_view label) const { return Drbg(ForkTag{}, key_, label); }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  std::uint64_t next_u64() {
    std::uint8_t raw[8];
    fill(raw);
    std::uint64_t v = 0;
    for (auto b : raw) v = (v << 8) | b;
    return v;
  }

  /// Uniform in [0, bound) by rejection; bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("empty sampling range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      auto v = next_u64();
      if (v < limit) return v % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer with exactly `bits` random bits, in [0, 2^bits).
  BigInt bits(std::size_t nbits) {
    if (nbits == 0) return 0;
    auto raw = bytes((nbits + 7) / 8);
    const unsigned excess = static_cast<unsigned>(raw.size() * 8 - nbits);
    raw.front() &= static_cast<std::uint8_t>(0xff >> excess);
    return from_magnitude(raw);
  }

  /// Uniform in [0, bound) by rejection sampling; bound must be positive.
  BigInt below(const BigInt& bound) {
    if (bound <= 0) throw DomainError("empty sampling range");
    const auto nbits = bit_length(bound - 1);
    for (;;) {
      BigInt v = bits(nbits);
      if (v < bound) return v;
    }
  }

  /// Uniform in [lo, hi).
  BigInt range(const BigInt& lo, const BigInt& hi) {
    if (hi <= lo) throw DomainError("empty sampling range");
    return lo + below(BigInt(hi - lo));
  }

 private:
  struct ForkTag {};

  Drbg(ForkTag, const Digest& parent, std::string_view label) {
    auto tag = to_bytes("meshsec/drbg/fork");
    auto lbl = to_bytes(label);
    key_ = hash_parts({tag, parent, lbl});
  }

  void refill() {
    std::uint8_t ctr[8];
    for (int i = 0; i < 8; ++i) ctr[i] = static_cast<std::uint8_t>(counter_ >> (8 * (7 - i)));
    ++counter_;
    block_ = hash_parts({key_, ctr});
    pos_ = 0;
  }

  Digest key_{};
  Digest block_{};
  std::size_t pos_ = block_.size();
  std::uint64_t counter_ = 0;
};

}  // namespace meshsec
