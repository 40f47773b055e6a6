#pragma once

#include <gmpxx.h>

#include <string>

#include "meshsec/bytes.hpp"

namespace meshsec {

using BigInt = mpz_class;

inline std::size_t bit_length(const BigInt& v) {
  return v == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline std::size_t byte_length(const BigInt& v) { return (bit_length(v) + 7) / 8; }

/// Big-endian magnitude without leading zero bytes; zero becomes a single zero byte.
inline Bytes magnitude_bytes(const BigInt& v) {
  if (v < 0) throw DomainError("negative integers have no canonical encoding");
  if (v == 0) return Bytes{0};
  Bytes out(byte_length(v));
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

/// Big-endian magnitude left-padded with zeros to exactly `width` bytes.
inline Bytes magnitude_bytes(const BigInt& v, std::size_t width) {
  auto raw = magnitude_bytes(v);
  if (v == 0) raw.clear();
  if (raw.size() > width) throw DomainError("integer does not fit the requested width");
  Bytes out(width - raw.size(), 0);
  append(out, raw);
  return out;
}

inline BigInt from_magnitude(ByteView data) {
  BigInt v;
  if (!data.empty()) mpz_import(v.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
  return v;
}

/// Canonical wire form: 4-byte big-endian length, then the minimal magnitude.
inline void put_int(Bytes& out, const BigInt& v) { put_prefixed(out, magnitude_bytes(v)); }

/// Fixed-width variant of put_int: the magnitude is padded to `width` bytes.
inline void put_int(Bytes& out, const BigInt& v, std::size_t width) {
  put_prefixed(out, magnitude_bytes(v, width));
}

inline Bytes encode_int(const BigInt& v) {
  Bytes out;
  put_int(out, v);
  return out;
}

/// Reads one length-prefixed integer. With `strict`, non-minimal encodings are rejected.
inline BigInt read_int(ByteReader& in, bool strict = true) {
  auto raw = in.read_prefixed();
  if (raw.empty()) throw DecodeError("empty integer field");
  if (strict && raw.size() > 1 && raw.front() == 0) throw DecodeError("non-canonical integer encoding");
  return from_magnitude(raw);
}

inline std::string to_decimal(const BigInt& v) { return v.get_str(10); }

inline BigInt from_decimal(const std::string& s) {
  BigInt v;
  if (s.empty() || v.set_str(s, 10) != 0) throw DecodeError("invalid decimal integer: " + s);
  return v;
}

}  // namespace meshsec
