#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meshsec {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Thrown when an input violates an operation's domain (bad range, bad width, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A byte buffer could not be parsed as the expected wire structure.
class DecodeError : public DomainError {
 public:
  using DomainError::DomainError;
};

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw DecodeError("invalid hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

inline void put_be(Bytes& out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

inline void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

/// Sequential reader over a byte buffer; every overrun is a DecodeError.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint64_t read_be(std::size_t width) {
    auto chunk = take(width);
    std::uint64_t v = 0;
    for (auto b : chunk) v = (v << 8) | b;
    return v;
  }

  ByteView take(std::size_t n) {
    if (n > remaining()) throw DecodeError("truncated input");
    auto chunk = data_.subspan(pos_, n);
    pos_ += n;
    return chunk;
  }

  /// 4-byte big-endian length followed by that many bytes.
  Bytes read_prefixed() {
    auto n = static_cast<std::size_t>(read_be(4));
    auto chunk = take(n);
    return Bytes(chunk.begin(), chunk.end());
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return remaining() == 0; }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

inline void put_prefixed(Bytes& out, ByteView data) {
  if (data.size() > 0xffffffffu) throw DomainError("field too long for 4-byte length prefix");
  put_be(out, data.size(), 4);
  append(out, data);
}

}  // namespace meshsec
