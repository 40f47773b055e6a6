#pragma once

#include <openssl/evp.h>

#include <array>
#include <initializer_list>
#include <memory>
#include <stdexcept>

#include "meshsec/bytes.hpp"

namespace meshsec {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 backed by OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }

  Sha256& update(ByteView data) {
    if (!data.empty() && EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1)
      throw std::runtime_error("SHA-256 update failed");
    return *this;
  }

  Digest finish() {
    Digest out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), out.data(), &len) != 1 || len != out.size())
      throw std::runtime_error("SHA-256 finalisation failed");
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Digest sha256(ByteView data) { return Sha256{}.update(data).finish(); }

/// Collision-resistant hash over an ordered list of parts. Each part is framed with a
/// 4-byte big-endian length, so ["ab","c"] and ["a","bc"] hash differently.
inline Digest hash_parts(std::span<const ByteView> parts) {
  Sha256 h;
  for (auto part : parts) {
    std::uint8_t len[4] = {static_cast<std::uint8_t>(part.size() >> 24),
                           static_cast<std::uint8_t>(part.size() >> 16),
                           static_cast<std::uint8_t>(part.size() >> 8),
                           static_cast<std::uint8_t>(part.size())};
    h.update(len);
    h.update(part);
  }
  return h.finish();
}

inline Digest hash_parts(std::initializer_list<ByteView> parts) {
  return hash_parts(std::span<const ByteView>(parts.begin(), parts.size()));
}

}  // namespace meshsec
