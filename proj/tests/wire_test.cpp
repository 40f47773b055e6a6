#include <gtest/gtest.h>

#include "meshsec/ring_setup.hpp"
#include "meshsec/wire.hpp"

namespace meshsec {
namespace {

TEST(SignatureWire, LayoutHeader) {
  RingSignature sig{{"A", "BC"}, 0x1f, 7, 9, {{1, 0}, {2, 3}}};
  const CombiningConfig cfg{12, PermutationKind::kFeistel};
  auto enc = encode_signature(sig, cfg);
  const Bytes expected{
      1,    0, 2,                                      // version, n
      0,    0, 0, 1, 'A', 0, 0, 0, 2, 'B', 'C',        // ids
      0x00, 0x1f,                                      // v in ceil(12/8) bytes
      0,    0, 0, 1, 7, 0, 0, 0, 1, 9,                 // V, R
      0,    0, 0, 1, 1, 0, 0, 0, 1, 0,                 // (alpha_1, beta_1)
      0,    0, 0, 1, 2, 0, 0, 0, 1, 3,                 // (alpha_2, beta_2)
  };
  EXPECT_EQ(enc, expected);
  EXPECT_EQ(decode_signature(enc, cfg, true), sig);
}

TEST(SignatureWire, RoundTripProperty) {
  for (std::size_t n : {1u, 3u, 8u}) {
    auto rs = build_ring(n, 80, 48, "wire-" + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sign_and_initiate(rs.ring, i, rs.secrets[i], rs.server.public_half(), to_bytes("I"), rs.cfg,
                                 to_bytes("w" + std::to_string(i)));
      auto canonical = encode_signature(s.signature, rs.cfg);
      ASSERT_EQ(decode_signature(canonical, rs.cfg, true), s.signature);
      auto fixed = encode_signature_fixed(s.signature, rs.cfg, rs.ring, rs.server.group);
      ASSERT_EQ(decode_signature(fixed, rs.cfg, false), s.signature);
      ASSERT_GE(fixed.size(), canonical.size());
    }
  }
}

TEST(SignatureWire, FixedWidthSizeIsAffineInRingSize) {
  std::vector<std::size_t> sizes;
  for (std::size_t n = 1; n <= 6; ++n) {
    auto rs = build_ring(n, 64, 40, "affine");
    auto s = sign_and_initiate(rs.ring, 0, rs.secrets[0], rs.server.public_half(), to_bytes("I"), rs.cfg,
                               to_bytes("affine"));
    sizes.push_back(encode_signature_fixed(s.signature, rs.cfg, rs.ring, rs.server.group).size());
  }
  for (std::size_t i = 2; i < sizes.size(); ++i) EXPECT_EQ(sizes[i] - sizes[i - 1], sizes[1] - sizes[0]);
  // Per member: prefixed 4-char id + prefixed 8-byte alpha + prefixed 5-byte beta.
  EXPECT_EQ(sizes[1] - sizes[0], (4u + 4) + (4 + 8) + (4 + 5));
}

TEST(SignatureWire, MalformedInputsThrow) {
  RingSignature sig{{"A"}, 3, 7, 9, {{1, 0}}};
  const CombiningConfig cfg{8, PermutationKind::kFeistel};
  auto enc = encode_signature(sig, cfg);
  for (std::size_t cut = 0; cut < enc.size(); ++cut)
    EXPECT_THROW(decode_signature(ByteView(enc).first(cut), cfg), DecodeError) << cut;
  auto trailing = enc;
  trailing.push_back(0);
  EXPECT_THROW(decode_signature(trailing, cfg), DecodeError);
  auto version = enc;
  version[0] = 2;
  EXPECT_THROW(decode_signature(version, cfg), DecodeError);
  // v must fit in b bits even though its byte field is wider.
  EXPECT_THROW(decode_signature(enc, CombiningConfig{1, PermutationKind::kXor}), DecodeError);
}

TEST(ResponseWire, RoundTripAndLayout) {
  ServerResponse resp;
  for (std::size_t i = 0; i < resp.h.size(); ++i) resp.h[i] = static_cast<std::uint8_t>(i);
  resp.Y = 0x0102;
  resp.identity_ack = {0xaa, 0xbb};
  auto enc = encode_response(resp);
  ASSERT_EQ(enc.size(), 4 + 32 + 4 + 2 + 4 + 2u);
  EXPECT_EQ((Bytes(enc.begin(), enc.begin() + 4)), (Bytes{0, 0, 0, 32}));
  EXPECT_EQ(decode_response(enc), resp);
  enc.pop_back();
  EXPECT_THROW(decode_response(enc), DecodeError);
}

}  // namespace
}  // namespace meshsec
