#pragma once

#include "meshsec/ring_auth.hpp"

namespace meshsec {

inline constexpr std::uint8_t kSignatureVersion = 1;

/// Canonical signature layout:
///   [1 version][2 n][n x prefixed id][ceil(b/8) v][V][R][n x (alpha, beta)]
/// with every integer as a 4-byte length plus minimal big-endian magnitude.
inline Bytes encode_signature(const RingSignature& sig, const CombiningConfig& cfg) {
  if (sig.member_ids.size() != sig.pairs.size()) throw DomainError("signature pair count differs from member count");
  if (sig.member_ids.size() > 0xffff) throw DomainError("ring too large for 2-byte member count");
  Bytes out;
  out.push_back(kSignatureVersion);
  put_be(out, sig.member_ids.size(), 2);
  for (const auto& id : sig.member_ids) put_prefixed(out, to_bytes(id));
  append(out, magnitude_bytes(sig.v, cfg.block_bytes()));
  put_int(out, sig.V);
  put_int(out, sig.R);
  for (const auto& pr : sig.pairs) {
    put_int(out, pr.alpha);
    put_int(out, pr.beta);
  }
  return out;
}

/// Same layout as encode_signature, but every integer is padded to the byte length of its
/// modulus (p for V, R and alpha; q for beta), so the size is affine in the ring size.
inline Bytes encode_signature_fixed(const RingSignature& sig, const CombiningConfig& cfg,
                                    const RingDirectory& ring, const GroupParams& server_group) {
  if (sig.member_ids.size() != sig.pairs.size()) throw DomainError("signature pair count differs from member count");
  Bytes out;
  out.push_back(kSignatureVersion);
  put_be(out, sig.member_ids.size(), 2);
  for (const auto& id : sig.member_ids) put_prefixed(out, to_bytes(id));
  append(out, magnitude_bytes(sig.v, cfg.block_bytes()));
  put_int(out, sig.V, byte_length(server_group.p));
  put_int(out, sig.R, byte_length(server_group.p));
  for (std::size_t t = 0; t < sig.pairs.size(); ++t) {
    const auto* m = ring.find(sig.member_ids[t]);
    if (m == nullptr) throw DomainError("unknown ring member " + sig.member_ids[t]);
    put_int(out, sig.pairs[t].alpha, byte_length(m->key.group.p));
    put_int(out, sig.pairs[t].beta, byte_length(m->key.group.q));
  }
  return out;
}

/// Decodes either encoding; `strict` additionally rejects zero-padded integers.
inline RingSignature decode_signature(ByteView data, const CombiningConfig& cfg, bool strict = false) {
  ByteReader in(data);
  if (in.read_be(1) != kSignatureVersion) throw DecodeError("unsupported signature version");
  const auto n = static_cast<std::size_t>(in.read_be(2));
  RingSignature sig;
  for (std::size_t i = 0; i < n; ++i) {
    auto id = in.read_prefixed();
    sig.member_ids.emplace_back(id.begin(), id.end());
  }
  sig.v = from_magnitude(in.take(cfg.block_bytes()));
  if (bit_length(sig.v) > cfg.b) throw DecodeError("v wider than b bits");
  sig.V = read_int(in, strict);
  sig.R = read_int(in, strict);
  sig.pairs.resize(n);
  for (auto& pr : sig.pairs) {
    pr.alpha = read_int(in, strict);
    pr.beta = read_int(in, strict);
  }
  if (!in.done()) throw DecodeError("trailing bytes after signature");
  return sig;
}

/// Server response layout: [prefixed h][Y][prefixed I'].
inline Bytes encode_response(const ServerResponse& resp) {
  Bytes out;
  put_prefixed(out, resp.h);
  put_int(out, resp.Y);
  put_prefixed(out, resp.identity_ack);
  return out;
}

inline ServerResponse decode_response(ByteView data) {
  ByteReader in(data);
  ServerResponse resp;
  auto h = in.read_prefixed();
  if (h.size() != resp.h.size()) throw DecodeError("digest has wrong length");
  std::copy(h.begin(), h.end(), resp.h.begin());
  resp.Y = read_int(in);
  resp.identity_ack = in.read_prefixed();
  if (!in.done()) throw DecodeError("trailing bytes after response");
  return resp;
}

}  // namespace meshsec
