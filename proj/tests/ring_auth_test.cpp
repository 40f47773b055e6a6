#include <gtest/gtest.h>

#include <set>

#include "meshsec/ring_setup.hpp"
#include "meshsec/wire.hpp"

namespace meshsec {
namespace {

struct Exchange {
  SignResult signed_;
  VerifyOutcome verified;
  ConfirmOutcome confirmed;
};

Exchange run_exchange(const RingSetup& rs, std::size_t signer, std::string_view identity, std::string_view seed) {
  const auto id = to_bytes(identity);
  const auto s = to_bytes(seed);
  auto signed_ = sign_and_initiate(rs.ring, signer, rs.secrets[signer], rs.server.public_half(), id, rs.cfg, s);
  auto verified = server_verify_and_respond(rs.server, rs.ring, signed_.signature, id, rs.cfg, s);
  ConfirmOutcome confirmed;
  if (verified.accepted()) confirmed = client_confirm(signed_.session, *verified.response);
  return {std::move(signed_), std::move(verified), std::move(confirmed)};
}

const RingSetup& ring5() {
  static const RingSetup rs = build_ring(5, 96, 64, "ring5");
  return rs;
}

TEST(HashParts, FramingAndDeterminism) {
  const auto ab = to_bytes("ab"), c = to_bytes("c"), a = to_bytes("a"), bc = to_bytes("bc");
  EXPECT_EQ(hash_parts({ab, c}), hash_parts({ab, c}));
  EXPECT_NE(hash_parts({ab, c}), hash_parts({a, bc}));
  EXPECT_NE(hash_parts({ab}), hash_parts({ab, Bytes{}}));
  EXPECT_EQ(hash_parts({}).size(), 32u);
}

TEST(ClientConfirm, DiffieHellmanHandValues) {
  // p = 23, g = 4: X = 4^3 = 18, Y = 4^2 = 16, and 18^2 = 16^3 = 2 (mod 23).
  ClientSession s;
  s.group = {23, 11, 4};
  s.exchange_exp = 3;
  s.X = 18;
  s.identity = to_bytes("I");
  ServerResponse resp;
  resp.Y = 16;
  resp.h = confirmation_digest(2, 18, 16, s.identity);
  resp.identity_ack = identity_ack(s.identity);
  auto out = client_confirm(s, resp);
  ASSERT_TRUE(out.accepted());
  EXPECT_EQ(out.session_key, 2);
}

TEST(RingAuth, SingletonRingOverTinyGroups) {
  auto rs = build_ring(1, 5, 4, "singleton");
  EXPECT_EQ(rs.ring[0].key.group.p, 23);
  EXPECT_EQ(rs.cfg.b, 5u);
  for (int i = 0; i < 50; ++i) {
    auto ex = run_exchange(rs, 0, "id-" + std::to_string(i), "s" + std::to_string(i));
    ASSERT_TRUE(ex.verified.accepted());
    ASSERT_TRUE(ex.confirmed.accepted());
    ASSERT_EQ(ex.confirmed.session_key, ex.verified.session_key);
  }
}

TEST(RingAuth, EverySignerOfFiveIsAccepted) {
  const auto& rs = ring5();
  for (std::size_t i = 0; i < rs.ring.size(); ++i) {
    auto ex = run_exchange(rs, i, "identity", "seed-" + std::to_string(i));
    ASSERT_TRUE(ex.verified.accepted()) << "signer " << i;
    ASSERT_TRUE(ex.confirmed.accepted()) << "signer " << i;
    EXPECT_EQ(ex.confirmed.session_key, ex.verified.session_key);
  }
}

TEST(RingAuth, CompletenessAcrossRingSizes) {
  for (std::size_t n : {1u, 2u, 5u, 10u, 20u}) {
    auto rs = build_ring(n, 64, 40, "sizes-" + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      auto ex = run_exchange(rs, i, "I", "t" + std::to_string(i));
      ASSERT_TRUE(ex.confirmed.accepted()) << "n=" << n << " i=" << i;
      ASSERT_EQ(ex.confirmed.session_key, ex.verified.session_key);
    }
  }
}

TEST(RingAuth, DeterministicPerSeed) {
  const auto& rs = ring5();
  auto a = run_exchange(rs, 2, "I", "same");
  auto b = run_exchange(rs, 2, "I", "same");
  EXPECT_EQ(a.signed_.signature, b.signed_.signature);
  EXPECT_EQ(*a.verified.response, *b.verified.response);
  auto c = run_exchange(rs, 2, "I", "other");
  EXPECT_NE(a.signed_.signature, c.signed_.signature);
}

TEST(RingAuth, ClientAndServerAgreeOnQ) {
  const auto& rs = ring5();
  const auto& grp = rs.server.group;
  for (int i = 0; i < 20; ++i) {
    auto s = sign_and_initiate(rs.ring, 1, rs.secrets[1], rs.server.public_half(), to_bytes("I"), rs.cfg,
                               to_bytes("q" + std::to_string(i)));
    EXPECT_EQ(s.session.Q, mod(mod_exp(s.session.R, rs.server.x, grp.p), grp.q));
    EXPECT_EQ(s.session.V * mod_exp(grp.g, s.session.Q, grp.p) % grp.p, s.session.X);
  }
}

TEST(RingAuth, SessionKeysAreFreshPerRun) {
  const auto& rs = ring5();
  std::set<std::string> keys;
  for (int i = 0; i < 1000; ++i) {
    auto ex = run_exchange(rs, i % 5, "I" + std::to_string(i), "fresh" + std::to_string(i));
    ASSERT_TRUE(ex.confirmed.accepted());
    keys.insert(ex.confirmed.session_key.get_str());
  }
  EXPECT_EQ(keys.size(), 1000u);
}

TEST(RingAuth, SigningPreconditions) {
  const auto& rs = ring5();
  const auto id = to_bytes("I");
  const auto seed = to_bytes("s");
  EXPECT_THROW(sign_and_initiate(rs.ring, 5, rs.secrets[0], rs.server.public_half(), id, rs.cfg, seed), DomainError);
  EXPECT_THROW(sign_and_initiate(rs.ring, 1, rs.secrets[0], rs.server.public_half(), id, rs.cfg, seed), DomainError);
  CombiningConfig narrow{rs.cfg.b - 1, rs.cfg.kind};
  EXPECT_THROW(sign_and_initiate(rs.ring, 0, rs.secrets[0], rs.server.public_half(), id, narrow, seed), DomainError);
}

TEST(RingAuth, SigningRetriesStayWithinBudget) {
  const auto& rs = ring5();
  int total = 0;
  for (int i = 0; i < 100; ++i)
    total += sign_and_initiate(rs.ring, 0, rs.secrets[0], rs.server.public_half(), to_bytes("I"), rs.cfg,
                               to_bytes("retry" + std::to_string(i)))
                 .retries;
  // p > 2^(b-1), so each attempt succeeds with probability above one half.
  EXPECT_LT(total, 100);
}

TEST(RingAuth, MutatedSignatureIsRejected) {
  const auto& rs = ring5();
  auto ex = run_exchange(rs, 3, "I", "mutate");
  const auto id = to_bytes("I");
  auto verify = [&](const RingSignature& sig) {
    try {
      return server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, to_bytes("s")).accepted();
    } catch (const DomainError&) {
      return false;
    }
  };
  ASSERT_TRUE(verify(ex.signed_.signature));
  for (std::size_t t = 0; t < 5; ++t) {
    for (unsigned long bit = 0; bit < 40; ++bit) {
      auto sig = ex.signed_.signature;
      mpz_combit(sig.pairs[t].alpha.get_mpz_t(), bit);
      EXPECT_FALSE(verify(sig)) << "alpha " << t << " bit " << bit;
      sig = ex.signed_.signature;
      mpz_combit(sig.pairs[t].beta.get_mpz_t(), bit);
      EXPECT_FALSE(verify(sig)) << "beta " << t << " bit " << bit;
    }
  }
  auto sig = ex.signed_.signature;
  mpz_combit(sig.v.get_mpz_t(), 0);
  EXPECT_FALSE(verify(sig));
  sig = ex.signed_.signature;
  mpz_combit(sig.V.get_mpz_t(), 1);
  EXPECT_FALSE(verify(sig));
  sig = ex.signed_.signature;
  mpz_combit(sig.R.get_mpz_t(), 1);
  EXPECT_FALSE(verify(sig));
  sig = ex.signed_.signature;
  std::swap(sig.member_ids[0], sig.member_ids[1]);
  EXPECT_FALSE(verify(sig));
  // A different identity changes the combining key.
  EXPECT_FALSE(server_verify_and_respond(rs.server, rs.ring, ex.signed_.signature, to_bytes("J"), rs.cfg,
                                         to_bytes("s"))
                   .accepted());
}

TEST(RingAuth, RandomPairsAreRejected) {
  const auto& rs = ring5();
  auto ex = run_exchange(rs, 0, "I", "forge");
  Drbg rng("forgery");
  for (int i = 0; i < 100; ++i) {
    auto sig = ex.signed_.signature;
    for (std::size_t t = 0; t < sig.pairs.size(); ++t) {
      const auto& grp = rs.ring[t].key.group;
      sig.pairs[t] = {rng.range(1, grp.p), rng.below(grp.q)};
    }
    auto out = server_verify_and_respond(rs.server, rs.ring, sig, to_bytes("I"), rs.cfg, to_bytes("s"));
    EXPECT_FALSE(out.accepted());
    EXPECT_EQ(out.reason, RejectReason::kRingEquation);
  }
}

TEST(RingAuth, UnknownMemberAndMalformedSignatures) {
  const auto& rs = ring5();
  auto ex = run_exchange(rs, 0, "I", "malformed");
  const auto id = to_bytes("I");
  const auto seed = to_bytes("s");

  auto sig = ex.signed_.signature;
  sig.member_ids[2] = "stranger";
  EXPECT_EQ(server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, seed).reason, RejectReason::kUnknownMember);

  sig = ex.signed_.signature;
  sig.pairs.pop_back();
  EXPECT_THROW(server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, seed), DomainError);

  sig = ex.signed_.signature;
  sig.pairs[1].alpha = 0;
  EXPECT_THROW(server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, seed), DomainError);

  sig = ex.signed_.signature;
  sig.V = rs.server.group.p;
  EXPECT_THROW(server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, seed), DomainError);

  sig = ex.signed_.signature;
  sig.v = BigInt(1) << rs.cfg.b;
  EXPECT_THROW(server_verify_and_respond(rs.server, rs.ring, sig, id, rs.cfg, seed), DomainError);
}

TEST(ClientConfirm, TamperedResponsesAreRejected) {
  const auto& rs = ring5();
  auto ex = run_exchange(rs, 4, "I", "tamper");
  const auto& good = *ex.verified.response;
  ASSERT_TRUE(client_confirm(ex.signed_.session, good).accepted());

  for (unsigned long bit = 0; bit < 64; ++bit) {
    auto resp = good;
    mpz_combit(resp.Y.get_mpz_t(), bit);
    EXPECT_FALSE(client_confirm(ex.signed_.session, resp).accepted()) << "Y bit " << bit;
  }
  for (std::size_t byte = 0; byte < good.h.size(); ++byte) {
    auto resp = good;
    resp.h[byte] ^= 0x01;
    EXPECT_EQ(client_confirm(ex.signed_.session, resp).status, ConfirmStatus::kBadDigest);
  }
  auto resp = good;
  resp.identity_ack[0] ^= 0x80;
  EXPECT_EQ(client_confirm(ex.signed_.session, resp).status, ConfirmStatus::kBadAck);
}

TEST(AuthServer, ReplayedIdentityIsRefused) {
  const auto& rs = ring5();
  AuthServer server(rs.server, rs.ring, rs.cfg, 2);
  auto first = sign_and_initiate(rs.ring, 0, rs.secrets[0], rs.server.public_half(), to_bytes("nonce-1"), rs.cfg,
                                 to_bytes("r1"));
  EXPECT_TRUE(server.handle(first.signature, to_bytes("nonce-1"), to_bytes("a")).accepted());
  auto replay = server.handle(first.signature, to_bytes("nonce-1"), to_bytes("b"));
  EXPECT_FALSE(replay.accepted());
  EXPECT_EQ(replay.reason, RejectReason::kReplay);

  // Once the window rolls over, the oldest identity is forgotten.
  for (std::string n : {"nonce-2", "nonce-3"}) {
    auto s = sign_and_initiate(rs.ring, 1, rs.secrets[1], rs.server.public_half(), to_bytes(n), rs.cfg, to_bytes(n));
    EXPECT_TRUE(server.handle(s.signature, to_bytes(n), to_bytes(n)).accepted());
  }
  EXPECT_TRUE(server.handle(first.signature, to_bytes("nonce-1"), to_bytes("c")).accepted());
}

TEST(RingDirectory, Invariants) {
  const auto& rs = ring5();
  EXPECT_THROW(RingDirectory(std::vector<RingMember>{}), DomainError);
  auto members = rs.ring.members();
  members[1].id = members[0].id;
  EXPECT_THROW(RingDirectory(members, false), DomainError);
  members = rs.ring.members();
  members[0].key.group.p += 2;
  EXPECT_THROW(RingDirectory(members, true), DomainError);
}

}  // namespace
}  // namespace meshsec
