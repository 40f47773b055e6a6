// meshsec: key generation, ring-signature key exchange, key lists, simulation.
// Machine-readable output is JSON on stdout (or --out); diagnostics go to stderr.
// Exit status: 0 success/accept, 1 usage or configuration error, 2 protocol reject.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>

#include "meshsec/key_files.hpp"
#include "meshsec/mesh_sim.hpp"

namespace {

using namespace meshsec;
using files::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitReject = 2;
constexpr std::size_t kMinProductionBits = 512;

struct Output {
  std::string path;

  void emit(const json& j) const {
    if (path.empty())
      std::cout << j.dump(2) << '\n';
    else
      files::write_json(path, j);
  }
};

PermutationKind parse_permutation(const std::string& name) {
  if (name == "feistel") return PermutationKind::kFeistel;
  if (name == "xor") return PermutationKind::kXor;
  throw DomainError("unknown permutation '" + name + "'");
}

void check_bits(std::size_t p_bits, std::size_t q_bits, bool tiny) {
  if (!tiny && p_bits < kMinProductionBits)
    throw DomainError("p-bits below " + std::to_string(kMinProductionBits) + " needs --tiny");
  if (q_bits < 2 || q_bits >= p_bits) throw DomainError("need 2 <= q-bits < p-bits");
}

// ---- keygen -------------------------------------------------------------------------

struct KeygenArgs {
  std::string kind = "ring";
  std::size_t p_bits = 1024, q_bits = 160, n = 5;
  bool tiny = false;
  std::string id = "U001";
  std::string prefix = "meshsec";
  std::string seed = "meshsec-keygen";
};

int cmd_keygen(const KeygenArgs& a) {
  check_bits(a.p_bits, a.q_bits, a.tiny);
  json summary{{"command", "keygen"}, {"kind", a.kind}, {"seed", a.seed}, {"p_bits", a.p_bits}, {"q_bits", a.q_bits}};
  json written = json::array();
  bool groups_valid = true, pairs_match = true;
  auto put = [&](const std::string& suffix, const json& j) {
    const auto path = a.prefix + suffix;
    files::write_json(path, j);
    written.push_back(path);
  };

  if (a.kind == "user") {
    const auto group = gen_group_params(a.p_bits, a.q_bits, a.seed);
    const auto kp = keygen(group, to_bytes(a.seed));
    groups_valid = is_valid_group(group);
    pairs_match = keys_match(kp.pub, kp.priv);
    put(".pub.json", {{"kind", "trapdoor-public"}, {"id", a.id}, {"key", files::to_json(kp.pub)}});
    put(".priv.json", {{"kind", "trapdoor-private"}, {"id", a.id}, {"group", files::to_json(group)}, {"x", files::int_hex(kp.priv.x)}});
  } else if (a.kind == "server") {
    const auto group = gen_group_params(a.p_bits, a.q_bits, a.seed);
    const auto keys = server_keygen(group, to_bytes(a.seed));
    groups_valid = is_valid_group(group);
    pairs_match = mod_exp(group.g, keys.x, group.p) == keys.y;
    put(".server.json", files::to_json(keys));
    put(".server-pub.json", files::to_json(keys.public_half()));
  } else if (a.kind == "ring") {
    if (a.n < 1) throw DomainError("ring size must be at least 1");
    const auto rs = build_ring(a.n, a.p_bits, a.q_bits, a.seed);
    for (std::size_t i = 0; i < rs.ring.size(); ++i) {
      groups_valid = groups_valid && is_valid_group(rs.ring[i].key.group);
      pairs_match = pairs_match && keys_match(rs.ring[i].key, rs.secrets[i]);
    }
    groups_valid = groups_valid && is_valid_group(rs.server.group);
    put(".ring.json", files::to_json(rs.ring));
    put(".secrets.json", files::secrets_to_json(rs.secrets));
    put(".server.json", files::to_json(rs.server));
    put(".server-pub.json", files::to_json(rs.server.public_half()));
    summary["n"] = a.n;
    summary["b"] = rs.cfg.b;
  } else {
    throw DomainError("unknown key kind '" + a.kind + "'");
  }
  summary["files"] = written;
  summary["checks"] = {{"groups_valid", groups_valid}, {"pairs_match", pairs_match}};
  std::cout << summary.dump(2) << '\n';
  return groups_valid && pairs_match ? kExitOk : kExitUsage;
}

// ---- ring exchange ------------------------------------------------------------------

struct ExchangeArgs {
  std::string ring, secrets, server, server_pub, signature, session_out;
  std::size_t signer_index = 0;
  std::string identity = "client-identity";
  std::string permutation = "feistel";
  std::string tamper = "none";
  std::string seed = "meshsec-exchange";
  Output out;
};

std::string client_seed(const std::string& seed) { return seed + "/client"; }
std::string server_seed(const std::string& seed) { return seed + "/server"; }

int cmd_sign(const ExchangeArgs& a) {
  const auto ring = files::ring_from_json(files::read_json(a.ring));
  const auto secrets = files::secrets_from_json(files::read_json(a.secrets));
  const auto server = files::server_public_from_json(files::read_json(a.server_pub));
  if (a.signer_index >= secrets.size()) throw DomainError("no secret for that signer index");
  const auto cfg = combining_for(ring, parse_permutation(a.permutation));
  auto res = sign_and_initiate(ring, a.signer_index, secrets[a.signer_index], server, to_bytes(a.identity), cfg,
                               to_bytes(client_seed(a.seed)));
  if (!a.session_out.empty()) files::write_json(a.session_out, files::to_json(res.session));
  a.out.emit({{"command", "sign"},
              {"seed", a.seed},
              {"identity", a.identity},
              {"permutation", a.permutation},
              {"b", cfg.b},
              {"signature", to_hex(encode_signature(res.signature, cfg))}});
  return kExitOk;
}

int cmd_verify(const ExchangeArgs& a) {
  const auto ring = files::ring_from_json(files::read_json(a.ring));
  const auto keys = files::server_keys_from_json(files::read_json(a.server));
  const auto doc = files::read_json(a.signature);
  const std::string identity = doc.value("identity", a.identity);
  const std::string seed = doc.value("seed", a.seed);
  const auto cfg = combining_for(ring, parse_permutation(doc.value("permutation", a.permutation)));
  json result{{"command", "verify"}, {"seed", seed}, {"identity", identity}};
  VerifyOutcome outcome;
  try {
    const auto sig = decode_signature(from_hex(doc.at("signature").get<std::string>()), cfg, true);
    outcome = server_verify_and_respond(keys, ring, sig, to_bytes(identity), cfg, to_bytes(server_seed(seed)));
    result["reason"] = to_string(outcome.reason);
  } catch (const DomainError& e) {
    result["reason"] = "malformed";
    result["detail"] = e.what();
  }
  result["accepted"] = outcome.accepted();
  if (outcome.accepted()) result["response"] = to_hex(encode_response(*outcome.response));
  a.out.emit(result);
  return outcome.accepted() ? kExitOk : kExitReject;
}

void flip_low_bit(BigInt& v) { v ^= 1; }

int cmd_exchange(const ExchangeArgs& a) {
  static const std::set<std::string> tampers{"none", "alpha", "beta", "v", "V", "R", "Y", "h"};
  if (!tampers.contains(a.tamper)) throw DomainError("unknown tamper target '" + a.tamper + "'");
  const auto ring = files::ring_from_json(files::read_json(a.ring));
  const auto secrets = files::secrets_from_json(files::read_json(a.secrets));
  const auto keys = files::server_keys_from_json(files::read_json(a.server));
  if (a.signer_index >= secrets.size()) throw DomainError("no secret for that signer index");
  const auto cfg = combining_for(ring, parse_permutation(a.permutation));
  const auto identity = to_bytes(a.identity);

  auto signed_ = sign_and_initiate(ring, a.signer_index, secrets[a.signer_index], keys.public_half(), identity, cfg,
                                   to_bytes(client_seed(a.seed)));
  auto& sig = signed_.signature;
  if (a.tamper == "alpha") flip_low_bit(sig.pairs[0].alpha);
  if (a.tamper == "beta") flip_low_bit(sig.pairs[0].beta);
  if (a.tamper == "v") flip_low_bit(sig.v);
  if (a.tamper == "V") flip_low_bit(sig.V);
  if (a.tamper == "R") flip_low_bit(sig.R);

  json t{{"command", "exchange"},
         {"seed", a.seed},
         {"identity", a.identity},
         {"permutation", a.permutation},
         {"tamper", a.tamper},
         {"b", cfg.b},
         {"signature", to_hex(encode_signature(sig, cfg))},
         {"signing_retries", signed_.retries}};

  VerifyOutcome outcome;
  json server{{"accepted", false}};
  try {
    outcome = server_verify_and_respond(keys, ring, sig, identity, cfg, to_bytes(server_seed(a.seed)));
    server["reason"] = to_string(outcome.reason);
  } catch (const DomainError& e) {
    server["reason"] = "malformed";
    server["detail"] = e.what();
  }
  bool accepted = false;
  json client = nullptr;
  if (outcome.accepted()) {
    server["accepted"] = true;
    server["session_key"] = to_hex(magnitude_bytes(outcome.session_key));
    auto resp = *outcome.response;
    if (a.tamper == "Y") flip_low_bit(resp.Y);
    if (a.tamper == "h") resp.h[0] ^= 1;
    t["response"] = to_hex(encode_response(resp));
    const auto confirmed = client_confirm(signed_.session, resp);
    static const char* names[] = {"accepted", "bad-identity-ack", "bad-digest"};
    client = {{"status", names[static_cast<int>(confirmed.status)]}};
    if (confirmed.accepted()) {
      client["session_key"] = to_hex(magnitude_bytes(confirmed.session_key));
      accepted = confirmed.session_key == outcome.session_key;
    }
  }
  t["server"] = server;
  t["client"] = client;
  t["keys_equal"] = accepted;
  t["accepted"] = accepted;
  a.out.emit(t);
  if (!accepted) std::cerr << "exchange rejected\n";
  return accepted ? kExitOk : kExitReject;
}

// ---- keylist ------------------------------------------------------------------------

struct KeylistArgs {
  std::string seed = "meshsec-master";
  std::uint64_t counter = 0;
  std::int64_t start_ms = 0;
  std::size_t cardinality = 10;
  std::int64_t timeout_ms = 1000;
  std::optional<std::int64_t> at_ms;
  Output out;
};

int cmd_keylist(const KeylistArgs& a) {
  const auto list = keys::generate_key_list(to_bytes(a.seed), a.counter, a.start_ms, a.cardinality, a.timeout_ms);
  json ks = json::array();
  for (const auto& k : list.keys) ks.push_back(to_hex(k));
  json j{{"command", "keylist"},
         {"seed", a.seed},
         {"session_counter", a.counter},
         {"generated_at_ms", list.generated_at},
         {"timeout_ms", list.timeout},
         {"cardinality", list.cardinality()},
         {"expires_at_ms", list.expires_at()},
         {"keys", ks},
         {"wire", to_hex(keys::encode_response(list))}};
  if (a.at_ms) {
    const auto [key, handle] = keys::lookup_key(list, *a.at_ms);
    j["lookup"] = {{"at_ms", *a.at_ms}, {"index", handle.index}, {"remaining_ms", handle.remaining}, {"key", to_hex(key)}};
  }
  a.out.emit(j);
  return kExitOk;
}

// ---- simulate -----------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::optional<std::string> mode;
  std::optional<std::string> seed;
  std::optional<double> duration_ms;
  std::string trace;
  bool compare_modes = false;
  bool print_scenario = false;
  Output out;
};

int cmd_simulate(const SimulateArgs& a) {
  auto s = a.scenario.empty() ? sim::build_reference_topology() : sim::scenario_from_json(files::read_json(a.scenario));
  if (a.seed) s.seed = *a.seed;
  if (a.duration_ms) s.duration_ms = *a.duration_ms;
  if (a.mode) {
    if (*a.mode == "static-key")
      s.mode = sim::KeyMode::kStaticKey;
    else if (*a.mode == "rotating-key")
      s.mode = sim::KeyMode::kRotatingKey;
    else
      throw DomainError("unknown mode '" + *a.mode + "'");
  }

  if (a.print_scenario) {
    sim::validate(s, sim::Validation::kAllowIslands);
    a.out.emit(sim::to_json(s));
    return kExitOk;
  }

  auto run_one = [&](sim::KeyMode mode, const std::string& trace_path) {
    auto sc = s;
    sc.mode = mode;
    std::ofstream trace;
    if (!trace_path.empty()) {
      trace.open(trace_path, std::ios::binary | std::ios::trunc);
      if (!trace) throw files::IoError("cannot write " + trace_path);
    }
    sim::Simulator simulator(std::move(sc), sim::Validation::kStrict, trace_path.empty() ? nullptr : &trace);
    return simulator.run();
  };

  if (!a.compare_modes) {
    auto m = run_one(s.mode, a.trace);
    auto j = sim::to_json(m);
    j["command"] = "simulate";
    a.out.emit(j);
    return kExitOk;
  }
  auto base = run_one(sim::KeyMode::kStaticKey, a.trace.empty() ? "" : a.trace + ".static");
  auto secured = run_one(sim::KeyMode::kRotatingKey, a.trace.empty() ? "" : a.trace + ".rotating");
  const auto r = sim::measure_overhead(base, secured);
  a.out.emit({{"command", "simulate"},
              {"seed", s.seed},
              {"static", sim::to_json(base)},
              {"rotating", sim::to_json(secured)},
              {"overhead",
               {{"throughput_static", r.throughput_base},
                {"throughput_rotating", r.throughput_secured},
                {"throughput_delta_pct", r.throughput_delta_pct},
                {"drop_rate_static", r.drop_rate_base},
                {"drop_rate_rotating", r.drop_rate_secured},
                {"drop_rate_delta", r.drop_rate_delta},
                {"reference_throughput_delta_pct", 7.0}}}});
  return kExitOk;
}

// ---- bench-sig-size -----------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> n_list;
  std::size_t p_bits = 1024, q_bits = 160;
  bool tiny = false;
  std::string seed = "meshsec-bench";
  Output out;
};

int cmd_bench_sig_size(BenchArgs a) {
  check_bits(a.p_bits, a.q_bits, a.tiny);
  if (a.n_list.empty())
    for (std::size_t n = 1; n <= 20; ++n) a.n_list.push_back(n);
  for (auto n : a.n_list)
    if (n < 1) throw DomainError("ring sizes must be at least 1");
  const std::size_t max_n = *std::max_element(a.n_list.begin(), a.n_list.end());
  // One deployment; smaller rings are prefixes of it, so the per-member cost is uniform.
  const auto rs = build_ring(max_n, a.p_bits, a.q_bits, a.seed);
  json rows = json::array();
  std::vector<double> xs, ys;
  for (auto n : a.n_list) {
    std::vector<RingMember> members(rs.ring.members().begin(), rs.ring.members().begin() + static_cast<std::ptrdiff_t>(n));
    RingDirectory ring(std::move(members), false);
    const auto cfg = rs.cfg;
    auto s = sign_and_initiate(ring, 0, rs.secrets[0], rs.server.public_half(), to_bytes("bench"), cfg,
                               to_bytes(a.seed + "/sign/" + std::to_string(n)));
    const auto fixed = encode_signature_fixed(s.signature, cfg, ring, rs.server.group).size();
    const auto canonical = encode_signature(s.signature, cfg).size();
    rows.push_back({{"n", n}, {"fixed_bytes", fixed}, {"canonical_bytes", canonical}});
    xs.push_back(static_cast<double>(n));
    ys.push_back(static_cast<double>(fixed));
  }
  double slope = 0, intercept = ys.front();
  if (xs.size() > 1) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    slope = sxx == 0 ? 0 : sxy / sxx;
    intercept = my - slope * mx;
  }
  double max_residual = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (slope * xs[i] + intercept);
    rows[i]["residual"] = r;
    max_residual = std::max(max_residual, std::abs(r));
  }
  a.out.emit({{"command", "bench-sig-size"},
              {"seed", a.seed},
              {"p_bits", a.p_bits},
              {"q_bits", a.q_bits},
              {"encoding", "fixed-width"},
              {"rows", rows},
              {"fit", {{"A", slope}, {"B", intercept}, {"max_abs_residual", max_residual}}},
              {"reference", {{"A", 60}, {"B", 60}}}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshsec: anonymous ring authentication and key rotation for wireless mesh networks"};
  app.require_subcommand(1);

  KeygenArgs kg;
  auto* keygen_cmd = app.add_subcommand("keygen", "generate trapdoor, server or ring key files");
  keygen_cmd->add_option("--kind", kg.kind, "user | server | ring")->check(CLI::IsMember({"user", "server", "ring"}));
  keygen_cmd->add_option("--p-bits", kg.p_bits, "modulus size");
  keygen_cmd->add_option("--q-bits", kg.q_bits, "subgroup order size");
  keygen_cmd->add_option("--n", kg.n, "ring size for --kind ring");
  keygen_cmd->add_option("--id", kg.id, "member id for --kind user");
  keygen_cmd->add_flag("--tiny", kg.tiny, "allow toy group sizes (testing only)");
  keygen_cmd->add_option("--out-prefix", kg.prefix, "output path prefix");
  keygen_cmd->add_option("--seed", kg.seed, "deterministic seed");

  ExchangeArgs sg, vf, ex;
  auto* sign_cmd = app.add_subcommand("sign", "produce a ring signature and client session");
  sign_cmd->add_option("--ring", sg.ring)->required();
  sign_cmd->add_option("--secrets", sg.secrets)->required();
  sign_cmd->add_option("--server-pub", sg.server_pub)->required();
  sign_cmd->add_option("--signer-index", sg.signer_index, "0-based position in the ring");
  sign_cmd->add_option("--identity", sg.identity);
  sign_cmd->add_option("--permutation", sg.permutation)->check(CLI::IsMember({"feistel", "xor"}));
  sign_cmd->add_option("--session-out", sg.session_out, "write the client session here");
  sign_cmd->add_option("--seed", sg.seed);
  sign_cmd->add_option("--out", sg.out.path);

  auto* verify_cmd = app.add_subcommand("verify", "run the server side on a signature document");
  verify_cmd->add_option("--ring", vf.ring)->required();
  verify_cmd->add_option("--server", vf.server)->required();
  verify_cmd->add_option("--signature", vf.signature, "output of sign or exchange")->required();
  verify_cmd->add_option("--identity", vf.identity);
  verify_cmd->add_option("--permutation", vf.permutation)->check(CLI::IsMember({"feistel", "xor"}));
  verify_cmd->add_option("--seed", vf.seed);
  verify_cmd->add_option("--out", vf.out.path);

  auto* exchange_cmd = app.add_subcommand("exchange", "run a full key exchange locally and write the transcript");
  exchange_cmd->add_option("--ring", ex.ring)->required();
  exchange_cmd->add_option("--secrets", ex.secrets)->required();
  exchange_cmd->add_option("--server", ex.server)->required();
  exchange_cmd->add_option("--signer-index", ex.signer_index, "0-based position in the ring");
  exchange_cmd->add_option("--identity", ex.identity);
  exchange_cmd->add_option("--permutation", ex.permutation)->check(CLI::IsMember({"feistel", "xor"}));
  exchange_cmd->add_option("--tamper", ex.tamper, "none | alpha | beta | v | V | R | Y | h");
  exchange_cmd->add_option("--seed", ex.seed);
  exchange_cmd->add_option("--out", ex.out.path);

  KeylistArgs kl;
  auto* keylist_cmd = app.add_subcommand("keylist", "derive a session key list");
  keylist_cmd->add_option("--seed", kl.seed, "AS master seed");
  keylist_cmd->add_option("--counter", kl.counter, "session counter");
  keylist_cmd->add_option("--start-ms", kl.start_ms);
  keylist_cmd->add_option("--cardinality", kl.cardinality);
  keylist_cmd->add_option("--timeout-ms", kl.timeout_ms);
  keylist_cmd->add_option("--at-ms", kl.at_ms, "also look up the key active at this time");
  keylist_cmd->add_option("--out", kl.out.path);

  SimulateArgs sm;
  auto* simulate_cmd = app.add_subcommand("simulate", "run the mesh simulator");
  simulate_cmd->add_option("--scenario", sm.scenario, "scenario JSON; default is the built-in 51-node topology");
  simulate_cmd->add_option("--mode", sm.mode, "static-key | rotating-key");
  simulate_cmd->add_option("--seed", sm.seed);
  simulate_cmd->add_option("--duration-ms", sm.duration_ms);
  simulate_cmd->add_option("--trace", sm.trace, "write the event trace (NDJSON)");
  simulate_cmd->add_flag("--compare-modes", sm.compare_modes, "run both key modes and report the overhead");
  simulate_cmd->add_flag("--print-scenario", sm.print_scenario, "emit the resolved scenario instead of running it");
  simulate_cmd->add_option("--out", sm.out.path);

  BenchArgs bn;
  auto* bench_cmd = app.add_subcommand("bench-sig-size", "signature size against ring size");
  bench_cmd->add_option("--n-list", bn.n_list, "ring sizes (default 1..20)")->delimiter(',');
  bench_cmd->add_option("--p-bits", bn.p_bits);
  bench_cmd->add_option("--q-bits", bn.q_bits);
  bench_cmd->add_flag("--tiny", bn.tiny, "allow toy group sizes");
  bench_cmd->add_option("--seed", bn.seed);
  bench_cmd->add_option("--out", bn.out.path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*keygen_cmd) return cmd_keygen(kg);
    if (*sign_cmd) return cmd_sign(sg);
    if (*verify_cmd) return cmd_verify(vf);
    if (*exchange_cmd) return cmd_exchange(ex);
    if (*keylist_cmd) return cmd_keylist(kl);
    if (*simulate_cmd) return cmd_simulate(sm);
    if (*bench_cmd) return cmd_bench_sig_size(bn);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
