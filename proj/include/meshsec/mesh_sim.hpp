#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshsec/key_mgmt.hpp"
#include "meshsec/ring_setup.hpp"
#include "meshsec/wire.hpp"

// Deterministic discrete-event model of a three-tier wireless mesh: an authentication
// server, mesh routers and mesh clients. Links are (delay, loss, bandwidth) abstractions;
// there is no radio model. Simulation time is kept in integral microseconds.

namespace meshsec::sim {

using NodeId = std::uint32_t;
using Micros = std::int64_t;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal consistency check failed; the run is invalid.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class NodeKind { kAS, kIGW, kMR, kMC };
enum class JoinPhase { kDetached, kAssociatedAsMC, kAuthenticatedToAS, kFullMR };
enum class TrafficKind { kReliableStream, kDatagram };
enum class KeyMode { kStaticKey, kRotatingKey };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kAS: return "AS";
    case NodeKind::kIGW: return "IGW";
    case NodeKind::kMR: return "MR";
    case NodeKind::kMC: return "MC";
  }
  return "?";
}

inline const char* to_string(JoinPhase p) {
  switch (p) {
    case JoinPhase::kDetached: return "detached";
    case JoinPhase::kAssociatedAsMC: return "associated-as-MC";
    case JoinPhase::kAuthenticatedToAS: return "authenticated-to-AS";
    case JoinPhase::kFullMR: return "full-MR";
  }
  return "?";
}

inline const char* to_string(TrafficKind k) {
  return k == TrafficKind::kReliableStream ? "reliable-stream" : "datagram";
}

inline const char* to_string(KeyMode m) { return m == KeyMode::kStaticKey ? "static-key" : "rotating-key"; }

/// Uniform delay in [min_ms, max_ms].
struct DelayRange {
  double min_ms = 0;
  double max_ms = 0;
};

struct NodeSpec {
  NodeId id = 0;
  NodeKind kind = NodeKind::kMR;
  std::string name;
  double join_at_ms = 0;
  double clock_offset_ms = 0;  // local clock minus simulation time
};

struct LinkSpec {
  NodeId a = 0;
  NodeId b = 0;
  DelayRange delay;                          // data-plane propagation
  std::optional<DelayRange> control_delay;   // authentication / key-list messages; defaults to `delay`
  double loss = 0;                           // per-transmission loss probability
  double bandwidth_mbps = 54;
};

struct KeyConfig {
  std::size_t cardinality = 10;
  keys::Millis timeout_ms = 1000;
  bool correction = true;         // false forces c = 0
  double acceptance_grace_ms = 0; // receivers accept a key this long after its window closes
};

struct RingConfig {
  std::size_t n = 5;
  std::size_t p_bits = 128;
  std::size_t q_bits = 96;
  std::size_t b = 0;  // 0 selects the smallest width that fits the ring moduli
};

struct FlowSpec {
  NodeId source = 0;
  NodeId sink = 0;
  TrafficKind kind = TrafficKind::kDatagram;
  double rate_kbps = 1000;
  double start_ms = 0;
  double duration_ms = 0;
  std::size_t payload_bytes = 1000;
};

struct TimingConfig {
  double assoc_ms = 20;
  double auth_service_ms = 5;
  double key_service_ms = 1;
  double join_retry_ms = 500;
  double auth_retry_ms = 10000;
  double key_request_retry_ms = 10000;
  double retransmit_timeout_ms = 200;
  double crypto_us_per_packet = 8;      // encryption cost per hop in both modes
  double key_lookup_us_per_packet = 1;  // extra per-hop cost of selecting the active key
  std::size_t header_bytes = 40;
};

struct SimScenario {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  KeyConfig keys;
  RingConfig ring;
  std::vector<FlowSpec> flows;
  TimingConfig timing;
  KeyMode mode = KeyMode::kRotatingKey;
  double duration_ms = 60000;
  std::string seed = "meshsec";
};

struct DropCounts {
  std::uint64_t no_key = 0;
  std::uint64_t in_flight_at_expiry = 0;
  std::uint64_t link_loss = 0;

  std::uint64_t total() const { return no_key + in_flight_at_expiry + link_loss; }
  friend bool operator==(const DropCounts&, const DropCounts&) = default;
};

struct NodeMetrics {
  NodeId id = 0;
  NodeKind kind = NodeKind::kMR;
  JoinPhase final_phase = JoinPhase::kDetached;
  std::optional<double> join_latency_ms;  // empty: never joined
  double key_outage_ms = 0;
  std::uint32_t key_requests = 0;
  std::int64_t last_correction = 0;

  friend bool operator==(const NodeMetrics&, const NodeMetrics&) = default;
};

struct Metrics {
  std::string scenario_fingerprint;
  KeyMode mode = KeyMode::kRotatingKey;
  std::string seed;
  double duration_ms = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t in_flight_at_end = 0;
  DropCounts dropped;
  std::uint64_t delivered_payload_bytes = 0;
  double throughput_bytes_per_s = 0;
  std::uint64_t control_messages = 0;
  std::uint64_t control_bytes = 0;
  std::vector<std::size_t> signature_bytes;  // one entry per completed authentication
  std::vector<NodeMetrics> nodes;
  std::uint64_t events = 0;
  std::string trace_digest;

  double drop_rate() const { return sent == 0 ? 0.0 : static_cast<double>(dropped.total()) / static_cast<double>(sent); }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct JoinEvent {
  Micros time_us = 0;
  NodeId node = 0;
  JoinPhase phase = JoinPhase::kDetached;
};

enum class Validation { kStrict, kAllowIslands };

// ---- JSON form --------------------------------------------------------------------------

namespace detail {

template <typename E>
E parse_enum(const nlohmann::json& j, std::initializer_list<E> values) {
  const auto text = j.get<std::string>();
  for (auto v : values)
    if (text == to_string(v)) return v;
  throw ConfigError("unknown enumerator '" + text + "'");
}

inline nlohmann::json delay_json(const DelayRange& d) { return nlohmann::json::array({d.min_ms, d.max_ms}); }

inline DelayRange parse_delay(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("delay must be a [min, max] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const SimScenario& s) {
  using nlohmann::json;
  json j;
  j["seed"] = s.seed;
  j["mode"] = to_string(s.mode);
  j["duration_ms"] = s.duration_ms;
  for (const auto& n : s.nodes)
    j["nodes"].push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"name", n.name}, {"join_at_ms", n.join_at_ms},
                          {"clock_offset_ms", n.clock_offset_ms}});
  for (const auto& l : s.links) {
    json lj{{"a", l.a}, {"b", l.b}, {"delay_ms", detail::delay_json(l.delay)}, {"loss", l.loss},
            {"bandwidth_mbps", l.bandwidth_mbps}};
    if (l.control_delay) lj["control_delay_ms"] = detail::delay_json(*l.control_delay);
    j["links"].push_back(lj);
  }
  j["keys"] = {{"cardinality", s.keys.cardinality},
               {"timeout_ms", s.keys.timeout_ms},
               {"correction", s.keys.correction},
               {"acceptance_grace_ms", s.keys.acceptance_grace_ms}};
  j["ring"] = {{"n", s.ring.n}, {"p_bits", s.ring.p_bits}, {"q_bits", s.ring.q_bits}, {"b", s.ring.b}};
  j["flows"] = json::array();
  for (const auto& f : s.flows)
    j["flows"].push_back({{"source", f.source},
                          {"sink", f.sink},
                          {"kind", to_string(f.kind)},
                          {"rate_kbps", f.rate_kbps},
                          {"start_ms", f.start_ms},
                          {"duration_ms", f.duration_ms},
                          {"payload_bytes", f.payload_bytes}});
  const auto& t = s.timing;
  j["timing"] = {{"assoc_ms", t.assoc_ms},
                 {"auth_service_ms", t.auth_service_ms},
                 {"key_service_ms", t.key_service_ms},
                 {"join_retry_ms", t.join_retry_ms},
                 {"auth_retry_ms", t.auth_retry_ms},
                 {"key_request_retry_ms", t.key_request_retry_ms},
                 {"retransmit_timeout_ms", t.retransmit_timeout_ms},
                 {"crypto_us_per_packet", t.crypto_us_per_packet},
                 {"key_lookup_us_per_packet", t.key_lookup_us_per_packet},
                 {"header_bytes", t.header_bytes}};
  return j;
}

/// Missing optional sections keep their defaults; nodes and links are required.
inline SimScenario scenario_from_json(const nlohmann::json& j) {
  try {
    SimScenario s;
    detail::read_opt(j, "seed", s.seed);
    detail::read_opt(j, "duration_ms", s.duration_ms);
    if (j.contains("mode")) s.mode = detail::parse_enum(j.at("mode"), {KeyMode::kStaticKey, KeyMode::kRotatingKey});
    for (const auto& nj : j.at("nodes")) {
      NodeSpec n;
      n.id = nj.at("id").get<NodeId>();
      n.kind = detail::parse_enum(nj.at("kind"), {NodeKind::kAS, NodeKind::kIGW, NodeKind::kMR, NodeKind::kMC});
      n.name = nj.value("name", std::string(to_string(n.kind)) + std::to_string(n.id));
      detail::read_opt(nj, "join_at_ms", n.join_at_ms);
      detail::read_opt(nj, "clock_offset_ms", n.clock_offset_ms);
      s.nodes.push_back(std::move(n));
    }
    for (const auto& lj : j.at("links")) {
      LinkSpec l;
      l.a = lj.at("a").get<NodeId>();
      l.b = lj.at("b").get<NodeId>();
      l.delay = detail::parse_delay(lj.at("delay_ms"));
      if (lj.contains("control_delay_ms")) l.control_delay = detail::parse_delay(lj.at("control_delay_ms"));
      detail::read_opt(lj, "loss", l.loss);
      detail::read_opt(lj, "bandwidth_mbps", l.bandwidth_mbps);
      s.links.push_back(l);
    }
    if (j.contains("keys")) {
      const auto& kj = j.at("keys");
      detail::read_opt(kj, "cardinality", s.keys.cardinality);
      detail::read_opt(kj, "timeout_ms", s.keys.timeout_ms);
      detail::read_opt(kj, "correction", s.keys.correction);
      detail::read_opt(kj, "acceptance_grace_ms", s.keys.acceptance_grace_ms);
    }
    if (j.contains("ring")) {
      const auto& rj = j.at("ring");
      detail::read_opt(rj, "n", s.ring.n);
      detail::read_opt(rj, "p_bits", s.ring.p_bits);
      detail::read_opt(rj, "q_bits", s.ring.q_bits);
      detail::read_opt(rj, "b", s.ring.b);
    }
    if (j.contains("flows")) {
      for (const auto& fj : j.at("flows")) {
        FlowSpec f;
        f.source = fj.at("source").get<NodeId>();
        f.sink = fj.at("sink").get<NodeId>();
        f.kind = detail::parse_enum(fj.at("kind"), {TrafficKind::kReliableStream, TrafficKind::kDatagram});
        detail::read_opt(fj, "rate_kbps", f.rate_kbps);
        detail::read_opt(fj, "start_ms", f.start_ms);
        f.duration_ms = fj.value("duration_ms", s.duration_ms - f.start_ms);
        detail::read_opt(fj, "payload_bytes", f.payload_bytes);
        s.flows.push_back(f);
      }
    }
    if (j.contains("timing")) {
      const auto& tj = j.at("timing");
      auto& t = s.timing;
      detail::read_opt(tj, "assoc_ms", t.assoc_ms);
      detail::read_opt(tj, "auth_service_ms", t.auth_service_ms);
      detail::read_opt(tj, "key_service_ms", t.key_service_ms);
      detail::read_opt(tj, "join_retry_ms", t.join_retry_ms);
      detail::read_opt(tj, "auth_retry_ms", t.auth_retry_ms);
      detail::read_opt(tj, "key_request_retry_ms", t.key_request_retry_ms);
      detail::read_opt(tj, "retransmit_timeout_ms", t.retransmit_timeout_ms);
      detail::read_opt(tj, "crypto_us_per_packet", t.crypto_us_per_packet);
      detail::read_opt(tj, "key_lookup_us_per_packet", t.key_lookup_us_per_packet);
      detail::read_opt(tj, "header_bytes", t.header_bytes);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
}

/// Hash of everything except the key mode, so static and rotating runs of one
/// scenario share a fingerprint.
inline std::string scenario_fingerprint(const SimScenario& s) {
  auto j = to_json(s);
  j.erase("mode");
  const auto digest = sha256(to_bytes(j.dump()));
  return to_hex(ByteView(digest).first(16));
}

inline nlohmann::json to_json(const Metrics& m) {
  using nlohmann::json;
  json j{{"scenario_fingerprint", m.scenario_fingerprint},
         {"mode", to_string(m.mode)},
         {"seed", m.seed},
         {"duration_ms", m.duration_ms},
         {"sent", m.sent},
         {"delivered", m.delivered},
         {"in_flight_at_end", m.in_flight_at_end},
         {"dropped",
          {{"no_key", m.dropped.no_key},
           {"in_flight_at_expiry", m.dropped.in_flight_at_expiry},
           {"link_loss", m.dropped.link_loss},
           {"total", m.dropped.total()}}},
         {"drop_rate", m.drop_rate()},
         {"delivered_payload_bytes", m.delivered_payload_bytes},
         {"throughput_bytes_per_s", m.throughput_bytes_per_s},
         {"control_messages", m.control_messages},
         {"control_bytes", m.control_bytes},
         {"signature_bytes", m.signature_bytes},
         {"events", m.events},
         {"trace_digest", m.trace_digest}};
  j["nodes"] = json::array();
  for (const auto& n : m.nodes) {
    json nj{{"id", n.id},
            {"kind", to_string(n.kind)},
            {"final_phase", to_string(n.final_phase)},
            {"key_outage_ms", n.key_outage_ms},
            {"key_requests", n.key_requests},
            {"last_correction", n.last_correction}};
    nj["join_latency_ms"] = n.join_latency_ms ? json(*n.join_latency_ms) : json(nullptr);
    j["nodes"].push_back(nj);
  }
  return j;
}

// ---- scenario checks ------------------------------------------------------------------

namespace detail {

inline bool is_backbone(NodeKind k) { return k == NodeKind::kMR || k == NodeKind::kIGW; }

inline std::map<NodeId, std::vector<NodeId>> adjacency(const SimScenario& s) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& n : s.nodes) adj[n.id];
  for (const auto& l : s.links) {
    adj[l.a].push_back(l.b);
    adj[l.b].push_back(l.a);
  }
  for (auto& [_, v] : adj) std::sort(v.begin(), v.end());
  return adj;
}

inline void check_delay(const DelayRange& d, const std::string& what) {
  if (!(d.min_ms >= 0) || !(d.max_ms >= d.min_ms)) throw ConfigError(what + ": delay range must satisfy 0 <= min <= max");
}

}  // namespace detail

/// Throws ConfigError unless the scenario is well formed. Strict validation also requires
/// every mesh router to have a path to the authentication server.
inline void validate(const SimScenario& s, Validation v = Validation::kStrict) {
  std::map<NodeId, NodeKind> kinds;
  std::size_t servers = 0;
  NodeId server = 0;
  for (const auto& n : s.nodes) {
    if (!kinds.emplace(n.id, n.kind).second) throw ConfigError("duplicate node id " + std::to_string(n.id));
    if (n.kind == NodeKind::kAS) {
      ++servers;
      server = n.id;
    }
    if (n.join_at_ms < 0) throw ConfigError("negative join time");
  }
  if (servers != 1) throw ConfigError("scenario must contain exactly one AS");
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& l : s.links) {
    if (!kinds.contains(l.a) || !kinds.contains(l.b)) throw ConfigError("link references an unknown node");
    if (l.a == l.b) throw ConfigError("self link");
    if (!seen.insert(std::minmax(l.a, l.b)).second) throw ConfigError("duplicate link");
    detail::check_delay(l.delay, "link");
    if (l.control_delay) detail::check_delay(*l.control_delay, "link control");
    if (!(l.loss >= 0 && l.loss < 1)) throw ConfigError("link loss must lie in [0, 1)");
    if (!(l.bandwidth_mbps > 0)) throw ConfigError("link bandwidth must be positive");
  }
  for (const auto& f : s.flows) {
    if (!kinds.contains(f.source) || !kinds.contains(f.sink)) throw ConfigError("flow references an unknown node");
    if (f.source == f.sink) throw ConfigError("flow source equals sink");
    if (kinds[f.source] == NodeKind::kAS || kinds[f.sink] == NodeKind::kAS) throw ConfigError("flows may not terminate at the AS");
    if (!(f.rate_kbps > 0) || f.payload_bytes == 0) throw ConfigError("flow rate and payload must be positive");
    if (f.start_ms < 0 || f.duration_ms < 0) throw ConfigError("flow times must be non-negative");
  }
  if (s.keys.cardinality < 1 || s.keys.cardinality > 0xffff) throw ConfigError("key cardinality out of range");
  if (s.keys.timeout_ms <= 0) throw ConfigError("key timeout must be positive");
  if (s.keys.acceptance_grace_ms < 0) throw ConfigError("grace must be non-negative");
  if (s.ring.n < 1 || s.ring.q_bits < 2 || s.ring.q_bits >= s.ring.p_bits) throw ConfigError("invalid ring configuration");
  if (!(s.duration_ms > 0)) throw ConfigError("duration must be positive");

  if (v == Validation::kStrict) {
    auto adj = detail::adjacency(s);
    std::set<NodeId> reach{server};
    std::vector<NodeId> stack{server};
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto w : adj[u])
        if (reach.insert(w).second) stack.push_back(w);
    }
    for (const auto& n : s.nodes)
      if (detail::is_backbone(n.kind) && !reach.contains(n.id))
        throw ConfigError("mesh router " + std::to_string(n.id) + " has no path to the AS");
  }
}

// ---- simulator ------------------------------------------------------------------------

class Simulator {
 public:
  explicit Simulator(SimScenario scenario, Validation v = Validation::kStrict, std::ostream* trace = nullptr)
      : s_(std::move(scenario)), trace_out_(trace), rng_(to_bytes(s_.seed), "mesh-sim") {
    validate(s_, v);
    duration_us_ = to_us(s_.duration_ms);
    session_len_ms_ = static_cast<keys::Millis>(s_.keys.cardinality) * s_.keys.timeout_ms;

    for (const auto& n : s_.nodes) {
      index_[n.id] = nodes_.size();
      Node node;
      node.spec = n;
      nodes_.push_back(std::move(node));
      if (n.kind == NodeKind::kAS) server_ = n.id;
    }
    for (std::size_t i = 0; i < s_.links.size(); ++i) {
      link_index_[{s_.links[i].a, s_.links[i].b}] = 2 * i;
      link_index_[{s_.links[i].b, s_.links[i].a}] = 2 * i + 1;
    }
    busy_until_.assign(2 * s_.links.size(), 0);
    adj_ = detail::adjacency(s_);

    std::size_t ordinal = 0;
    for (auto& node : nodes_)
      if (detail::is_backbone(node.spec.kind)) node.ring_slot = ordinal++ % s_.ring.n;

    ring_ = build_ring(s_.ring.n, s_.ring.p_bits, s_.ring.q_bits, s_.seed + "/ring", "MR");
    if (s_.ring.b != 0) {
      if (s_.ring.b < ring_.cfg.b) throw ConfigError("ring block width too small for the ring moduli");
      ring_.cfg.b = s_.ring.b;
    }
    auth_ = std::make_unique<AuthServer>(ring_.server, ring_.ring, ring_.cfg);
    master_seed_ = to_bytes(s_.seed + "/as-master");
    fingerprint_ = scenario_fingerprint(s_);
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Runs joins only, without traffic, and returns the phase transitions in time order.
  std::vector<JoinEvent> run_joins() {
    run_loop(false);
    return join_events_;
  }

  Metrics run() {
    run_loop(true);
    return collect();
  }

  JoinPhase phase(NodeId id) const { return node(id).phase; }
  const std::vector<JoinEvent>& join_events() const { return join_events_; }

 private:
  enum class EventKind {
    kJoinAttempt,
    kAssociated,
    kControlArrive,
    kAuthTimeout,
    kKeyTrigger,
    kKeyRequestTimeout,
    kFlowTick,
    kDataArrive,
    kRetransmit,
  };

  struct Event {
    Micros time = 0;
    NodeId node = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kJoinAttempt;
    std::uint64_t a = 0;
    std::uint64_t b = 0;

    // Min-heap on (time, node, seq).
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (node != o.node) return node > o.node;
      return seq > o.seq;
    }
  };

  struct HeldList {
    keys::KeyList list;
    Micros received_at = 0;
  };

  struct KeyTag {
    keys::Millis generated_at = 0;
    std::int64_t index = 0;
    keys::SymmetricKey key{};
  };

  struct Node {
    NodeSpec spec;
    JoinPhase phase = JoinPhase::kDetached;
    NodeId peer = 0;
    std::size_t ring_slot = 0;
    std::optional<Micros> joined_at;
    std::uint64_t auth_attempt = 0;
    std::optional<ClientSession> pending_auth;
    keys::SchedulerState scheduler;
    std::uint32_t request_counter = 0;
    std::optional<std::uint32_t> awaiting_counter;
    std::uint64_t trigger_generation = 0;
    std::uint32_t key_requests = 0;
    std::map<keys::Millis, HeldList> lists;  // by TS_KL
    std::vector<std::pair<Micros, Micros>> coverage;
  };

  enum class ControlKind { kAuthRequest, kAuthResponse, kKeyRequest, kKeyResponse };

  struct ControlMessage {
    ControlKind kind = ControlKind::kAuthRequest;
    NodeId origin = 0;
    std::vector<NodeId> path;
    std::size_t hop = 0;
    Bytes payload;
    Bytes identity;
    std::uint64_t attempt = 0;
  };

  struct Packet {
    std::size_t flow = 0;
    std::shared_ptr<const std::vector<NodeId>> path;
    std::size_t hop = 0;
    std::optional<KeyTag> tag;
  };

  static Micros to_us(double ms) { return static_cast<Micros>(std::llround(ms * 1000.0)); }

  Node& node(NodeId id) { return nodes_[index_.at(id)]; }
  Micros local(const Node& n, Micros t) const { return t + to_us(n.spec.clock_offset_ms); }
  const Node& node(NodeId id) const { return nodes_[index_.at(id)]; }

  void schedule(Micros t, NodeId n, EventKind kind, std::uint64_t a = 0, std::uint64_t b = 0) {
    queue_.push(Event{t, n, seq_++, kind, a, b});
  }

  void trace(Micros t, NodeId n, std::string_view ev, std::string_view detail = {}) {
    std::string line = "{\"t\":" + std::to_string(t) + ",\"node\":" + std::to_string(n) + ",\"ev\":\"";
    line += ev;
    line += '"';
    if (!detail.empty()) {
      line += ',';
      line += detail;
    }
    line += "}\n";
    trace_hash_.update(ByteView(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()));
    if (trace_out_) *trace_out_ << line;
  }

  void set_phase(Node& n, JoinPhase next, Micros t) {
    if (static_cast<int>(next) != static_cast<int>(n.phase) + 1)
      throw InvariantViolation("illegal join phase transition for node " + std::to_string(n.spec.id));
    n.phase = next;
    routes_.clear();
    join_events_.push_back({t, n.spec.id, next});
    trace(t, n.spec.id, "phase", std::string("\"phase\":\"") + to_string(next) + "\"");
    const bool done = next == JoinPhase::kFullMR || (n.spec.kind == NodeKind::kMC && next == JoinPhase::kAssociatedAsMC);
    if (done) n.joined_at = t;
  }

  bool is_attachment_point(NodeId id) const {
    const auto& n = node(id);
    return n.spec.kind == NodeKind::kAS || (detail::is_backbone(n.spec.kind) && n.phase == JoinPhase::kFullMR);
  }

  /// Shortest hop path from src to dst whose interior nodes are full mesh routers.
  std::vector<NodeId> route(NodeId src, NodeId dst) const {
    std::map<NodeId, NodeId> parent{{src, src}};
    std::vector<NodeId> frontier{src};
    while (!frontier.empty() && !parent.contains(dst)) {
      std::vector<NodeId> next;
      for (auto u : frontier) {
        if (u != src) {
          const auto& un = node(u);
          if (!(detail::is_backbone(un.spec.kind) && un.phase == JoinPhase::kFullMR)) continue;
        }
        for (auto w : adj_.at(u)) {
          if (parent.contains(w)) continue;
          parent[w] = u;
          next.push_back(w);
        }
      }
      frontier = std::move(next);
    }
    if (!parent.contains(dst)) return {};
    std::vector<NodeId> path{dst};
    while (path.back() != src) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  Micros sample(const DelayRange& d) { return to_us(d.min_ms + (d.max_ms - d.min_ms) * rng_.unit()); }

  /// Queues `bytes` on the directed link u->v at time t. Returns the arrival time, or
  /// nothing when the transmission is lost.
  std::optional<Micros> transmit(NodeId u, NodeId v, std::size_t bytes, Micros t, bool control, Micros processing_us) {
    const auto li = link_index_.at({u, v});
    const auto& spec = s_.links[li / 2];
    const Micros tx = static_cast<Micros>(std::llround(static_cast<double>(bytes) * 8.0 / spec.bandwidth_mbps)) + processing_us;
    const Micros start = std::max(t, busy_until_[li]);
    busy_until_[li] = start + tx;
    const auto& delay = control && spec.control_delay ? *spec.control_delay : spec.delay;
    const Micros arrival = start + tx + sample(delay);
    if (spec.loss > 0 && rng_.unit() < spec.loss) return std::nullopt;
    return arrival;
  }

  // ---- joins --------------------------------------------------------------------------

  void on_join_attempt(Micros t, NodeId id) {
    auto& n = node(id);
    if (n.phase != JoinPhase::kDetached) return;
    trace(t, id, "join-attempt");
    for (auto w : adj_.at(id)) {
      if (!is_attachment_point(w)) continue;
      if (node(w).spec.kind == NodeKind::kAS && n.spec.kind == NodeKind::kMC) continue;
      n.peer = w;
      schedule(t + to_us(s_.timing.assoc_ms), id, EventKind::kAssociated, w);
      return;
    }
    schedule(t + to_us(s_.timing.join_retry_ms), id, EventKind::kJoinAttempt);
  }

  void on_associated(Micros t, NodeId id) {
    auto& n = node(id);
    set_phase(n, JoinPhase::kAssociatedAsMC, t);
    if (detail::is_backbone(n.spec.kind)) start_authentication(t, n);
  }

  std::vector<NodeId> path_via_peer(const Node& n) const {
    std::vector<NodeId> path{n.spec.id};
    if (n.peer == server_) {
      path.push_back(server_);
      return path;
    }
    auto rest = route(n.peer, server_);
    if (rest.empty()) return {};
    path.insert(path.end(), rest.begin(), rest.end());
    return path;
  }

  void start_authentication(Micros t, Node& n) {
    ++n.auth_attempt;
    const std::string identity = "node-" + std::to_string(n.spec.id) + "-auth-" + std::to_string(n.auth_attempt);
    const std::string seed = s_.seed + "/" + identity;
    auto signed_ = sign_and_initiate(ring_.ring, n.ring_slot, ring_.secrets[n.ring_slot], ring_.server.public_half(),
                                     to_bytes(identity), ring_.cfg, to_bytes(seed));
    n.pending_auth = std::move(signed_.session);
    schedule(t + to_us(s_.timing.auth_retry_ms), n.spec.id, EventKind::kAuthTimeout, n.auth_attempt);

    ControlMessage msg;
    msg.kind = ControlKind::kAuthRequest;
    msg.origin = n.spec.id;
    msg.path = path_via_peer(n);
    msg.payload = encode_signature(signed_.signature, ring_.cfg);
    msg.identity = to_bytes(identity);
    msg.attempt = n.auth_attempt;
    trace(t, n.spec.id, "auth-request", "\"bytes\":" + std::to_string(msg.payload.size()));
    send_control(std::move(msg), t);
  }

  void on_auth_timeout(Micros t, NodeId id, std::uint64_t attempt) {
    auto& n = node(id);
    if (n.phase != JoinPhase::kAssociatedAsMC || n.auth_attempt != attempt) return;
    trace(t, id, "auth-timeout");
    start_authentication(t, n);
  }

  void request_key_list(Micros t, Node& n, bool resend) {
    if (!resend) {
      ++n.request_counter;
      n.awaiting_counter = n.request_counter;
      n.scheduler.on_request_sent(local(n, t) / 1000);
    }
    ++n.key_requests;
    schedule(t + to_us(s_.timing.key_request_retry_ms), n.spec.id, EventKind::kKeyRequestTimeout, n.request_counter);

    ControlMessage msg;
    msg.kind = ControlKind::kKeyRequest;
    msg.origin = n.spec.id;
    msg.path = n.phase == JoinPhase::kFullMR ? route(n.spec.id, server_) : path_via_peer(n);
    msg.payload = keys::encode_request({n.spec.id, n.request_counter});
    trace(t, n.spec.id, "key-request", "\"counter\":" + std::to_string(n.request_counter));
    send_control(std::move(msg), t);
  }

  void on_key_request_timeout(Micros t, NodeId id, std::uint64_t counter) {
    auto& n = node(id);
    if (!n.awaiting_counter || *n.awaiting_counter != counter) return;
    trace(t, id, "key-request-timeout");
    request_key_list(t, n, true);
  }

  void on_key_trigger(Micros t, NodeId id, std::uint64_t generation) {
    auto& n = node(id);
    if (generation != n.trigger_generation || n.awaiting_counter) return;
    request_key_list(t, n, false);
  }

  // ---- control plane ------------------------------------------------------------------

  void send_control(ControlMessage msg, Micros t) {
    if (msg.path.size() < 2) {
      trace(t, msg.origin, "control-unroutable");
      return;
    }
    ++control_messages_;
    controls_.push_back(std::move(msg));
    forward_control(controls_.size() - 1, t);
  }

  void forward_control(std::size_t idx, Micros t) {
    auto& msg = controls_[idx];
    const NodeId u = msg.path[msg.hop];
    const NodeId v = msg.path[msg.hop + 1];
    const std::size_t bytes = msg.payload.size() + s_.timing.header_bytes;
    control_bytes_ += bytes;
    auto arrival = transmit(u, v, bytes, t, true, 0);
    if (!arrival) {
      trace(t, u, "control-lost");
      return;
    }
    schedule(*arrival, v, EventKind::kControlArrive, idx);
  }

  void on_control_arrive(Micros t, std::size_t idx) {
    auto& msg = controls_[idx];
    ++msg.hop;
    if (msg.hop + 1 < msg.path.size()) {
      forward_control(idx, t);
      return;
    }
    switch (msg.kind) {
      case ControlKind::kAuthRequest: return server_authenticate(t, idx);
      case ControlKind::kKeyRequest: return server_issue_keys(t, idx);
      case ControlKind::kAuthResponse: return client_finish_auth(t, idx);
      case ControlKind::kKeyResponse: return node_install_keys(t, idx);
    }
  }

  void reply(std::size_t idx, ControlKind kind, Bytes payload, Micros t) {
    ControlMessage resp;
    resp.kind = kind;
    resp.origin = controls_[idx].origin;
    resp.path.assign(controls_[idx].path.rbegin(), controls_[idx].path.rend());
    resp.payload = std::move(payload);
    resp.identity = controls_[idx].identity;
    resp.attempt = controls_[idx].attempt;
    send_control(std::move(resp), t);
  }

  void server_authenticate(Micros t, std::size_t idx) {
    const auto& msg = controls_[idx];
    auto sig = decode_signature(msg.payload, ring_.cfg, true);
    auto outcome = auth_->handle(sig, msg.identity, to_bytes(s_.seed + "/as-respond/" + std::to_string(idx)));
    trace(t, server_, "auth-verify",
          std::string("\"origin\":") + std::to_string(msg.origin) + ",\"accepted\":" + (outcome.accepted() ? "true" : "false"));
    if (!outcome.accepted()) return;
    signature_bytes_.push_back(msg.payload.size());
    reply(idx, ControlKind::kAuthResponse, encode_response(*outcome.response), t + to_us(s_.timing.auth_service_ms));
  }

  void client_finish_auth(Micros t, std::size_t idx) {
    const auto& msg = controls_[idx];
    auto& n = node(msg.origin);
    if (n.phase != JoinPhase::kAssociatedAsMC || msg.attempt != n.auth_attempt || !n.pending_auth) return;
    auto confirmed = client_confirm(*n.pending_auth, decode_response(msg.payload));
    if (!confirmed.accepted()) {
      trace(t, n.spec.id, "auth-confirm-failed");
      return;
    }
    n.pending_auth.reset();
    set_phase(n, JoinPhase::kAuthenticatedToAS, t);
    request_key_list(t, n, false);
  }

  keys::KeyList static_list() const {
    auto list = keys::generate_key_list(master_seed_, UINT64_MAX, 0, 1, static_cast<keys::Millis>(s_.duration_ms) + 1);
    return list;
  }

  void server_issue_keys(Micros t, std::size_t idx) {
    const auto& msg = controls_[idx];
    const auto req = keys::decode_request(msg.payload);
    keys::KeyList list;
    if (s_.mode == KeyMode::kStaticKey) {
      list = static_list();
    } else {
      // A retransmitted request (same counter) gets the same session as the original.
      auto& last = as_assigned_[req.node_id];
      std::int64_t session;
      if (last.counter == req.request_counter && last.session >= 0) {
        session = last.session;
      } else {
        const std::int64_t current = (local(node(server_), t) / 1000) / session_len_ms_;
        session = last.session < 0 ? current : std::max(current, last.session + 1);
        last = {req.request_counter, session};
      }
      list = keys::generate_key_list(master_seed_, static_cast<std::uint64_t>(session), session * session_len_ms_,
                                     s_.keys.cardinality, s_.keys.timeout_ms);
    }
    trace(t, server_, "key-issue",
          "\"origin\":" + std::to_string(req.node_id) + ",\"ts_kl\":" + std::to_string(list.generated_at));
    reply(idx, ControlKind::kKeyResponse, keys::encode_response(list), t + to_us(s_.timing.key_service_ms));
  }

  void node_install_keys(Micros t, std::size_t idx) {
    const auto& msg = controls_[idx];
    auto& n = node(msg.origin);
    const auto req_counter = n.request_counter;
    if (!n.awaiting_counter) return;  // duplicate response to a retransmitted request
    auto list = keys::decode_response(msg.payload);
    n.awaiting_counter.reset();
    n.scheduler.on_response(local(n, t) / 1000, s_.keys.timeout_ms);
    if (!s_.keys.correction) n.scheduler.correction = 0;

    const Micros offset = local(n, 0);
    const Micros start = list.generated_at * 1000 - offset;
    const Micros end = list.expires_at() * 1000 - offset;
    n.coverage.emplace_back(std::max(start, t), end);
    trace(t, n.spec.id, "key-install",
          "\"ts_kl\":" + std::to_string(list.generated_at) + ",\"rtt_ms\":" + std::to_string(n.scheduler.last_round_trip) +
              ",\"c\":" + std::to_string(n.scheduler.correction) + ",\"counter\":" + std::to_string(req_counter));
    const keys::Millis ts = list.generated_at;
    n.lists[ts] = HeldList{std::move(list), t};
    while (n.lists.size() > 3) n.lists.erase(n.lists.begin());

    if (n.phase == JoinPhase::kAuthenticatedToAS) set_phase(n, JoinPhase::kFullMR, t);
    if (s_.mode == KeyMode::kRotatingKey) schedule_next_request(t, n);
  }

  void schedule_next_request(Micros t, Node& n) {
    const auto& latest = n.lists.rbegin()->second.list;
    const auto trigger = keys::request_trigger_index(latest.cardinality(), n.scheduler.correction);
    const Micros at = (latest.generated_at + (trigger - 1) * latest.timeout) * 1000 - local(n, 0);
    ++n.trigger_generation;
    schedule(std::max(at, t), n.spec.id, EventKind::kKeyTrigger, n.trigger_generation);
  }

  std::optional<KeyTag> current_key(const Node& n, Micros t) const {
    const keys::Millis now = local(n, t) / 1000;
    for (auto it = n.lists.rbegin(); it != n.lists.rend(); ++it) {
      const auto& list = it->second.list;
      if (now < list.generated_at || now >= list.expires_at()) continue;
      auto [key, handle] = keys::lookup_key(list, now);
      if (handle.remaining <= 0 || handle.remaining > list.timeout)
        throw InvariantViolation("selected key outside its validity window");
      return KeyTag{list.generated_at, handle.index, key};
    }
    return std::nullopt;
  }

  // ---- data plane ---------------------------------------------------------------------

  void on_flow_tick(Micros t, std::size_t flow) {
    const auto& f = s_.flows[flow];
    const Micros end = to_us(f.start_ms + f.duration_ms);
    if (t >= end) return;
    inject(t, flow);
    const Micros interval = std::max<Micros>(1, to_us(static_cast<double>(f.payload_bytes) * 8.0 / f.rate_kbps));
    if (t + interval < end) schedule(t + interval, f.source, EventKind::kFlowTick, flow);
  }

  std::shared_ptr<const std::vector<NodeId>> data_route(NodeId src, NodeId dst) {
    auto& slot = routes_[{src, dst}];
    if (!slot) slot = std::make_shared<const std::vector<NodeId>>(route(src, dst));
    return slot;
  }

  bool endpoint_ready(NodeId id) const {
    const auto& n = node(id);
    return n.spec.kind == NodeKind::kMC ? n.phase == JoinPhase::kAssociatedAsMC : n.phase == JoinPhase::kFullMR;
  }

  void inject(Micros t, std::size_t flow) {
    const auto& f = s_.flows[flow];
    ++sent_;
    Packet pkt;
    pkt.flow = flow;
    packets_.push_back(pkt);
    const std::size_t id = packets_.size() - 1;
    if (!endpoint_ready(f.source) || !endpoint_ready(f.sink)) return drop(t, id, f.source, Cause::kNoKey);
    auto path = data_route(f.source, f.sink);
    if (path->empty()) return drop(t, id, f.source, Cause::kNoKey);
    packets_[id].path = std::move(path);
    forward_packet(t, id);
  }

  enum class Cause { kNoKey, kInFlightAtExpiry, kLinkLoss };

  void drop(Micros t, std::size_t id, NodeId at, Cause cause) {
    const char* name = "link-loss";
    switch (cause) {
      case Cause::kNoKey: ++dropped_.no_key; name = "no-key"; break;
      case Cause::kInFlightAtExpiry: ++dropped_.in_flight_at_expiry; name = "in-flight-at-expiry"; break;
      case Cause::kLinkLoss: ++dropped_.link_loss; break;
    }
    trace(t, at, "drop", "\"pkt\":" + std::to_string(id) + ",\"cause\":\"" + name + "\"");
    const auto& f = s_.flows[packets_[id].flow];
    if (f.kind == TrafficKind::kReliableStream)
      schedule(t + to_us(s_.timing.retransmit_timeout_ms), f.source, EventKind::kRetransmit, packets_[id].flow);
  }

  void forward_packet(Micros t, std::size_t id) {
    auto& pkt = packets_[id];
    const auto& f = s_.flows[pkt.flow];
    const NodeId u = (*pkt.path)[pkt.hop];
    const NodeId v = (*pkt.path)[pkt.hop + 1];
    const bool keyed = detail::is_backbone(node(u).spec.kind) && detail::is_backbone(node(v).spec.kind);
    Micros processing = 0;
    pkt.tag.reset();
    if (keyed) {
      pkt.tag = current_key(node(u), t);
      if (!pkt.tag) return drop(t, id, u, Cause::kNoKey);
      processing = static_cast<Micros>(std::llround(s_.timing.crypto_us_per_packet +
                                                    (s_.mode == KeyMode::kRotatingKey ? s_.timing.key_lookup_us_per_packet : 0)));
    }
    auto arrival = transmit(u, v, f.payload_bytes + s_.timing.header_bytes, t, false, processing);
    if (!arrival) return drop(t, id, u, Cause::kLinkLoss);
    schedule(*arrival, v, EventKind::kDataArrive, id);
  }

  void on_data_arrive(Micros t, std::size_t id) {
    auto& pkt = packets_[id];
    const NodeId v = (*pkt.path)[pkt.hop + 1];
    if (pkt.tag) {
      const auto& receiver = node(v);
      auto it = receiver.lists.find(pkt.tag->generated_at);
      if (it == receiver.lists.end()) return drop(t, id, v, Cause::kNoKey);
      const auto& list = it->second.list;
      const Micros window_end = (list.generated_at + pkt.tag->index * list.timeout) * 1000;
      if (local(receiver, t) >= window_end + to_us(s_.keys.acceptance_grace_ms)) return drop(t, id, v, Cause::kInFlightAtExpiry);
      if (list.keys[static_cast<std::size_t>(pkt.tag->index - 1)] != pkt.tag->key)
        throw InvariantViolation("peers disagree on the key for an index");
    }
    ++pkt.hop;
    if (pkt.hop + 1 == pkt.path->size()) {
      ++delivered_;
      delivered_bytes_ += s_.flows[pkt.flow].payload_bytes;
      return;
    }
    forward_packet(t, id);
  }

  // ---- loop -----------------------------------------------------------------------------

  void run_loop(bool with_traffic) {
    if (ran_) throw std::logic_error("a Simulator instance runs once");
    ran_ = true;
    for (const auto& n : nodes_)
      if (n.spec.kind != NodeKind::kAS) schedule(to_us(n.spec.join_at_ms), n.spec.id, EventKind::kJoinAttempt);
    if (with_traffic)
      for (std::size_t i = 0; i < s_.flows.size(); ++i)
        schedule(to_us(s_.flows[i].start_ms), s_.flows[i].source, EventKind::kFlowTick, i);

    while (!queue_.empty() && queue_.top().time <= duration_us_) {
      const Event ev = queue_.top();
      queue_.pop();
      ++events_;
      switch (ev.kind) {
        case EventKind::kJoinAttempt: on_join_attempt(ev.time, ev.node); break;
        case EventKind::kAssociated: on_associated(ev.time, ev.node); break;
        case EventKind::kControlArrive: on_control_arrive(ev.time, ev.a); break;
        case EventKind::kAuthTimeout: on_auth_timeout(ev.time, ev.node, ev.a); break;
        case EventKind::kKeyTrigger: on_key_trigger(ev.time, ev.node, ev.a); break;
        case EventKind::kKeyRequestTimeout: on_key_request_timeout(ev.time, ev.node, ev.a); break;
        case EventKind::kFlowTick: on_flow_tick(ev.time, ev.a); break;
        case EventKind::kDataArrive: on_data_arrive(ev.time, ev.a); break;
        case EventKind::kRetransmit: inject(ev.time, ev.a); break;
      }
      if (!with_traffic && all_joined()) break;
    }
    while (!queue_.empty()) {
      if (queue_.top().kind == EventKind::kDataArrive) ++in_flight_;
      queue_.pop();
    }
    if (sent_ != delivered_ + dropped_.total() + in_flight_)
      throw InvariantViolation("packet accounting does not balance");
  }

  bool all_joined() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
      return n.spec.kind == NodeKind::kAS || n.joined_at.has_value();
    });
  }

  static double covered_length(std::vector<std::pair<Micros, Micros>> spans, Micros from, Micros to) {
    std::sort(spans.begin(), spans.end());
    Micros covered = 0, cursor = from;
    for (auto [a, b] : spans) {
      a = std::max(a, cursor);
      b = std::min(b, to);
      if (b > a) {
        covered += b - a;
        cursor = b;
      }
    }
    return static_cast<double>(covered);
  }

  Metrics collect() {
    Metrics m;
    m.scenario_fingerprint = fingerprint_;
    m.mode = s_.mode;
    m.seed = s_.seed;
    m.duration_ms = s_.duration_ms;
    m.sent = sent_;
    m.delivered = delivered_;
    m.in_flight_at_end = in_flight_;
    m.dropped = dropped_;
    m.delivered_payload_bytes = delivered_bytes_;
    m.throughput_bytes_per_s = static_cast<double>(delivered_bytes_) / (s_.duration_ms / 1000.0);
    m.control_messages = control_messages_;
    m.control_bytes = control_bytes_;
    m.signature_bytes = signature_bytes_;
    m.events = events_;
    for (const auto& n : nodes_) {
      if (n.spec.kind == NodeKind::kAS) continue;
      NodeMetrics nm;
      nm.id = n.spec.id;
      nm.kind = n.spec.kind;
      nm.final_phase = n.phase;
      if (n.joined_at) nm.join_latency_ms = static_cast<double>(*n.joined_at - to_us(n.spec.join_at_ms)) / 1000.0;
      if (detail::is_backbone(n.spec.kind) && n.phase == JoinPhase::kFullMR) {
        const Micros from = *n.joined_at;
        const double total = static_cast<double>(duration_us_ - from);
        nm.key_outage_ms = (total - covered_length(n.coverage, from, duration_us_)) / 1000.0;
      }
      nm.key_requests = n.key_requests;
      nm.last_correction = n.scheduler.correction;
      m.nodes.push_back(nm);
    }
    m.trace_digest = to_hex(trace_hash_.finish());
    return m;
  }

 private:
  struct Assignment {
    std::uint32_t counter = 0;
    std::int64_t session = -1;
  };

  SimScenario s_;
  std::ostream* trace_out_;
  Drbg rng_;
  Micros duration_us_ = 0;
  keys::Millis session_len_ms_ = 0;
  std::vector<Node> nodes_;
  std::map<NodeId, std::size_t> index_;
  std::map<std::pair<NodeId, NodeId>, std::size_t> link_index_;
  std::vector<Micros> busy_until_;
  std::map<NodeId, std::vector<NodeId>> adj_;
  NodeId server_ = 0;
  RingSetup ring_;
  std::unique_ptr<AuthServer> auth_;
  Bytes master_seed_;
  std::map<NodeId, Assignment> as_assigned_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  bool ran_ = false;

  std::vector<ControlMessage> controls_;
  std::vector<Packet> packets_;
  std::map<std::pair<NodeId, NodeId>, std::shared_ptr<const std::vector<NodeId>>> routes_;
  std::vector<JoinEvent> join_events_;

  std::uint64_t sent_ = 0, delivered_ = 0, in_flight_ = 0, delivered_bytes_ = 0;
  DropCounts dropped_;
  std::uint64_t control_messages_ = 0, control_bytes_ = 0;
  std::vector<std::size_t> signature_bytes_;
  Sha256 trace_hash_;
  std::string fingerprint_;
};

// ---- topologies and reports ---------------------------------------------------------------

/// 1 AS wired to MR1, five MRs in a ring, nine MCs per MR; a reliable stream between
/// MR1 and MR2 and a 1 Mbit/s datagram flow between MR3 and MR4.
inline SimScenario build_reference_topology() {
  SimScenario s;
  s.nodes.push_back({0, NodeKind::kAS, "AS", 0});
  for (NodeId r = 1; r <= 5; ++r) s.nodes.push_back({r, NodeKind::kMR, "MR" + std::to_string(r), 0});
  NodeId next = 6;
  for (NodeId r = 1; r <= 5; ++r)
    for (int c = 0; c < 9; ++c, ++next) s.nodes.push_back({next, NodeKind::kMC, "MC" + std::to_string(next), 0});

  s.links.push_back({0, 1, {0.2, 0.5}, std::nullopt, 0, 1000});
  for (NodeId r = 1; r <= 5; ++r) s.links.push_back({r, r % 5 + 1, {1, 3}, std::nullopt, 0, 54});
  next = 6;
  for (NodeId r = 1; r <= 5; ++r)
    for (int c = 0; c < 9; ++c, ++next) s.links.push_back({r, next, {1, 2}, std::nullopt, 0, 54});

  s.flows.push_back({1, 2, TrafficKind::kReliableStream, 10000, 5000, 55000, 1000});
  s.flows.push_back({3, 4, TrafficKind::kDatagram, 1000, 5000, 55000, 200});
  return s;
}

/// Four routers: A wired to the AS; B and C neighbours of A and of each other; D behind B and C.
inline SimScenario build_bootstrap_topology() {
  SimScenario s;
  s.nodes = {{0, NodeKind::kAS, "AS", 0},
             {1, NodeKind::kMR, "A", 0},
             {2, NodeKind::kMR, "B", 0},
             {3, NodeKind::kMR, "C", 0},
             {4, NodeKind::kMR, "D", 0}};
  s.links = {{0, 1, {0.2, 0.5}, std::nullopt, 0, 1000},
             {1, 2, {1, 3}, std::nullopt, 0, 54},
             {1, 3, {1, 3}, std::nullopt, 0, 54},
             {2, 3, {1, 3}, std::nullopt, 0, 54},
             {2, 4, {1, 3}, std::nullopt, 0, 54},
             {3, 4, {1, 3}, std::nullopt, 0, 54}};
  s.duration_ms = 20000;
  return s;
}

struct OverheadReport {
  double throughput_base = 0;
  double throughput_secured = 0;
  double throughput_delta_pct = 0;  // positive: secured run is slower
  double drop_rate_base = 0;
  double drop_rate_secured = 0;
  double drop_rate_delta = 0;
  DropCounts drops_base;
  DropCounts drops_secured;
};

/// Compares two runs of the same scenario (differing at most in key mode).
inline OverheadReport measure_overhead(const Metrics& base, const Metrics& secured) {
  if (base.scenario_fingerprint != secured.scenario_fingerprint)
    throw DomainError("overhead comparison needs runs of the same scenario");
  OverheadReport r;
  r.throughput_base = base.throughput_bytes_per_s;
  r.throughput_secured = secured.throughput_bytes_per_s;
  r.throughput_delta_pct = base.throughput_bytes_per_s == 0
                               ? 0.0
                               : 100.0 * (base.throughput_bytes_per_s - secured.throughput_bytes_per_s) / base.throughput_bytes_per_s;
  r.drop_rate_base = base.drop_rate();
  r.drop_rate_secured = secured.drop_rate();
  r.drop_rate_delta = r.drop_rate_secured - r.drop_rate_base;
  r.drops_base = base.dropped;
  r.drops_secured = secured.dropped;
  return r;
}

}  // namespace meshsec::sim
