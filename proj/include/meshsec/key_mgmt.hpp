#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "meshsec/bytes.hpp"
#include "meshsec/hash.hpp"

// Server-initiated key-list distribution. Times are integral milliseconds on a clock
// shared by every node.

namespace meshsec::keys {

using Millis = std::int64_t;
using SymmetricKey = std::array<std::uint8_t, 32>;

class ClockSkewError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SessionExpiredError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyList {
  std::vector<SymmetricKey> keys;
  Millis generated_at = 0;  // TS_KL
  Millis timeout = 0;       // per-key validity

  std::size_t cardinality() const { return keys.size(); }
  Millis session_length() const { return static_cast<Millis>(keys.size()) * timeout; }
  Millis expires_at() const { return generated_at + session_length(); }

  friend bool operator==(const KeyList&, const KeyList&) = default;
};

struct KeyHandle {
  std::int64_t index = 0;  // 1-based
  Millis remaining = 0;    // T_i
};

namespace detail {
inline void check_clock(Millis t_now, Millis generated_at, Millis timeout) {
  if (timeout <= 0) throw DomainError("key timeout must be positive");
  if (t_now < generated_at) throw ClockSkewError("current time precedes the key-list timestamp");
}
}  // namespace detail

/// Index of the key in force at t_now: floor((t_now - TS_KL) / timeout) + 1. Windows are
/// half-open, so at an exact multiple of timeout the next key is already active.
inline std::int64_t current_key_index(Millis t_now, Millis generated_at, Millis timeout) {
  detail::check_clock(t_now, generated_at, timeout);
  return (t_now - generated_at) / timeout + 1;
}

/// Time left in the current key's window; always in (0, timeout].
inline Millis remaining_validity(Millis t_now, Millis generated_at, Millis timeout) {
  return current_key_index(t_now, generated_at, timeout) * timeout - (t_now - generated_at);
}

/// How many windows early the next list must be requested, given the last round trip.
inline std::int64_t correction_factor(Millis last_round_trip, Millis timeout) {
  if (timeout <= 0) throw DomainError("key timeout must be positive");
  if (last_round_trip < 0) throw DomainError("round-trip time must be non-negative");
  if (last_round_trip < timeout) return 0;
  const Millis excess = last_round_trip - timeout;
  return (excess + timeout - 1) / timeout;
}

/// Key index whose activation triggers the next list request; clamped at 1.
inline std::int64_t request_trigger_index(std::size_t cardinality, std::int64_t correction) {
  if (cardinality < 1) throw DomainError("key list cardinality must be at least 1");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(cardinality) - correction);
}

/// Derives key `index` of session `session_counter` from the master seed.
inline SymmetricKey derive_key(ByteView master_seed, std::uint64_t session_counter, std::uint64_t index) {
  Bytes ctr, idx;
  put_be(ctr, session_counter, 8);
  put_be(idx, index, 8);
  auto tag = to_bytes("meshsec/key-list/v1");
  return hash_parts({tag, master_seed, ctr, idx});
}

inline KeyList generate_key_list(ByteView master_seed, std::uint64_t session_counter, Millis session_start,
                                 std::size_t cardinality, Millis timeout) {
  if (cardinality < 1) throw DomainError("key list cardinality must be at least 1");
  if (cardinality > 0xffff) throw DomainError("key list cardinality exceeds the wire format");
  if (timeout <= 0) throw DomainError("key timeout must be positive");
  KeyList list;
  list.generated_at = session_start;
  list.timeout = timeout;
  list.keys.reserve(cardinality);
  for (std::size_t i = 0; i < cardinality; ++i) list.keys.push_back(derive_key(master_seed, session_counter, i));
  return list;
}

/// AS-side issuer: one master seed, a session counter that never repeats.
class KeyListIssuer {
 public:
  explicit KeyListIssuer(Bytes master_seed) : seed_(std::move(master_seed)) {}

  KeyList issue(Millis session_start, std::size_t cardinality, Millis timeout) {
    return generate_key_list(seed_, counter_++, session_start, cardinality, timeout);
  }

  std::uint64_t sessions_issued() const { return counter_; }

 private:
  Bytes seed_;
  std::uint64_t counter_ = 0;
};

inline std::pair<SymmetricKey, KeyHandle> lookup_key(const KeyList& list, Millis t_now) {
  if (list.keys.empty()) throw DomainError("empty key list");
  const auto idx = current_key_index(t_now, list.generated_at, list.timeout);
  if (idx > static_cast<std::int64_t>(list.cardinality()))
    throw SessionExpiredError("key list session has expired");
  const Millis remaining = idx * list.timeout - (t_now - list.generated_at);
  return {list.keys[static_cast<std::size_t>(idx - 1)], KeyHandle{idx, remaining}};
}

/// Node-side request bookkeeping (t_s, t_r, t_last, c).
struct SchedulerState {
  std::optional<Millis> sent_at;
  std::optional<Millis> received_at;
  Millis last_round_trip = 0;
  std::int64_t correction = 0;

  void on_request_sent(Millis t) {
    sent_at = t;
    received_at.reset();
  }

  /// Records the response and refreshes the correction factor from t_r - t_s.
  void on_response(Millis t, Millis timeout) {
    if (!sent_at) throw DomainError("response without an outstanding request");
    if (t < *sent_at) throw ClockSkewError("response precedes its request");
    received_at = t;
    last_round_trip = t - *sent_at;
    correction = correction_factor(last_round_trip, timeout);
  }

  bool awaiting_response() const { return sent_at.has_value() && !received_at.has_value(); }
};

// ---- wire formats ----------------------------------------------------------------------

struct KeyListRequest {
  std::uint32_t node_id = 0;
  std::uint32_t request_counter = 0;

  friend bool operator==(const KeyListRequest&, const KeyListRequest&) = default;
};

/// [4-byte node id][4-byte request counter], big-endian.
inline Bytes encode_request(const KeyListRequest& req) {
  Bytes out;
  put_be(out, req.node_id, 4);
  put_be(out, req.request_counter, 4);
  return out;
}

inline KeyListRequest decode_request(ByteView data) {
  ByteReader in(data);
  KeyListRequest req;
  req.node_id = static_cast<std::uint32_t>(in.read_be(4));
  req.request_counter = static_cast<std::uint32_t>(in.read_be(4));
  if (!in.done()) throw DecodeError("trailing bytes after key-list request");
  return req;
}

/// [8-byte TS_KL][8-byte timeout][2-byte cardinality][cardinality x 32-byte key].
inline Bytes encode_response(const KeyList& list) {
  if (list.cardinality() < 1 || list.cardinality() > 0xffff) throw DomainError("cardinality outside wire range");
  Bytes out;
  put_be(out, static_cast<std::uint64_t>(list.generated_at), 8);
  put_be(out, static_cast<std::uint64_t>(list.timeout), 8);
  put_be(out, list.cardinality(), 2);
  for (const auto& k : list.keys) append(out, k);
  return out;
}

inline KeyList decode_response(ByteView data) {
  ByteReader in(data);
  KeyList list;
  list.generated_at = static_cast<Millis>(in.read_be(8));
  list.timeout = static_cast<Millis>(in.read_be(8));
  const auto n = static_cast<std::size_t>(in.read_be(2));
  if (n == 0) throw DecodeError("key list with zero keys");
  if (list.timeout <= 0) throw DecodeError("key list with non-positive timeout");
  list.keys.resize(n);
  for (auto& k : list.keys) {
    auto raw = in.take(k.size());
    std::copy(raw.begin(), raw.end(), k.begin());
  }
  if (!in.done()) throw DecodeError("trailing bytes after key list");
  return list;
}

inline std::size_t response_size(std::size_t cardinality) { return 8 + 8 + 2 + 32 * cardinality; }

}  // namespace meshsec::keys
