#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshsec/ring_auth.hpp"
#include "meshsec/ring_setup.hpp"

// JSON documents for keys, ring directories and client sessions. Integers are stored as
// the hex of their canonical length-prefixed encoding.

namespace meshsec::files {

using nlohmann::json;

inline std::string int_hex(const BigInt& v) { return to_hex(encode_int(v)); }

inline BigInt int_from_hex(const json& j) {
  try {
    const auto raw = from_hex(j.get<std::string>());
    ByteReader r(raw);
    auto v = read_int(r, true);
    if (!r.done()) throw DecodeError("trailing bytes after integer");
    return v;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("integer field: ") + e.what());
  }
}

inline json to_json(const GroupParams& g) { return {{"p", int_hex(g.p)}, {"q", int_hex(g.q)}, {"g", int_hex(g.g)}}; }

inline GroupParams group_from_json(const json& j) {
  return {int_from_hex(j.at("p")), int_from_hex(j.at("q")), int_from_hex(j.at("g"))};
}

inline json to_json(const TrapdoorPublic& pub) { return {{"group", to_json(pub.group)}, {"y", int_hex(pub.y)}}; }

inline TrapdoorPublic public_from_json(const json& j) { return {group_from_json(j.at("group")), int_from_hex(j.at("y"))}; }

inline json to_json(const ServerKeys& k) {
  return {{"kind", "server-keys"}, {"group", to_json(k.group)}, {"x", int_hex(k.x)}, {"y", int_hex(k.y)}};
}

inline json to_json(const ServerPublic& k) {
  return {{"kind", "server-public"}, {"group", to_json(k.group)}, {"y", int_hex(k.y)}};
}

inline ServerKeys server_keys_from_json(const json& j) {
  if (!j.contains("x")) throw DecodeError("server key file lacks the private exponent");
  ServerKeys k{group_from_json(j.at("group")), int_from_hex(j.at("x")), int_from_hex(j.at("y"))};
  if (mod_exp(k.group.g, k.x, k.group.p) != k.y) throw DecodeError("server key pair does not match");
  return k;
}

inline ServerPublic server_public_from_json(const json& j) { return {group_from_json(j.at("group")), int_from_hex(j.at("y"))}; }

inline json to_json(const RingDirectory& ring) {
  json members = json::array();
  for (const auto& m : ring.members()) members.push_back({{"id", m.id}, {"key", to_json(m.key)}});
  return {{"kind", "ring-directory"}, {"members", members}};
}

inline RingDirectory ring_from_json(const json& j, bool check_groups = true) {
  std::vector<RingMember> members;
  for (const auto& m : j.at("members")) members.push_back({m.at("id").get<std::string>(), public_from_json(m.at("key"))});
  return RingDirectory(std::move(members), check_groups);
}

/// Private keys for ring members, indexed like the directory.
inline json secrets_to_json(const std::vector<TrapdoorPrivate>& secrets) {
  json xs = json::array();
  for (const auto& s : secrets) xs.push_back(int_hex(s.x));
  return {{"kind", "ring-secrets"}, {"x", xs}};
}

inline std::vector<TrapdoorPrivate> secrets_from_json(const json& j) {
  std::vector<TrapdoorPrivate> out;
  for (const auto& x : j.at("x")) out.push_back({int_from_hex(x)});
  return out;
}

inline json to_json(const ClientSession& s) {
  return {{"kind", "client-session"},
          {"group", to_json(s.group)},
          {"blinding_exp", int_hex(s.blinding_exp)},
          {"exchange_exp", int_hex(s.exchange_exp)},
          {"X", int_hex(s.X)},
          {"R", int_hex(s.R)},
          {"Q", int_hex(s.Q)},
          {"V", int_hex(s.V)},
          {"binding_key", to_hex(s.binding_key)},
          {"identity", to_hex(s.identity)}};
}

inline ClientSession session_from_json(const json& j) {
  ClientSession s;
  s.group = group_from_json(j.at("group"));
  s.blinding_exp = int_from_hex(j.at("blinding_exp"));
  s.exchange_exp = int_from_hex(j.at("exchange_exp"));
  s.X = int_from_hex(j.at("X"));
  s.R = int_from_hex(j.at("R"));
  s.Q = int_from_hex(j.at("Q"));
  s.V = int_from_hex(j.at("V"));
  const auto l = from_hex(j.at("binding_key").get<std::string>());
  if (l.size() != s.binding_key.size()) throw DecodeError("binding key must be 32 bytes");
  std::copy(l.begin(), l.end(), s.binding_key.begin());
  s.identity = from_hex(j.at("identity").get<std::string>());
  return s;
}

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DecodeError(path + ": " + e.what());
  }
}

/// Writes `j` as indented JSON plus a trailing newline.
inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace meshsec::files
