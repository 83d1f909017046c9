#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hss/report.hpp"
#include "hss/scenario.hpp"
#include "hss/simnet.hpp"

namespace hss {

inline constexpr int kSnapshotVersion = 1;
inline constexpr std::string_view kSnapshotFormat = "hss-snapshot";

/// 64-bit FNV-1a, used as the snapshot integrity check.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

inline json point_json(const CurvePoint& p) {
  if (p.is_identity()) return {{"identity", true}};
  return {{"x", to_decimal(p.x())}, {"y", to_decimal(p.y())}};
}

inline CurvePoint point_from(const json& j) {
  if (j.contains("identity")) return CurvePoint::identity();
  return {parse_decimal(j.at("x").get<std::string>()), parse_decimal(j.at("y").get<std::string>())};
}

inline json element_json(const FieldElement& e) { return to_decimal(e.value()); }

inline FieldElement element_from(const FieldRef& field, const json& j) {
  const BigInt v = parse_decimal(j.get<std::string>());
  if (v >= field->modulus) throw Error(ErrorCode::corrupt_snapshot, "field element out of range");
  return {field, v};
}

inline json share_json(const ShareRecord& s) {
  json j = {{"owner", s.owner.value},        {"eval_point", element_json(s.eval_point)},
            {"value", element_json(s.value)}, {"threshold", s.threshold},
            {"round_id", s.round_id},         {"epoch", s.epoch}};
  j["children_threshold"] = s.children_threshold ? json(*s.children_threshold) : json(nullptr);
  return j;
}

inline ShareRecord share_from(const FieldRef& field, const json& j) {
  ShareRecord s{UserId{j.at("owner").get<std::uint32_t>()},
                element_from(field, j.at("eval_point")),
                element_from(field, j.at("value")),
                j.at("threshold").get<std::size_t>(),
                std::nullopt,
                j.at("round_id").get<std::uint64_t>(),
                j.at("epoch").get<std::uint64_t>()};
  if (!j.at("children_threshold").is_null()) s.children_threshold = j.at("children_threshold").get<std::size_t>();
  return s;
}

inline json tree_json(const HierarchyTree& tree, bool redact) {
  json nodes = json::array();
  for (const auto& [id, n] : tree.nodes()) {
    json node = {{"id", id.value},
                 {"parent", n.parent.value},
                 {"children", id_list(n.children)},
                 {"level", n.level},
                 {"active", n.active},
                 {"vacated", n.vacated}};
    if (n.rtok && !redact) node["rtok"] = element_json(*n.rtok);
    if (n.group_key) node["group_key"] = point_json(*n.group_key);
    if (n.round_key) node["round_key"] = point_json(*n.round_key);
    nodes.push_back(std::move(node));
  }
  json keys = json::array();
  for (const auto& [id, key] : tree.server_group_keys()) keys.push_back({{"id", id.value}, {"key", point_json(key)}});
  return {{"nodes", nodes},
          {"server_group_keys", keys},
          {"next_id", tree.next_id()},
          {"membership_version", tree.membership_version()},
          {"rounds_started", tree.rounds_started()}};
}

inline HierarchyTree tree_from(const std::shared_ptr<const Curve>& curve, const FieldRef& field, const json& j) {
  std::map<UserId, HierarchyNode> nodes;
  for (const auto& node : j.at("nodes")) {
    HierarchyNode n;
    n.id = UserId{node.at("id").get<std::uint32_t>()};
    n.parent = UserId{node.at("parent").get<std::uint32_t>()};
    n.children = id_list_from(node.at("children"));
    n.level = node.at("level").get<std::size_t>();
    n.active = node.at("active").get<bool>();
    n.vacated = node.at("vacated").get<bool>();
    if (node.contains("rtok")) n.rtok = element_from(field, node.at("rtok"));
    if (node.contains("group_key")) n.group_key = point_from(node.at("group_key"));
    if (node.contains("round_key")) n.round_key = point_from(node.at("round_key"));
    nodes.emplace(n.id, std::move(n));
  }
  std::map<UserId, CurvePoint> keys;
  for (const auto& k : j.at("server_group_keys")) keys.emplace(UserId{k.at("id").get<std::uint32_t>()}, point_from(k.at("key")));
  return HierarchyTree::restore(curve, field, std::move(nodes), std::move(keys), j.at("next_id").get<std::uint32_t>(),
                                j.at("membership_version").get<std::uint64_t>(),
                                j.at("rounds_started").get<std::uint64_t>());
}

inline json adversary_json(const AdversaryState& a, bool redact) {
  json stolen = json::array();
  for (const auto& s : a.stolen) stolen.push_back({{"valid_epoch", s.valid_epoch}, {"share", share_json(s.share)}});
  json rtoks = json::array();
  for (const auto& [id, rtok] : a.stolen_rtoks) {
    json entry = {{"id", id.value}};
    if (!redact) entry["rtok"] = element_json(rtok);
    rtoks.push_back(std::move(entry));
  }
  json round_keys = json::array();
  for (const auto& [id, key] : a.stolen_round_keys) round_keys.push_back({{"id", id.value}, {"key", point_json(key)}});
  json observed = json::array();
  for (const auto& p : a.observed_public) observed.push_back(point_json(p));
  json deltas = json::array();
  for (const auto& d : a.observed_deltas) {
    deltas.push_back({{"epoch", d.epoch}, {"to", d.to.value}, {"value", element_json(d.value)}});
  }
  auto ids = [](const std::set<UserId>& s) { return id_list(std::vector<UserId>(s.begin(), s.end())); };
  // Strategy, budget, targets and script come from the scenario.
  return {{"compromised", ids(a.compromised)},
          {"carried", ids(a.carried)},
          {"ever_compromised", ids(a.ever_compromised)},
          {"budget_clipped", a.budget_clipped},
          {"stolen", stolen},
          {"stolen_rtoks", rtoks},
          {"stolen_round_keys", round_keys},
          {"observed_public", observed},
          {"observed_deltas", deltas}};
}

inline void adversary_from(AdversaryState& a, const FieldRef& field, const json& j) {
  auto ids = [](const json& list) {
    const auto v = id_list_from(list);
    return std::set<UserId>(v.begin(), v.end());
  };
  a.compromised = ids(j.at("compromised"));
  a.carried = ids(j.at("carried"));
  a.ever_compromised = ids(j.at("ever_compromised"));
  a.budget_clipped = j.at("budget_clipped").get<std::size_t>();
  for (const auto& s : j.at("stolen")) a.stolen.push_back({s.at("valid_epoch").get<std::uint64_t>(), share_from(field, s.at("share"))});
  for (const auto& r : j.at("stolen_rtoks")) {
    a.stolen_rtoks.emplace(UserId{r.at("id").get<std::uint32_t>()}, element_from(field, r.at("rtok")));
  }
  for (const auto& k : j.at("stolen_round_keys")) {
    a.stolen_round_keys.emplace(UserId{k.at("id").get<std::uint32_t>()}, point_from(k.at("key")));
  }
  for (const auto& p : j.at("observed_public")) a.observed_public.push_back(point_from(p));
  for (const auto& d : j.at("observed_deltas")) {
    a.observed_deltas.push_back(
        {d.at("epoch").get<std::uint64_t>(), UserId{d.at("to").get<std::uint32_t>()}, element_from(field, d.at("value"))});
  }
}

inline json dealer_json(const DealerState& d) {
  json retained = json::array();
  for (const auto& [id, v] : d.retained) retained.push_back({{"id", id.value}, {"value", element_json(v)}});
  json polys = json::array();
  for (const auto& [id, q] : d.polynomials) {
    json coeffs = json::array();
    for (const auto& c : q.coefficients()) coeffs.push_back(element_json(c));
    polys.push_back({{"id", id.value}, {"coefficients", coeffs}});
  }
  json thresholds = json::array();
  for (const auto& [id, t] : d.group_thresholds) thresholds.push_back({{"id", id.value}, {"threshold", t}});
  return {{"retained", retained}, {"polynomials", polys}, {"group_thresholds", thresholds}};
}

inline void dealer_from(DealerState& d, const FieldRef& field, const json& j) {
  for (const auto& r : j.at("retained")) d.retained.emplace(UserId{r.at("id").get<std::uint32_t>()}, element_from(field, r.at("value")));
  for (const auto& p : j.at("polynomials")) {
    std::vector<FieldElement> coeffs;
    for (const auto& c : p.at("coefficients")) coeffs.push_back(element_from(field, c));
    d.polynomials.emplace(UserId{p.at("id").get<std::uint32_t>()}, Polynomial(std::move(coeffs)));
  }
  for (const auto& t : j.at("group_thresholds")) {
    d.group_thresholds.emplace(UserId{t.at("id").get<std::uint32_t>()}, t.at("threshold").get<std::size_t>());
  }
}

}  // namespace detail

/// Serializes the world at an epoch boundary. With `redact`, registration
/// tokens and the round's server secret are left out; such a snapshot can be
/// inspected but not resumed.
inline std::string save_snapshot(const ScenarioConfig& cfg, const World& w, bool redact) {
  if (!w.net.log().empty()) {
    throw Error(ErrorCode::not_at_epoch_boundary, "snapshot requested in the middle of epoch " + std::to_string(w.epoch));
  }
  json body;
  body["scenario"] = serialize_scenario(cfg);
  body["redacted"] = redact;
  body["epoch"] = w.epoch;
  body["tick"] = w.tick();
  body["tree"] = detail::tree_json(w.tree, redact);
  if (w.round) {
    json round = {{"round_id", w.round->round_id}, {"membership_version", w.round->membership_version}};
    if (w.round->server_secret && !redact) round["server_secret"] = detail::element_json(*w.round->server_secret);
    if (w.round->public_key) round["public_key"] = detail::point_json(*w.round->public_key);
    body["round"] = round;
  } else {
    body["round"] = nullptr;
  }
  body["dealer"] = detail::dealer_json(w.dealer);
  json shares = json::array();
  for (const auto& [id, s] : w.shares) shares.push_back(detail::share_json(s));
  body["shares"] = shares;
  body["rng"] = w.rng.save_state();
  body["net_next_id"] = w.net.next_id();
  body["adversary"] = detail::adversary_json(w.adversary, redact);
  json dealings = json::array();
  for (const auto& d : w.report.dealings) dealings.push_back(dealing_json(d));
  json rows = json::array();
  for (const auto& row : w.report.epochs) rows.push_back(epoch_row_json(row));
  body["report"] = {{"dealings", dealings}, {"epochs", rows}, {"invariant_violations", w.report.invariant_violations}};

  const std::string text = body.dump();
  json doc = {{"format", kSnapshotFormat}, {"version", kSnapshotVersion}, {"checksum", hex64(fnv1a64(text))}, {"body", body}};
  return doc.dump(1) + "\n";
}

struct LoadedSnapshot {
  ScenarioConfig config;
  World world;
};

/// Inverse of save_snapshot. Raises CorruptSnapshot, VersionMismatch or
/// NotAtEpochBoundary; a redacted snapshot is refused with ConfigError.
inline LoadedSnapshot load_snapshot(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::corrupt_snapshot, std::string("unreadable snapshot: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kSnapshotFormat) {
      throw Error(ErrorCode::corrupt_snapshot, "not a snapshot file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kSnapshotVersion) {
      throw Error(ErrorCode::version_mismatch, "snapshot version " + std::to_string(version) + ", expected " +
                                                   std::to_string(kSnapshotVersion));
    }
    const json& body = doc.at("body");
    if (doc.at("checksum").get<std::string>() != hex64(fnv1a64(body.dump()))) {
      throw Error(ErrorCode::corrupt_snapshot, "checksum mismatch");
    }
    if (body.at("redacted").get<bool>()) {
      throw Error(ErrorCode::config_error, "snapshot was saved with secrets redacted and cannot be resumed");
    }

    ScenarioConfig cfg = parse_scenario(body.at("scenario").dump());
    const std::uint64_t epoch = body.at("epoch").get<std::uint64_t>();
    const std::uint64_t tick = body.at("tick").get<std::uint64_t>();
    if (tick != epoch * cfg.ticks_per_epoch) {
      throw Error(ErrorCode::not_at_epoch_boundary,
                  "tick " + std::to_string(tick) + " is not the start of epoch " + std::to_string(epoch));
    }

    const ScenarioAlgebra algebra = build_algebra(cfg);
    HierarchyTree tree = detail::tree_from(algebra.curve, algebra.field, body.at("tree"));
    World w(settings_of(cfg), algebra.curve, algebra.field, std::move(tree),
            FieldElement(algebra.field, cfg.secret), Rng());
    w.epoch = epoch;
    if (!body.at("round").is_null()) {
      const json& r = body.at("round");
      RoundState round;
      round.round_id = r.at("round_id").get<std::uint64_t>();
      round.membership_version = r.at("membership_version").get<std::uint64_t>();
      if (r.contains("server_secret")) round.server_secret = detail::element_from(algebra.field, r.at("server_secret"));
      if (r.contains("public_key")) round.public_key = detail::point_from(r.at("public_key"));
      w.round = std::move(round);
    }
    detail::dealer_from(w.dealer, algebra.field, body.at("dealer"));
    for (const auto& s : body.at("shares")) {
      ShareRecord share = detail::share_from(algebra.field, s);
      w.shares.emplace(share.owner, std::move(share));
    }
    w.rng.restore_state(body.at("rng").get<std::string>());
    w.net.set_next_id(body.at("net_next_id").get<std::uint64_t>());
    configure_adversary(w.adversary, cfg);
    detail::adversary_from(w.adversary, algebra.field, body.at("adversary"));
    w.events = cfg.events;
    const json& report = body.at("report");
    for (const auto& d : report.at("dealings")) w.report.dealings.push_back(dealing_from_json(d));
    for (const auto& row : report.at("epochs")) w.report.epochs.push_back(epoch_row_from_json(row));
    w.report.invariant_violations = report.at("invariant_violations").get<std::vector<std::string>>();
    return {std::move(cfg), std::move(w)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::corrupt_snapshot, std::string("malformed snapshot: ") + e.what());
  } catch (const ConfigError& e) {
    throw Error(ErrorCode::corrupt_snapshot, std::string("embedded scenario rejected: ") + e.what());
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::corrupt_snapshot:
      case ErrorCode::version_mismatch:
      case ErrorCode::not_at_epoch_boundary:
      case ErrorCode::config_error:
        throw;
      default:
        throw Error(ErrorCode::corrupt_snapshot, std::string("inconsistent snapshot: ") + e.what());
    }
  }
}

}  // namespace hss
