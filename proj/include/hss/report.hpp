#pragma once

#include <cstddef>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "hss/scenario.hpp"
#include "hss/simnet.hpp"

namespace hss {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline json id_list(const std::vector<UserId>& ids) {
  json out = json::array();
  for (UserId id : ids) out.push_back(id.value);
  return out;
}

inline std::vector<UserId> id_list_from(const json& j) {
  std::vector<UserId> out;
  for (const auto& v : j) out.push_back(UserId{v.get<std::uint32_t>()});
  return out;
}

inline VerdictOutcome verdict_outcome_from(const std::string& s) {
  for (auto o : {VerdictOutcome::no_action, VerdictOutcome::accused_compromised, VerdictOutcome::claimers_compromised}) {
    if (to_string(o) == s) return o;
  }
  throw Error(ErrorCode::corrupt_snapshot, "unknown verdict outcome " + s);
}

}  // namespace detail

inline json claim_json(const ClaimRecord& c) {
  return {{"claimer", c.claimer.value}, {"accused", c.accused.value}, {"epoch", c.epoch}};
}

inline json verdict_json(const Verdict& v) {
  return {{"epoch", v.epoch},
          {"accused", v.accused.value},
          {"outcome", std::string(to_string(v.outcome))},
          {"supporting_claims", v.supporting_claims},
          {"claimers", detail::id_list(v.claimers)}};
}

inline json dealing_json(const DealingSummary& d) {
  return {{"epoch", d.epoch}, {"round_id", d.round_id}, {"threshold_root", d.threshold_root}, {"users", d.users}};
}

inline json epoch_row_json(const EpochRow& row) {
  json claims = json::array();
  for (const auto& c : row.claims) claims.push_back(claim_json(c));
  json verdicts = json::array();
  for (const auto& v : row.verdicts) verdicts.push_back(verdict_json(v));
  json messages = json::object();
  for (const auto& [kind, count] : row.messages) messages[kind] = count;
  return {{"epoch", row.epoch},
          {"messages", messages},
          {"renewal",
           {{"sealed_deltas", row.renewal.sealed_deltas},
            {"commitment_multicasts", row.renewal.commitment_multicasts},
            {"claims", row.renewal.claims},
            {"total", row.renewal.renewal_total()}}},
          {"active_nodes", row.active_nodes},
          {"all_pairs_baseline", row.all_pairs_baseline},
          {"compromised", detail::id_list(row.compromised)},
          {"claims", claims},
          {"verdicts", verdicts},
          {"cleansed", detail::id_list(row.cleansed)},
          {"discarded", detail::id_list(row.discarded)},
          {"membership", row.membership},
          {"adversary_closure", row.adversary_closure},
          {"secret_intact", row.secret_intact},
          {"violations", row.violations}};
}

inline DealingSummary dealing_from_json(const json& j) {
  return {j.at("epoch").get<std::uint64_t>(), j.at("round_id").get<std::uint64_t>(),
          j.at("threshold_root").get<std::size_t>(), j.at("users").get<std::size_t>()};
}

/// Inverse of epoch_row_json (snapshots carry the rows produced so far).
inline EpochRow epoch_row_from_json(const json& j) {
  EpochRow row;
  row.epoch = j.at("epoch").get<std::uint64_t>();
  for (const auto& [kind, count] : j.at("messages").items()) row.messages[kind] = count.get<std::size_t>();
  const json& r = j.at("renewal");
  row.renewal = {r.at("sealed_deltas").get<std::size_t>(), r.at("commitment_multicasts").get<std::size_t>(),
                 r.at("claims").get<std::size_t>()};
  row.active_nodes = j.at("active_nodes").get<std::size_t>();
  row.all_pairs_baseline = j.at("all_pairs_baseline").get<std::size_t>();
  row.compromised = detail::id_list_from(j.at("compromised"));
  for (const auto& c : j.at("claims")) {
    row.claims.push_back({UserId{c.at("claimer").get<std::uint32_t>()}, UserId{c.at("accused").get<std::uint32_t>()},
                          c.at("epoch").get<std::uint64_t>()});
  }
  for (const auto& v : j.at("verdicts")) {
    row.verdicts.push_back({v.at("epoch").get<std::uint64_t>(), UserId{v.at("accused").get<std::uint32_t>()},
                            detail::verdict_outcome_from(v.at("outcome").get<std::string>()),
                            v.at("supporting_claims").get<std::size_t>(), detail::id_list_from(v.at("claimers"))});
  }
  row.cleansed = detail::id_list_from(j.at("cleansed"));
  row.discarded = detail::id_list_from(j.at("discarded"));
  row.membership = j.at("membership").get<std::vector<std::string>>();
  row.adversary_closure = j.at("adversary_closure").get<bool>();
  row.secret_intact = j.at("secret_intact").get<bool>();
  row.violations = j.at("violations").get<std::vector<std::string>>();
  return row;
}

/// Machine-readable report. Contains nothing run-environment specific, so
/// the same scenario and seed always serialize to the same bytes.
inline json report_json(const ScenarioConfig& cfg, const World& w) {
  const SimReport& r = w.report;
  json dealings = json::array();
  for (const auto& d : r.dealings) dealings.push_back(dealing_json(d));
  json epochs = json::array();
  for (const auto& row : r.epochs) epochs.push_back(epoch_row_json(row));
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["scenario"] = cfg.name;
  doc["seed"] = std::to_string(cfg.seed);
  doc["curve"] = w.curve ? json(w.curve->params().name) : json(nullptr);
  doc["field_modulus"] = to_decimal(w.field->modulus);
  doc["threshold_factor"] = {{"num", cfg.tf.numerator}, {"den", cfg.tf.denominator}};
  doc["eval_points"] = cfg.eval_mode == EvalPointMode::round_key ? "round-key" : "user-id";
  doc["renewal"] = cfg.renewal;
  doc["adversary"] = cfg.adversary ? json(std::string(to_string(cfg.adversary->strategy))) : json(nullptr);
  doc["epochs_run"] = r.epochs.size();
  doc["dealings"] = dealings;
  doc["epochs"] = epochs;
  doc["summary"] = {{"final_adversary_closure", r.final_adversary_closure},
                    {"secret_recovered_by_adversary", r.secret_recovered_by_adversary},
                    {"reconstruction_correct", r.reconstruction_correct},
                    {"invariant_violations", r.invariant_violations}};
  return doc;
}

inline std::size_t total_messages(const EpochRow& row) {
  return std::accumulate(row.messages.begin(), row.messages.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

/// Fixed-width human summary, one line per epoch.
inline std::string report_table(const ScenarioConfig& cfg, const World& w) {
  const SimReport& r = w.report;
  std::string out = "scenario " + cfg.name + ", seed " + std::to_string(cfg.seed) + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%5s | %8s | %11s | %6s | %8s | %13s\n", "epoch", "messages", "compromises", "claims",
                "verdicts", "secret-intact");
  out += line;
  out += std::string(5, '-') + "-+-" + std::string(8, '-') + "-+-" + std::string(11, '-') + "-+-" + std::string(6, '-') +
         "-+-" + std::string(8, '-') + "-+-" + std::string(13, '-') + "\n";
  for (const auto& row : r.epochs) {
    std::snprintf(line, sizeof line, "%5llu | %8zu | %11zu | %6zu | %8zu | %13s\n",
                  static_cast<unsigned long long>(row.epoch), total_messages(row), row.compromised.size(),
                  row.claims.size(), row.verdicts.size(), row.secret_intact ? "yes" : "no");
    out += line;
  }
  out += "reconstruction correct: ";
  out += r.reconstruction_correct ? "yes\n" : "no\n";
  out += "secret recovered by adversary: ";
  out += r.secret_recovered_by_adversary ? "yes\n" : "no\n";
  out += "invariant violations: " + std::to_string(r.invariant_violations.size()) + "\n";
  for (const auto& v : r.invariant_violations) out += "  " + v + "\n";
  return out;
}

}  // namespace hss
