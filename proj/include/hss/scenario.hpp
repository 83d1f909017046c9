#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hss/bigint.hpp"
#include "hss/curve.hpp"
#include "hss/error.hpp"
#include "hss/hierarchy.hpp"
#include "hss/sharing.hpp"
#include "hss/simnet.hpp"

namespace hss {

using json = nlohmann::json;

inline constexpr int kScenarioSchemaVersion = 1;

/// Configuration problem, located by JSON pointer (`field`) and, for syntax
/// errors, by line.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message, std::optional<std::size_t> line = std::nullopt)
      : Error(ErrorCode::config_error, locate(field, line) + message), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string locate(const std::string& field, std::optional<std::size_t> line) {
    std::string where;
    if (line) where += "line " + std::to_string(*line) + ": ";
    if (!field.empty()) where += field + ": ";
    return where;
  }

  std::string field_;
  std::optional<std::size_t> line_;
};

struct CurveSpec {
  /// Named profile ("toy", "small", "standard"); empty when inline.
  std::string profile;
  std::optional<CurveParams> params;

  CurveParams resolve() const {
    if (params) return *params;
    if (auto named = curve_profile(profile)) return *named;
    throw ConfigError("/curve", "unknown curve profile '" + profile + "'");
  }

  friend bool operator==(const CurveSpec&, const CurveSpec&) = default;
};

enum class FieldMode { curve_order, no_curve };

struct TreeSlot {
  std::vector<TreeSlot> children;

  friend bool operator==(const TreeSlot&, const TreeSlot&) = default;
};

struct AdversarySpec {
  Strategy strategy = Strategy::passive_stealer;
  CompromiseBudget budget{false, 1};
  std::vector<UserId> targets;
  std::vector<ScriptAction> script;

  friend bool operator==(const AdversarySpec&, const AdversarySpec&) = default;
};

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  std::optional<CurveSpec> curve;
  FieldMode field_mode = FieldMode::curve_order;
  BigInt prime;  // no-curve mode only
  ThresholdFactor tf;
  /// Level-1 slots; users are numbered from 1 in breadth-first order.
  std::vector<TreeSlot> tree;
  BigInt secret;
  EvalPointMode eval_mode = EvalPointMode::round_key;
  std::uint64_t epochs = 5;
  std::uint64_t ticks_per_epoch = 4;
  bool renewal = true;
  LeavePolicy leave_policy = LeavePolicy::abort_round;
  bool redact_secrets = false;
  std::optional<AdversarySpec> adversary;
  std::vector<MembershipEvent> events;
  std::uint64_t seed = 0;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size() && i < offset; ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

class Reader {
 public:
  Reader(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }
  const json& raw() const noexcept { return value_; }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    for (const auto& [key, unused] : value_.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) throw ConfigError(path_ + "/" + key, "unknown field");
    }
  }

  bool has(std::string_view key) const { return value_.contains(key) && !value_.at(std::string(key)).is_null(); }

  Reader at(std::string_view key) const {
    if (!has(key)) throw ConfigError(path_ + "/" + std::string(key), "required field missing");
    return {value_.at(std::string(key)), path_ + "/" + std::string(key)};
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  BigInt decimal() const {
    if (!value_.is_string()) fail("expected a decimal integer string");
    try {
      return parse_decimal(value_.get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  std::uint64_t unsigned_int() const {
    if (value_.is_number_unsigned()) return value_.get<std::uint64_t>();
    if (value_.is_number_integer() && value_.get<std::int64_t>() >= 0) return value_.get<std::uint64_t>();
    if (value_.is_string()) {
      const BigInt v = decimal();
      if (v > BigInt(UINT64_MAX)) fail("value out of range");
      return v.convert_to<std::uint64_t>();
    }
    fail("expected a non-negative integer");
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::vector<Reader> elements() const {
    if (!value_.is_array()) fail("expected an array");
    std::vector<Reader> out;
    for (std::size_t i = 0; i < value_.size(); ++i) out.emplace_back(value_[i], path_ + "/" + std::to_string(i));
    return out;
  }

  template <typename Enum>
  Enum choice(std::initializer_list<std::pair<std::string_view, Enum>> options) const {
    const std::string s = string();
    std::string listed;
    for (const auto& [name, value] : options) {
      if (name == s) return value;
      listed += (listed.empty() ? "" : ", ") + std::string(name);
    }
    fail("expected one of: " + listed);
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_, message); }

 private:
  const json& value_;
  std::string path_;
};

inline CurveParams read_inline_curve(const Reader& r) {
  r.expect_object({"name", "p", "a", "b", "gx", "gy", "order"});
  CurveParams params;
  params.name = r.has("name") ? r.at("name").string() : "inline";
  params.p = r.at("p").decimal();
  params.a = r.at("a").decimal();
  params.b = r.at("b").decimal();
  params.gx = r.at("gx").decimal();
  params.gy = r.at("gy").decimal();
  params.order = r.at("order").decimal();
  return params;
}

inline TreeSlot read_slot(const Reader& r) {
  r.expect_object({"children"});
  TreeSlot slot;
  if (r.has("children")) {
    for (const auto& child : r.at("children").elements()) slot.children.push_back(read_slot(child));
  }
  return slot;
}

inline std::size_t count_slots(const std::vector<TreeSlot>& slots) {
  std::size_t n = slots.size();
  for (const auto& s : slots) n += count_slots(s.children);
  return n;
}

inline json curve_params_json(const CurveParams& c) {
  return {{"name", c.name},         {"p", to_decimal(c.p)},   {"a", to_decimal(c.a)},
          {"b", to_decimal(c.b)},   {"gx", to_decimal(c.gx)}, {"gy", to_decimal(c.gy)},
          {"order", to_decimal(c.order)}};
}

inline json slot_json(const TreeSlot& slot) {
  json children = json::array();
  for (const auto& c : slot.children) children.push_back(slot_json(c));
  return {{"children", children}};
}

}  // namespace detail

/// Reads a curve given either as a profile name or as inline parameters.
inline CurveSpec read_curve_spec(const json& value, const std::string& path) {
  detail::Reader r(value, path);
  if (value.is_string()) {
    CurveSpec spec{value.get<std::string>(), std::nullopt};
    if (!curve_profile(spec.profile)) r.fail("unknown curve profile '" + spec.profile + "'");
    return spec;
  }
  return CurveSpec{"", detail::read_inline_curve(r)};
}

/// Parses and validates a scenario document. Throws ConfigError.
inline ScenarioConfig parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what(), detail::line_of_offset(text, e.byte));
  }
  detail::Reader r(doc, "");
  r.expect_object({"schema_version", "name", "curve", "field", "threshold_factor", "tree", "secret", "eval_points",
                   "epochs", "ticks_per_epoch", "renewal", "leave_policy", "redact_secrets", "adversary",
                   "membership_events", "seed"});

  ScenarioConfig cfg;
  cfg.schema_version = static_cast<int>(r.at("schema_version").unsigned_int());
  if (cfg.schema_version != kScenarioSchemaVersion) {
    r.at("schema_version").fail("unsupported schema version " + std::to_string(cfg.schema_version));
  }
  cfg.name = r.at("name").string();
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos) {
    r.at("name").fail("name must be non-empty and contain no path separators");
  }

  if (r.has("field")) {
    const auto f = r.at("field");
    f.expect_object({"mode", "prime"});
    cfg.field_mode = f.at("mode").choice<FieldMode>({{"curve-order", FieldMode::curve_order}, {"no-curve", FieldMode::no_curve}});
    if (cfg.field_mode == FieldMode::no_curve) {
      cfg.prime = f.at("prime").decimal();
      if (cfg.prime <= 2 || !is_prime(cfg.prime)) f.at("prime").fail("must be a prime greater than 2");
    } else if (f.has("prime")) {
      f.at("prime").fail("only allowed in no-curve mode");
    }
  }
  if (r.has("curve")) {
    if (cfg.field_mode == FieldMode::no_curve) r.at("curve").fail("no-curve mode takes no curve");
    cfg.curve = read_curve_spec(r.at("curve").raw(), "/curve");
  } else if (cfg.field_mode == FieldMode::curve_order) {
    r.at("curve");  // raises "required field missing"
  }

  const auto tf = r.at("threshold_factor");
  tf.expect_object({"num", "den"});
  try {
    cfg.tf = ThresholdFactor::make(tf.at("num").unsigned_int(), tf.at("den").unsigned_int());
  } catch (const Error&) {
    tf.fail("TF must be in (0,1]");
  }

  for (const auto& slot : r.at("tree").elements()) cfg.tree.push_back(detail::read_slot(slot));
  if (cfg.tree.empty()) r.at("tree").fail("the hierarchy needs at least one level-1 user");

  cfg.secret = r.at("secret").decimal();
  if (r.has("eval_points")) {
    cfg.eval_mode = r.at("eval_points").choice<EvalPointMode>(
        {{"round-key", EvalPointMode::round_key}, {"user-id", EvalPointMode::user_id}});
  } else if (cfg.field_mode == FieldMode::no_curve) {
    cfg.eval_mode = EvalPointMode::user_id;
  }
  if (cfg.field_mode == FieldMode::no_curve && cfg.eval_mode == EvalPointMode::round_key) {
    r.at("eval_points").fail("round-key evaluation points need a curve");
  }
  if (r.has("epochs")) cfg.epochs = r.at("epochs").unsigned_int();
  if (r.has("ticks_per_epoch")) {
    cfg.ticks_per_epoch = r.at("ticks_per_epoch").unsigned_int();
    if (cfg.ticks_per_epoch == 0) r.at("ticks_per_epoch").fail("must be positive");
  }
  if (r.has("renewal")) cfg.renewal = r.at("renewal").boolean();
  if (r.has("leave_policy")) {
    cfg.leave_policy = r.at("leave_policy").choice<LeavePolicy>(
        {{"abort", LeavePolicy::abort_round}, {"finish", LeavePolicy::finish_round}});
  }
  if (r.has("redact_secrets")) cfg.redact_secrets = r.at("redact_secrets").boolean();
  if (r.has("seed")) cfg.seed = r.at("seed").unsigned_int();

  const std::size_t users = detail::count_slots(cfg.tree);
  auto read_user = [users](const detail::Reader& u) {
    const std::uint64_t id = u.unsigned_int();
    if (id == 0 || id > users) u.fail("no user " + std::to_string(id) + " in the tree");
    return UserId{static_cast<std::uint32_t>(id)};
  };

  if (r.has("adversary")) {
    const auto a = r.at("adversary");
    a.expect_object({"strategy", "budget", "targets", "script"});
    AdversarySpec adv;
    adv.strategy = a.at("strategy").choice<Strategy>({{"passive-stealer", Strategy::passive_stealer},
                                                      {"active-corruptor", Strategy::active_corruptor},
                                                      {"false-claimer", Strategy::false_claimer},
                                                      {"scripted", Strategy::scripted}});
    if (a.has("budget")) {
      const auto b = a.at("budget");
      if (b.raw().is_string()) {
        if (b.string() != "group-k") b.fail("expected a positive integer or \"group-k\"");
        adv.budget = CompromiseBudget{true, 0};
      } else {
        adv.budget = CompromiseBudget{false, b.unsigned_int()};
        if (adv.budget.per_group == 0) b.fail("budget must be positive");
      }
    }
    if (a.has("targets")) {
      for (const auto& t : a.at("targets").elements()) adv.targets.push_back(read_user(t));
    }
    if (a.has("script")) {
      for (const auto& step : a.at("script").elements()) {
        step.expect_object({"epoch", "action", "node", "targets"});
        ScriptAction action;
        action.epoch = step.at("epoch").unsigned_int();
        action.verb = step.at("action").choice<ScriptVerb>({{"compromise", ScriptVerb::compromise},
                                                            {"tamper-delta", ScriptVerb::tamper_delta},
                                                            {"tamper-commitment", ScriptVerb::tamper_commitment},
                                                            {"false-claim", ScriptVerb::false_claim}});
        action.node = read_user(step.at("node"));
        if (step.has("targets")) {
          for (const auto& t : step.at("targets").elements()) action.targets.push_back(read_user(t));
        }
        adv.script.push_back(std::move(action));
      }
    }
    if (adv.strategy != Strategy::scripted && !adv.script.empty()) {
      a.at("script").fail("a script is only used by the scripted strategy");
    }
    cfg.adversary = std::move(adv);
  }

  if (r.has("membership_events")) {
    for (const auto& e : r.at("membership_events").elements()) {
      e.expect_object({"epoch", "op", "user"});
      MembershipEvent event;
      event.epoch = e.at("epoch").unsigned_int();
      event.op = e.at("op").choice<MembershipOp>({{"leave", MembershipOp::leave}, {"rejoin", MembershipOp::rejoin}});
      // Rejoined members get fresh ids beyond the initial tree, so ids are
      // only range-checked for leave.
      const auto u = e.at("user");
      event.user = UserId{static_cast<std::uint32_t>(u.unsigned_int())};
      if (event.op == MembershipOp::leave) event.user = read_user(u);
      cfg.events.push_back(event);
    }
  }
  return cfg;
}

/// Canonical JSON form; parse_scenario(serialize_scenario(c).dump()) == c.
inline json serialize_scenario(const ScenarioConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["name"] = cfg.name;
  if (cfg.curve) {
    doc["curve"] = cfg.curve->params ? detail::curve_params_json(*cfg.curve->params) : json(cfg.curve->profile);
  }
  doc["field"] = cfg.field_mode == FieldMode::no_curve ? json{{"mode", "no-curve"}, {"prime", to_decimal(cfg.prime)}}
                                                        : json{{"mode", "curve-order"}};
  doc["threshold_factor"] = {{"num", cfg.tf.numerator}, {"den", cfg.tf.denominator}};
  json tree = json::array();
  for (const auto& slot : cfg.tree) tree.push_back(detail::slot_json(slot));
  doc["tree"] = tree;
  doc["secret"] = to_decimal(cfg.secret);
  doc["eval_points"] = cfg.eval_mode == EvalPointMode::round_key ? "round-key" : "user-id";
  doc["epochs"] = cfg.epochs;
  doc["ticks_per_epoch"] = cfg.ticks_per_epoch;
  doc["renewal"] = cfg.renewal;
  doc["leave_policy"] = cfg.leave_policy == LeavePolicy::abort_round ? "abort" : "finish";
  doc["redact_secrets"] = cfg.redact_secrets;
  doc["seed"] = std::to_string(cfg.seed);
  if (cfg.adversary) {
    const auto& a = *cfg.adversary;
    json adv;
    adv["strategy"] = std::string(to_string(a.strategy));
    adv["budget"] = a.budget.group_k ? json("group-k") : json(a.budget.per_group);
    json targets = json::array();
    for (UserId t : a.targets) targets.push_back(t.value);
    adv["targets"] = targets;
    json script = json::array();
    for (const auto& step : a.script) {
      json ts = json::array();
      for (UserId t : step.targets) ts.push_back(t.value);
      script.push_back({{"epoch", step.epoch}, {"action", std::string(to_string(step.verb))}, {"node", step.node.value},
                        {"targets", ts}});
    }
    adv["script"] = script;
    doc["adversary"] = adv;
  }
  json events = json::array();
  for (const auto& e : cfg.events) {
    events.push_back({{"epoch", e.epoch}, {"op", e.op == MembershipOp::leave ? "leave" : "rejoin"}, {"user", e.user.value}});
  }
  doc["membership_events"] = events;
  return doc;
}

/// Curve and share field for a scenario; the curve is null in no-curve mode.
struct ScenarioAlgebra {
  std::shared_ptr<const Curve> curve;
  FieldRef field;
};

inline ScenarioAlgebra build_algebra(const ScenarioConfig& cfg) {
  if (cfg.field_mode == FieldMode::no_curve) return {nullptr, make_field(cfg.prime)};
  const CurveParams params = cfg.curve->resolve();
  const CurveValidation check = validate_curve(params);
  if (!check.valid) {
    std::string why;
    for (const auto& f : check.failures) why += (why.empty() ? "" : "; ") + f;
    throw ConfigError("/curve", "invalid curve: " + why);
  }
  auto curve = std::make_shared<const Curve>(params);
  return {curve, curve->scalar_field()};
}

inline SimSettings settings_of(const ScenarioConfig& cfg) {
  return SimSettings{cfg.tf, cfg.eval_mode, cfg.renewal, cfg.ticks_per_epoch, cfg.leave_policy};
}

inline void configure_adversary(AdversaryState& adv, const ScenarioConfig& cfg) {
  if (!cfg.adversary) {
    adv.strategy = Strategy::passive_stealer;
    adv.budget = CompromiseBudget{false, 0};
    return;
  }
  adv.strategy = cfg.adversary->strategy;
  adv.budget = cfg.adversary->budget;
  adv.targets = std::set<UserId>(cfg.adversary->targets.begin(), cfg.adversary->targets.end());
  adv.script = cfg.adversary->script;
}

/// Registers the configured tree (breadth-first, ids from 1). The first
/// round is dealt by the first step_epoch().
inline World build_world(const ScenarioConfig& cfg) {
  const ScenarioAlgebra algebra = build_algebra(cfg);
  if (cfg.secret >= algebra.field->modulus) {
    throw ConfigError("/secret", "secret must be below the share field modulus " + to_decimal(algebra.field->modulus));
  }
  Rng rng(cfg.seed);
  HierarchyTree tree(algebra.curve, algebra.field);

  std::deque<std::pair<UserId, const TreeSlot*>> queue;
  for (const auto& slot : cfg.tree) queue.emplace_back(kRootServer, &slot);
  while (!queue.empty()) {
    auto [parent, slot] = queue.front();
    queue.pop_front();
    const UserId id = tree.register_user(parent, rng).id;
    for (const auto& child : slot->children) queue.emplace_back(id, &child);
  }

  World w(settings_of(cfg), algebra.curve, algebra.field, std::move(tree), FieldElement(algebra.field, cfg.secret),
          std::move(rng));
  configure_adversary(w.adversary, cfg);
  w.events = cfg.events;
  return w;
}

}  // namespace hss
