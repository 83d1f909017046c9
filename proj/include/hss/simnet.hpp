#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hss/algebra.hpp"
#include "hss/curve.hpp"
#include "hss/error.hpp"
#include "hss/hierarchy.hpp"
#include "hss/proactive.hpp"
#include "hss/rng.hpp"
#include "hss/sharing.hpp"

namespace hss {

// ---------------------------------------------------------------------------
// Messages

enum class MessageKind { request, round_key_broadcast, share_delivery, renewal_delta, commitment_multicast, claim, leave };

constexpr std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::request: return "request";
    case MessageKind::round_key_broadcast: return "round_key_broadcast";
    case MessageKind::share_delivery: return "share_delivery";
    case MessageKind::renewal_delta: return "renewal_delta";
    case MessageKind::commitment_multicast: return "commitment_multicast";
    case MessageKind::claim: return "claim";
    case MessageKind::leave: return "leave";
  }
  return "unknown";
}

enum class Scope { unicast, multicast, broadcast };

struct RequestMessage {
  UserId user;
  UserId parent;
  std::size_t children = 0;
};

using Payload = std::variant<RequestMessage, CurvePoint, ShareRecord, RenewalBundle, std::vector<CurvePoint>, ClaimRecord,
                             UserId>;

/// A message in flight. `to` is the addressee for unicast, the subtree root
/// for multicast, and unused for broadcast.
struct Envelope {
  std::uint64_t id = 0;
  UserId from;
  UserId to;
  Scope scope = Scope::unicast;
  MessageKind kind = MessageKind::request;
  bool sealed = false;
  std::uint64_t epoch = 0;
  std::uint64_t sent_tick = 0;
  std::uint64_t delivered_tick = 0;
  Payload payload;
};

/// Reliable, ordered delivery within the sending epoch: one tick of latency,
/// clamped to the epoch's last tick.
class Network {
 public:
  explicit Network(std::uint64_t ticks_per_epoch = 4) : ticks_per_epoch_(ticks_per_epoch) {
    if (ticks_per_epoch_ == 0) {
      throw Error(ErrorCode::invalid_params, "ticks per epoch must be positive");
    }
  }

  std::uint64_t ticks_per_epoch() const noexcept { return ticks_per_epoch_; }
  std::uint64_t epoch_start(std::uint64_t epoch) const { return epoch * ticks_per_epoch_; }
  std::uint64_t epoch_of(std::uint64_t tick) const { return tick / ticks_per_epoch_; }

  /// Tick of protocol phase `phase` (0 request, 1 deliver, 2 renew, 3 resolve).
  std::uint64_t phase_tick(std::uint64_t epoch, std::uint64_t phase) const {
    return epoch_start(epoch) + std::min(phase, ticks_per_epoch_ - 1);
  }

  const Envelope& send(UserId from, UserId to, Scope scope, MessageKind kind, bool sealed, std::uint64_t tick,
                       Payload payload) {
    Envelope env;
    env.id = next_id_++;
    env.from = from;
    env.to = to;
    env.scope = scope;
    env.kind = kind;
    env.sealed = sealed;
    env.epoch = epoch_of(tick);
    env.sent_tick = tick;
    env.delivered_tick = std::min(tick + 1, epoch_start(env.epoch) + ticks_per_epoch_ - 1);
    env.payload = std::move(payload);
    ++counts_[kind];
    log_.push_back(std::move(env));
    return log_.back();
  }

  /// Envelopes sent since the last begin_epoch().
  const std::vector<Envelope>& log() const noexcept { return log_; }
  const std::map<MessageKind, std::size_t>& counts() const noexcept { return counts_; }

  void begin_epoch() {
    log_.clear();
    counts_.clear();
  }

  std::uint64_t next_id() const noexcept { return next_id_; }
  void set_next_id(std::uint64_t id) { next_id_ = id; }

 private:
  std::uint64_t ticks_per_epoch_;
  std::uint64_t next_id_ = 1;
  std::vector<Envelope> log_;
  std::map<MessageKind, std::size_t> counts_;
};

// ---------------------------------------------------------------------------
// Adversary

enum class Strategy { passive_stealer, active_corruptor, false_claimer, scripted };

constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::passive_stealer: return "passive-stealer";
    case Strategy::active_corruptor: return "active-corruptor";
    case Strategy::false_claimer: return "false-claimer";
    case Strategy::scripted: return "scripted";
  }
  return "unknown";
}

/// Per-epoch, per-sibling-group compromise allowance: a fixed count, or each
/// group's own k (threshold - 1).
struct CompromiseBudget {
  bool group_k = false;
  std::size_t per_group = 0;

  std::size_t cap(std::size_t group_threshold) const {
    return group_k ? (group_threshold > 0 ? group_threshold - 1 : 0) : per_group;
  }

  friend bool operator==(const CompromiseBudget&, const CompromiseBudget&) = default;
};

enum class ScriptVerb { compromise, tamper_delta, tamper_commitment, false_claim };

constexpr std::string_view to_string(ScriptVerb v) {
  switch (v) {
    case ScriptVerb::compromise: return "compromise";
    case ScriptVerb::tamper_delta: return "tamper-delta";
    case ScriptVerb::tamper_commitment: return "tamper-commitment";
    case ScriptVerb::false_claim: return "false-claim";
  }
  return "unknown";
}

struct ScriptAction {
  std::uint64_t epoch = 0;
  ScriptVerb verb = ScriptVerb::compromise;
  UserId node;
  std::vector<UserId> targets;

  friend bool operator==(const ScriptAction&, const ScriptAction&) = default;
};

struct StolenShare {
  std::uint64_t valid_epoch = 0;
  ShareRecord share;
};

struct ObservedDelta {
  std::uint64_t epoch = 0;
  UserId to;
  FieldElement value;
};

/// Everything the adversary holds. There is deliberately no slot for a
/// server round secret or a renewal polynomial coefficient: the structural
/// leakage check relies on that.
struct AdversaryState {
  Strategy strategy = Strategy::passive_stealer;
  CompromiseBudget budget;
  /// Nodes the adversary may compromise; empty means any user.
  std::set<UserId> targets;
  std::vector<ScriptAction> script;

  std::set<UserId> compromised;
  /// Nodes whose next-epoch share the adversary copied while present at a
  /// renewal; they count against the next epoch's budget.
  std::set<UserId> carried;
  std::set<UserId> ever_compromised;
  std::size_t budget_clipped = 0;

  std::vector<StolenShare> stolen;
  std::map<UserId, FieldElement> stolen_rtoks;
  std::map<UserId, CurvePoint> stolen_round_keys;
  std::vector<CurvePoint> observed_public;
  std::vector<ObservedDelta> observed_deltas;

  bool present_during_renewal() const { return strategy != Strategy::passive_stealer; }
};

/// Records what the adversary sees of a delivered envelope: unsealed
/// public points always; sealed payloads only when the addressee is
/// compromised at delivery.
inline void adversary_observe(AdversaryState& adv, const Envelope& env) {
  if (!env.sealed) {
    if (const auto* point = std::get_if<CurvePoint>(&env.payload)) {
      adv.observed_public.push_back(*point);
    } else if (const auto* points = std::get_if<std::vector<CurvePoint>>(&env.payload)) {
      adv.observed_public.insert(adv.observed_public.end(), points->begin(), points->end());
    }
    return;
  }
  if (env.scope != Scope::unicast || !adv.compromised.contains(env.to)) return;
  if (const auto* share = std::get_if<ShareRecord>(&env.payload)) {
    adv.stolen.push_back({env.epoch, *share});
  } else if (const auto* bundle = std::get_if<RenewalBundle>(&env.payload)) {
    adv.observed_deltas.push_back({env.epoch, env.to, bundle->delta_eval});
  }
}

// ---------------------------------------------------------------------------
// World

enum class LeavePolicy { abort_round, finish_round };

enum class MembershipOp { leave, rejoin };

struct MembershipEvent {
  std::uint64_t epoch = 0;
  MembershipOp op = MembershipOp::leave;
  UserId user;

  friend bool operator==(const MembershipEvent&, const MembershipEvent&) = default;
};

struct SimSettings {
  ThresholdFactor tf;
  EvalPointMode eval_mode = EvalPointMode::round_key;
  bool renewal = true;
  std::uint64_t ticks_per_epoch = 4;
  LeavePolicy leave_policy = LeavePolicy::abort_round;
};

struct DealingSummary {
  std::uint64_t epoch = 0;
  std::uint64_t round_id = 0;
  std::size_t threshold_root = 0;
  std::size_t users = 0;
};

struct EpochRow {
  std::uint64_t epoch = 0;
  std::map<std::string, std::size_t> messages;
  RenewalMessageCounts renewal;
  std::size_t active_nodes = 0;  // root server included
  std::size_t all_pairs_baseline = 0;
  std::vector<UserId> compromised;
  std::vector<ClaimRecord> claims;
  std::vector<Verdict> verdicts;
  std::vector<UserId> cleansed;
  std::vector<UserId> discarded;
  std::vector<std::string> membership;
  bool adversary_closure = false;
  bool secret_intact = false;
  std::vector<std::string> violations;
};

struct SimReport {
  std::vector<DealingSummary> dealings;
  std::vector<EpochRow> epochs;
  bool final_adversary_closure = false;
  bool secret_recovered_by_adversary = false;
  bool reconstruction_correct = false;
  std::vector<std::string> invariant_violations;
};

/// Complete simulation state. Advanced only by deal() and step_epoch(); at
/// every epoch boundary the network log is empty and the fields describe
/// everything (snapshots). The first step_epoch() deals round 1.
struct World {
  SimSettings settings;
  std::shared_ptr<const Curve> curve;
  FieldRef field;
  HierarchyTree tree;
  std::optional<RoundState> round;
  DealerState dealer;
  ShareMap shares;
  std::uint64_t epoch = 0;
  Rng rng;
  Network net;
  AdversaryState adversary;
  std::vector<MembershipEvent> events;
  SimReport report;

  World(SimSettings s, std::shared_ptr<const Curve> c, FieldRef f, HierarchyTree t, FieldElement secret, Rng r)
      : settings(s),
        curve(std::move(c)),
        field(std::move(f)),
        tree(std::move(t)),
        dealer(std::move(secret)),
        rng(std::move(r)),
        net(s.ticks_per_epoch) {}

  const Curve* curve_ptr() const { return curve.get(); }
  std::uint64_t tick() const { return net.epoch_start(epoch); }
};

namespace detail {

inline void send_and_observe(World& w, UserId from, UserId to, Scope scope, MessageKind kind, bool sealed,
                             std::uint64_t phase, Payload payload) {
  const Envelope& env = w.net.send(from, to, scope, kind, sealed, w.net.phase_tick(w.epoch, phase), std::move(payload));
  adversary_observe(w.adversary, env);
}

inline std::set<UserId> share_holders(const World& w) {
  std::set<UserId> out;
  for (UserId id : w.tree.active_users()) {
    if (w.shares.contains(id)) out.insert(id);
  }
  return out;
}

/// Stolen shares that are still the owner's current share, one per owner.
inline std::vector<ShareRecord> live_stolen_shares(const World& w) {
  std::map<UserId, ShareRecord> live;
  for (const auto& stolen : w.adversary.stolen) {
    const auto current = w.shares.find(stolen.share.owner);
    if (current == w.shares.end()) continue;
    if (current->second.round_id == stolen.share.round_id && current->second.epoch == stolen.share.epoch) {
      live.insert_or_assign(stolen.share.owner, stolen.share);
    }
  }
  std::vector<ShareRecord> out;
  for (auto& [id, share] : live) out.push_back(std::move(share));
  return out;
}

inline bool adversary_can_reconstruct(const World& w) {
  const auto coalition = live_stolen_shares(w);
  return knowledge_closure(w.tree, coalition);
}

inline std::size_t group_threshold(const World& w, UserId member) {
  const auto it = w.shares.find(member);
  return it == w.shares.end() ? 0 : it->second.threshold;
}

/// Budget-respecting choice of this epoch's compromised nodes.
inline std::set<UserId> choose_compromise_set(World& w) {
  AdversaryState& adv = w.adversary;
  std::set<UserId> chosen;
  std::map<UserId, std::size_t> used;  // per sibling group (keyed by parent)
  auto group_of = [&](UserId id) { return w.tree.node(id).parent; };
  auto cap_of = [&](UserId id) { return adv.budget.cap(group_threshold(w, id)); };

  for (UserId id : adv.carried) {
    if (w.tree.contains(id)) ++used[group_of(id)];
  }

  if (adv.strategy == Strategy::scripted) {
    for (const auto& action : adv.script) {
      if (action.epoch != w.epoch || action.verb != ScriptVerb::compromise) continue;
      if (!w.tree.contains(action.node) || !w.tree.is_active(action.node) || action.node == kRootServer) continue;
      if (chosen.contains(action.node)) continue;
      const bool already_counted = adv.carried.contains(action.node);
      if (!already_counted && used[group_of(action.node)] >= cap_of(action.node)) {
        ++adv.budget_clipped;
        continue;
      }
      if (!already_counted) ++used[group_of(action.node)];
      chosen.insert(action.node);
    }
    return chosen;
  }

  std::vector<UserId> candidates;
  for (UserId id : w.tree.active_users()) {
    if (!w.shares.contains(id)) continue;
    if (!adv.targets.empty() && !adv.targets.contains(id)) continue;
    if (adv.strategy == Strategy::active_corruptor && w.tree.active_children(id).empty()) continue;
    if (adv.strategy == Strategy::false_claimer && w.tree.node(id).parent == kRootServer) continue;
    candidates.push_back(id);
  }

  // Stay on carried nodes first (no extra cost), then prefer nodes never
  // visited before so that a budget-unconstrained run accumulates fastest.
  std::vector<UserId> fresh, revisits;
  for (UserId id : candidates) {
    if (adv.carried.contains(id)) {
      chosen.insert(id);
    } else if (adv.ever_compromised.contains(id)) {
      revisits.push_back(id);
    } else {
      fresh.push_back(id);
    }
  }
  w.rng.shuffle(fresh);
  w.rng.shuffle(revisits);
  fresh.insert(fresh.end(), revisits.begin(), revisits.end());
  for (UserId id : fresh) {
    if (used[group_of(id)] >= cap_of(id)) continue;
    ++used[group_of(id)];
    chosen.insert(id);
  }
  return chosen;
}

/// Sibling groups in which this epoch's knowledge (nodes compromised now
/// plus shares carried over from the last renewal) exceeds the budget.
inline std::vector<UserId> groups_over_budget(const World& w) {
  std::set<UserId> knowledge = w.adversary.compromised;
  knowledge.insert(w.adversary.carried.begin(), w.adversary.carried.end());
  std::map<UserId, std::size_t> load;
  std::map<UserId, std::size_t> thresholds;
  for (UserId id : knowledge) {
    if (!w.tree.contains(id)) continue;
    const UserId group = w.tree.node(id).parent;
    ++load[group];
    thresholds[group] = std::max(thresholds[group], group_threshold(w, id));
  }
  std::vector<UserId> over;
  for (const auto& [group, count] : load) {
    if (count > w.adversary.budget.cap(thresholds[group])) over.push_back(group);
  }
  return over;
}

}  // namespace detail

/// Adversarial deviations for this epoch's renewal.
inline Interference adversary_act(const AdversaryState& adv, const World& w) {
  Interference out;
  switch (adv.strategy) {
    case Strategy::passive_stealer:
      break;
    case Strategy::active_corruptor:
      for (UserId id : adv.compromised) {
        if (!w.tree.active_children(id).empty()) out.tampering[id] = Tamper{TamperKind::delta, {}};
      }
      out.silenced = adv.compromised;
      break;
    case Strategy::false_claimer:
      for (UserId id : adv.compromised) {
        if (w.tree.node(id).parent != kRootServer) out.false_claimers.insert(id);
      }
      out.silenced = adv.compromised;
      break;
    case Strategy::scripted:
      for (const auto& action : adv.script) {
        if (action.epoch != w.epoch || !adv.compromised.contains(action.node)) continue;
        const std::set<UserId> targets(action.targets.begin(), action.targets.end());
        if (action.verb == ScriptVerb::tamper_delta) out.tampering[action.node] = Tamper{TamperKind::delta, targets};
        if (action.verb == ScriptVerb::tamper_commitment) {
          out.tampering[action.node] = Tamper{TamperKind::commitment, targets};
        }
        if (action.verb == ScriptVerb::false_claim) out.false_claimers.insert(action.node);
      }
      out.silenced = adv.compromised;
      break;
  }
  return out;
}

/// Runs round start and dealing for the current membership, sending the
/// request, round-key broadcast and sealed share deliveries.
inline DealingSummary deal(World& w) {
  DealingRound dealing = begin_dealing_round(w.tree, w.rng, w.settings.eval_mode);
  for (UserId id : w.tree.active_users()) {
    const auto& n = w.tree.node(id);
    detail::send_and_observe(w, id, kRootServer, Scope::unicast, MessageKind::request, false, 0,
                             RequestMessage{id, n.parent, w.tree.active_children(id).size()});
  }
  if (dealing.round.public_key) {
    detail::send_and_observe(w, kRootServer, kRootServer, Scope::broadcast, MessageKind::round_key_broadcast, false, 0,
                             *dealing.round.public_key);
  }
  w.shares = distribute(w.tree, w.dealer, dealing.round, w.settings.tf, w.settings.eval_mode, w.rng);
  for (const auto& [id, share] : w.shares) {
    detail::send_and_observe(w, kRootServer, id, Scope::unicast, MessageKind::share_delivery, true, 1, share);
  }
  w.round = std::move(dealing.round);
  w.adversary.carried.clear();
  DealingSummary summary{w.epoch, w.round->round_id, w.dealer.threshold_root(), w.shares.size()};
  w.report.dealings.push_back(summary);
  return summary;
}

/// Whether every currently active share holder together recovers D.
inline bool secret_intact(const World& w) {
  try {
    return reconstruct(w.tree, w.shares, detail::share_holders(w)) == w.dealer.secret;
  } catch (const Error&) {
    return false;
  }
}

/// Structural checks run after every epoch; returns the names of violated
/// invariants.
inline std::vector<std::string> check_invariants(const World& w) {
  std::vector<std::string> violations;
  const std::uint64_t start = w.net.epoch_start(w.epoch);
  const std::uint64_t end = start + w.net.ticks_per_epoch();
  for (const auto& env : w.net.log()) {
    if (env.delivered_tick < start || env.delivered_tick >= end || env.delivered_tick < env.sent_tick) {
      violations.push_back("within-epoch-delivery");
      break;
    }
  }
  for (const auto& [id, rtok] : w.adversary.stolen_rtoks) {
    if (!w.adversary.ever_compromised.contains(id)) {
      violations.push_back("oracle-leakage: rtok of uncompromised " + id.str());
    }
  }
  for (const auto& delta : w.adversary.observed_deltas) {
    if (!w.adversary.ever_compromised.contains(delta.to)) {
      violations.push_back("oracle-leakage: sealed delta of uncompromised " + delta.to.str());
      break;
    }
  }
  for (const auto& [id, share] : w.shares) {
    if (share.value.field() != w.field || share.eval_point.field() != w.field) {
      violations.push_back("single-share-field");
      break;
    }
  }
  if (w.round) {
    for (UserId id : w.tree.active_users()) {
      const auto it = w.shares.find(id);
      if (it != w.shares.end() && it->second.round_id != w.round->round_id) {
        violations.push_back("stale-round-share: " + id.str());
      }
    }
  }
  return violations;
}

/// One time period: membership events, adversary hop and theft, renewal
/// with detection, claim resolution and cleanse, then the report row.
inline void step_epoch(World& w) {
  EpochRow row;
  row.epoch = w.epoch;
  AdversaryState& adv = w.adversary;

  // Phase 0: first dealing, membership changes and the adversary's hop.
  if (!w.round) {
    const auto summary = deal(w);
    row.membership.push_back("round " + std::to_string(summary.round_id) + " dealt");
  }
  bool membership_changed = false;
  for (const auto& event : w.events) {
    if (event.epoch != w.epoch) continue;
    if (event.op == MembershipOp::leave) {
      if (!w.tree.contains(event.user) || !w.tree.is_active(event.user)) {
        row.membership.push_back("leave " + event.user.str() + " ignored: not an active member");
        continue;
      }
      detail::send_and_observe(w, event.user, kRootServer, Scope::broadcast, MessageKind::leave, false, 0, event.user);
      const auto gone = w.tree.leave(event.user);
      row.membership.push_back("leave " + event.user.str() + " deactivated " + std::to_string(gone.size()));
    } else {
      if (!w.tree.contains(event.user) || !w.tree.node(event.user).vacated) {
        row.membership.push_back("rejoin " + event.user.str() + " ignored: slot not vacated");
        continue;
      }
      const UserId fresh = w.tree.rejoin(event.user, w.rng);
      row.membership.push_back("rejoin " + event.user.str() + " as " + fresh.str());
    }
    membership_changed = true;
  }
  if (membership_changed && w.settings.leave_policy == LeavePolicy::abort_round) {
    const auto summary = deal(w);
    row.membership.push_back("round " + std::to_string(summary.round_id) + " dealt");
  }

  adv.compromised = detail::choose_compromise_set(w);
  adv.ever_compromised.insert(adv.compromised.begin(), adv.compromised.end());
  if (const auto over = detail::groups_over_budget(w); !over.empty()) {
    for (UserId group : over) row.violations.push_back("adversary-budget: group under " + group.str());
  }
  adv.carried.clear();
  for (UserId id : adv.compromised) {
    const auto& n = w.tree.node(id);
    if (const auto it = w.shares.find(id); it != w.shares.end()) adv.stolen.push_back({w.epoch, it->second});
    if (n.rtok) adv.stolen_rtoks.insert_or_assign(id, *n.rtok);
    if (n.round_key) adv.stolen_round_keys.insert_or_assign(id, *n.round_key);
  }
  row.compromised.assign(adv.compromised.begin(), adv.compromised.end());
  row.adversary_closure = detail::adversary_can_reconstruct(w);

  // Phase 1: the adversary plans; a passive stealer leaves before renewal.
  const Interference interference = adversary_act(adv, w);
  if (!adv.present_during_renewal()) adv.compromised.clear();

  // Phase 2-3: renewal, detection, claims.
  if (w.settings.renewal) {
    RenewalOutcome outcome = renewal_round(w.tree, w.curve_ptr(), w.shares, w.rng, interference);
    std::set<UserId> multicast_sent;
    for (const auto& bundle : outcome.delivered) {
      if (w.curve && multicast_sent.insert(bundle.from).second) {
        detail::send_and_observe(w, bundle.from, bundle.from, Scope::multicast, MessageKind::commitment_multicast, false,
                                 2, bundle.commitments);
      }
      RenewalBundle sealed = bundle;
      sealed.commitments.clear();
      detail::send_and_observe(w, bundle.from, bundle.to, Scope::unicast, MessageKind::renewal_delta, true, 2,
                               std::move(sealed));
    }
    for (const auto& claim : outcome.claims) {
      detail::send_and_observe(w, claim.claimer, kRootServer, Scope::unicast, MessageKind::claim, false, 3, claim);
    }
    w.shares = std::move(outcome.shares);

    // Present adversary reads the renewed state before any cleanse.
    for (UserId id : adv.compromised) {
      if (const auto it = w.shares.find(id); it != w.shares.end()) {
        adv.stolen.push_back({w.epoch + 1, it->second});
        adv.carried.insert(id);
      }
    }
    // A cleanse ends the adversary's presence, but the renewed share it
    // copied earlier in the epoch still counts against the next budget.
    for (UserId id : outcome.cleanse) {
      adv.compromised.erase(id);
      row.cleansed.push_back(id);
    }
    row.renewal = outcome.messages;
    row.claims = std::move(outcome.claims);
    row.verdicts = std::move(outcome.verdicts);
    row.discarded = std::move(outcome.discarded);
  } else {
    // Without renewal shares stay valid, so whatever a present adversary
    // holds carries straight over.
    adv.carried.insert(adv.compromised.begin(), adv.compromised.end());
  }

  for (const auto& [kind, count] : w.net.counts()) row.messages[std::string(to_string(kind))] = count;
  row.active_nodes = w.tree.active_users().size() + 1;
  row.all_pairs_baseline = all_pairs_renewal_messages(row.active_nodes);
  row.secret_intact = secret_intact(w);
  for (auto& v : check_invariants(w)) row.violations.push_back(std::move(v));
  w.report.invariant_violations.insert(w.report.invariant_violations.end(), row.violations.begin(), row.violations.end());
  w.report.epochs.push_back(std::move(row));

  // Epoch boundary: the adversary hops next epoch.
  adv.compromised.clear();
  ++w.epoch;
  w.net.begin_epoch();
}

/// Final reconstruction and adversary tallies after the last epoch.
inline void finish_run(World& w) {
  w.report.final_adversary_closure = detail::adversary_can_reconstruct(w);
  bool recovered = w.report.final_adversary_closure;
  for (const auto& row : w.report.epochs) recovered = recovered || row.adversary_closure;
  w.report.secret_recovered_by_adversary = recovered;
  w.report.reconstruction_correct = secret_intact(w);
}

}  // namespace hss
