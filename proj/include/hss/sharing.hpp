#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hss/algebra.hpp"
#include "hss/error.hpp"
#include "hss/hierarchy.hpp"
#include "hss/rng.hpp"

namespace hss {

/// Exact rational in (0, 1]; a group of n needs ceil(TF * n) members.
struct ThresholdFactor {
  std::uint64_t numerator = 1;
  std::uint64_t denominator = 1;

  static ThresholdFactor make(std::uint64_t numerator, std::uint64_t denominator) {
    if (numerator == 0 || denominator == 0 || numerator > denominator) {
      throw Error(ErrorCode::invalid_threshold_factor,
                  "TF must be in (0,1], got " + std::to_string(numerator) + "/" + std::to_string(denominator));
    }
    return {numerator, denominator};
  }

  std::string str() const { return std::to_string(numerator) + "/" + std::to_string(denominator); }

  friend bool operator==(const ThresholdFactor&, const ThresholdFactor&) = default;
};

inline std::size_t compute_threshold(const ThresholdFactor& tf, std::size_t group_size) {
  if (group_size == 0) {
    throw Error(ErrorCode::invalid_params, "threshold of an empty group");
  }
  const BigInt scaled = BigInt(tf.numerator) * group_size;
  return static_cast<std::size_t>(((scaled + tf.denominator - 1) / tf.denominator).convert_to<std::uint64_t>());
}

struct SplitParts {
  FieldElement kept;      // goes to the user as its share
  FieldElement retained;  // stays with the server, seeds the children's polynomial
};

/// I = kept + retained with both parts nonzero; kept is uniform over the
/// admissible values.
inline SplitParts split(const FieldElement& value, Rng& rng) {
  const BigInt& p = value.modulus();
  for (;;) {
    FieldElement kept(value.field(), rng.uniform_between(1, p - 1));
    FieldElement retained = value - kept;
    if (!retained.is_zero()) return {std::move(kept), std::move(retained)};
  }
}

enum class EvalPointMode { round_key, user_id };

struct ShareRecord {
  UserId owner;
  FieldElement eval_point;
  FieldElement value;
  /// Threshold of the sibling group the owner belongs to.
  std::size_t threshold = 1;
  /// Threshold of the owner's own children group when the owner's value was
  /// split at dealing; empty for leaves.
  std::optional<std::size_t> children_threshold;
  std::uint64_t round_id = 0;
  std::uint64_t epoch = 0;

  friend bool operator==(const ShareRecord&, const ShareRecord&) = default;
};

using ShareMap = std::map<UserId, ShareRecord>;

/// Server-side dealing state. retained and polynomials are keyed by the
/// internal node they belong to; the root server's polynomial is keyed by
/// kRootServer and has the secret as free coefficient.
struct DealerState {
  FieldElement secret;
  std::map<UserId, FieldElement> retained;
  std::map<UserId, Polynomial> polynomials;
  std::map<UserId, std::size_t> group_thresholds;

  explicit DealerState(FieldElement d) : secret(std::move(d)) {}

  std::size_t threshold_root() const {
    const auto it = group_thresholds.find(kRootServer);
    return it == group_thresholds.end() ? 0 : it->second;
  }
};

/// Evaluation point of every active user for one round. In round-key mode
/// the point is x(K^r) mod ord(G), computed server-side as s_s * K^g.
inline std::map<UserId, FieldElement> assign_eval_points(const HierarchyTree& tree, const RoundState& round,
                                                         EvalPointMode mode) {
  std::map<UserId, FieldElement> points;
  const FieldRef& field = tree.scalar_field();
  for (UserId id : tree.active_users()) {
    if (mode == EvalPointMode::user_id) {
      points.emplace(id, FieldElement(field, id.value));
      continue;
    }
    if (!tree.curve()) {
      throw Error(ErrorCode::invalid_params, "round-key evaluation points need a curve");
    }
    const auto key = tree.server_group_keys().find(id);
    if (key == tree.server_group_keys().end()) {
      throw Error(ErrorCode::unknown_user, "server holds no group key for " + id.str());
    }
    const CurvePoint round_key = derive_round_key_server(*tree.curve(), round, key->second);
    if (round_key.is_identity()) {
      throw Error(ErrorCode::eval_point_collision, "round key of " + id.str() + " is the identity");
    }
    points.emplace(id, FieldElement(field, round_key.x()));
  }

  for (const auto& [id, point] : points) {
    if (point.is_zero()) {
      throw Error(ErrorCode::eval_point_collision, "evaluation point of " + id.str() + " is zero");
    }
  }
  for (const auto& [id, n] : tree.nodes()) {
    if (!n.active) continue;
    const auto kids = tree.active_children(id);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (points.at(kids[i]) == points.at(kids[j])) {
          throw Error(ErrorCode::eval_point_collision,
                      "siblings " + kids[j].str() + " and " + kids[i].str() + " share an evaluation point");
        }
      }
    }
  }
  return points;
}

struct DealingRound {
  RoundState round;
  std::map<UserId, FieldElement> eval_points;
};

/// begin_round, re-drawn until the round keys give usable evaluation points.
inline DealingRound begin_dealing_round(HierarchyTree& tree, Rng& rng, EvalPointMode mode, int max_attempts = 32) {
  for (int attempt = 1;; ++attempt) {
    RoundState round = tree.begin_round(rng);
    try {
      auto points = assign_eval_points(tree, round, mode);
      return {std::move(round), std::move(points)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::eval_point_collision || mode == EvalPointMode::user_id || attempt >= max_attempts) {
        throw;
      }
    }
  }
}

/// Top-down share computation and delegation for one round.
///
/// Level-1 users get evaluations of the root polynomial (free coefficient D,
/// degree ceil(TF * #level-1) - 1). A leaf keeps its evaluation whole; an
/// internal node's evaluation is split into the node's share D_i and a part
/// D'_i kept at the server, and D'_i becomes the free coefficient of the
/// polynomial its children are evaluated on.
inline ShareMap distribute(const HierarchyTree& tree, DealerState& dealer, const RoundState& round,
                           const ThresholdFactor& tf, EvalPointMode mode, Rng& rng) {
  if (round.membership_version != tree.membership_version()) {
    throw Error(ErrorCode::inactive_subtree, "membership changed since round " + std::to_string(round.round_id) +
                                                 " began; the round must be restarted");
  }
  if (!same_field(dealer.secret.field(), tree.scalar_field())) {
    throw Error(ErrorCode::field_mismatch, "secret is not in the hierarchy's share field");
  }
  const auto eval_points = assign_eval_points(tree, round, mode);
  const auto level_one = tree.active_children(kRootServer);
  if (level_one.empty()) {
    throw Error(ErrorCode::empty_hierarchy, "no active level-1 users");
  }

  dealer.retained.clear();
  dealer.polynomials.clear();
  dealer.group_thresholds.clear();

  const std::size_t threshold_root = compute_threshold(tf, level_one.size());
  dealer.group_thresholds[kRootServer] = threshold_root;
  dealer.polynomials.emplace(kRootServer, sample_polynomial(rng, threshold_root - 1, dealer.secret));

  ShareMap shares;
  for (UserId id : tree.active_users()) {
    const UserId parent = tree.node(id).parent;
    const FieldElement& eval = eval_points.at(id);
    FieldElement evaluation = poly_eval(dealer.polynomials.at(parent), eval);
    ShareRecord record{id, eval, evaluation, dealer.group_thresholds.at(parent), std::nullopt, round.round_id, 0};

    const auto kids = tree.active_children(id);
    if (!kids.empty()) {
      auto [kept, retained] = split(evaluation, rng);
      const std::size_t threshold = compute_threshold(tf, kids.size());
      dealer.group_thresholds[id] = threshold;
      dealer.polynomials.emplace(id, sample_polynomial(rng, threshold - 1, retained));
      dealer.retained.emplace(id, std::move(retained));
      record.value = std::move(kept);
      record.children_threshold = threshold;
    }
    shares.emplace(id, std::move(record));
  }
  return shares;
}

/// Raised when some sibling group on the path to the requested value has
/// fewer usable shares than its threshold. group() is the parent of that
/// group (kRootServer for the level-1 group).
class InsufficientShares : public Error {
 public:
  InsufficientShares(UserId group, std::size_t have, std::size_t need)
      : Error(ErrorCode::insufficient_shares, "sibling group under " + group.str() + " has " + std::to_string(have) +
                                                  " of " + std::to_string(need) + " required shares"),
        group_(group),
        have_(have),
        need_(need) {}

  UserId group() const noexcept { return group_; }
  std::size_t have() const noexcept { return have_; }
  std::size_t need() const noexcept { return need_; }

 private:
  UserId group_;
  std::size_t have_;
  std::size_t need_;
};

namespace detail {

class BottomUpRecovery {
 public:
  BottomUpRecovery(const HierarchyTree& tree, const ShareMap& shares, const std::set<UserId>& participating)
      : tree_(tree), shares_(shares), participating_(participating) {
    for (UserId id : participating_) {
      if (!tree_.contains(id) || !tree_.is_active(id)) {
        throw Error(ErrorCode::inactive_subtree, id.str() + " cannot participate: not an active member");
      }
    }
  }

  /// q_parent(eval_id) for a user, or nullopt when the subtree below it
  /// cannot supply the missing part.
  std::optional<FieldElement> value_of(UserId id) {
    if (!participating_.contains(id)) return std::nullopt;
    const auto it = shares_.find(id);
    if (it == shares_.end()) return std::nullopt;
    const ShareRecord& share = it->second;
    if (!share.children_threshold) return share.value;
    auto retained = group_value(id, *share.children_threshold);
    if (!retained) return std::nullopt;
    return share.value + *retained;
  }

  /// Interpolates the free coefficient of the polynomial node's children
  /// were evaluated on.
  std::optional<FieldElement> group_value(UserId node, std::size_t threshold) {
    std::vector<InterpolationPoint> points;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> version;
    for (UserId child : tree_.node(node).children) {
      auto value = value_of(child);
      if (!value) continue;
      const ShareRecord& share = shares_.at(child);
      const std::pair<std::uint64_t, std::uint64_t> v{share.round_id, share.epoch};
      if (version && *version != v) {
        throw Error(ErrorCode::stale_epoch, "sibling group under " + node.str() + " mixes shares from epochs " +
                                                std::to_string(version->second) + " and " + std::to_string(v.second));
      }
      version = v;
      points.push_back({share.eval_point, std::move(*value)});
    }
    if (points.size() < threshold) {
      if (!shortfall_) shortfall_.emplace(node, points.size(), threshold);
      return std::nullopt;
    }
    points.erase(points.begin() + static_cast<std::ptrdiff_t>(threshold), points.end());
    return lagrange_at_zero(points);
  }

  [[noreturn]] void raise_shortfall(UserId fallback, std::size_t need) const {
    if (shortfall_) throw *shortfall_;
    throw InsufficientShares(fallback, 0, need);
  }

 private:
  const HierarchyTree& tree_;
  const ShareMap& shares_;
  const std::set<UserId>& participating_;
  std::optional<InsufficientShares> shortfall_;
};

inline std::size_t group_threshold_from_shares(const HierarchyTree& tree, const ShareMap& shares, UserId node) {
  if (node != kRootServer) {
    const auto it = shares.find(node);
    if (it == shares.end() || !it->second.children_threshold) {
      throw Error(ErrorCode::invalid_params, node.str() + " holds no split share");
    }
    return *it->second.children_threshold;
  }
  for (UserId child : tree.node(kRootServer).children) {
    const auto it = shares.find(child);
    if (it != shares.end()) return it->second.threshold;
  }
  throw InsufficientShares(kRootServer, 0, 1);
}

}  // namespace detail

/// Recovers the value a node's children collectively hold: D'_node for an
/// internal user, D for the root server. Children cooperate bottom-up; each
/// internal participant adds its own share to what its children recover.
inline FieldElement recover_group_value(const HierarchyTree& tree, const ShareMap& shares,
                                        const std::set<UserId>& participating, UserId node) {
  const std::size_t threshold = detail::group_threshold_from_shares(tree, shares, node);
  detail::BottomUpRecovery recovery(tree, shares, participating);
  auto value = recovery.group_value(node, threshold);
  if (!value) recovery.raise_shortfall(node, threshold);
  return *value;
}

inline FieldElement reconstruct(const HierarchyTree& tree, const ShareMap& shares,
                                const std::set<UserId>& participating) {
  return recover_group_value(tree, shares, participating, kRootServer);
}

/// Whether the holders of `coalition` can derive D without any
/// server-retained value: D'_i is derivable from threshold_i derivable child
/// values, a node's value from its share plus D'_i, and D from threshold_root
/// derivable level-1 values. Shares of one sibling group must come from a
/// single epoch.
inline bool knowledge_closure(const HierarchyTree& tree, std::span<const ShareRecord> coalition) {
  std::map<UserId, const ShareRecord*> held;
  std::map<UserId, std::pair<std::uint64_t, std::uint64_t>> group_version;
  for (const ShareRecord& share : coalition) {
    if (!tree.contains(share.owner)) continue;
    const std::pair<std::uint64_t, std::uint64_t> version{share.round_id, share.epoch};
    const UserId parent = tree.node(share.owner).parent;
    const auto [slot, fresh] = group_version.emplace(parent, version);
    if (!fresh && slot->second != version) {
      throw Error(ErrorCode::mixed_epochs, "coalition mixes epochs within the sibling group under " + parent.str());
    }
    const auto [existing, inserted] = held.emplace(share.owner, &share);
    if (!inserted && !(*existing->second == share)) {
      throw Error(ErrorCode::mixed_epochs, "coalition holds two different shares of " + share.owner.str());
    }
  }

  std::set<UserId> known;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [id, share] : held) {
      if (known.contains(id)) continue;
      bool derivable = !share->children_threshold;
      if (!derivable) {
        std::size_t count = 0;
        for (UserId child : tree.node(id).children) count += known.contains(child) ? 1 : 0;
        derivable = count >= *share->children_threshold;
      }
      if (derivable) {
        known.insert(id);
        changed = true;
      }
    }
  }

  std::size_t level_one_known = 0;
  std::optional<std::size_t> threshold_root;
  for (UserId child : tree.node(kRootServer).children) {
    if (!known.contains(child)) continue;
    ++level_one_known;
    threshold_root = held.at(child)->threshold;
  }
  return threshold_root && level_one_known >= *threshold_root;
}

}  // namespace hss
