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
#include "hss/curve.hpp"
#include "hss/error.hpp"
#include "hss/hierarchy.hpp"
#include "hss/rng.hpp"
#include "hss/sharing.hpp"

namespace hss {

/// What a subtree root sends one child for the next epoch: Delta(eval_j),
/// sealed to the child, plus the subtree-wide commitment set
/// Theta_h = Delta_h * G for h = 1..k.
struct RenewalBundle {
  UserId from;
  UserId to;
  std::uint64_t epoch = 0;
  FieldElement delta_eval;
  std::vector<CurvePoint> commitments;
};

struct RenewalDealing {
  /// Held by the subtree root only; free coefficient is zero.
  Polynomial delta;
  std::vector<RenewalBundle> bundles;
};

struct RenewalRecipient {
  UserId id;
  FieldElement eval_point;
};

/// Draws Delta of degree threshold - 1 with Delta(0) = 0 and prepares one
/// bundle per child for `next_epoch`. Without a curve the commitment list
/// stays empty (detection disabled).
inline RenewalDealing generate_renewal(const Curve* curve, UserId subtree_root,
                                       std::span<const RenewalRecipient> children, std::size_t threshold,
                                       std::uint64_t next_epoch, Rng& rng) {
  if (children.empty()) {
    throw Error(ErrorCode::no_children, subtree_root.str() + " has no children to renew");
  }
  if (threshold == 0) {
    throw Error(ErrorCode::invalid_params, "renewal threshold must be positive");
  }
  const FieldRef& field = children.front().eval_point.field();
  Polynomial delta = sample_polynomial(rng, threshold - 1, FieldElement::zero(field));

  std::vector<CurvePoint> commitments;
  if (curve) {
    const auto coeffs = delta.coefficients();
    for (std::size_t h = 1; h < coeffs.size(); ++h) {
      commitments.push_back(curve->multiply_generator(coeffs[h]));
    }
  }

  std::vector<RenewalBundle> bundles;
  bundles.reserve(children.size());
  for (const auto& child : children) {
    bundles.push_back({subtree_root, child.id, next_epoch, poly_eval(delta, child.eval_point), commitments});
  }
  return {std::move(delta), std::move(bundles)};
}

/// Checks Delta(j) * G == sum_h Theta_h * j^h. Exponents j^h are taken mod
/// ord(G). Without a curve detection is disabled and every bundle passes.
inline bool verify_renewal(const Curve* curve, const RenewalBundle& bundle, const FieldElement& eval_point) {
  if (!curve) return true;
  for (const auto& theta : bundle.commitments) {
    if (!curve->contains(theta)) return false;
  }
  const CurvePoint lhs = curve->multiply_generator(bundle.delta_eval);
  CurvePoint rhs = CurvePoint::identity();
  FieldElement power = eval_point;
  for (const auto& theta : bundle.commitments) {
    rhs = curve->add(rhs, curve->multiply(power, theta));
    power *= eval_point;
  }
  return lhs == rhs;
}

/// q(j)^{t+1} = q(j)^t + Delta(j). The bundle is re-verified here so an
/// unverified value can never be folded into a share.
inline ShareRecord apply_renewal(const Curve* curve, const ShareRecord& share, const RenewalBundle& bundle) {
  if (bundle.to != share.owner) {
    throw Error(ErrorCode::unverified_bundle, "bundle addressed to " + bundle.to.str() + ", share held by " +
                                                  share.owner.str());
  }
  if (bundle.epoch != share.epoch + 1) {
    throw Error(ErrorCode::epoch_skew, "bundle for epoch " + std::to_string(bundle.epoch) + " applied to a share at epoch " +
                                           std::to_string(share.epoch));
  }
  if (!verify_renewal(curve, bundle, share.eval_point)) {
    throw Error(ErrorCode::unverified_bundle, "renewal bundle for " + share.owner.str() + " failed verification");
  }
  ShareRecord renewed = share;
  renewed.value += bundle.delta_eval;
  renewed.epoch = bundle.epoch;
  return renewed;
}

struct ClaimRecord {
  UserId claimer;
  UserId accused;
  std::uint64_t epoch = 0;

  friend bool operator==(const ClaimRecord&, const ClaimRecord&) = default;
};

/// Honest children claim exactly when verification failed.
inline std::optional<ClaimRecord> file_claim(UserId child, UserId accused_parent, std::uint64_t epoch,
                                             bool verification_passed) {
  if (verification_passed) return std::nullopt;
  return ClaimRecord{child, accused_parent, epoch};
}

enum class VerdictOutcome { no_action, accused_compromised, claimers_compromised };

constexpr std::string_view to_string(VerdictOutcome outcome) {
  switch (outcome) {
    case VerdictOutcome::no_action: return "no-action";
    case VerdictOutcome::accused_compromised: return "accused-compromised";
    case VerdictOutcome::claimers_compromised: return "claimers-compromised";
  }
  return "unknown";
}

struct Verdict {
  std::uint64_t epoch = 0;
  UserId accused;
  VerdictOutcome outcome = VerdictOutcome::no_action;
  std::size_t supporting_claims = 0;
  std::vector<UserId> claimers;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// (n - k) rule over one parent's children: n children, threshold k + 1.
inline Verdict resolve_claims(std::span<const ClaimRecord> claims, std::size_t n, std::size_t k) {
  Verdict verdict;
  if (claims.empty()) return verdict;
  verdict.accused = claims.front().accused;
  verdict.epoch = claims.front().epoch;
  std::set<UserId> claimers;
  for (const auto& claim : claims) {
    if (claim.accused != verdict.accused || claim.epoch != verdict.epoch) {
      throw Error(ErrorCode::mixed_accused, "claims against different parents or epochs cannot be resolved together");
    }
    claimers.insert(claim.claimer);
  }
  verdict.claimers.assign(claimers.begin(), claimers.end());
  verdict.supporting_claims = claimers.size();
  const std::size_t trusted = n > k ? n - k : 0;
  verdict.outcome = verdict.supporting_claims >= trusted ? VerdictOutcome::accused_compromised
                                                         : VerdictOutcome::claimers_compromised;
  return verdict;
}

enum class TamperKind { delta, commitment };

struct Tamper {
  TamperKind kind = TamperKind::delta;
  /// Children whose bundles are altered; empty means all of them. Ignored
  /// for commitment tampering, which is multicast to the whole subtree.
  std::set<UserId> targets;
};

/// Adversarial deviations injected into one renewal round.
struct Interference {
  std::map<UserId, Tamper> tampering;
  /// Children that file a claim against their parent whatever the outcome.
  std::set<UserId> false_claimers;
  /// Adversary-controlled nodes that never file honest claims.
  std::set<UserId> silenced;
};

struct RenewalMessageCounts {
  std::size_t sealed_deltas = 0;
  std::size_t commitment_multicasts = 0;
  std::size_t claims = 0;

  std::size_t renewal_total() const { return sealed_deltas + commitment_multicasts; }
};

struct RenewalOutcome {
  ShareMap shares;
  std::vector<ClaimRecord> claims;
  std::vector<Verdict> verdicts;
  RenewalMessageCounts messages;
  /// Every bundle as delivered (after any tampering), in send order.
  std::vector<RenewalBundle> delivered;
  /// Subtree roots whose renewal was discarded because some child's bundle
  /// failed verification.
  std::vector<UserId> discarded;
  /// Nodes an administrator must clean up as a result of the verdicts.
  std::vector<UserId> cleanse;
};

/// Subtree roots that renew this round: active nodes (root server included)
/// with at least one active, share-holding child. Level order.
inline std::vector<UserId> renewal_subtrees(const HierarchyTree& tree, const ShareMap& shares) {
  std::vector<UserId> roots;
  std::vector<UserId> order{kRootServer};
  for (UserId id : tree.active_users()) order.push_back(id);
  for (UserId id : order) {
    for (UserId child : tree.active_children(id)) {
      if (shares.contains(child)) {
        roots.push_back(id);
        break;
      }
    }
  }
  return roots;
}

/// One renewal epoch across every 2-leveled subtree: generate, verify, apply,
/// claim, resolve. A subtree's renewal is committed only if all its
/// children's bundles verified; otherwise all its children keep their
/// current shares. `order` optionally fixes the subtree processing order.
inline RenewalOutcome renewal_round(const HierarchyTree& tree, const Curve* curve, const ShareMap& shares, Rng& rng,
                                    const Interference& interference = {},
                                    std::optional<std::span<const UserId>> order = std::nullopt) {
  RenewalOutcome out;
  out.shares = shares;
  std::vector<UserId> subtrees = order ? std::vector<UserId>(order->begin(), order->end())
                                       : renewal_subtrees(tree, shares);

  for (UserId root : subtrees) {
    std::vector<RenewalRecipient> recipients;
    std::size_t threshold = 0;
    std::optional<std::uint64_t> epoch;
    for (UserId child : tree.active_children(root)) {
      const auto it = shares.find(child);
      if (it == shares.end()) continue;
      recipients.push_back({child, it->second.eval_point});
      threshold = it->second.threshold;
      if (epoch && *epoch != it->second.epoch) {
        throw Error(ErrorCode::stale_epoch, "children of " + root.str() + " are at different epochs");
      }
      epoch = it->second.epoch;
    }
    if (recipients.empty()) continue;

    RenewalDealing dealing = generate_renewal(curve, root, recipients, threshold, *epoch + 1, rng);
    if (const auto tamper = interference.tampering.find(root); tamper != interference.tampering.end()) {
      for (auto& bundle : dealing.bundles) {
        if (tamper->second.kind == TamperKind::delta) {
          if (tamper->second.targets.empty() || tamper->second.targets.contains(bundle.to)) {
            bundle.delta_eval += FieldElement(bundle.delta_eval.field(), rng.uniform_between(1, bundle.delta_eval.modulus() - 1));
          }
        }
      }
      if (tamper->second.kind == TamperKind::commitment && curve) {
        // Shift Theta_1 by a nonzero multiple of G, or publish one when k = 0.
        const CurvePoint shift = curve->multiply_generator(
            FieldElement(curve->scalar_field(), rng.uniform_between(1, curve->order() - 1)));
        for (auto& bundle : dealing.bundles) {
          if (bundle.commitments.empty()) {
            bundle.commitments.push_back(shift);
          } else {
            bundle.commitments.front() = curve->add(bundle.commitments.front(), shift);
          }
        }
      }
    }

    out.messages.sealed_deltas += dealing.bundles.size();
    if (curve) ++out.messages.commitment_multicasts;

    std::vector<ClaimRecord> claims;
    std::map<UserId, ShareRecord> renewed;
    bool all_verified = true;
    for (const auto& bundle : dealing.bundles) {
      const ShareRecord& current = shares.at(bundle.to);
      const bool ok = verify_renewal(curve, bundle, current.eval_point);
      if (ok) {
        renewed.emplace(bundle.to, apply_renewal(curve, current, bundle));
      } else {
        all_verified = false;
      }
      const bool controlled = interference.silenced.contains(bundle.to);
      std::optional<ClaimRecord> claim;
      if (interference.false_claimers.contains(bundle.to) && root != kRootServer) {
        claim = ClaimRecord{bundle.to, root, *epoch + 1};
      } else if (!controlled) {
        claim = file_claim(bundle.to, root, *epoch + 1, ok);
      }
      if (claim) claims.push_back(*claim);
      out.delivered.push_back(bundle);
    }

    if (all_verified) {
      for (auto& [id, share] : renewed) out.shares.at(id) = std::move(share);
    } else {
      out.discarded.push_back(root);
    }

    out.messages.claims += claims.size();
    if (!claims.empty()) {
      Verdict verdict = resolve_claims(claims, recipients.size(), threshold - 1);
      if (verdict.outcome == VerdictOutcome::accused_compromised) {
        out.cleanse.push_back(verdict.accused);
      } else if (verdict.outcome == VerdictOutcome::claimers_compromised) {
        out.cleanse.insert(out.cleanse.end(), verdict.claimers.begin(), verdict.claimers.end());
      }
      out.verdicts.push_back(std::move(verdict));
    }
    out.claims.insert(out.claims.end(), claims.begin(), claims.end());
  }
  return out;
}

/// Renewal messages the all-pairs scheme (every member sends every other
/// member a sub-share) needs for a group of n.
constexpr std::size_t all_pairs_renewal_messages(std::size_t n) { return n * (n - (n > 0 ? 1 : 0)); }

}  // namespace hss
