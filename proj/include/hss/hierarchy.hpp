#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hss/algebra.hpp"
#include "hss/curve.hpp"
#include "hss/error.hpp"
#include "hss/rng.hpp"

namespace hss {

struct UserId {
  std::uint32_t value = 0;

  friend auto operator<=>(const UserId&, const UserId&) = default;
  std::string str() const { return value == 0 ? std::string("server") : "U" + std::to_string(value); }
};

/// The root server occupies id 0; users are numbered from 1.
inline constexpr UserId kRootServer{0};

struct HierarchyNode {
  UserId id;
  UserId parent;
  std::vector<UserId> children;
  std::size_t level = 0;
  std::optional<FieldElement> rtok;
  std::optional<CurvePoint> group_key;
  std::optional<CurvePoint> round_key;
  bool active = true;
  /// Set on the slot of a member that left; cleared when someone rejoins it.
  bool vacated = false;
};

struct Registration {
  UserId id;
  FieldElement rtok;
  std::optional<CurvePoint> group_key;
};

/// One distribution round's server key pair. The secret half is only ever
/// read by the server role.
struct RoundState {
  std::uint64_t round_id = 0;
  std::optional<FieldElement> server_secret;
  std::optional<CurvePoint> public_key;
  std::uint64_t membership_version = 0;
};

/// K^r = rtok * P_s, computed by the user.
inline CurvePoint derive_round_key_user(const Curve& curve, const HierarchyNode& node, const CurvePoint& server_public) {
  if (!node.active) {
    throw Error(ErrorCode::inactive_node, node.id.str() + " is not an active member");
  }
  if (!node.rtok) {
    throw Error(ErrorCode::invalid_params, node.id.str() + " holds no registration token");
  }
  return curve.multiply(*node.rtok, server_public);
}

/// K^r = s_s * K^g, computed by the server.
inline CurvePoint derive_round_key_server(const Curve& curve, const RoundState& round, const CurvePoint& group_key) {
  if (!round.server_secret) {
    throw Error(ErrorCode::invalid_params, "round secret is not available");
  }
  return curve.multiply(*round.server_secret, group_key);
}

/// Users under the root server. Mutated only by the simulation loop.
///
/// With a curve, registration tokens are scalars mod ord(G) and every
/// member's group key has an x-coordinate distinct from every other
/// registered member's. Without one (no-curve mode) tokens are drawn from the
/// standalone share field and no keys exist.
class HierarchyTree {
 public:
  HierarchyTree(std::shared_ptr<const Curve> curve, FieldRef scalars)
      : curve_(std::move(curve)), scalars_(curve_ ? curve_->scalar_field() : std::move(scalars)) {
    if (!scalars_) {
      throw Error(ErrorCode::invalid_params, "hierarchy needs a curve or a scalar field");
    }
    HierarchyNode root;
    root.id = kRootServer;
    root.parent = kRootServer;
    nodes_.emplace(kRootServer, std::move(root));
  }

  const std::shared_ptr<const Curve>& curve() const noexcept { return curve_; }
  const FieldRef& scalar_field() const noexcept { return scalars_; }

  Registration register_user(UserId parent, Rng& rng) {
    const HierarchyNode& parent_node = node(parent);
    if (!parent_node.active) {
      throw Error(ErrorCode::parent_inactive, parent.str() + " is not active");
    }
    if (next_id_ == UINT32_MAX) {
      throw Error(ErrorCode::tree_full, "user id space exhausted");
    }
    HierarchyNode fresh;
    fresh.id = UserId{next_id_};
    fresh.parent = parent;
    fresh.level = parent_node.level + 1;
    issue_token(fresh, rng);
    ++next_id_;

    const UserId id = fresh.id;
    nodes_.at(parent).children.push_back(id);
    Registration out{id, *fresh.rtok, fresh.group_key};
    nodes_.emplace(id, std::move(fresh));
    ++membership_version_;
    return out;
  }

  /// Starts a distribution round with a fresh server secret and hands P_s to
  /// every active member, which derives its round key.
  RoundState begin_round(Rng& rng) {
    return begin_round_with_secret(rng.uniform_between(1, scalars_->modulus - 1));
  }

  RoundState begin_round_with_secret(const BigInt& secret) {
    if (active_users().empty()) {
      throw Error(ErrorCode::empty_hierarchy, "no active members to run a round with");
    }
    RoundState round;
    round.round_id = ++rounds_started_;
    round.server_secret = FieldElement(scalars_, secret);
    round.membership_version = membership_version_;
    if (curve_) {
      round.public_key = curve_->multiply_generator(*round.server_secret);
    }
    for (auto& [id, n] : nodes_) {
      n.round_key.reset();
      if (id == kRootServer || !n.active || !curve_) continue;
      n.round_key = derive_round_key_user(*curve_, n, *round.public_key);
    }
    return round;
  }

  /// Marks the member and its whole subtree inactive and drops the member's
  /// group key at the server. Returns every node that became inactive.
  std::vector<UserId> leave(UserId id) {
    HierarchyNode& leaving = mutable_node(id);
    if (id == kRootServer) {
      throw Error(ErrorCode::invalid_params, "the root server cannot leave");
    }
    if (!leaving.active) {
      throw Error(ErrorCode::already_inactive, id.str() + " is already inactive");
    }
    std::vector<UserId> deactivated;
    leaving.vacated = true;
    leaving.rtok.reset();
    leaving.group_key.reset();
    leaving.round_key.reset();
    server_group_keys_.erase(id);
    set_subtree_active(id, false, deactivated);
    ++membership_version_;
    return deactivated;
  }

  /// Registers a new member into a slot vacated by leave(); the orphaned
  /// subtree becomes active again (except below other vacated slots).
  UserId rejoin(UserId position, Rng& rng) {
    const auto it = nodes_.find(position);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_user, position.str() + " does not exist");
    }
    if (!it->second.vacated) {
      throw Error(ErrorCode::position_occupied, position.str() + " is occupied");
    }
    const HierarchyNode& parent_node = node(it->second.parent);
    if (!parent_node.active) {
      throw Error(ErrorCode::parent_inactive, "parent of " + position.str() + " is not active");
    }

    HierarchyNode fresh;
    fresh.id = UserId{next_id_};
    fresh.parent = it->second.parent;
    fresh.level = it->second.level;
    fresh.children = it->second.children;
    issue_token(fresh, rng);
    ++next_id_;
    const UserId id = fresh.id;

    for (auto& child : mutable_node(fresh.parent).children) {
      if (child == position) child = id;
    }
    for (UserId child : fresh.children) mutable_node(child).parent = id;
    nodes_.erase(it);
    nodes_.emplace(id, std::move(fresh));

    std::vector<UserId> reactivated;
    set_subtree_active(id, true, reactivated);
    ++membership_version_;
    return id;
  }

  const HierarchyNode& node(UserId id) const {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_user, id.str() + " does not exist");
    }
    return it->second;
  }

  bool contains(UserId id) const { return nodes_.contains(id); }
  bool is_active(UserId id) const { return node(id).active; }
  std::size_t level(UserId id) const { return node(id).level; }

  std::vector<UserId> active_children(UserId id) const {
    std::vector<UserId> out;
    for (UserId child : node(id).children) {
      if (node(child).active) out.push_back(child);
    }
    return out;
  }

  /// Active users (root excluded) in level order, siblings in insertion order.
  std::vector<UserId> active_users() const {
    std::vector<UserId> out;
    std::deque<UserId> queue{kRootServer};
    while (!queue.empty()) {
      const UserId id = queue.front();
      queue.pop_front();
      for (UserId child : node(id).children) {
        if (!node(child).active) continue;
        out.push_back(child);
        queue.push_back(child);
      }
    }
    return out;
  }

  const std::map<UserId, HierarchyNode>& nodes() const noexcept { return nodes_; }
  const std::map<UserId, CurvePoint>& server_group_keys() const noexcept { return server_group_keys_; }
  std::uint32_t next_id() const noexcept { return next_id_; }
  std::uint64_t membership_version() const noexcept { return membership_version_; }
  std::uint64_t rounds_started() const noexcept { return rounds_started_; }

  /// Rebuilds a tree from previously captured state (snapshot loading).
  static HierarchyTree restore(std::shared_ptr<const Curve> curve, FieldRef scalars, std::map<UserId, HierarchyNode> nodes,
                               std::map<UserId, CurvePoint> server_keys, std::uint32_t next_id,
                               std::uint64_t membership_version, std::uint64_t rounds_started) {
    HierarchyTree tree(std::move(curve), std::move(scalars));
    if (!nodes.contains(kRootServer)) {
      throw Error(ErrorCode::corrupt_snapshot, "hierarchy state has no root");
    }
    tree.nodes_ = std::move(nodes);
    tree.server_group_keys_ = std::move(server_keys);
    tree.next_id_ = next_id;
    tree.membership_version_ = membership_version;
    tree.rounds_started_ = rounds_started;
    return tree;
  }

 private:
  static constexpr int kTokenAttempts = 256;

  HierarchyNode& mutable_node(UserId id) {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_user, id.str() + " does not exist");
    }
    return it->second;
  }

  // Token transport is out of band: the value is written straight into the
  // node and the server's key table.
  void issue_token(HierarchyNode& fresh, Rng& rng) {
    const BigInt& order = scalars_->modulus;
    for (int attempt = 0; attempt < kTokenAttempts; ++attempt) {
      FieldElement rtok(scalars_, rng.uniform_between(1, order - 1));
      if (!curve_) {
        fresh.rtok = std::move(rtok);
        return;
      }
      CurvePoint key = curve_->multiply_generator(rtok);
      if (x_coordinate_taken(key)) continue;
      fresh.rtok = std::move(rtok);
      fresh.group_key = key;
      server_group_keys_[fresh.id] = std::move(key);
      return;
    }
    throw Error(ErrorCode::tree_full, "no unused group-key x-coordinate found on curve " + curve_->params().name);
  }

  bool x_coordinate_taken(const CurvePoint& key) const {
    if (key.is_identity()) return true;
    for (const auto& [id, existing] : server_group_keys_) {
      if (existing.x() == key.x()) return true;
    }
    return false;
  }

  void set_subtree_active(UserId top, bool active, std::vector<UserId>& changed) {
    std::deque<UserId> queue{top};
    while (!queue.empty()) {
      const UserId id = queue.front();
      queue.pop_front();
      HierarchyNode& n = mutable_node(id);
      if (active && n.vacated) continue;
      if (n.active != active) {
        n.active = active;
        changed.push_back(id);
      }
      for (UserId child : n.children) queue.push_back(child);
    }
  }

  std::shared_ptr<const Curve> curve_;
  FieldRef scalars_;
  std::map<UserId, HierarchyNode> nodes_;
  std::map<UserId, CurvePoint> server_group_keys_;
  std::uint32_t next_id_ = 1;
  std::uint64_t membership_version_ = 0;
  std::uint64_t rounds_started_ = 0;
};

}  // namespace hss
