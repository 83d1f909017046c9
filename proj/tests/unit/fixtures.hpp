#pragma once

// Shared tree builders for the unit tests.

#include <cstddef>
#include <deque>
#include <memory>
#include <utility>
#include <vector>

#include "hss/curve.hpp"
#include "hss/hierarchy.hpp"
#include "hss/rng.hpp"
#include "hss/sharing.hpp"

namespace hss::testing {

struct Shape {
  std::vector<Shape> children;
};

inline Shape leaf() { return {}; }

inline Shape full(std::size_t depth, std::size_t fanout) {
  Shape s;
  if (depth > 0) s.children.assign(fanout, full(depth - 1, fanout));
  return s;
}

/// Registers `top`'s subtrees under the root server in breadth-first order,
/// so users are numbered 1, 2, ... level by level.
inline void register_shape(HierarchyTree& tree, const std::vector<Shape>& top, Rng& rng) {
  std::deque<std::pair<UserId, const Shape*>> queue;
  for (const auto& s : top) queue.emplace_back(kRootServer, &s);
  while (!queue.empty()) {
    auto [parent, shape] = queue.front();
    queue.pop_front();
    const UserId id = tree.register_user(parent, rng).id;
    for (const auto& child : shape->children) queue.emplace_back(id, &child);
  }
}

/// Random shape with depth <= max_depth below the root and fanout in
/// [1, max_fanout] at the root, [0, max_fanout] elsewhere.
inline std::vector<Shape> random_shape(Rng& rng, std::size_t max_depth, std::size_t max_fanout) {
  auto grow = [&](auto&& self, std::size_t depth) -> Shape {
    Shape s;
    if (depth >= max_depth) return s;
    const std::size_t kids = rng.uniform_index(max_fanout + 1);
    for (std::size_t i = 0; i < kids; ++i) s.children.push_back(self(self, depth + 1));
    return s;
  };
  std::vector<Shape> top;
  const std::size_t roots = 1 + rng.uniform_index(max_fanout);
  for (std::size_t i = 0; i < roots; ++i) top.push_back(grow(grow, 1));
  return top;
}

/// Leave-example shape: U1 with leaves U4-U6, U2 with U7 (U9-U11) and U8
/// (U12-U14), U3 a leaf.
inline std::vector<Shape> two_level_shape() {
  Shape u1{{leaf(), leaf(), leaf()}};
  Shape u2{{Shape{{leaf(), leaf(), leaf()}}, Shape{{leaf(), leaf(), leaf()}}}};
  return {u1, u2, leaf()};
}

inline std::shared_ptr<const Curve> toy() { return std::make_shared<const Curve>(toy_curve()); }
inline std::shared_ptr<const Curve> small() { return std::make_shared<const Curve>(small_curve()); }

struct Dealt {
  HierarchyTree tree;
  DealerState dealer;
  RoundState round;
  ShareMap shares;
};

/// Registers `shape` and runs one dealing round for `secret`.
inline Dealt deal_shape(std::shared_ptr<const Curve> curve, FieldRef field, const std::vector<Shape>& shape,
                        const ThresholdFactor& tf, EvalPointMode mode, const BigInt& secret, Rng& rng) {
  HierarchyTree tree(std::move(curve), std::move(field));
  register_shape(tree, shape, rng);
  DealerState dealer(FieldElement(tree.scalar_field(), secret));
  DealingRound dealing = begin_dealing_round(tree, rng, mode);
  ShareMap shares = distribute(tree, dealer, dealing.round, tf, mode, rng);
  return {std::move(tree), std::move(dealer), std::move(dealing.round), std::move(shares)};
}

/// Full evaluation q_parent(eval) of a user: its share plus, for an internal
/// node, the part retained at the server.
inline FieldElement full_value(const Dealt& d, UserId id) {
  const ShareRecord& s = d.shares.at(id);
  const auto it = d.dealer.retained.find(id);
  return it == d.dealer.retained.end() ? s.value : s.value + it->second;
}

}  // namespace hss::testing
