#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hss/hierarchy.hpp"

namespace hss {
namespace {

using testing::two_level_shape;
using testing::register_shape;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_params;
}

void expect_distinct_group_key_x(const HierarchyTree& tree) {
  std::set<BigInt> xs;
  for (const auto& [id, key] : tree.server_group_keys()) {
    ASSERT_FALSE(key.is_identity());
    ASSERT_TRUE(xs.insert(key.x()).second) << "duplicate x for " << id.str();
  }
}

TEST(Hierarchy, RegisterUnderRoot) {
  HierarchyTree tree(testing::toy(), nullptr);
  Rng rng(1);
  const auto reg = tree.register_user(kRootServer, rng);
  EXPECT_EQ(reg.id, UserId{1});
  EXPECT_EQ(tree.level(reg.id), 1u);
  EXPECT_EQ(tree.node(reg.id).parent, kRootServer);
  ASSERT_TRUE(reg.group_key);
  const Curve curve(toy_curve());
  EXPECT_EQ(*reg.group_key, curve.multiply_generator(reg.rtok));
  EXPECT_EQ(tree.server_group_keys().at(reg.id), *reg.group_key);
}

TEST(Hierarchy, TwoRegistrationsHaveDistinctX) {
  HierarchyTree tree(testing::toy(), nullptr);
  Rng rng(2);
  const auto a = tree.register_user(kRootServer, rng);
  const auto b = tree.register_user(a.id, rng);
  EXPECT_NE(a.group_key->x(), b.group_key->x());
  EXPECT_EQ(tree.level(b.id), 2u);
}

TEST(Hierarchy, RtokSequenceReproducible) {
  auto tokens = [](std::uint64_t seed) {
    HierarchyTree tree(testing::small(), nullptr);
    Rng rng(seed);
    std::vector<BigInt> out;
    for (int i = 0; i < 10; ++i) out.push_back(tree.register_user(kRootServer, rng).rtok.value());
    return out;
  };
  EXPECT_EQ(tokens(7), tokens(7));
  EXPECT_NE(tokens(7), tokens(8));
}

TEST(Hierarchy, ToyCurveRunsOutOfDistinctX) {
  // 18 nonzero points share 9 x-coordinates.
  HierarchyTree tree(testing::toy(), nullptr);
  Rng rng(3);
  for (int i = 0; i < 9; ++i) tree.register_user(kRootServer, rng);
  expect_distinct_group_key_x(tree);
  EXPECT_EQ(code_of([&] { tree.register_user(kRootServer, rng); }), ErrorCode::tree_full);
}

TEST(Hierarchy, RegisterUnderInactiveParentFails) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(4);
  const auto a = tree.register_user(kRootServer, rng);
  tree.leave(a.id);
  EXPECT_EQ(code_of([&] { tree.register_user(a.id, rng); }), ErrorCode::parent_inactive);
  EXPECT_EQ(code_of([&] { tree.register_user(UserId{99}, rng); }), ErrorCode::unknown_user);
}

TEST(Hierarchy, BeginRoundPublicKey) {
  HierarchyTree tree(testing::toy(), nullptr);
  Rng rng(5);
  tree.register_user(kRootServer, rng);
  const Curve curve(toy_curve());
  const RoundState r = tree.begin_round(rng);
  ASSERT_TRUE(r.public_key);
  EXPECT_TRUE(curve.contains(*r.public_key));
  EXPECT_EQ(*r.public_key, curve.multiply_generator(*r.server_secret));

  const RoundState one = tree.begin_round_with_secret(1);
  EXPECT_EQ(*one.public_key, curve.generator());
  EXPECT_EQ(one.round_id, r.round_id + 1);
}

TEST(Hierarchy, SuccessiveRoundsDrawDistinctSecrets) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(6);
  tree.register_user(kRootServer, rng);
  std::set<BigInt> secrets;
  for (int i = 0; i < 20; ++i) secrets.insert(tree.begin_round(rng).server_secret->value());
  EXPECT_EQ(secrets.size(), 20u);
}

TEST(Hierarchy, BeginRoundOnEmptyTreeFails) {
  HierarchyTree tree(testing::toy(), nullptr);
  Rng rng(7);
  EXPECT_EQ(code_of([&] { tree.begin_round(rng); }), ErrorCode::empty_hierarchy);
}

TEST(RoundKey, UserSideExamples) {
  const Curve curve(toy_curve());
  const auto& f = curve.scalar_field();
  HierarchyNode node;
  node.id = UserId{1};
  node.rtok = FieldElement(f, 1);
  const CurvePoint ps = curve.multiply(BigInt(2), curve.generator());
  EXPECT_EQ(derive_round_key_user(curve, node, ps), ps);

  node.rtok = FieldElement(f, 3);
  EXPECT_EQ(derive_round_key_user(curve, node, ps), curve.multiply(BigInt(6), curve.generator()));
  EXPECT_EQ(derive_round_key_user(curve, node, ps), CurvePoint(16, 13));

  node.active = false;
  EXPECT_EQ(code_of([&] { derive_round_key_user(curve, node, ps); }), ErrorCode::inactive_node);
}

TEST(RoundKey, ServerSideExamples) {
  const Curve curve(toy_curve());
  const auto& f = curve.scalar_field();
  RoundState round;
  round.server_secret = FieldElement(f, 1);
  const CurvePoint kg(10, 6);
  EXPECT_EQ(derive_round_key_server(curve, round, kg), kg);
  round.server_secret = FieldElement(f, 5);
  EXPECT_TRUE(derive_round_key_server(curve, round, CurvePoint::identity()).is_identity());
}

TEST(RoundKey, AgreementForRandomNodes) {
  for (auto curve : {testing::toy(), testing::small()}) {
    HierarchyTree tree(curve, nullptr);
    Rng rng(11);
    const std::size_t users = curve->params().name == "toy" ? 9 : 50;
    for (std::size_t i = 0; i < users; ++i) {
      const auto active = tree.active_users();
      const UserId parent = active.empty() ? kRootServer : active[rng.uniform_index(active.size())];
      tree.register_user(rng.uniform_index(3) == 0 ? kRootServer : parent, rng);
    }
    for (int round = 0; round < 3; ++round) {
      const RoundState r = tree.begin_round(rng);
      for (UserId id : tree.active_users()) {
        const auto& n = tree.node(id);
        const CurvePoint user_side = derive_round_key_user(*curve, n, *r.public_key);
        EXPECT_EQ(user_side, derive_round_key_server(*curve, r, tree.server_group_keys().at(id)));
        EXPECT_EQ(*n.round_key, user_side);
      }
    }
  }
}

TEST(Leave, LeafDeactivatesOnlyItself) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(12);
  register_shape(tree, two_level_shape(), rng);
  const auto gone = tree.leave(UserId{4});
  EXPECT_EQ(gone, std::vector<UserId>{UserId{4}});
  EXPECT_FALSE(tree.server_group_keys().contains(UserId{4}));
  EXPECT_TRUE(tree.is_active(UserId{1}));
}

TEST(Leave, InternalNodeWithThreeChildren) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(13);
  register_shape(tree, two_level_shape(), rng);
  auto gone = tree.leave(UserId{7});
  std::sort(gone.begin(), gone.end());
  EXPECT_EQ(gone, (std::vector<UserId>{UserId{7}, UserId{9}, UserId{10}, UserId{11}}));
}

TEST(Leave, WholeSubtreeInactive) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(14);
  register_shape(tree, two_level_shape(), rng);
  ASSERT_EQ(tree.active_users().size(), 14u);
  auto gone = tree.leave(UserId{2});
  std::sort(gone.begin(), gone.end());
  std::vector<UserId> expected{UserId{2}};
  for (std::uint32_t i = 7; i <= 14; ++i) expected.push_back(UserId{i});
  EXPECT_EQ(gone, expected);
  for (UserId id : expected) EXPECT_FALSE(tree.is_active(id));
  EXPECT_EQ(tree.active_users().size(), 5u);
  EXPECT_EQ(tree.server_group_keys().size(), 13u);
  EXPECT_EQ(code_of([&] { tree.leave(UserId{2}); }), ErrorCode::already_inactive);
  EXPECT_EQ(code_of([&] { tree.leave(UserId{8}); }), ErrorCode::already_inactive);
  EXPECT_EQ(code_of([&] { tree.leave(kRootServer); }), ErrorCode::invalid_params);
}

TEST(Rejoin, RestoresSubtreeWithFreshToken) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(15);
  register_shape(tree, two_level_shape(), rng);
  const FieldElement old_rtok = *tree.node(UserId{2}).rtok;
  tree.leave(UserId{2});
  const UserId fresh = tree.rejoin(UserId{2}, rng);
  EXPECT_EQ(fresh, UserId{15});
  EXPECT_FALSE(tree.contains(UserId{2}));
  EXPECT_EQ(tree.node(fresh).parent, kRootServer);
  EXPECT_EQ(tree.level(fresh), 1u);
  EXPECT_NE(*tree.node(fresh).rtok, old_rtok);
  EXPECT_EQ(tree.active_users().size(), 14u);
  for (std::uint32_t i = 7; i <= 8; ++i) EXPECT_EQ(tree.node(UserId{i}).parent, fresh);
  const auto top = tree.active_children(kRootServer);
  EXPECT_EQ(top, (std::vector<UserId>{UserId{1}, fresh, UserId{3}}));
  expect_distinct_group_key_x(tree);
}

TEST(Rejoin, Errors) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(16);
  register_shape(tree, two_level_shape(), rng);
  EXPECT_EQ(code_of([&] { tree.rejoin(UserId{2}, rng); }), ErrorCode::position_occupied);
  EXPECT_EQ(code_of([&] { tree.rejoin(UserId{77}, rng); }), ErrorCode::unknown_user);
  tree.leave(UserId{7});
  tree.leave(UserId{2});
  EXPECT_EQ(code_of([&] { tree.rejoin(UserId{7}, rng); }), ErrorCode::parent_inactive);
}

TEST(Rejoin, NestedVacancyStaysInactive) {
  HierarchyTree tree(testing::small(), nullptr);
  Rng rng(17);
  register_shape(tree, two_level_shape(), rng);
  tree.leave(UserId{7});
  tree.leave(UserId{2});
  const UserId fresh = tree.rejoin(UserId{2}, rng);
  EXPECT_TRUE(tree.is_active(fresh));
  EXPECT_TRUE(tree.is_active(UserId{8}));
  EXPECT_FALSE(tree.is_active(UserId{7}));
  EXPECT_FALSE(tree.is_active(UserId{9}));
  const UserId again = tree.rejoin(UserId{7}, rng);
  EXPECT_TRUE(tree.is_active(UserId{9}));
  EXPECT_EQ(tree.node(again).parent, fresh);
}

TEST(HierarchyProperties, RandomOperationSequences) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    HierarchyTree tree(testing::small(), nullptr);
    Rng rng(seed);
    std::vector<UserId> vacated;
    for (int step = 0; step < 120; ++step) {
      const auto active = tree.active_users();
      const std::size_t op = rng.uniform_index(10);
      if (op < 6 || active.empty()) {
        UserId parent = kRootServer;
        if (!active.empty() && rng.uniform_index(4) != 0) parent = active[rng.uniform_index(active.size())];
        tree.register_user(parent, rng);
      } else if (op < 8) {
        const UserId who = active[rng.uniform_index(active.size())];
        tree.leave(who);
        vacated.push_back(who);
      } else if (!vacated.empty()) {
        const std::size_t pick = rng.uniform_index(vacated.size());
        const UserId slot = vacated[pick];
        if (tree.contains(slot) && tree.is_active(tree.node(slot).parent)) {
          tree.rejoin(slot, rng);
          vacated.erase(vacated.begin() + static_cast<std::ptrdiff_t>(pick));
        }
      }

      expect_distinct_group_key_x(tree);
      for (const auto& [id, n] : tree.nodes()) {
        if (id == kRootServer) {
          ASSERT_EQ(n.level, 0u);
          continue;
        }
        ASSERT_EQ(n.level, tree.level(n.parent) + 1);
        const auto& siblings = tree.node(n.parent).children;
        ASSERT_NE(std::find(siblings.begin(), siblings.end(), id), siblings.end());
        if (n.active) {
          ASSERT_TRUE(tree.is_active(n.parent));
        }
        ASSERT_EQ(tree.server_group_keys().contains(id), !n.vacated);
      }
    }
  }
}

}  // namespace
}  // namespace hss
