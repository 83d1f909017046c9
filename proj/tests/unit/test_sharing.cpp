#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hss/sharing.hpp"

namespace hss {
namespace {

using testing::Dealt;
using testing::deal_shape;
using testing::full;
using testing::full_value;
using testing::leaf;
using testing::Shape;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_params;
}

std::set<UserId> everyone(const Dealt& d) {
  const auto users = d.tree.active_users();
  return {users.begin(), users.end()};
}

// Each k-subset of `items`.
template <typename T, typename Visit>
void for_each_combination(const std::vector<T>& items, std::size_t k, Visit&& visit) {
  std::vector<T> current;
  auto rec = [&](auto&& self, std::size_t next) -> void {
    if (current.size() == k) {
      visit(current);
      return;
    }
    for (std::size_t i = next; i < items.size(); ++i) {
      current.push_back(items[i]);
      self(self, i + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
}

TEST(Threshold, Examples) {
  EXPECT_EQ(compute_threshold(ThresholdFactor::make(3, 10), 9), 3u);
  for (std::size_t n = 1; n < 20; ++n) EXPECT_EQ(compute_threshold(ThresholdFactor::make(1, 1), n), n);
  EXPECT_EQ(compute_threshold(ThresholdFactor::make(1, 2), 5), 3u);
  EXPECT_EQ(compute_threshold(ThresholdFactor::make(3, 7), 7), 3u);
  EXPECT_EQ(compute_threshold(ThresholdFactor::make(1, 3), 1), 1u);
}

TEST(Threshold, MatchesRationalCeilingOracle) {
  for (std::uint64_t den = 1; den <= 12; ++den) {
    for (std::uint64_t num = 1; num <= den; ++num) {
      for (std::size_t n = 1; n <= 40; ++n) {
        std::size_t expected = 0;
        while (expected * den < num * n) ++expected;  // smallest t with t >= num*n/den
        ASSERT_EQ(compute_threshold(ThresholdFactor::make(num, den), n), expected);
      }
    }
  }
}

TEST(Threshold, InvalidFactorRejected) {
  for (auto [num, den] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{{0, 1}, {2, 1}, {1, 0}}) {
    try {
      ThresholdFactor::make(num, den);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::invalid_threshold_factor);
      EXPECT_NE(std::string(e.what()).find("TF must be in (0,1]"), std::string::npos);
    }
  }
}

TEST(Split, Examples) {
  const auto f = make_field(19);
  Rng rng(1);
  for (long i : {10L, 0L}) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto [a, b] = split(FieldElement(f, i), rng);
      ASSERT_FALSE(a.is_zero());
      ASSERT_FALSE(b.is_zero());
      ASSERT_EQ(a + b, FieldElement(f, i));
    }
  }
  Rng x(5), y(5);
  const auto p = split(FieldElement(f, 10), x);
  const auto q = split(FieldElement(f, 10), y);
  EXPECT_EQ(p.kept, q.kept);
  EXPECT_EQ(p.retained, q.retained);
}

TEST(Split, KeptPartUniformOverAdmissibleValues) {
  const auto f = make_field(7);
  Rng rng(2);
  std::map<BigInt, int> counts;
  for (int i = 0; i < 6000; ++i) ++counts[split(FieldElement(f, 3), rng).kept.value()];
  // kept ranges over 1..6 minus 3 (which would leave retained = 0).
  ASSERT_EQ(counts.size(), 5u);
  EXPECT_FALSE(counts.contains(3));
  for (const auto& [v, n] : counts) EXPECT_NEAR(n, 1200, 120) << v;
}

TEST(Distribute, SingleChildUnanimity) {
  Rng rng(3);
  const auto d = deal_shape(nullptr, make_field(19), {leaf()}, ThresholdFactor::make(1, 1), EvalPointMode::user_id, 12, rng);
  ASSERT_EQ(d.shares.size(), 1u);
  EXPECT_EQ(d.shares.at(UserId{1}).value, FieldElement(d.tree.scalar_field(), 12));
  EXPECT_EQ(reconstruct(d.tree, d.shares, {UserId{1}}), FieldElement(d.tree.scalar_field(), 12));
}

TEST(Distribute, ThreeLevelToyTree) {
  Rng rng(4);
  const auto d = deal_shape(testing::toy(), nullptr, {full(1, 2), full(1, 2)}, ThresholdFactor::make(1, 2),
                            EvalPointMode::round_key, 11, rng);
  EXPECT_EQ(d.shares.size(), 6u);
  EXPECT_EQ(d.dealer.threshold_root(), 1u);
  EXPECT_EQ(reconstruct(d.tree, d.shares, everyone(d)), d.dealer.secret);
}

TEST(Distribute, StructuralClaims) {
  Rng rng(5);
  const auto d = deal_shape(testing::small(), nullptr, testing::two_level_shape(), ThresholdFactor::make(2, 3),
                            EvalPointMode::round_key, 777, rng);
  const FieldRef& field = d.tree.scalar_field();

  // One share per user, nothing for anybody else.
  const auto users = d.tree.active_users();
  ASSERT_EQ(d.shares.size(), users.size());
  for (UserId id : users) EXPECT_EQ(d.shares.at(id).owner, id);

  // A single field instance throughout.
  for (const auto& [id, s] : d.shares) {
    EXPECT_EQ(s.value.field(), field);
    EXPECT_EQ(s.eval_point.field(), field);
  }
  for (const auto& [id, q] : d.dealer.polynomials) {
    for (const auto& c : q.coefficients()) EXPECT_EQ(c.field(), field);
  }

  // Split conservation and delegation: D_i + D'_i = q_parent(eval_i) and
  // q_i(0) = D'_i; degrees follow the group thresholds.
  for (UserId id : users) {
    const auto& s = d.shares.at(id);
    const UserId parent = d.tree.node(id).parent;
    const FieldElement expected = poly_eval(d.dealer.polynomials.at(parent), s.eval_point);
    EXPECT_EQ(full_value(d, id), expected);
    EXPECT_EQ(s.threshold, d.dealer.group_thresholds.at(parent));
    if (d.tree.active_children(id).empty()) {
      EXPECT_FALSE(s.children_threshold);
      EXPECT_FALSE(d.dealer.retained.contains(id));
    } else {
      ASSERT_TRUE(s.children_threshold);
      EXPECT_FALSE(s.value.is_zero());
      EXPECT_FALSE(d.dealer.retained.at(id).is_zero());
      EXPECT_EQ(d.dealer.polynomials.at(id).coefficient(0), d.dealer.retained.at(id));
      EXPECT_EQ(d.dealer.polynomials.at(id).degree() + 1, *s.children_threshold);
    }
  }
  EXPECT_EQ(d.dealer.polynomials.at(kRootServer).coefficient(0), d.dealer.secret);
  EXPECT_EQ(d.dealer.threshold_root(), 2u);  // ceil(2/3 * 3)
}

TEST(Distribute, EvalPointsAreRoundKeyAbscissas) {
  Rng rng(6);
  const auto d = deal_shape(testing::small(), nullptr, {full(2, 3)}, ThresholdFactor::make(1, 2),
                            EvalPointMode::round_key, 5, rng);
  const Curve curve(small_curve());
  for (const auto& [id, s] : d.shares) {
    const CurvePoint kr = derive_round_key_server(curve, d.round, d.tree.server_group_keys().at(id));
    EXPECT_EQ(s.eval_point, FieldElement(d.tree.scalar_field(), kr.x()));
    EXPECT_EQ(*d.tree.node(id).round_key, kr);
  }
}

TEST(Distribute, MembershipChangeInvalidatesRound) {
  Rng rng(7);
  HierarchyTree tree(testing::small(), nullptr);
  testing::register_shape(tree, {full(1, 2), full(1, 2)}, rng);
  DealerState dealer(FieldElement(tree.scalar_field(), 9));
  const DealingRound dealing = begin_dealing_round(tree, rng, EvalPointMode::round_key);
  tree.leave(UserId{3});
  EXPECT_EQ(code_of([&] { distribute(tree, dealer, dealing.round, ThresholdFactor::make(1, 2), EvalPointMode::round_key, rng); }),
            ErrorCode::inactive_subtree);
}

TEST(Distribute, FieldMismatchRejected) {
  Rng rng(8);
  HierarchyTree tree(nullptr, make_field(19));
  tree.register_user(kRootServer, rng);
  DealerState dealer(FieldElement(make_field(31), 9));
  const DealingRound dealing = begin_dealing_round(tree, rng, EvalPointMode::user_id);
  EXPECT_EQ(code_of([&] { distribute(tree, dealer, dealing.round, ThresholdFactor::make(1, 2), EvalPointMode::user_id, rng); }),
            ErrorCode::field_mismatch);
}

TEST(Distribute, RoundKeyModeNeedsCurve) {
  Rng rng(9);
  HierarchyTree tree(nullptr, make_field(19));
  tree.register_user(kRootServer, rng);
  EXPECT_THROW(begin_dealing_round(tree, rng, EvalPointMode::round_key), Error);
}

TEST(Reconstruct, MinimalQuorumAndShortfall) {
  Rng rng(10);
  const auto d = deal_shape(testing::small(), nullptr, testing::two_level_shape(), ThresholdFactor::make(1, 2),
                            EvalPointMode::round_key, 4242, rng);
  // Thresholds: root group 3 -> 2; U1's 3 leaves -> 2; U2's 2 children -> 1;
  // U7 and U8 each 3 leaves -> 2.
  std::set<UserId> quorum{UserId{1}, UserId{4}, UserId{5}, UserId{2}, UserId{7}, UserId{9}, UserId{10}};
  EXPECT_EQ(reconstruct(d.tree, d.shares, quorum), d.dealer.secret);

  std::set<UserId> short_leaf = quorum;
  short_leaf.erase(UserId{10});
  try {
    reconstruct(d.tree, d.shares, short_leaf);
    FAIL();
  } catch (const InsufficientShares& e) {
    EXPECT_EQ(e.group(), UserId{7});
    EXPECT_EQ(e.have(), 1u);
    EXPECT_EQ(e.need(), 2u);
  }

  std::set<UserId> short_top{UserId{1}, UserId{4}, UserId{5}};
  try {
    reconstruct(d.tree, d.shares, short_top);
    FAIL();
  } catch (const InsufficientShares& e) {
    EXPECT_EQ(e.group(), kRootServer);
    EXPECT_EQ(e.need(), 2u);
  }
}

TEST(Reconstruct, InactiveParticipantRejected) {
  Rng rng(11);
  auto d = deal_shape(testing::small(), nullptr, {full(1, 2), full(1, 2)}, ThresholdFactor::make(1, 1),
                      EvalPointMode::round_key, 1, rng);
  const auto all = everyone(d);
  d.tree.leave(UserId{2});
  EXPECT_EQ(code_of([&] { reconstruct(d.tree, d.shares, all); }), ErrorCode::inactive_subtree);
}

TEST(Reconstruct, MixedEpochsInOneGroupRejected) {
  Rng rng(12);
  auto d = deal_shape(testing::small(), nullptr, {full(1, 3)}, ThresholdFactor::make(1, 1), EvalPointMode::round_key,
                      1, rng);
  ShareMap shares = d.shares;
  shares.at(UserId{3}).epoch = 1;
  EXPECT_EQ(code_of([&] { reconstruct(d.tree, shares, everyone(d)); }), ErrorCode::stale_epoch);
}

TEST(Reconstruct, ThresholdExactnessPerGroup) {
  Rng rng(13);
  const auto d = deal_shape(testing::small(), nullptr, {full(1, 4), full(1, 3), full(1, 5)},
                            ThresholdFactor::make(2, 3), EvalPointMode::round_key, 99, rng);
  for (const auto& [id, n] : d.tree.nodes()) {
    const auto kids = d.tree.active_children(id);
    if (kids.empty()) continue;
    const std::size_t t = d.dealer.group_thresholds.at(id);
    const FieldElement target = id == kRootServer ? d.dealer.secret : d.dealer.retained.at(id);
    for_each_combination(kids, t, [&](const std::vector<UserId>& subset) {
      std::vector<InterpolationPoint> pts;
      for (UserId c : subset) pts.push_back({d.shares.at(c).eval_point, full_value(d, c)});
      ASSERT_EQ(lagrange_at_zero(pts), target);
    });
    if (t > 1) {
      for_each_combination(kids, t - 1, [&](const std::vector<UserId>& subset) {
        std::set<UserId> part(subset.begin(), subset.end());
        for (UserId c : subset) {
          for (UserId g : d.tree.active_children(c)) part.insert(g);
        }
        EXPECT_THROW(recover_group_value(d.tree, d.shares, part, id), InsufficientShares);
      });
    }
  }
}

TEST(Reconstruct, RoundTripRandomTrees) {
  const std::vector<ThresholdFactor> factors{ThresholdFactor::make(1, 3), ThresholdFactor::make(1, 2),
                                             ThresholdFactor::make(2, 3), ThresholdFactor::make(1, 1)};
  const auto curve = testing::small();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto shape = testing::random_shape(rng, 4, 6);
    const BigInt secret = rng.uniform_below(curve->order());
    const auto d = deal_shape(curve, nullptr, shape, factors[seed % 4], EvalPointMode::round_key, secret, rng);
    ASSERT_EQ(reconstruct(d.tree, d.shares, everyone(d)).value(), secret) << "seed " << seed;
  }
}

// ---------------------------------------------------------------------------
// knowledge_closure

// Tries to compute D using only the coalition's shares and interpolation;
// the coalition can reconstruct iff this yields D.
std::optional<FieldElement> attempt_reconstruction(const HierarchyTree& tree, const std::map<UserId, ShareRecord>& held) {
  auto value_of = [&](auto&& self, UserId id) -> std::optional<FieldElement> {
    const auto it = held.find(id);
    if (it == held.end()) return std::nullopt;
    if (!it->second.children_threshold) return it->second.value;
    std::vector<InterpolationPoint> pts;
    for (UserId c : tree.node(id).children) {
      if (pts.size() == *it->second.children_threshold) break;
      if (auto v = self(self, c)) pts.push_back({held.at(c).eval_point, *v});
    }
    if (pts.size() < *it->second.children_threshold) return std::nullopt;
    return it->second.value + lagrange_at_zero(pts);
  };
  std::vector<InterpolationPoint> top;
  std::optional<std::size_t> threshold;
  for (UserId c : tree.node(kRootServer).children) {
    if (auto v = value_of(value_of, c)) {
      threshold = held.at(c).threshold;
      top.push_back({held.at(c).eval_point, *v});
    }
  }
  if (!threshold || top.size() < *threshold) return std::nullopt;
  top.resize(*threshold, top.front());
  return lagrange_at_zero(std::span<const InterpolationPoint>(top.data(), *threshold));
}

std::vector<ShareRecord> pick(const Dealt& d, const std::vector<UserId>& ids) {
  std::vector<ShareRecord> out;
  for (UserId id : ids) out.push_back(d.shares.at(id));
  return out;
}

TEST(Closure, Examples) {
  Rng rng(20);
  const auto d = deal_shape(testing::small(), nullptr, testing::two_level_shape(), ThresholdFactor::make(1, 2),
                            EvalPointMode::round_key, 31337, rng);
  EXPECT_TRUE(knowledge_closure(d.tree, pick(d, d.tree.active_users())));
  // threshold - 1 = 1 member of U7's leaf group, nothing else.
  EXPECT_FALSE(knowledge_closure(d.tree, pick(d, {UserId{9}})));
  EXPECT_FALSE(knowledge_closure(d.tree, std::vector<ShareRecord>{}));
  // Leaves alone never suffice: internal shares are needed on every path.
  std::vector<UserId> leaves;
  for (UserId id : d.tree.active_users()) {
    if (d.tree.active_children(id).empty()) leaves.push_back(id);
  }
  EXPECT_FALSE(knowledge_closure(d.tree, pick(d, leaves)));
  // Minimal reconstructing coalition: U3 (leaf) + U1 with two leaves.
  EXPECT_TRUE(knowledge_closure(d.tree, pick(d, {UserId{3}, UserId{1}, UserId{4}, UserId{6}})));
}

TEST(Closure, MixedVersionsRejected) {
  Rng rng(21);
  const auto d = deal_shape(testing::small(), nullptr, {full(1, 3)}, ThresholdFactor::make(1, 2),
                            EvalPointMode::round_key, 1, rng);
  auto shares = pick(d, {UserId{2}, UserId{3}});
  shares[1].epoch = 1;
  EXPECT_EQ(code_of([&] { knowledge_closure(d.tree, shares); }), ErrorCode::mixed_epochs);
  auto twice = pick(d, {UserId{2}, UserId{2}});
  EXPECT_NO_THROW(knowledge_closure(d.tree, twice));
  twice[1].value += FieldElement::one(twice[1].value.field());
  EXPECT_EQ(code_of([&] { knowledge_closure(d.tree, twice); }), ErrorCode::mixed_epochs);
}

TEST(Closure, MatchesReconstructionAttemptOracle) {
  const auto field = make_field(31);
  std::size_t positives = 0, negatives = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    Rng rng(seed);
    // User ids double as evaluation points, so they must stay below 31.
    std::vector<Shape> shape;
    do {
      shape = testing::random_shape(rng, 3, 3);
    } while ([&] {
      std::size_t n = 0;
      auto count = [&](auto&& self, const Shape& s) -> void {
        ++n;
        for (const auto& c : s.children) self(self, c);
      };
      for (const auto& s : shape) count(count, s);
      return n > 30;
    }());
    const ThresholdFactor tf = seed % 2 == 0 ? ThresholdFactor::make(1, 2) : ThresholdFactor::make(2, 3);
    const auto d = deal_shape(nullptr, field, shape, tf, EvalPointMode::user_id, rng.uniform_below(31), rng);
    const auto users = d.tree.active_users();
    for (int trial = 0; trial < 40; ++trial) {
      std::map<UserId, ShareRecord> held;
      std::vector<ShareRecord> coalition;
      for (UserId id : users) {
        if (rng.uniform_index(2) == 0) {
          held.emplace(id, d.shares.at(id));
          coalition.push_back(d.shares.at(id));
        }
      }
      const auto attempt = attempt_reconstruction(d.tree, held);
      const bool oracle = attempt && *attempt == d.dealer.secret;
      ASSERT_EQ(knowledge_closure(d.tree, coalition), oracle) << "seed " << seed << " trial " << trial;
      (oracle ? positives : negatives) += 1;
    }
  }
  EXPECT_GT(positives, 100u);
  EXPECT_GT(negatives, 100u);
}

// ---------------------------------------------------------------------------
// Group-level secrecy over F_31, by enumeration.

TEST(Secrecy, SubQuorumLeavesEveryCandidateEquallyLikely) {
  constexpr long p = 31;
  Rng rng(30);
  const auto d = deal_shape(nullptr, make_field(p), {full(1, 4), full(1, 3), full(1, 4)}, ThresholdFactor::make(2, 3),
                            EvalPointMode::user_id, 17, rng);
  for (const auto& [id, n] : d.tree.nodes()) {
    const auto kids = d.tree.active_children(id);
    if (kids.empty()) continue;
    const std::size_t t = d.dealer.group_thresholds.at(id);
    ASSERT_GE(t, 2u);
    for_each_combination(kids, t - 1, [&](const std::vector<UserId>& subset) {
      std::vector<std::pair<long, long>> known;
      for (UserId c : subset) {
        known.emplace_back(d.shares.at(c).eval_point.value().convert_to<long>(), full_value(d, c).value().convert_to<long>());
      }
      // Count polynomials of degree t-1 consistent with the known points,
      // per candidate free coefficient.
      std::vector<long> per_candidate(p, 0);
      std::vector<long> coeffs(t, 0);
      for (;;) {
        bool consistent = true;
        for (const auto& [x, y] : known) {
          long acc = 0, power = 1;
          for (long c : coeffs) {
            acc = (acc + c * power) % p;
            power = power * x % p;
          }
          if (acc != y) {
            consistent = false;
            break;
          }
        }
        if (consistent) ++per_candidate[static_cast<std::size_t>(coeffs[0])];
        std::size_t h = 0;
        while (h < t && ++coeffs[h] == p) coeffs[h++] = 0;
        if (h == t) break;
      }
      for (long count : per_candidate) ASSERT_EQ(count, per_candidate[0]);
      ASSERT_EQ(per_candidate[0], 1);
    });
  }
}

}  // namespace
}  // namespace hss
