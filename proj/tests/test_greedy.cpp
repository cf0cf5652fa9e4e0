#include <gtest/gtest.h>

#include <random>

#include "daca/exact.hpp"
#include "daca/greedy.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace daca;

namespace {

// 4-clique {0,1,2,3} with a three-edge star hung off vertex 3.
Graph clique_with_tail() {
  return Graph{7, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}, {3, 6}}};
}

}  // namespace

TEST(Greedy, InsertOnlyMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testutil::random_instance(rng, 8, 5, 3);
    auto r = greedy_attack_restricted(inst, AttackMode::insert_only);
    const double opt = oracle::insert_only_optimum(oracle::dense(inst), oracle::clean(inst), 8, 3);
    EXPECT_NEAR(objective_eq3(inst, r.strategy).total, opt, 1e-12 * opt);
  }
}

TEST(Greedy, ExampleCliqueIsDeleted) {
  auto gadget = build_dks_gadget(clique_with_tail(), 4);
  auto r = greedy_attack_restricted(gadget.instance, AttackMode::delete_only);
  EXPECT_EQ(testutil::betas(r.strategy), (std::vector<std::int64_t>{-1, -1, -1, -1, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(objective_eq3(gadget.instance, r.strategy).total, 12000011.999997);
}

TEST(Greedy, ZeroWeightsGiveEmptyStrategy) {
  auto inst = AttackInstance::from_weights(JointWeightMatrix::zeros(4, 3), 3);
  auto r = greedy_attack(inst);
  EXPECT_TRUE(r.strategy.empty());
  EXPECT_TRUE(r.trace.steps.empty());
  EXPECT_EQ(objective_eq3(inst, r.strategy).total, 3.0);
}

TEST(Greedy, InsertOnlyBudgetOnePicksBestScore) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testutil::random_instance(rng, 7, 4, 1);
    const auto w = oracle::dense(inst);
    const auto c = oracle::clean(inst);
    std::size_t best = 0;
    for (std::size_t i = 1; i < 7; ++i) {
      if (oracle::h_score(w, c, i) > oracle::h_score(w, c, best) + 1e-12) best = i;
    }
    auto r = greedy_attack_restricted(inst, AttackMode::insert_only);
    if (oracle::h_score(w, c, best) == 0) {
      EXPECT_TRUE(r.strategy.empty());
      continue;
    }
    ASSERT_EQ(r.trace.steps.size(), 1u);
    EXPECT_NEAR(oracle::h_score(w, c, r.trace.steps[0].tuple.index), oracle::h_score(w, c, best), 1e-12);
  }
}

TEST(Greedy, MixedOnHeavyGadgetHasNoInsertions) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g{6, {}};
    std::bernoulli_distribution edge(0.5);
    for (std::size_t u = 0; u < 6; ++u)
      for (std::size_t v = u + 1; v < 6; ++v)
        if (edge(rng)) g.edges.push_back({u, v});
    if (g.edges.empty()) continue;
    auto gadget = build_dks_gadget(g, 3);
    auto r = greedy_attack(gadget.instance);
    EXPECT_EQ(r.strategy.insertions(), 0u);
    for (const auto& s : r.trace.steps) EXPECT_EQ(s.op, OpSign::remove);
  }
}

TEST(Greedy, TraceGainsMatchRecomputation) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testutil::random_instance(rng, 10, 6, 6);
    for (auto mode : {AttackMode::mixed, AttackMode::delete_only, AttackMode::insert_only}) {
      auto r = greedy_attack_restricted(inst, mode);
      EXPECT_TRUE(validate_strategy(inst, r.strategy).valid());
      AttackStrategy replay(10);
      double before = objective_eq3(inst, replay).total;
      EXPECT_NEAR(r.trace.initial_objective, before, 1e-9);
      std::vector<bool> deleted(10, false);
      for (const auto& step : r.trace.steps) {
        const auto t = step.tuple.index;
        EXPECT_FALSE(deleted[t]) << "masked tuple reused";
        if (step.op == OpSign::remove) {
          EXPECT_TRUE(allows_delete(mode));
          deleted[t] = true;
        } else {
          EXPECT_TRUE(allows_insert(mode));
        }
        replay.set_beta(t, replay.beta(t) + static_cast<int>(step.op));
        const double after = objective_eq3(inst, replay).total;
        EXPECT_NEAR(step.gain, after - before, 1e-9 * std::max(1.0, after));
        EXPECT_NEAR(step.objective, after, 1e-9 * after);
        EXPECT_GT(step.gain, 0.0);
        before = after;
      }
      EXPECT_EQ(replay, r.strategy);
      EXPECT_LE(r.strategy.cost(), inst.budget());
    }
  }
}

TEST(Greedy, TiesPreferDeleteThenLowerIndex) {
  // Two identical single-tuple queries with C = 1, w = 1. Deleting gives
  // 2/1 = 2, inserting gives 3/2, so delete tuple 0 first, then tuple 1.
  auto inst = AttackInstance::from_weights(JointWeightMatrix(2, {{{0, 1}}, {{1, 1}}}), 2);
  auto r = greedy_attack(inst);
  ASSERT_EQ(r.trace.steps.size(), 2u);
  EXPECT_EQ(r.trace.steps[0].tuple.index, 0u);
  EXPECT_EQ(r.trace.steps[0].op, OpSign::remove);
  EXPECT_EQ(r.trace.steps[1].tuple.index, 1u);

  // q0: C=0, t0 w=1 (t0 cannot be deleted); inserting t0 gives 2/1, gain 1.
  // q1: C=1, t1 w=1; deleting t1 gives 2/1, gain 1. Exact tie, delete wins.
  AttackInstance tie(JointWeightMatrix(2, {{{0, 1}}, {{1, 1}}}), {0, 1}, 1);
  auto r2 = greedy_attack(tie);
  ASSERT_EQ(r2.trace.steps.size(), 1u);
  EXPECT_EQ(r2.trace.steps[0].op, OpSign::remove);
  EXPECT_EQ(r2.trace.steps[0].tuple.index, 1u);
}

TEST(Greedy, RepeatedInsertionAccumulates) {
  auto inst = AttackInstance::from_weights(JointWeightMatrix(2, {{{0, 5}, {1, 1}}}), 3);
  auto r = greedy_attack_restricted(inst, AttackMode::insert_only);
  EXPECT_EQ(r.strategy.beta(0), 3);
  EXPECT_EQ(r.strategy.beta(1), 0);
}

TEST(Greedy, DeleteOnlyWithinCurvatureBound) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = testutil::random_instance(rng, 8, 4, 3);
    auto r = greedy_attack_restricted(inst, AttackMode::delete_only);
    const double opt = oracle::delete_only_optimum(oracle::dense(inst), oracle::clean(inst), 8, 3);
    double kappa;
    try {
      kappa = estimate_kappa(inst).kappa;
    } catch (const DegenerateError&) {
      continue;
    }
    const double got = objective_eq3(inst, r.strategy).total;
    EXPECT_LE(got, opt * (1 + 1e-12));
    EXPECT_GE(got, (1 - kappa) * opt - 1e-9);
  }
}

TEST(Greedy, LocalRuleProducesValidStrategy) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testutil::random_instance(rng, 10, 5, 4);
    auto r = greedy_attack(inst, {AttackMode::mixed, GainRule::local});
    EXPECT_TRUE(validate_strategy(inst, r.strategy).valid());
  }
}

TEST(Greedy, ParseMode) {
  EXPECT_EQ(parse_attack_mode("delete-only"), AttackMode::delete_only);
  EXPECT_EQ(parse_attack_mode("insert-only"), AttackMode::insert_only);
  EXPECT_EQ(parse_attack_mode("mixed"), AttackMode::mixed);
  EXPECT_FALSE(parse_attack_mode("both").has_value());
}
