#include <gtest/gtest.h>

#include <random>

#include "daca/evaluate.hpp"
#include "daca/exact.hpp"
#include "daca/greedy.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace daca;

TEST(OracleEstimate, CleanAndAttacked) {
  auto gadget = build_dks_gadget(Graph{2, {{0, 1}}}, 2);
  EXPECT_EQ(oracle_estimate(gadget.instance, AttackStrategy(2), QueryId{0}), 2'000'000u);
  AttackStrategy both({-1, -1});
  EXPECT_EQ(oracle_estimate(gadget.instance, both, QueryId{0}), 0u);
  auto r = evaluate(gadget.instance, oracle_estimates(gadget.instance, both));
  EXPECT_EQ(r.per_query[0], 2'000'001.0);
}

TEST(OracleEstimate, DelegatesToPoisonedCardinality) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testutil::random_instance(rng, 6, 4, 4);
    auto s = testutil::random_strategy(rng, inst);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(oracle_estimate(inst, s, QueryId{j}), poisoned_cardinality(inst, s, QueryId{j}));
  }
}

TEST(Evaluate, CleanOracleIsAllOnes) {
  std::mt19937_64 rng(14);
  auto inst = testutil::random_instance(rng, 10, 8, 3);
  auto r = evaluate(inst, clean_estimates(inst));
  for (double q : r.per_query) EXPECT_EQ(q, 1.0);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.p50, 1.0);
  EXPECT_EQ(r.max, 1.0);
}

TEST(Evaluate, MeanTimesMEqualsObjective) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testutil::random_instance(rng, 8, 5, 4);
    auto s = greedy_attack(inst).strategy;
    auto r = evaluate(inst, oracle_estimates(inst, s));
    const double obj = objective_eq3(inst, s).total;
    EXPECT_NEAR(r.mean * 5, obj, 1e-9 * obj);
  }
}

TEST(Evaluate, LengthMismatch) {
  auto inst = AttackInstance::from_weights(JointWeightMatrix::zeros(1, 2), 1);
  std::vector<double> est{1.0};
  EXPECT_THROW(evaluate(inst, est), ValidationError);
}

TEST(Percentile, NearestRankHandCase) {
  std::vector<double> v{1, 2, 3, 4, 100};
  EXPECT_EQ(percentile_nearest_rank(v, 50), 3.0);
  EXPECT_EQ(percentile_nearest_rank(v, 90), 100.0);
  EXPECT_EQ(percentile_nearest_rank(v, 100), 100.0);
  EXPECT_EQ(percentile_nearest_rank(v, 0), 1.0);
}

TEST(Percentile, AgreesWithSortAndIndex) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> val(1, 1000);
  std::uniform_int_distribution<std::size_t> len(1, 60);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(len(rng));
    for (auto& x : v) x = val(rng);
    for (double p : {1.0, 25.0, 50.0, 90.0, 95.0, 99.0, 100.0}) {
      EXPECT_EQ(percentile_nearest_rank(v, p), oracle::nearest_rank(v, p)) << "p=" << p << " n=" << v.size();
    }
  }
}

TEST(Evaluate, PercentilesMonotone) {
  std::mt19937_64 rng(17);
  auto inst = testutil::random_instance(rng, 12, 20, 6);
  auto r = evaluate(inst, oracle_estimates(inst, greedy_attack(inst).strategy));
  EXPECT_LE(r.p50, r.p90);
  EXPECT_LE(r.p90, r.p95);
  EXPECT_LE(r.p95, r.p99);
  EXPECT_LE(r.p99, r.max);
  EXPECT_GE(r.mean, 1.0);
}

TEST(NoiseDefense, AlphaZeroIsIdentity) {
  std::vector<double> est{1, 5, 9};
  EXPECT_EQ(noise_defense(est, {0.0, 3, std::nullopt}), est);
}

TEST(NoiseDefense, EqualEstimatesAreUnchanged) {
  std::vector<double> est{4, 4, 4, 4};
  EXPECT_EQ(noise_defense(est, {2.0, 3, std::nullopt}), est);
}

TEST(NoiseDefense, NonNegativeAndSeeded) {
  std::vector<double> est{1, 50, 3, 900, 12};
  auto a = noise_defense(est, {0.5, 42, std::nullopt});
  auto b = noise_defense(est, {0.5, 42, std::nullopt});
  auto c = noise_defense(est, {0.5, 43, std::nullopt});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (std::size_t j = 0; j < est.size(); ++j) EXPECT_GE(a[j], est[j]);
}

TEST(NoiseDefense, NoiseScalesWithAlpha) {
  std::vector<double> est{1, 50, 3, 900, 12};
  auto small = noise_defense(est, {0.1, 7, std::nullopt});
  auto big = noise_defense(est, {2.0, 7, std::nullopt});
  for (std::size_t j = 0; j < est.size(); ++j) {
    EXPECT_NEAR(big[j] - est[j], 20 * (small[j] - est[j]), 1e-9 * std::max(1.0, big[j]));
  }
}

TEST(NoiseDefense, NeedsTwoEstimates) {
  std::vector<double> one{3};
  EXPECT_THROW(noise_defense(one, {1.0, 0, std::nullopt}), DegenerateError);
  EXPECT_NO_THROW(noise_defense(one, {1.0, 0, 2.0}));
  EXPECT_THROW(noise_defense(one, {-1.0, 0, 2.0}), ValidationError);
}

TEST(Ensemble, SingleSetUnitWeightIsIdentity) {
  std::vector<std::vector<double>> sets{{1, 2, 3}};
  std::vector<double> w{1.0};
  EXPECT_EQ(ensemble_combine(sets, w), sets[0]);
}

TEST(Ensemble, ClampsAtZeroAndChecksShapes) {
  std::vector<std::vector<double>> sets{{1, 2}, {5, 1}};
  std::vector<double> w{1.0, -1.0};
  EXPECT_EQ(ensemble_combine(sets, w), (std::vector<double>{0.0, 1.0}));
  std::vector<double> w1{1.0};
  EXPECT_THROW(ensemble_combine(sets, w1), ValidationError);
  std::vector<std::vector<double>> ragged{{1, 2}, {1}};
  std::vector<double> w2{0.5, 0.5};
  EXPECT_THROW(ensemble_combine(ragged, w2), ValidationError);
}

TEST(Ensemble, FitRecoversTruthfulMember) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> v(1, 100);
  std::vector<double> truth(30), noisy(30);
  for (std::size_t j = 0; j < 30; ++j) {
    truth[j] = v(rng);
    noisy[j] = v(rng);
  }
  std::vector<std::vector<double>> sets{noisy, truth};
  std::vector<std::size_t> fit_q(30);
  for (std::size_t j = 0; j < 30; ++j) fit_q[j] = j;
  auto fit = fit_ensemble_weights(sets, fit_q, truth);
  EXPECT_FALSE(fit.fell_back);
  EXPECT_NEAR(fit.weights[1], 1.0, 1e-6);
  EXPECT_NEAR(fit.weights[0], 0.0, 1e-6);
  EXPECT_LT(fit.residual, 1e-6);
}

TEST(Ensemble, SingularFallsBackToUniform) {
  std::vector<std::vector<double>> sets{{1, 2, 3}, {2, 4, 6}};
  std::vector<std::size_t> q{0, 1, 2};
  std::vector<double> truth{1, 2, 3};
  auto fit = fit_ensemble_weights(sets, q, truth);
  EXPECT_TRUE(fit.fell_back);
  EXPECT_FALSE(fit.warning.empty());
  EXPECT_EQ(fit.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(Ensemble, NonNegativeWeights) {
  // Unconstrained least squares would put a negative weight on set 0.
  std::vector<std::vector<double>> sets{{1, 0, 1}, {2, 1, 0}};
  std::vector<std::size_t> q{0, 1, 2};
  std::vector<double> truth{1, 1, -1};
  auto fit = fit_ensemble_weights(sets, q, truth);
  for (double w : fit.weights) EXPECT_GE(w, 0.0);
}

TEST(Ensemble, UniformMeanLiesBetweenComponents) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = testutil::random_instance(rng, 10, 8, 4);
    auto clean = clean_estimates(inst);
    auto attacked = oracle_estimates(inst, greedy_attack(inst).strategy);
    std::vector<std::vector<double>> sets{clean, attacked};
    std::vector<double> w{0.5, 0.5};
    const double mixed = evaluate(inst, ensemble_combine(sets, w)).mean;
    const double lo = evaluate(inst, clean).mean, hi = evaluate(inst, attacked).mean;
    EXPECT_GE(mixed, lo - 1e-12);
    EXPECT_LE(mixed, hi + 1e-12);
  }
}
