#include <gtest/gtest.h>

#include <random>

#include "daca/instance.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace daca;

namespace {

AttackInstance single_query(Count c, std::vector<TupleWeight> list, std::size_t n, Count k) {
  std::vector<std::vector<TupleWeight>> lists{std::move(list)};
  return AttackInstance(JointWeightMatrix(n, std::move(lists)), {c}, k);
}

}  // namespace

TEST(PoisonedCardinality, EmptyStrategyReturnsClean) {
  auto inst = single_query(10, {{0, 4}, {1, 6}}, 2, 1);
  EXPECT_EQ(poisoned_cardinality(inst, AttackStrategy(2), QueryId{0}), 10u);
}

TEST(PoisonedCardinality, GadgetEdgeBothDeletedIsZero) {
  const Count x = 1'000'000;
  auto inst = single_query(2 * x, {{0, x}, {1, x}}, 2, 2);
  EXPECT_EQ(poisoned_cardinality(inst, AttackStrategy({-1, -1}), QueryId{0}), 0u);
}

TEST(PoisonedCardinality, MatchesDenseRecomputation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = testutil::random_instance(rng, 5, 3, 4);
    auto s = testutil::random_strategy(rng, inst);
    auto expect = oracle::poisoned(oracle::dense(inst), oracle::clean(inst), testutil::betas(s));
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(static_cast<std::int64_t>(poisoned_cardinality(inst, s, QueryId{j})), expect[j]);
    }
  }
}

TEST(PoisonedCardinality, OutOfRangeQuery) {
  auto inst = single_query(1, {{0, 1}}, 1, 1);
  EXPECT_THROW(poisoned_cardinality(inst, AttackStrategy(1), QueryId{1}), std::out_of_range);
}

TEST(PoisonedCardinality, LinearInBeta) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testutil::random_instance(rng, 6, 4, 6);
    auto a = testutil::random_strategy(rng, inst.with_budget(3));
    // b only inserts, so a + b stays in range while the total budget holds
    AttackStrategy b(6), sum = a;
    b.set_beta(trial % 6, 2);
    if (a.beta(trial % 6) < 0) continue;
    sum.set_beta(trial % 6, a.beta(trial % 6) + 2);
    for (std::size_t j = 0; j < 4; ++j) {
      const auto c = static_cast<std::int64_t>(inst.cardinality(j));
      const auto pa = static_cast<std::int64_t>(poisoned_cardinality(inst, a, QueryId{j}));
      const auto pb = static_cast<std::int64_t>(poisoned_cardinality(inst, b, QueryId{j}));
      EXPECT_EQ(static_cast<std::int64_t>(poisoned_cardinality(inst, sum, QueryId{j})), pa + pb - c);
    }
  }
}

TEST(ValidateStrategy, AllZeroIsValid) {
  auto inst = single_query(3, {{0, 3}}, 3, 1);
  EXPECT_TRUE(validate_strategy(inst, AttackStrategy(3)).valid());
}

TEST(ValidateStrategy, BudgetExceeded) {
  auto inst = single_query(3, {{0, 1}, {1, 1}, {2, 1}}, 3, 3);
  auto v = validate_strategy(inst, AttackStrategy({2, 2, 0}));
  ASSERT_FALSE(v.valid());
  EXPECT_TRUE(v.has(ViolationKind::budget_exceeded));
  EXPECT_FALSE(v.has(ViolationKind::beta_out_of_range));
}

TEST(ValidateStrategy, BetaOutOfRange) {
  auto inst = single_query(3, {{0, 1}, {1, 1}, {2, 1}}, 3, 3);
  auto v = validate_strategy(inst, AttackStrategy({-2, 0, 0}));
  ASSERT_FALSE(v.valid());
  EXPECT_EQ(v.first()->kind, ViolationKind::beta_out_of_range);
  EXPECT_EQ(v.first()->index, 0u);
}

TEST(ValidateStrategy, ListsEveryViolation) {
  auto inst = single_query(3, {{0, 1}, {1, 1}, {2, 1}}, 3, 2);
  auto v = validate_strategy(inst, AttackStrategy({-3, 3, 0}));
  EXPECT_TRUE(v.has(ViolationKind::budget_exceeded));
  EXPECT_TRUE(v.has(ViolationKind::beta_out_of_range));
}

TEST(ValidateStrategy, NegativeCardinalityWhenDecompositionBroken) {
  // C smaller than the weight sum: deleting the heavy tuple goes below zero.
  auto inst = single_query(1, {{0, 5}}, 1, 1);
  auto v = validate_strategy(inst, AttackStrategy(std::vector<std::int64_t>{-1}));
  EXPECT_TRUE(v.has(ViolationKind::negative_cardinality));
  EXPECT_THROW(poisoned_cardinality(inst, AttackStrategy(std::vector<std::int64_t>{-1}), QueryId{0}), ValidationError);
}

TEST(ValidateStrategy, SizeMismatch) {
  auto inst = single_query(1, {{0, 1}}, 1, 1);
  EXPECT_TRUE(validate_strategy(inst, AttackStrategy(2)).has(ViolationKind::size_mismatch));
}

TEST(ValidateStrategy, RandomSweepAgreesWithConstraints) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> beta(-3, 5);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = testutil::random_instance(rng, 4, 2, 4);
    std::vector<std::int64_t> b(4);
    for (auto& v : b) v = beta(rng);
    std::int64_t cost = 0;
    bool in_range = true;
    for (auto v : b) {
      cost += std::abs(v);
      in_range = in_range && v >= -1 && v <= 4;
    }
    auto verdict = validate_strategy(inst, AttackStrategy(b));
    EXPECT_EQ(verdict.has(ViolationKind::budget_exceeded), cost > 4);
    EXPECT_EQ(verdict.has(ViolationKind::beta_out_of_range), !in_range);
  }
}

TEST(JointWeightMatrix, RejectsUnsortedAndDuplicates) {
  EXPECT_THROW(JointWeightMatrix(3, {{{1, 1}, {0, 1}}}), InputError);
  EXPECT_THROW(JointWeightMatrix(3, {{{1, 1}, {1, 2}}}), InputError);
  EXPECT_THROW(JointWeightMatrix(3, {{{3, 1}}}), InputError);
  EXPECT_THROW(JointWeightMatrix::from_triples(2, 1, {{0, 1, 1}, {0, 1, 2}}), InputError);
}

TEST(JointWeightMatrix, DropsZerosAndBuildsInvertedIndex) {
  auto m = JointWeightMatrix::from_triples(3, 2, {{1, 2, 4}, {0, 2, 1}, {0, 0, 0}, {1, 0, 7}});
  EXPECT_EQ(m.nnz(), 3u);
  EXPECT_EQ(m.weight(2, 1), 4u);
  EXPECT_EQ(m.weight(0, 0), 0u);
  ASSERT_EQ(m.tuple(2).size(), 2u);
  EXPECT_EQ(m.tuple(2)[0].query, 0u);
  EXPECT_EQ(m.tuple(2)[1].weight, 4u);
  EXPECT_EQ(m.row_sum(1), 11u);
}

TEST(AttackInstance, RejectsZeroBudgetAndShapeMismatch) {
  EXPECT_THROW(AttackInstance(JointWeightMatrix::zeros(1, 1), {0}, 0), InputError);
  EXPECT_THROW(AttackInstance(JointWeightMatrix::zeros(1, 2), {0}, 1), InputError);
}

TEST(AttackInstance, DecompositionCheck) {
  auto ok = AttackInstance::from_weights(JointWeightMatrix::from_triples(2, 1, {{0, 0, 3}, {0, 1, 4}}), 1);
  EXPECT_TRUE(ok.satisfies_decomposition());
  EXPECT_EQ(ok.cardinality(0), 7u);
  AttackInstance off(JointWeightMatrix::from_triples(2, 1, {{0, 0, 3}}), {5}, 1);
  EXPECT_FALSE(off.satisfies_decomposition());
}
