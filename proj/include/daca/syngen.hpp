#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "daca/error.hpp"
#include "daca/instance.hpp"

namespace daca {

struct WeightDistribution {
  enum class Kind { uniform, zipf };
  Kind kind = Kind::uniform;
  Count lo = 1;        // uniform lower bound
  Count hi = 10;       // uniform upper bound
  double s = 1.1;      // zipf exponent
  Count max = 100;     // zipf support {1..max}

  static WeightDistribution uniform(Count lo, Count hi) { return {Kind::uniform, lo, hi, 1.1, 100}; }
  static WeightDistribution zipf(double s, Count max) { return {Kind::zipf, 1, 1, s, max}; }
};

struct SynSpec {
  std::size_t n_tuples = 100;
  std::size_t n_queries = 10;
  Count budget = 5;
  std::size_t support_min = 1;
  std::size_t support_max = 10;
  WeightDistribution weights;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_tuples < 1) throw InputError("n_tuples must be >= 1");
    if (budget < 1) throw InputError("budget must be >= 1");
    if (support_min > support_max) throw InputError("support_min exceeds support_max");
    if (support_max > n_tuples) throw InputError("support_per_query exceeds n_tuples");
    if (weights.kind == WeightDistribution::Kind::uniform) {
      if (weights.lo < 1 || weights.lo > weights.hi) throw InputError("uniform weight bounds must satisfy 1 <= lo <= hi");
    } else {
      if (weights.max < 1) throw InputError("zipf max must be >= 1");
      if (!(weights.s > 0)) throw InputError("zipf exponent must be positive");
    }
  }
};

/// Random instance with per-query support drawn without replacement and
/// C_j = sum_i w_ij. Identical specs give identical instances.
inline AttackInstance generate(const SynSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<double> zipf_pmf;
  if (spec.weights.kind == WeightDistribution::Kind::zipf) {
    zipf_pmf.resize(spec.weights.max);
    for (Count k = 1; k <= spec.weights.max; ++k) zipf_pmf[k - 1] = std::pow(static_cast<double>(k), -spec.weights.s);
  }
  std::discrete_distribution<Count> zipf(zipf_pmf.begin(), zipf_pmf.end());
  std::uniform_int_distribution<Count> uni(spec.weights.lo, spec.weights.hi);
  std::uniform_int_distribution<std::size_t> support(spec.support_min, spec.support_max);

  std::vector<std::size_t> pool(spec.n_tuples);
  std::iota(pool.begin(), pool.end(), std::size_t{0});

  std::vector<std::vector<TupleWeight>> lists(spec.n_queries);
  for (auto& list : lists) {
    const std::size_t size = support(rng);
    // Partial Fisher-Yates: the first `size` slots become the support.
    for (std::size_t k = 0; k < size; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    list.reserve(size);
    for (std::size_t k = 0; k < size; ++k) {
      const Count w = spec.weights.kind == WeightDistribution::Kind::zipf ? zipf(rng) + 1 : uni(rng);
      list.push_back({pool[k], w});
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.tuple < b.tuple; });
  }
  return AttackInstance::from_weights(JointWeightMatrix(spec.n_tuples, std::move(lists)), spec.budget);
}

}  // namespace daca
