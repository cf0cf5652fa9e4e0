#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "daca/instance.hpp"
#include "daca/objective.hpp"

namespace daca {

/// The surrogate oracle trained on D + strategy reports the exact poisoned
/// cardinality of every query.
inline Count oracle_estimate(const AttackInstance& inst, const AttackStrategy& strategy, QueryId query) {
  return poisoned_cardinality(inst, strategy, query);
}

inline std::vector<double> oracle_estimates(const AttackInstance& inst, const AttackStrategy& strategy) {
  require_valid(inst, strategy);
  auto poisoned = poisoned_cardinalities(inst, strategy);
  return {poisoned.begin(), poisoned.end()};
}

inline std::vector<double> clean_estimates(const AttackInstance& inst) {
  return {inst.cardinalities().begin(), inst.cardinalities().end()};
}

struct QerrorReport {
  std::vector<double> per_query;
  double mean = 0;
  double p50 = 0;
  double p90 = 0;
  double p95 = 0;
  double p99 = 0;
  double max = 0;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based).
inline double percentile_nearest_rank(std::span<const double> values, double p) {
  if (values.empty()) throw ValidationError("percentile of an empty vector");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Smoothed Qerror of each estimate against the clean cardinality, with
/// percentile summaries.
inline QerrorReport evaluate(const AttackInstance& inst, std::span<const double> estimates) {
  if (estimates.size() != inst.n_queries()) {
    throw ValidationError("expected " + std::to_string(inst.n_queries()) + " estimates, got " +
                          std::to_string(estimates.size()));
  }
  QerrorReport r;
  r.per_query.resize(estimates.size());
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    if (!(estimates[j] >= 0)) throw ValidationError("estimate for query " + std::to_string(j) + " is negative or NaN");
    r.per_query[j] = smoothed_qerror(estimates[j], static_cast<double>(inst.cardinality(j)));
  }
  if (r.per_query.empty()) return r;
  r.mean = std::accumulate(r.per_query.begin(), r.per_query.end(), 0.0) / static_cast<double>(r.per_query.size());
  r.p50 = percentile_nearest_rank(r.per_query, 50);
  r.p90 = percentile_nearest_rank(r.per_query, 90);
  r.p95 = percentile_nearest_rank(r.per_query, 95);
  r.p99 = percentile_nearest_rank(r.per_query, 99);
  r.max = *std::max_element(r.per_query.begin(), r.per_query.end());
  return r;
}

// ---------------------------------------------------------------------------
// Countermeasures.

struct NoiseOptions {
  double alpha = 0;
  std::uint64_t seed = 0;
  /// Declared sigma; when absent the population standard deviation of the
  /// estimates being defended is used.
  std::optional<double> sigma;
};

inline double population_stddev(std::span<const double> values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

/// est + |alpha * eta| with eta ~ N(0, sigma^2) drawn per query.
inline std::vector<double> noise_defense(std::span<const double> estimates, const NoiseOptions& opts) {
  if (!(opts.alpha >= 0)) throw ValidationError("alpha must be >= 0");
  if (estimates.size() < 2 && !opts.sigma) {
    throw DegenerateError("noise defense needs at least two estimates to compute sigma");
  }
  const double sigma = opts.sigma.value_or(estimates.size() < 2 ? 0.0 : population_stddev(estimates));
  if (!(sigma >= 0)) throw ValidationError("sigma must be >= 0");
  std::vector<double> out(estimates.begin(), estimates.end());
  if (opts.alpha == 0 || sigma == 0) return out;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> eta(0.0, sigma);
  for (auto& v : out) v += std::abs(opts.alpha * eta(rng));
  return out;
}

/// combined[j] = max(0, sum_k weight_k * set_k[j]).
inline std::vector<double> ensemble_combine(std::span<const std::vector<double>> sets, std::span<const double> weights) {
  if (sets.empty()) throw ValidationError("ensemble needs at least one estimate set");
  if (weights.size() != sets.size()) throw ValidationError("one ensemble weight per estimate set required");
  const std::size_t m = sets.front().size();
  for (const auto& s : sets) {
    if (s.size() != m) throw ValidationError("estimate sets differ in length");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ValidationError("ensemble weights must be finite");
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (std::size_t j = 0; j < m; ++j) out[j] += weights[k] * sets[k][j];
  }
  for (auto& v : out) v = std::max(0.0, v);
  return out;
}

struct EnsembleFit {
  std::vector<double> weights;
  double residual = 0;  // ||A w - truth||_2 on the fitting queries
  bool fell_back = false;
  std::string warning;
};

/// Non-negative least squares for sum_k w_k * set_k[j] ~= truth_j over the
/// fitting queries. The active set is enumerated exactly (ensembles are small);
/// a rank-deficient system falls back to uniform weights with a warning.
inline EnsembleFit fit_ensemble_weights(std::span<const std::vector<double>> sets,
                                        std::span<const std::size_t> fit_queries,
                                        std::span<const double> truths) {
  if (sets.empty()) throw ValidationError("ensemble needs at least one estimate set");
  if (fit_queries.size() != truths.size()) throw ValidationError("one truth per fitting query required");
  const std::size_t k = sets.size();
  if (k > 16) throw ValidationError("ensemble fit supports at most 16 members");
  const auto rows = static_cast<Eigen::Index>(fit_queries.size());
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(k));
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto j = fit_queries[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < k; ++c) a(r, static_cast<Eigen::Index>(c)) = sets[c].at(j);
    b(r) = truths[static_cast<std::size_t>(r)];
  }

  EnsembleFit fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full(a);
  if (rows == 0 || full.rank() < static_cast<Eigen::Index>(k)) {
    fit.weights.assign(k, 1.0 / static_cast<double>(k));
    fit.fell_back = true;
    fit.warning = "ensemble fit system is singular; using uniform weights";
  } else {
    double best = b.norm();
    fit.weights.assign(k, 0.0);
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << k); ++mask) {
      std::vector<Eigen::Index> cols;
      for (std::size_t c = 0; c < k; ++c) {
        if (mask & (std::uint32_t{1} << c)) cols.push_back(static_cast<Eigen::Index>(c));
      }
      Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
      Eigen::VectorXd w = sub.colPivHouseholderQr().solve(b);
      if ((w.array() < 0).any()) continue;
      const double res = (sub * w - b).norm();
      if (res < best - 1e-12 * std::max(1.0, best)) {
        best = res;
        fit.weights.assign(k, 0.0);
        for (std::size_t c = 0; c < cols.size(); ++c) fit.weights[static_cast<std::size_t>(cols[c])] = w(static_cast<Eigen::Index>(c));
      }
    }
  }
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(fit.weights.data(), static_cast<Eigen::Index>(k));
  fit.residual = rows == 0 ? 0.0 : (a * w - b).norm();
  return fit;
}

}  // namespace daca
