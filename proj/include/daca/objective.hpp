#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "daca/instance.hpp"

namespace daca {

/// Raw multiplicative error max(est/truth, truth/est).
///
/// qerror(0, 0) is 1 (estimate equals truth); a zero on exactly one side gives
/// +infinity. Smoothing is the caller's business.
inline double qerror(double est, double truth) {
  if (est < 0 || truth < 0 || std::isnan(est) || std::isnan(truth)) {
    throw std::domain_error("qerror requires non-negative arguments");
  }
  if (est == truth) return 1.0;
  if (est == 0 || truth == 0) return std::numeric_limits<double>::infinity();
  return std::max(est / truth, truth / est);
}

/// Qerror with +1 added to both cardinalities.
inline double smoothed_qerror(double est, double truth) { return qerror(est + 1.0, truth + 1.0); }

/// Per-query Eq. 3 term for clean cardinality `clean` and poisoned `poisoned`.
inline double objective_term(Count clean, Count poisoned) {
  const double a = static_cast<double>(poisoned) + 1.0;
  const double b = static_cast<double>(clean) + 1.0;
  return std::max(a / b, b / a);
}

struct ObjectiveValue {
  double total = 0.0;
  std::vector<double> per_query;
};

inline ObjectiveValue objective_from_poisoned(const AttackInstance& inst, std::span<const Count> poisoned) {
  ObjectiveValue v;
  v.per_query.resize(inst.n_queries());
  for (std::size_t j = 0; j < v.per_query.size(); ++j) {
    v.per_query[j] = objective_term(inst.cardinality(j), poisoned[j]);
    v.total += v.per_query[j];
  }
  return v;
}

/// Total smoothed Qerror of the surrogate oracle trained on D + strategy and
/// evaluated against the clean cardinalities. Throws ValidationError on an
/// invalid strategy.
inline ObjectiveValue objective_eq3(const AttackInstance& inst, const AttackStrategy& strategy) {
  require_valid(inst, strategy);
  const auto poisoned = poisoned_cardinalities(inst, strategy);
  return objective_from_poisoned(inst, poisoned);
}

// ---------------------------------------------------------------------------
// Per-query dominance labels (caller supplied). A labelled query contributes
// only the ratio matching its label instead of the max of both.

enum class Dominance { automatic, insertion, deletion };

inline ObjectiveValue labelled_objective(const AttackInstance& inst, const AttackStrategy& strategy,
                                         std::span<const Dominance> labels) {
  if (labels.size() != inst.n_queries()) throw ValidationError("one dominance label per query required");
  require_valid(inst, strategy);
  const auto poisoned = poisoned_cardinalities(inst, strategy);
  ObjectiveValue v;
  v.per_query.resize(inst.n_queries());
  for (std::size_t j = 0; j < v.per_query.size(); ++j) {
    const double a = static_cast<double>(poisoned[j]) + 1.0;
    const double b = static_cast<double>(inst.cardinality(j)) + 1.0;
    switch (labels[j]) {
      case Dominance::automatic: v.per_query[j] = std::max(a / b, b / a); break;
      case Dominance::insertion: v.per_query[j] = a / b; break;
      case Dominance::deletion: v.per_query[j] = b / a; break;
    }
    v.total += v.per_query[j];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Set-function views used by the structural checks. A tuple set is a list of
// distinct tuple indices; every member gets the same beta (-1 or +1).

using TupleSet = std::vector<std::size_t>;

inline TupleSet normalize(TupleSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline TupleSet set_union(const TupleSet& a, const TupleSet& b) {
  TupleSet x = normalize(a), y = normalize(b), out;
  std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

inline TupleSet set_intersection(const TupleSet& a, const TupleSet& b) {
  TupleSet x = normalize(a), y = normalize(b), out;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

namespace detail {

/// (C'_j + 1) for every query with `beta` applied to each member of `set`.
/// Budget is not enforced here.
inline std::vector<std::int64_t> shifted_poisoned(const AttackInstance& inst, const TupleSet& set, int beta) {
  std::vector<std::int64_t> out(inst.n_queries());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<std::int64_t>(inst.cardinality(j)) + 1;
  for (auto t : normalize(set)) {
    if (t >= inst.n_tuples()) throw std::out_of_range("tuple index " + std::to_string(t) + " out of range");
    for (const auto& e : inst.weights().tuple(t)) out[e.query] += beta * static_cast<std::int64_t>(e.weight);
  }
  return out;
}

constexpr std::int64_t kExactLimit = std::int64_t{1} << 40;

}  // namespace detail

/// Delete-only objective Q(X) = sum_j (C_j+1) / (C_j+1 - sum_{i in X} w_ij).
inline double delete_only_objective(const AttackInstance& inst, const TupleSet& deleted) {
  const auto d = detail::shifted_poisoned(inst, deleted, -1);
  double total = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] < 1) throw ValidationError("deleting the set drives query " + std::to_string(j) + " negative");
    total += (static_cast<double>(inst.cardinality(j)) + 1.0) / static_cast<double>(d[j]);
  }
  return total;
}

/// Insert-only objective Q'(X) = sum_j (C_j+1 + sum_{i in X} w_ij) / (C_j+1).
inline double insert_only_objective(const AttackInstance& inst, const TupleSet& inserted) {
  const auto d = detail::shifted_poisoned(inst, inserted, +1);
  double total = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    total += static_cast<double>(d[j]) / (static_cast<double>(inst.cardinality(j)) + 1.0);
  }
  return total;
}

/// Q(A u B) + Q(A n B) - Q(A) - Q(B) for the delete-only objective. The
/// supermodularity theorem asserts the result is >= 0 for every A, B.
///
/// Each query's contribution N * (1/d1 + 1/d2 - 1/d3 - 1/d4) is reduced to a
/// single fraction with an exact integer numerator, so its sign never suffers
/// from cancellation.
inline double check_supermodularity(const AttackInstance& inst, const TupleSet& set_a, const TupleSet& set_b) {
  const auto du = detail::shifted_poisoned(inst, set_union(set_a, set_b), -1);
  const auto di = detail::shifted_poisoned(inst, set_intersection(set_a, set_b), -1);
  const auto da = detail::shifted_poisoned(inst, set_a, -1);
  const auto db = detail::shifted_poisoned(inst, set_b, -1);
  long double slack = 0;
  for (std::size_t j = 0; j < du.size(); ++j) {
    const auto n = static_cast<long double>(inst.cardinality(j)) + 1.0L;
    const std::int64_t d1 = du[j], d2 = di[j], d3 = da[j], d4 = db[j];
    if (d1 < 1) throw ValidationError("deleting A u B drives query " + std::to_string(j) + " negative");
    if (std::max({d1, d2, d3, d4}) < detail::kExactLimit) {
      __extension__ using i128 = __int128;
      const i128 num = i128{d2} * d3 * d4 + i128{d1} * d3 * d4 - i128{d1} * d2 * d4 - i128{d1} * d2 * d3;
      if (num == 0) continue;
      const long double den = static_cast<long double>(d1) * d2 * d3 * d4;
      slack += n * static_cast<long double>(num) / den;
    } else {
      slack += n / d1 + n / d2 - n / d3 - n / d4;
    }
  }
  return static_cast<double>(slack);
}

/// Q'(A u B) + Q'(A n B) - Q'(A) - Q'(B) for the insert-only objective; the
/// modularity theorem asserts it is exactly 0.
inline double check_modularity(const AttackInstance& inst, const TupleSet& set_a, const TupleSet& set_b) {
  const auto du = detail::shifted_poisoned(inst, set_union(set_a, set_b), +1);
  const auto di = detail::shifted_poisoned(inst, set_intersection(set_a, set_b), +1);
  const auto da = detail::shifted_poisoned(inst, set_a, +1);
  const auto db = detail::shifted_poisoned(inst, set_b, +1);
  long double residual = 0;
  for (std::size_t j = 0; j < du.size(); ++j) {
    const std::int64_t num = du[j] + di[j] - da[j] - db[j];
    if (num == 0) continue;
    residual += static_cast<long double>(num) / (static_cast<long double>(inst.cardinality(j)) + 1.0L);
  }
  return static_cast<double>(residual);
}

/// H_i = sum_j w_ij / (C_j + 1): the per-duplicate gain of tuple i under the
/// insert-only objective, which is linear: Q'(beta) = M + sum_i beta_i H_i.
inline double insertion_score(const AttackInstance& inst, std::size_t tuple) {
  double h = 0;
  for (const auto& e : inst.weights().tuple(tuple)) {
    h += static_cast<double>(e.weight) / (static_cast<double>(inst.cardinality(e.query)) + 1.0);
  }
  return h;
}

}  // namespace daca
