#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "daca/error.hpp"

namespace daca {

using Count = std::uint64_t;

struct TupleId {
  std::size_t index = 0;
  friend auto operator<=>(const TupleId&, const TupleId&) = default;
};

struct QueryId {
  std::size_t index = 0;
  friend auto operator<=>(const QueryId&, const QueryId&) = default;
};

/// One nonzero joint weight w_ij in a per-query list.
struct TupleWeight {
  std::size_t tuple;
  Count weight;
  friend bool operator==(const TupleWeight&, const TupleWeight&) = default;
};

/// One nonzero joint weight seen from the tuple side.
struct QueryWeight {
  std::size_t query;
  Count weight;
  friend bool operator==(const QueryWeight&, const QueryWeight&) = default;
};

/// A (query, tuple, weight) triple, the interchange form of a sparse entry.
struct WeightTriple {
  std::size_t query;
  std::size_t tuple;
  Count weight;
};

/// Sparse joint-weight matrix of one attacked relation against a workload.
///
/// Stored query-major (each query holds its supported tuples sorted by index)
/// with a tuple-major inverted index built once at construction, so that
/// per-tuple gain updates cost O(deg(t)).
class JointWeightMatrix {
public:
  JointWeightMatrix() = default;

  /// Takes ownership of per-query lists. Zero weights are dropped. Throws
  /// InputError on out-of-range tuples, unsorted lists or duplicates.
  JointWeightMatrix(std::size_t n_tuples, std::vector<std::vector<TupleWeight>> by_query)
      : n_tuples_(n_tuples), by_query_(std::move(by_query)), by_tuple_(n_tuples) {
    for (std::size_t j = 0; j < by_query_.size(); ++j) {
      auto& list = by_query_[j];
      std::erase_if(list, [](const TupleWeight& e) { return e.weight == 0; });
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (list[k].tuple >= n_tuples_) {
          throw InputError("query " + std::to_string(j) + " references tuple " +
                           std::to_string(list[k].tuple) + " outside 0.." +
                           std::to_string(n_tuples_) + ")");
        }
        if (k > 0 && list[k - 1].tuple >= list[k].tuple) {
          throw InputError("query " + std::to_string(j) +
                           " entries must be sorted by tuple without duplicates");
        }
      }
    }
    for (std::size_t j = 0; j < by_query_.size(); ++j) {
      for (const auto& e : by_query_[j]) by_tuple_[e.tuple].push_back({j, e.weight});
    }
  }

  /// An all-zero matrix.
  static JointWeightMatrix zeros(std::size_t n_tuples, std::size_t n_queries) {
    return JointWeightMatrix(n_tuples, std::vector<std::vector<TupleWeight>>(n_queries));
  }

  /// Builds from unordered triples; duplicate (query, tuple) pairs are rejected.
  static JointWeightMatrix from_triples(std::size_t n_tuples, std::size_t n_queries,
                                        std::vector<WeightTriple> triples) {
    std::vector<std::vector<TupleWeight>> lists(n_queries);
    for (const auto& t : triples) {
      if (t.query >= n_queries) {
        throw InputError("query index " + std::to_string(t.query) + " outside 0.." +
                         std::to_string(n_queries) + ")");
      }
      if (t.tuple >= n_tuples) {
        throw InputError("tuple index " + std::to_string(t.tuple) + " outside 0.." +
                         std::to_string(n_tuples) + ")");
      }
      lists[t.query].push_back({t.tuple, t.weight});
    }
    for (std::size_t j = 0; j < n_queries; ++j) {
      auto& list = lists[j];
      std::sort(list.begin(), list.end(),
                [](const TupleWeight& a, const TupleWeight& b) { return a.tuple < b.tuple; });
      auto dup = std::adjacent_find(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.tuple == b.tuple;
      });
      if (dup != list.end()) {
        throw InputError("duplicate entry for (query " + std::to_string(j) + ", tuple " +
                         std::to_string(dup->tuple) + ")");
      }
    }
    return JointWeightMatrix(n_tuples, std::move(lists));
  }

  std::size_t n_tuples() const noexcept { return n_tuples_; }
  std::size_t n_queries() const noexcept { return by_query_.size(); }

  std::span<const TupleWeight> query(std::size_t j) const { return by_query_.at(j); }
  std::span<const QueryWeight> tuple(std::size_t i) const { return by_tuple_.at(i); }

  Count weight(std::size_t tuple, std::size_t query) const {
    const auto& list = by_query_.at(query);
    auto it = std::lower_bound(list.begin(), list.end(), tuple,
                               [](const TupleWeight& e, std::size_t t) { return e.tuple < t; });
    return (it != list.end() && it->tuple == tuple) ? it->weight : 0;
  }

  Count row_sum(std::size_t j) const {
    Count sum = 0;
    for (const auto& e : by_query_.at(j)) sum += e.weight;
    return sum;
  }

  std::size_t nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& l : by_query_) n += l.size();
    return n;
  }

  /// All entries in (query, tuple) order.
  std::vector<WeightTriple> triples() const {
    std::vector<WeightTriple> out;
    out.reserve(nnz());
    for (std::size_t j = 0; j < by_query_.size(); ++j) {
      for (const auto& e : by_query_[j]) out.push_back({j, e.tuple, e.weight});
    }
    return out;
  }

  friend bool operator==(const JointWeightMatrix& a, const JointWeightMatrix& b) {
    return a.n_tuples_ == b.n_tuples_ && a.by_query_ == b.by_query_;
  }

private:
  std::size_t n_tuples_ = 0;
  std::vector<std::vector<TupleWeight>> by_query_;
  std::vector<std::vector<QueryWeight>> by_tuple_;
};

/// Everything an attacker knows: joint weights, clean cardinalities C_j and the
/// operation budget K for a single attacked relation.
class AttackInstance {
public:
  AttackInstance(JointWeightMatrix weights, std::vector<Count> cardinalities, Count budget)
      : weights_(std::move(weights)), cardinalities_(std::move(cardinalities)), budget_(budget) {
    if (cardinalities_.size() != weights_.n_queries()) {
      throw InputError("cardinality list has " + std::to_string(cardinalities_.size()) +
                       " entries for " + std::to_string(weights_.n_queries()) + " queries");
    }
    if (budget_ < 1) throw InputError("budget must be at least 1");
  }

  /// Derives C_j = sum_i w_ij, the decomposition that holds for result-set input.
  static AttackInstance from_weights(JointWeightMatrix weights, Count budget) {
    std::vector<Count> card(weights.n_queries());
    for (std::size_t j = 0; j < card.size(); ++j) card[j] = weights.row_sum(j);
    return AttackInstance(std::move(weights), std::move(card), budget);
  }

  const JointWeightMatrix& weights() const noexcept { return weights_; }
  std::span<const Count> cardinalities() const noexcept { return cardinalities_; }
  Count cardinality(std::size_t j) const { return cardinalities_.at(j); }
  Count budget() const noexcept { return budget_; }
  std::size_t n_tuples() const noexcept { return weights_.n_tuples(); }
  std::size_t n_queries() const noexcept { return weights_.n_queries(); }

  /// Same data under a different budget.
  AttackInstance with_budget(Count budget) const {
    return AttackInstance(weights_, cardinalities_, budget);
  }

  bool satisfies_decomposition() const {
    for (std::size_t j = 0; j < n_queries(); ++j) {
      if (weights_.row_sum(j) != cardinalities_[j]) return false;
    }
    return true;
  }

  friend bool operator==(const AttackInstance&, const AttackInstance&) = default;

private:
  JointWeightMatrix weights_;
  std::vector<Count> cardinalities_;
  Count budget_;
};

/// Per-tuple operation codes: -1 deletes the tuple, k > 0 re-inserts k
/// duplicates, 0 leaves it alone.
class AttackStrategy {
public:
  AttackStrategy() = default;
  explicit AttackStrategy(std::size_t n_tuples) : betas_(n_tuples, 0) {}
  explicit AttackStrategy(std::vector<std::int64_t> betas) : betas_(std::move(betas)) {}

  std::size_t size() const noexcept { return betas_.size(); }
  std::int64_t beta(std::size_t i) const { return betas_.at(i); }
  void set_beta(std::size_t i, std::int64_t b) { betas_.at(i) = b; }
  std::span<const std::int64_t> betas() const noexcept { return betas_; }

  /// Sum of |beta_i|, the budget this strategy consumes.
  Count cost() const {
    Count c = 0;
    for (auto b : betas_) c += static_cast<Count>(b < 0 ? -b : b);
    return c;
  }

  std::size_t deletions() const {
    return static_cast<std::size_t>(std::count_if(betas_.begin(), betas_.end(), [](auto b) { return b < 0; }));
  }

  /// Number of duplicate insertions, sum of positive betas.
  Count insertions() const {
    Count c = 0;
    for (auto b : betas_) c += b > 0 ? static_cast<Count>(b) : 0;
    return c;
  }

  bool empty() const {
    return std::all_of(betas_.begin(), betas_.end(), [](auto b) { return b == 0; });
  }

  friend bool operator==(const AttackStrategy&, const AttackStrategy&) = default;

private:
  std::vector<std::int64_t> betas_;
};

enum class ViolationKind { size_mismatch, budget_exceeded, beta_out_of_range, negative_cardinality };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::size_mismatch: return "size_mismatch";
    case ViolationKind::budget_exceeded: return "budget_exceeded";
    case ViolationKind::beta_out_of_range: return "beta_out_of_range";
    case ViolationKind::negative_cardinality: return "negative_cardinality";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::size_t index = 0;  // tuple or query the violation refers to, when meaningful
  std::string detail;
};

struct StrategyVerdict {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  const Violation* first() const noexcept { return violations.empty() ? nullptr : &violations.front(); }
  bool has(ViolationKind k) const {
    return std::any_of(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; });
  }
  std::string message() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += std::string(to_string(v.kind)) + ": " + v.detail;
    }
    return out;
  }
};

namespace detail {

inline std::vector<std::int64_t> poisoned_all(const AttackInstance& inst, const AttackStrategy& s) {
  std::vector<std::int64_t> out(inst.n_queries());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<std::int64_t>(inst.cardinality(j));
  const auto& w = inst.weights();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = s.beta(i);
    if (b == 0) continue;
    for (const auto& e : w.tuple(i)) out[e.query] += b * static_cast<std::int64_t>(e.weight);
  }
  return out;
}

}  // namespace detail

/// Checks the budget, the beta range {-1, 0, 1..K} and the non-negativity of
/// every poisoned cardinality. Lists every violation found.
inline StrategyVerdict validate_strategy(const AttackInstance& inst, const AttackStrategy& s) {
  StrategyVerdict verdict;
  if (s.size() != inst.n_tuples()) {
    verdict.violations.push_back({ViolationKind::size_mismatch, s.size(),
                                  "strategy covers " + std::to_string(s.size()) + " tuples, instance has " +
                                      std::to_string(inst.n_tuples())});
    return verdict;
  }
  const auto k = static_cast<std::int64_t>(inst.budget());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = s.beta(i);
    if (b < -1 || b > k) {
      verdict.violations.push_back({ViolationKind::beta_out_of_range, i,
                                    "tuple " + std::to_string(i) + " has beta " + std::to_string(b) +
                                        " outside {-1,0,..," + std::to_string(k) + "}"});
    }
  }
  if (s.cost() > inst.budget()) {
    verdict.violations.push_back({ViolationKind::budget_exceeded, 0,
                                  "sum |beta| = " + std::to_string(s.cost()) + " exceeds budget " +
                                      std::to_string(inst.budget())});
  }
  const auto poisoned = detail::poisoned_all(inst, s);
  for (std::size_t j = 0; j < poisoned.size(); ++j) {
    if (poisoned[j] < 0) {
      verdict.violations.push_back({ViolationKind::negative_cardinality, j,
                                    "query " + std::to_string(j) + " poisoned cardinality " +
                                        std::to_string(poisoned[j])});
    }
  }
  return verdict;
}

inline void require_valid(const AttackInstance& inst, const AttackStrategy& s) {
  auto verdict = validate_strategy(inst, s);
  if (!verdict.valid()) throw ValidationError("invalid strategy: " + verdict.message());
}

/// C'_j = C_j + sum_i beta_i * w_ij in exact integer arithmetic.
inline Count poisoned_cardinality(const AttackInstance& inst, const AttackStrategy& s, QueryId query) {
  if (query.index >= inst.n_queries()) {
    throw std::out_of_range("query index " + std::to_string(query.index) + " outside 0.." +
                            std::to_string(inst.n_queries()) + ")");
  }
  if (s.size() != inst.n_tuples()) throw ValidationError("strategy size does not match instance");
  auto value = static_cast<std::int64_t>(inst.cardinality(query.index));
  for (const auto& e : inst.weights().query(query.index)) {
    value += s.beta(e.tuple) * static_cast<std::int64_t>(e.weight);
  }
  if (value < 0) {
    throw ValidationError("query " + std::to_string(query.index) + " has negative poisoned cardinality");
  }
  return static_cast<Count>(value);
}

/// All poisoned cardinalities at once, O(nnz(strategy support) + M).
inline std::vector<Count> poisoned_cardinalities(const AttackInstance& inst, const AttackStrategy& s) {
  if (s.size() != inst.n_tuples()) throw ValidationError("strategy size does not match instance");
  auto raw = detail::poisoned_all(inst, s);
  std::vector<Count> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (raw[j] < 0) throw ValidationError("query " + std::to_string(j) + " has negative poisoned cardinality");
    out[j] = static_cast<Count>(raw[j]);
  }
  return out;
}

}  // namespace daca
