#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "daca/instance.hpp"
#include "daca/objective.hpp"

namespace daca {

enum class AttackMode { mixed, delete_only, insert_only };

inline const char* to_string(AttackMode m) {
  switch (m) {
    case AttackMode::mixed: return "mixed";
    case AttackMode::delete_only: return "delete-only";
    case AttackMode::insert_only: return "insert-only";
  }
  return "unknown";
}

inline std::optional<AttackMode> parse_attack_mode(const std::string& s) {
  if (s == "mixed") return AttackMode::mixed;
  if (s == "delete-only") return AttackMode::delete_only;
  if (s == "insert-only") return AttackMode::insert_only;
  return std::nullopt;
}

inline bool allows_delete(AttackMode m) { return m != AttackMode::insert_only; }
inline bool allows_insert(AttackMode m) { return m != AttackMode::delete_only; }

/// How a candidate operation is scored.
///  - objective: marginal change of the total smoothed Qerror against the clean
///    cardinalities (the quantity the approximation analysis reasons about).
///  - local: Qerror between the current poisoned cardinality and the candidate
///    one, summed over the tuple's queries. Provided for comparison only.
enum class GainRule { objective, local };

enum class OpSign { remove = -1, duplicate = +1 };

inline const char* to_string(OpSign op) { return op == OpSign::remove ? "delete" : "insert"; }

struct GreedyStep {
  TupleId tuple;
  OpSign op;
  double gain;       // objective after - objective before
  double objective;  // total objective after this step
};

struct GreedyTrace {
  double initial_objective = 0.0;
  std::vector<GreedyStep> steps;
};

struct GreedyOptions {
  AttackMode mode = AttackMode::mixed;
  GainRule gain_rule = GainRule::objective;
};

struct GreedyResult {
  AttackStrategy strategy;
  GreedyTrace trace;
};

namespace detail {

/// Relative tolerance under which two candidate scores count as tied.
constexpr double kTieTolerance = 1e-12;

struct Candidate {
  std::size_t tuple = 0;
  OpSign op = OpSign::remove;
  double score = 0.0;
};

/// True when `c` should replace `best`: strictly larger score, or a tie that
/// prefers delete over insert and then the smaller tuple index.
inline bool better(const Candidate& c, const Candidate& best) {
  const double tol = kTieTolerance * std::max(1.0, std::max(std::abs(c.score), std::abs(best.score)));
  if (c.score > best.score + tol) return true;
  if (c.score < best.score - tol) return false;
  if (c.op != best.op) return c.op == OpSign::remove;
  return c.tuple < best.tuple;
}

class GreedyState {
public:
  GreedyState(const AttackInstance& inst, const GreedyOptions& opts)
      : inst_(inst),
        opts_(opts),
        beta_(inst.n_tuples(), 0),
        poisoned_(inst.n_queries()),
        term_(inst.n_queries()),
        del_score_(inst.n_tuples(), 0.0),
        ins_score_(inst.n_tuples(), 0.0),
        stamp_(inst.n_tuples(), 0) {
    for (std::size_t j = 0; j < poisoned_.size(); ++j) {
      poisoned_[j] = static_cast<std::int64_t>(inst.cardinality(j));
      term_[j] = objective_term(inst.cardinality(j), static_cast<Count>(poisoned_[j]));
    }
    for (std::size_t i = 0; i < inst.n_tuples(); ++i) rescore(i);
  }

  double total() const {
    double t = 0;
    for (double v : term_) t += v;
    return t;
  }

  std::optional<Candidate> best_candidate() const {
    std::optional<Candidate> best;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (can_delete(i) && std::isfinite(del_score_[i])) {
        Candidate c{i, OpSign::remove, del_score_[i]};
        if (!best || better(c, *best)) best = c;
      }
      if (can_insert(i) && std::isfinite(ins_score_[i])) {
        Candidate c{i, OpSign::duplicate, ins_score_[i]};
        if (!best || better(c, *best)) best = c;
      }
    }
    return best;
  }

  /// Marginal objective change if `op` were applied to `tuple` now.
  double objective_gain(std::size_t tuple, OpSign op) const {
    const auto sign = static_cast<std::int64_t>(op);
    double gain = 0;
    for (const auto& e : inst_.weights().tuple(tuple)) {
      const auto next = poisoned_[e.query] + sign * static_cast<std::int64_t>(e.weight);
      if (next < 0) return -std::numeric_limits<double>::infinity();
      gain += objective_term(inst_.cardinality(e.query), static_cast<Count>(next)) - term_[e.query];
    }
    return gain;
  }

  void apply(std::size_t tuple, OpSign op) {
    const auto sign = static_cast<std::int64_t>(op);
    beta_[tuple] = op == OpSign::remove ? -1 : beta_[tuple] + 1;
    for (const auto& e : inst_.weights().tuple(tuple)) {
      poisoned_[e.query] += sign * static_cast<std::int64_t>(e.weight);
      term_[e.query] = objective_term(inst_.cardinality(e.query), static_cast<Count>(poisoned_[e.query]));
    }
    // Only tuples sharing a query with `tuple` see a changed score.
    ++epoch_;
    for (const auto& e : inst_.weights().tuple(tuple)) {
      for (const auto& other : inst_.weights().query(e.query)) {
        if (stamp_[other.tuple] == epoch_) continue;
        stamp_[other.tuple] = epoch_;
        rescore(other.tuple);
      }
    }
  }

  AttackStrategy strategy() const { return AttackStrategy(beta_); }

private:
  bool can_delete(std::size_t i) const { return allows_delete(opts_.mode) && beta_[i] == 0; }
  bool can_insert(std::size_t i) const { return allows_insert(opts_.mode) && beta_[i] >= 0; }

  double local_score(std::size_t tuple, OpSign op) const {
    const auto sign = static_cast<std::int64_t>(op);
    double score = 0;
    for (const auto& e : inst_.weights().tuple(tuple)) {
      const auto cur = poisoned_[e.query];
      const auto next = cur + sign * static_cast<std::int64_t>(e.weight);
      if (next < 0) return -std::numeric_limits<double>::infinity();
      score += objective_term(static_cast<Count>(cur), static_cast<Count>(next)) - 1.0;
    }
    return score;
  }

  void rescore(std::size_t i) {
    if (beta_[i] < 0) return;
    if (opts_.gain_rule == GainRule::objective) {
      del_score_[i] = beta_[i] == 0 ? objective_gain(i, OpSign::remove) : 0.0;
      ins_score_[i] = objective_gain(i, OpSign::duplicate);
    } else {
      del_score_[i] = beta_[i] == 0 ? local_score(i, OpSign::remove) : 0.0;
      ins_score_[i] = local_score(i, OpSign::duplicate);
    }
  }

  const AttackInstance& inst_;
  GreedyOptions opts_;
  std::vector<std::int64_t> beta_;
  std::vector<std::int64_t> poisoned_;
  std::vector<double> term_;
  std::vector<double> del_score_;
  std::vector<double> ins_score_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
};

}  // namespace detail

/// Greedy attack strategy generation.
///
/// Each of at most K steps applies the single delete (of a tuple not touched
/// yet) or single duplicate-insert with the largest score. Ties go to delete,
/// then to the smaller tuple index. The loop stops early once no candidate has
/// a strictly positive score. A deleted tuple is masked for the rest of the run;
/// a tuple may be duplicated in several steps.
///
/// Runs in O(|nnz| + K * (N + sum of affected degrees)), within the
/// O(|Res| + N*K*M) bound.
inline GreedyResult greedy_attack(const AttackInstance& inst, const GreedyOptions& opts = {}) {
  detail::GreedyState state(inst, opts);
  GreedyResult result;
  result.trace.initial_objective = state.total();
  double current = result.trace.initial_objective;
  for (Count step = 0; step < inst.budget(); ++step) {
    auto best = state.best_candidate();
    if (!best || !(best->score > 0.0)) break;
    state.apply(best->tuple, best->op);
    const double after = state.total();
    result.trace.steps.push_back({TupleId{best->tuple}, best->op, after - current, after});
    current = after;
  }
  result.strategy = state.strategy();
  return result;
}

/// Same loop with the disallowed operation type skipped.
inline GreedyResult greedy_attack_restricted(const AttackInstance& inst, AttackMode mode,
                                             GainRule rule = GainRule::objective) {
  return greedy_attack(inst, GreedyOptions{mode, rule});
}

}  // namespace daca
