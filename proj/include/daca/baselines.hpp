#pragma once

// Reference attackers: uniform random operations, simulated annealing and a
// genetic algorithm, all maximizing the smoothed total Qerror under budget K.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "daca/greedy.hpp"
#include "daca/instance.hpp"
#include "daca/objective.hpp"

namespace daca {

struct SaConfig {
  std::optional<double> initial_temp;  // default: M
  double cooling = 0.995;
  std::optional<std::uint64_t> iterations;  // default: 10 * N * K
};

struct GaConfig {
  std::size_t population = 50;
  std::size_t generations = 200;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
};

struct MetaheuristicConfig {
  std::uint64_t seed = 0;
  SaConfig sa;
  GaConfig ga;
  AttackMode mode = AttackMode::mixed;
  std::size_t threads = 1;

  void validate() const {
    if (sa.initial_temp && !(*sa.initial_temp > 0)) throw ValidationError("sa.initial_temp must be positive");
    if (!(sa.cooling > 0 && sa.cooling < 1)) throw ValidationError("sa.cooling must lie in (0,1)");
    if (sa.iterations && *sa.iterations < 1) throw ValidationError("sa.iterations must be >= 1");
    if (ga.population < 1) throw ValidationError("ga.population must be >= 1");
    if (ga.generations < 1) throw ValidationError("ga.generations must be >= 1");
    if (!(ga.crossover_rate >= 0 && ga.crossover_rate <= 1)) throw ValidationError("ga.crossover_rate must lie in [0,1]");
    if (!(ga.mutation_rate >= 0 && ga.mutation_rate <= 1)) throw ValidationError("ga.mutation_rate must lie in [0,1]");
  }
};

namespace detail {

/// Mutable strategy with its poisoned cardinalities and objective kept current
/// under single-tuple beta changes in O(deg(t)).
class StrategyCursor {
public:
  explicit StrategyCursor(const AttackInstance& inst) : inst_(&inst), beta_(inst.n_tuples(), 0) {
    poisoned_.resize(inst.n_queries());
    term_.resize(inst.n_queries());
    for (std::size_t j = 0; j < poisoned_.size(); ++j) {
      poisoned_[j] = static_cast<std::int64_t>(inst.cardinality(j));
      term_[j] = 1.0;
    }
    total_ = static_cast<double>(inst.n_queries());
  }

  std::int64_t beta(std::size_t t) const { return beta_[t]; }
  Count cost() const { return cost_; }
  double total() const { return total_; }
  const std::vector<std::int64_t>& betas() const { return beta_; }

  /// Whether setting beta_t to `value` keeps the strategy valid under `mode`.
  bool allowed(std::size_t t, std::int64_t value, AttackMode mode) const {
    const auto k = static_cast<std::int64_t>(inst_->budget());
    if (value < -1 || value > k) return false;
    if (value < 0 && !allows_delete(mode)) return false;
    if (value > 0 && !allows_insert(mode)) return false;
    const auto old_abs = std::abs(beta_[t]);
    const auto new_cost = static_cast<std::int64_t>(cost_) - old_abs + std::abs(value);
    if (new_cost > k) return false;
    const auto diff = value - beta_[t];
    for (const auto& e : inst_->weights().tuple(t)) {
      if (poisoned_[e.query] + diff * static_cast<std::int64_t>(e.weight) < 0) return false;
    }
    return true;
  }

  /// Objective change if beta_t became `value`.
  double delta(std::size_t t, std::int64_t value) const {
    const auto diff = value - beta_[t];
    double d = 0;
    for (const auto& e : inst_->weights().tuple(t)) {
      const auto next = poisoned_[e.query] + diff * static_cast<std::int64_t>(e.weight);
      d += objective_term(inst_->cardinality(e.query), static_cast<Count>(next)) - term_[e.query];
    }
    return d;
  }

  void set(std::size_t t, std::int64_t value) {
    const auto diff = value - beta_[t];
    cost_ = cost_ - static_cast<Count>(std::abs(beta_[t])) + static_cast<Count>(std::abs(value));
    beta_[t] = value;
    for (const auto& e : inst_->weights().tuple(t)) {
      poisoned_[e.query] += diff * static_cast<std::int64_t>(e.weight);
      const double next = objective_term(inst_->cardinality(e.query), static_cast<Count>(poisoned_[e.query]));
      total_ += next - term_[e.query];
      term_[e.query] = next;
    }
  }

  AttackStrategy strategy() const { return AttackStrategy(beta_); }

private:
  const AttackInstance* inst_;
  std::vector<std::int64_t> beta_;
  std::vector<std::int64_t> poisoned_;
  std::vector<double> term_;
  double total_ = 0;
  Count cost_ = 0;
};

inline double fitness(const AttackInstance& inst, const std::vector<std::int64_t>& betas) {
  std::vector<std::int64_t> poisoned(inst.n_queries());
  for (std::size_t j = 0; j < poisoned.size(); ++j) poisoned[j] = static_cast<std::int64_t>(inst.cardinality(j));
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (betas[i] == 0) continue;
    for (const auto& e : inst.weights().tuple(i)) poisoned[e.query] += betas[i] * static_cast<std::int64_t>(e.weight);
  }
  double total = 0;
  for (std::size_t j = 0; j < poisoned.size(); ++j) {
    if (poisoned[j] < 0) return -std::numeric_limits<double>::infinity();
    total += objective_term(inst.cardinality(j), static_cast<Count>(poisoned[j]));
  }
  return total;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline void random_fill(const AttackInstance& inst, AttackMode mode, std::mt19937_64& rng, StrategyCursor& cur) {
  const std::size_t n = inst.n_tuples();
  if (n == 0) return;
  std::vector<std::size_t> live(n);
  for (std::size_t i = 0; i < n; ++i) live[i] = i;
  Count done = 0;
  while (done < inst.budget() && !live.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
    const std::size_t slot = pick(rng);
    const std::size_t t = live[slot];
    const bool can_del = cur.beta(t) == 0 && cur.allowed(t, -1, mode);
    const bool can_ins = cur.allowed(t, cur.beta(t) + 1, mode);
    if (!can_del && !can_ins) {
      // Nothing left to do with this tuple; retire it without spending budget.
      live[slot] = live.back();
      live.pop_back();
      continue;
    }
    bool del = can_del;
    if (can_del && can_ins) del = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    if (del) {
      cur.set(t, -1);
      live[slot] = live.back();
      live.pop_back();
    } else {
      cur.set(t, cur.beta(t) + 1);
    }
    ++done;
  }
}

}  // namespace detail

/// K operations drawn uniformly: each picks a uniform non-deleted tuple and a
/// uniform operation among those still allowed for it.
inline AttackStrategy random_attack(const AttackInstance& inst, std::uint64_t seed,
                                    AttackMode mode = AttackMode::mixed) {
  std::mt19937_64 rng(seed);
  detail::StrategyCursor cur(inst);
  detail::random_fill(inst, mode, rng, cur);
  return cur.strategy();
}

/// Objective after every accepted move, for inspection in tests.
struct SaTrace {
  double initial_objective = 0;
  std::vector<double> accepted;
};

/// Simulated annealing over beta vectors. A move changes one tuple's beta by
/// +-1 within validity; worse moves are accepted with probability exp(delta/T).
/// Returns the best strategy seen.
inline AttackStrategy sa_attack(const AttackInstance& inst, const MetaheuristicConfig& cfg,
                                SaTrace* trace = nullptr) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  detail::StrategyCursor cur(inst);
  detail::random_fill(inst, cfg.mode, rng, cur);

  const std::uint64_t iterations =
      cfg.sa.iterations.value_or(std::max<std::uint64_t>(1, 10 * inst.n_tuples() * inst.budget()));
  double temp = cfg.sa.initial_temp.value_or(static_cast<double>(std::max<std::size_t>(1, inst.n_queries())));

  std::vector<std::int64_t> best = cur.betas();
  double best_total = cur.total();
  if (trace) trace->initial_objective = cur.total();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = inst.n_tuples();
  for (std::uint64_t it = 0; it < iterations && n > 0; ++it, temp *= cfg.sa.cooling) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::int64_t dir = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? -1 : 1;
    std::int64_t next = cur.beta(t) + dir;
    if (!cur.allowed(t, next, cfg.mode)) {
      next = cur.beta(t) - dir;
      if (!cur.allowed(t, next, cfg.mode)) continue;
    }
    const double delta = cur.delta(t, next);
    const bool accept = delta >= 0 || unit(rng) < std::exp(delta / temp);
    if (!accept) continue;
    cur.set(t, next);
    if (trace) trace->accepted.push_back(cur.total());
    if (cur.total() > best_total) {
      best_total = cur.total();
      best = cur.betas();
    }
  }
  return AttackStrategy(std::move(best));
}

/// Genetic algorithm over beta vectors: tournament selection, uniform crossover
/// with budget repair (drop the lowest-|beta| operations until the budget
/// holds), single-gene mutation and one elite carried per generation.
inline AttackStrategy ga_attack(const AttackInstance& inst, const MetaheuristicConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = inst.n_tuples();
  const std::size_t pop_size = cfg.ga.population;
  const auto budget = static_cast<std::int64_t>(inst.budget());

  std::vector<std::vector<std::int64_t>> pop(pop_size);
  for (auto& chrom : pop) {
    detail::StrategyCursor cur(inst);
    detail::random_fill(inst, cfg.mode, rng, cur);
    chrom = cur.betas();
  }
  std::vector<double> fit(pop_size);
  auto evaluate = [&] {
    detail::parallel_for(pop_size, cfg.threads, [&](std::size_t p) { fit[p] = detail::fitness(inst, pop[p]); });
  };
  auto fittest = [&] {
    std::size_t best = 0;
    for (std::size_t p = 1; p < pop_size; ++p) {
      if (fit[p] > fit[best]) best = p;
    }
    return best;
  };
  evaluate();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
  auto tournament = [&]() -> const std::vector<std::int64_t>& {
    const std::size_t a = pick(rng), b = pick(rng);
    return fit[a] >= fit[b] ? pop[a] : pop[b];
  };
  auto repair = [&](std::vector<std::int64_t>& chrom) {
    Count cost = 0;
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < n; ++i) {
      if (chrom[i] != 0) {
        cost += static_cast<Count>(std::abs(chrom[i]));
        used.push_back(i);
      }
    }
    std::stable_sort(used.begin(), used.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(chrom[a]) < std::abs(chrom[b]); });
    for (std::size_t k = 0; k < used.size() && cost > inst.budget(); ++k) {
      cost -= static_cast<Count>(std::abs(chrom[used[k]]));
      chrom[used[k]] = 0;
    }
  };
  auto mutate = [&](std::vector<std::int64_t>& chrom) {
    if (n == 0) return;
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    Count cost = 0;
    for (auto b : chrom) cost += static_cast<Count>(std::abs(b));
    const auto room = budget - static_cast<std::int64_t>(cost) + std::abs(chrom[t]);
    std::vector<std::int64_t> options;
    if (allows_delete(cfg.mode) && room >= 1) options.push_back(-1);
    options.push_back(0);
    if (allows_insert(cfg.mode)) {
      for (std::int64_t v = 1; v <= room; ++v) options.push_back(v);
    }
    std::erase(options, chrom[t]);
    if (options.empty()) return;
    chrom[t] = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  };

  for (std::size_t gen = 0; gen < cfg.ga.generations; ++gen) {
    std::vector<std::vector<std::int64_t>> next;
    next.reserve(pop_size);
    next.push_back(pop[fittest()]);
    while (next.size() < pop_size) {
      const auto& p1 = tournament();
      const auto& p2 = tournament();
      std::vector<std::int64_t> child = p1;
      if (unit(rng) < cfg.ga.crossover_rate) {
        for (std::size_t i = 0; i < n; ++i) {
          if (p1[i] != p2[i] && unit(rng) < 0.5) child[i] = p2[i];
        }
        repair(child);
      }
      if (unit(rng) < cfg.ga.mutation_rate) mutate(child);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    evaluate();
  }
  return AttackStrategy(pop[fittest()]);
}

}  // namespace daca
