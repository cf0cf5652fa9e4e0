#pragma once

// Exhaustive solvers for small instances and the densest-K-subgraph gadget.
//
// The gadget maps a graph onto an attack instance: every vertex becomes a
// tuple, every edge {u, v} becomes a query supported by exactly the tuples u and
// v with the common weight x, so C_j = 2x. Deleting one endpoint turns the term
// into (2x+1)/(x+1), deleting both into 2x+1; for large x the delete-only
// optimum therefore selects a densest K-vertex subgraph.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "daca/baselines.hpp"
#include "daca/error.hpp"
#include "daca/greedy.hpp"
#include "daca/instance.hpp"
#include "daca/objective.hpp"

namespace daca {

struct Graph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// Throws InputError on self-loops, duplicate edges or out-of-range endpoints.
inline void validate_simple_graph(const Graph& g) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [u, v] = g.edges[e];
    if (u >= g.vertices || v >= g.vertices) {
      throw InputError("edge " + std::to_string(e) + " has an endpoint outside 0.." + std::to_string(g.vertices) + ")");
    }
    if (u == v) throw InputError("edge " + std::to_string(e) + " is a self-loop on vertex " + std::to_string(u));
    if (!seen.insert(std::minmax(u, v)).second) {
      throw InputError("edge " + std::to_string(e) + " duplicates {" + std::to_string(u) + "," + std::to_string(v) + "}");
    }
  }
}

/// Edge-list text: first line `V E`, then E lines `u v` (0-indexed).
inline Graph read_edge_list(std::istream& in) {
  Graph g;
  std::string line;
  std::uint64_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw InputError("empty edge list");
  std::size_t n_edges = 0;
  {
    std::istringstream hdr(line);
    if (!(hdr >> g.vertices >> n_edges)) throw InputError("expected header 'V E'", line_no);
  }
  g.edges.reserve(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    if (!next_line()) throw InputError("expected " + std::to_string(n_edges) + " edges, found " + std::to_string(e));
    std::istringstream row(line);
    std::size_t u = 0, v = 0;
    if (!(row >> u >> v)) throw InputError("expected 'u v'", line_no);
    g.edges.emplace_back(u, v);
  }
  validate_simple_graph(g);
  return g;
}

inline std::string write_edge_list(const Graph& g) {
  std::ostringstream out;
  out << g.vertices << ' ' << g.edges.size() << '\n';
  for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
  return out.str();
}

struct DksGadget {
  Graph graph;
  Count k_param = 1;
  Count x_weight = 1;
  AttackInstance instance;
};

constexpr Count kDefaultGadgetWeight = 1'000'000;

inline DksGadget build_dks_gadget(const Graph& graph, Count k_param, Count x_weight = kDefaultGadgetWeight) {
  validate_simple_graph(graph);
  if (x_weight < 1) throw InputError("gadget weight x must be >= 1");
  if (k_param < 1) throw InputError("gadget budget K must be >= 1");
  std::vector<std::vector<TupleWeight>> lists(graph.edges.size());
  for (std::size_t j = 0; j < graph.edges.size(); ++j) {
    auto [u, v] = std::minmax(graph.edges[j].first, graph.edges[j].second);
    lists[j] = {{u, x_weight}, {v, x_weight}};
  }
  JointWeightMatrix w(graph.vertices, std::move(lists));
  auto inst = AttackInstance::from_weights(std::move(w), k_param);
  return DksGadget{graph, k_param, x_weight, std::move(inst)};
}

// ---------------------------------------------------------------------------
// Graph-side exhaustive densest-K-subgraph, independent of the attack model.

struct DksSolution {
  std::vector<std::size_t> vertices;
  std::size_t induced_edges = 0;
};

inline std::size_t induced_edges(const Graph& g, const std::vector<std::size_t>& vertices) {
  std::vector<char> in(g.vertices, 0);
  for (auto v : vertices) in.at(v) = 1;
  std::size_t n = 0;
  for (auto [u, v] : g.edges) n += (in[u] && in[v]) ? 1 : 0;
  return n;
}

/// Enumerates every vertex subset of size min(k, V) (adding vertices never
/// removes induced edges). Limited to V <= 64.
inline DksSolution densest_k_subgraph(const Graph& g, std::size_t k) {
  validate_simple_graph(g);
  if (g.vertices > 64) throw CapacityError("graph-side DKS solver supports at most 64 vertices", g.vertices);
  const std::size_t size = std::min(k, g.vertices);
  std::vector<std::uint64_t> adj(g.vertices, 0);
  for (auto [u, v] : g.edges) {
    adj[u] |= std::uint64_t{1} << v;
    adj[v] |= std::uint64_t{1} << u;
  }
  DksSolution best;
  bool found = false;
  std::vector<std::size_t> pick;
  auto rec = [&](auto&& self, std::size_t start, std::uint64_t mask, std::size_t edges) -> void {
    if (pick.size() == size) {
      if (!found || edges > best.induced_edges) {
        found = true;
        best = {pick, edges};
      }
      return;
    }
    for (std::size_t v = start; v + (size - pick.size()) <= g.vertices; ++v) {
      pick.push_back(v);
      self(self, v + 1, mask | (std::uint64_t{1} << v),
           edges + static_cast<std::size_t>(std::popcount(adj[v] & mask)));
      pick.pop_back();
    }
  };
  rec(rec, 0, 0, 0);
  return best;
}

// ---------------------------------------------------------------------------
// Brute-force optimum of the attack objective.

struct ExactSolution {
  ObjectiveValue optimum;
  AttackStrategy strategy;
  std::uint64_t enumerated = 0;
};

struct BruteForceOptions {
  std::uint64_t cap = 10'000'000;
  std::size_t threads = 1;
};

namespace detail {

inline long double binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  return std::round(r);
}

}  // namespace detail

/// Number of beta vectors the enumeration visits for `mode`.
inline long double enumeration_size(std::size_t n, Count k, AttackMode mode) {
  const std::uint64_t max_del = std::min<std::uint64_t>(k, n);
  long double total = 0;
  switch (mode) {
    case AttackMode::delete_only:
      for (std::uint64_t d = 0; d <= max_del; ++d) total += detail::binomial(n, d);
      break;
    case AttackMode::insert_only:
      total = detail::binomial(n + k, k);
      break;
    case AttackMode::mixed:
      for (std::uint64_t d = 0; d <= max_del; ++d) {
        total += detail::binomial(n, d) * detail::binomial(n - d + (k - d), k - d);
      }
      break;
  }
  return total;
}

namespace detail {

class BruteForce {
public:
  BruteForce(const AttackInstance& inst, AttackMode mode)
      : inst_(inst), mode_(mode), beta_(inst.n_tuples(), 0), poisoned_(inst.n_queries()) {
    for (std::size_t j = 0; j < poisoned_.size(); ++j) poisoned_[j] = static_cast<std::int64_t>(inst.cardinality(j));
  }

  /// Values of beta_i tried in increasing order so the first optimum found is
  /// the lexicographically smallest witness.
  std::vector<std::int64_t> choices(Count used) const {
    std::vector<std::int64_t> out;
    const auto room = static_cast<std::int64_t>(inst_.budget() - used);
    if (allows_delete(mode_) && room >= 1) out.push_back(-1);
    out.push_back(0);
    if (allows_insert(mode_)) {
      for (std::int64_t v = 1; v <= room; ++v) out.push_back(v);
    }
    return out;
  }

  bool assign(std::size_t i, std::int64_t v) {
    bool ok = true;
    for (const auto& e : inst_.weights().tuple(i)) {
      poisoned_[e.query] += v * static_cast<std::int64_t>(e.weight);
      ok = ok && poisoned_[e.query] >= 0;
    }
    beta_[i] = v;
    return ok;
  }

  void unassign(std::size_t i) {
    const auto v = beta_[i];
    for (const auto& e : inst_.weights().tuple(i)) poisoned_[e.query] -= v * static_cast<std::int64_t>(e.weight);
    beta_[i] = 0;
  }

  void run(std::size_t i, Count used) {
    if (i == beta_.size() || used == inst_.budget()) {
      leaf();
      return;
    }
    for (auto v : choices(used)) {
      const bool ok = assign(i, v);
      // Negative cardinalities only arise on instances violating C_j = sum w_ij.
      if (ok) run(i + 1, used + static_cast<Count>(v < 0 ? -v : v));
      else ++count_;
      unassign(i);
    }
  }

  void leaf() {
    ++count_;
    double total = 0;
    for (std::size_t j = 0; j < poisoned_.size(); ++j) {
      total += objective_term(inst_.cardinality(j), static_cast<Count>(poisoned_[j]));
    }
    if (!has_best_ || total > best_total_) {
      has_best_ = true;
      best_total_ = total;
      best_ = beta_;
    }
  }

  bool has_best_ = false;
  double best_total_ = 0;
  std::vector<std::int64_t> best_;
  std::uint64_t count_ = 0;

private:
  const AttackInstance& inst_;
  AttackMode mode_;
  std::vector<std::int64_t> beta_;
  std::vector<std::int64_t> poisoned_;
};

}  // namespace detail

/// Global optimum of the objective over every valid beta vector allowed by
/// `mode`. Throws CapacityError when the candidate count exceeds the cap.
/// Ties resolve to the lexicographically smallest beta vector (-1 < 0 < 1 ...),
/// independent of the thread count.
inline ExactSolution brute_force_optimum(const AttackInstance& inst, AttackMode mode,
                                         const BruteForceOptions& opts = {}) {
  const long double size = enumeration_size(inst.n_tuples(), inst.budget(), mode);
  if (size > static_cast<long double>(opts.cap)) {
    throw CapacityError(std::string("brute force (") + to_string(mode) + ") exceeds cap of " +
                            std::to_string(opts.cap),
                        size >= 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(size));
  }

  std::vector<std::int64_t> best;
  double best_total = 0;
  std::uint64_t count = 0;

  if (inst.n_tuples() == 0) {
    detail::BruteForce bf(inst, mode);
    bf.run(0, 0);
    best = bf.best_;
    count = bf.count_;
  } else {
    // One chunk per value of the first tuple's beta, reduced in chunk order.
    detail::BruteForce probe(inst, mode);
    const auto first = probe.choices(0);
    std::vector<detail::BruteForce> chunks(first.size(), detail::BruteForce(inst, mode));
    detail::parallel_for(first.size(), opts.threads, [&](std::size_t c) {
      auto& bf = chunks[c];
      const auto v = first[c];
      if (bf.assign(0, v)) bf.run(1, static_cast<Count>(v < 0 ? -v : v));
      else ++bf.count_;
      bf.unassign(0);
    });
    bool have = false;
    for (auto& bf : chunks) {
      count += bf.count_;
      if (bf.has_best_ && (!have || bf.best_total_ > best_total)) {
        have = true;
        best_total = bf.best_total_;
        best = bf.best_;
      }
    }
  }
  ExactSolution sol;
  sol.strategy = AttackStrategy(std::move(best));
  sol.optimum = objective_eq3(inst, sol.strategy);
  sol.enumerated = count;
  return sol;
}

// ---------------------------------------------------------------------------
// Curvature of the delete-only objective:
//   kappa = 1 - min_t min_{A,B subset of R - t} m(A,t) / m(B,t)
// with m(S,t) = Q(S + t) - Q(S).

struct KappaOptions {
  /// Relations up to this size are enumerated completely.
  std::size_t exhaustive_limit = 14;
  /// Largest context set sampled beyond the limit (default 2K).
  std::optional<std::size_t> max_set_size;
  std::uint64_t samples_per_tuple = 4096;
  std::uint64_t seed = 0;
};

struct KappaEstimate {
  double kappa = 0;
  bool exhaustive = false;
  std::uint64_t contexts = 0;  // (t, S) marginals evaluated
  std::size_t worst_tuple = 0;
};

namespace detail {

/// Tracks min and max of the marginal gain of deleting one tuple over the
/// context sets visited.
class MarginalRange {
public:
  MarginalRange(const AttackInstance& inst, std::size_t t) : inst_(inst), t_(t) {
    for (const auto& e : inst.weights().tuple(t)) {
      shift_.push_back(static_cast<std::int64_t>(inst.cardinality(e.query)) + 1);
    }
  }

  /// Marginal with the context's per-query deleted weight given by `removed`.
  void observe(const std::vector<std::int64_t>& removed) {
    double m = 0;
    std::size_t k = 0;
    for (const auto& e : inst_.weights().tuple(t_)) {
      const double n = static_cast<double>(inst_.cardinality(e.query)) + 1.0;
      const auto d = shift_[k++] - removed[e.query];
      m += n / static_cast<double>(d - static_cast<std::int64_t>(e.weight)) - n / static_cast<double>(d);
    }
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    ++count;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;

private:
  const AttackInstance& inst_;
  std::size_t t_;
  std::vector<std::int64_t> shift_;
};

}  // namespace detail

/// Throws DegenerateError when no tuple has a positive marginal anywhere.
inline KappaEstimate estimate_kappa(const AttackInstance& inst, const KappaOptions& opts = {}) {
  const std::size_t n = inst.n_tuples();
  const bool exhaustive = n <= opts.exhaustive_limit;
  const std::size_t max_size =
      exhaustive ? (n == 0 ? 0 : n - 1) : opts.max_set_size.value_or(static_cast<std::size_t>(2 * inst.budget()));
  std::mt19937_64 rng(opts.seed);

  KappaEstimate est;
  est.exhaustive = exhaustive;
  double min_ratio = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> removed(inst.n_queries(), 0);

  auto add = [&](std::size_t i, int sign) {
    for (const auto& e : inst.weights().tuple(i)) removed[e.query] += sign * static_cast<std::int64_t>(e.weight);
  };

  for (std::size_t t = 0; t < n; ++t) {
    if (inst.weights().tuple(t).empty()) continue;
    detail::MarginalRange range(inst, t);
    if (exhaustive) {
      auto rec = [&](auto&& self, std::size_t i, std::size_t size) -> void {
        if (i == n) {
          range.observe(removed);
          return;
        }
        self(self, i + 1, size);
        if (i != t && size < max_size) {
          add(i, 1);
          self(self, i + 1, size + 1);
          add(i, -1);
        }
      };
      rec(rec, 0, 0);
    } else {
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != t) others.push_back(i);
      }
      const std::size_t cap = std::min(max_size, others.size());
      range.observe(removed);  // empty context
      for (std::uint64_t s = 0; s < opts.samples_per_tuple; ++s) {
        const std::size_t size = std::uniform_int_distribution<std::size_t>(0, cap)(rng);
        std::vector<std::size_t> pick;
        std::sample(others.begin(), others.end(), std::back_inserter(pick), size, rng);
        for (auto i : pick) add(i, 1);
        range.observe(removed);
        for (auto i : pick) add(i, -1);
      }
    }
    est.contexts += range.count;
    if (!(range.hi > 1e-12)) continue;
    const double ratio = range.lo / range.hi;
    if (ratio < min_ratio) {
      min_ratio = ratio;
      est.worst_tuple = t;
    }
  }
  if (!std::isfinite(min_ratio)) throw DegenerateError("no tuple has a positive marginal gain");
  est.kappa = std::clamp(1.0 - min_ratio, 0.0, 1.0);
  return est;
}

}  // namespace daca
