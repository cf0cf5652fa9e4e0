// daca: extract -> attack -> evaluate -> defend -> verify from the command line.
//
// Exit codes: 0 ok, 1 property verification failed, 2 input error,
// 3 brute-force capacity exceeded.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <thread>

#include "daca/daca.hpp"

namespace {

using namespace daca;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kVerifyFailed = 1, kInputError = 2, kCapacityError = 3 };

struct Manifest {
  explicit Manifest(std::string sub) : subcommand(std::move(sub)) {}

  std::string subcommand;
  json inputs = json::object();
  json outputs = json::object();
  std::optional<std::uint64_t> seed;
  json timings = json::object();
  Clock::time_point start = Clock::now();

  void lap(const std::string& name) {
    const auto now = Clock::now();
    timings[name] = std::chrono::duration<double>(now - start).count();
    start = now;
  }
};

struct Global {
  bool json_errors = false;
  std::size_t threads = 0;
};

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Writes `<out>.manifest.json` next to the primary output.
void write_manifest(const CLI::App& app, const Manifest& m, const std::string& out) {
  json j{{"subcommand", m.subcommand},
         {"config", app.config_to_str(true, false)},
         {"inputs", m.inputs},
         {"outputs", m.outputs},
         {"tool_version", kVersion},
         {"timings_s", m.timings}};
  if (m.seed) j["seed"] = *m.seed;
  write_text_file(out + ".manifest.json", j.dump(2) + "\n");
}

AttackStrategy load_strategy(const std::string& path, const AttackInstance& inst) {
  auto s = strategy_from_json(read_json_file(path), inst.n_tuples());
  auto verdict = validate_strategy(inst, s);
  if (!verdict.valid()) throw InputError(path + ": " + verdict.message());
  return s;
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string input;
  std::size_t n_tuples = 0;
  std::size_t n_queries = 0;
  Count budget = 1;
  bool grouped = false;
  std::string out;
};

int run_extract(const CLI::App& app, const ExtractArgs& a) {
  Manifest m("extract");
  auto w = a.grouped ? load_grouped_counts_csv(a.input, a.n_tuples, a.n_queries)
                     : extract_joint_weights_csv(a.input, a.n_tuples, a.n_queries);
  auto inst = AttackInstance::from_weights(std::move(w), a.budget);
  m.lap("ingest");
  save_instance(a.out, inst);
  m.lap("write");
  m.inputs["result_set"] = a.input;
  m.outputs["instance"] = a.out;
  write_manifest(app, m, a.out);
  return kOk;
}

struct AttackArgs {
  std::string instance;
  std::string algo = "greedy";
  std::string mode = "mixed";
  std::optional<Count> budget;
  std::uint64_t seed = 0;
  std::string gain = "objective";
  std::string out;
  std::string trace;
  std::optional<double> sa_temp;
  double sa_cooling = 0.995;
  std::optional<std::uint64_t> sa_iterations;
  std::size_t ga_population = 50;
  std::size_t ga_generations = 200;
  double ga_crossover = 0.9;
  double ga_mutation = 0.1;
};

int run_attack(const CLI::App& app, const AttackArgs& a, const Global& g) {
  Manifest m("attack");
  auto inst = load_instance(a.instance);
  if (a.budget) inst = inst.with_budget(*a.budget);
  const auto mode = *parse_attack_mode(a.mode);
  m.lap("load");

  AttackStrategy strategy;
  std::optional<GreedyTrace> trace;
  if (a.algo == "greedy") {
    auto r = greedy_attack(inst, {mode, a.gain == "local" ? GainRule::local : GainRule::objective});
    strategy = std::move(r.strategy);
    trace = std::move(r.trace);
  } else if (a.algo == "random") {
    strategy = random_attack(inst, a.seed, mode);
    m.seed = a.seed;
  } else {
    MetaheuristicConfig cfg;
    cfg.seed = a.seed;
    cfg.mode = mode;
    cfg.threads = resolve_threads(g.threads);
    cfg.sa = {a.sa_temp, a.sa_cooling, a.sa_iterations};
    cfg.ga = {a.ga_population, a.ga_generations, a.ga_crossover, a.ga_mutation};
    try {
      cfg.validate();
    } catch (const ValidationError& e) {
      throw InputError(e.what());
    }
    strategy = a.algo == "sa" ? sa_attack(inst, cfg) : ga_attack(inst, cfg);
    m.seed = a.seed;
  }
  m.lap("attack");

  const auto obj = objective_eq3(inst, strategy);
  json out = strategy_to_json(strategy);
  write_text_file(a.out, out.dump() + "\n");
  m.outputs["strategy"] = a.out;
  if (!a.trace.empty()) {
    if (!trace) throw InputError("--trace is only available for --algo greedy");
    write_text_file(a.trace, trace_to_jsonl(*trace));
    m.outputs["trace"] = a.trace;
  }
  m.lap("write");
  m.inputs["instance"] = a.instance;
  write_manifest(app, m, a.out);
  std::cout << "objective " << std::setprecision(17) << obj.total << " (clean " << inst.n_queries()
            << "), operations " << strategy.cost() << "/" << inst.budget() << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string instance;
  std::string strategy;
  std::string defense = "none";
  double alpha = 0;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  std::vector<std::string> members;
  std::vector<std::string> weights;
  std::optional<std::size_t> fit_queries;
  std::string out;
};

int run_evaluate(const CLI::App& app, const EvaluateArgs& a) {
  Manifest m("evaluate");
  const auto inst = load_instance(a.instance);
  const auto strategy = a.strategy.empty() ? AttackStrategy(inst.n_tuples()) : load_strategy(a.strategy, inst);
  m.lap("load");

  const auto clean = clean_estimates(inst);
  const auto attacked = oracle_estimates(inst, strategy);
  std::vector<std::pair<std::string, QerrorReport>> rows{{"clean", evaluate(inst, clean)},
                                                         {"attacked", evaluate(inst, attacked)}};
  json extra = json::object();

  if (a.defense == "noise") {
    NoiseOptions opts{a.alpha, a.seed, a.sigma};
    m.seed = a.seed;
    rows.emplace_back("noise/clean", evaluate(inst, noise_defense(clean, opts)));
    rows.emplace_back("noise/attacked", evaluate(inst, noise_defense(attacked, opts)));
    extra["alpha"] = a.alpha;
  } else if (a.defense == "ensemble") {
    std::vector<std::vector<double>> sets{attacked};
    for (const auto& member : a.members) {
      sets.push_back(member == "clean" ? clean : oracle_estimates(inst, load_strategy(member, inst)));
    }
    std::vector<double> w;
    if (a.weights.size() == 1 && a.weights[0] == "fit") {
      const std::size_t n_fit = std::min(a.fit_queries.value_or(inst.n_queries()), inst.n_queries());
      std::vector<std::size_t> q(n_fit);
      std::vector<double> truth(n_fit);
      for (std::size_t j = 0; j < n_fit; ++j) {
        q[j] = j;
        truth[j] = clean[j];
      }
      auto fit = fit_ensemble_weights(sets, q, truth);
      if (fit.fell_back) std::cerr << "warning: " << fit.warning << "\n";
      w = fit.weights;
      extra["fit_residual"] = fit.residual;
    } else if (a.weights.empty()) {
      w.assign(sets.size(), 1.0 / static_cast<double>(sets.size()));
    } else {
      for (const auto& s : a.weights) {
        try {
          w.push_back(std::stod(s));
        } catch (const std::exception&) {
          throw InputError("ensemble weight '" + s + "' is not a number");
        }
      }
    }
    if (w.size() != sets.size()) {
      throw InputError("got " + std::to_string(w.size()) + " ensemble weights for " + std::to_string(sets.size()) +
                       " members (the attacked oracle is member 0)");
    }
    extra["weights"] = w;
    rows.emplace_back("ensemble", evaluate(inst, ensemble_combine(sets, w)));
  }
  m.lap("evaluate");

  std::cout << report_table(rows);
  if (!a.out.empty()) {
    json reports = json::object();
    for (const auto& [label, r] : rows) reports[label] = report_to_json(r);
    json doc{{"defense", a.defense}, {"reports", reports}};
    if (!extra.empty()) doc["defense_params"] = extra;
    write_text_file(a.out, doc.dump(2) + "\n");
    m.lap("write");
    m.inputs["instance"] = a.instance;
    if (!a.strategy.empty()) m.inputs["strategy"] = a.strategy;
    m.outputs["report"] = a.out;
    write_manifest(app, m, a.out);
  }
  return kOk;
}

struct ReduceArgs {
  std::string edgelist;
  Count k = 1;
  Count x = kDefaultGadgetWeight;
  std::string out;
};

int run_reduce(const CLI::App& app, const ReduceArgs& a) {
  Manifest m("reduce-dks");
  std::ifstream in(a.edgelist);
  if (!in) throw InputError("cannot open " + a.edgelist);
  auto graph = read_edge_list(in);
  auto gadget = build_dks_gadget(graph, a.k, a.x);
  m.lap("build");
  save_instance(a.out, gadget.instance);
  m.inputs["edgelist"] = a.edgelist;
  m.outputs["instance"] = a.out;
  write_manifest(app, m, a.out);
  return kOk;
}

struct VerifyArgs {
  std::string instance;
  std::string property;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::uint64_t cap = 10'000'000;
  std::string out;
};

int run_verify(const CLI::App& app, const VerifyArgs& a, const Global& g) {
  Manifest m("verify");
  m.seed = a.seed;
  const auto inst = load_instance(a.instance);
  json summary{{"property", a.property}};
  bool pass = true;

  std::mt19937_64 rng(a.seed);
  auto random_set = [&] {
    TupleSet s;
    std::bernoulli_distribution in(0.5);
    for (std::size_t i = 0; i < inst.n_tuples(); ++i) {
      if (in(rng)) s.push_back(i);
    }
    return s;
  };

  if (a.property == "supermodular" || a.property == "modular") {
    const bool sup = a.property == "supermodular";
    double worst = sup ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t t = 0; t < a.trials; ++t) {
      const auto sa = random_set(), sb = random_set();
      if (sup) worst = std::min(worst, check_supermodularity(inst, sa, sb));
      else worst = std::max(worst, std::abs(check_modularity(inst, sa, sb)));
    }
    pass = sup ? worst >= -1e-9 : worst <= 1e-9;
    summary[sup ? "worst_slack" : "worst_residual"] = a.trials == 0 ? 0.0 : worst;
    summary["trials"] = a.trials;
    std::cout << a.property << ": " << (pass ? "pass" : "FAIL") << ", " << (sup ? "worst slack " : "worst |residual| ")
              << (a.trials == 0 ? 0.0 : worst) << " over " << a.trials << " pairs\n";
  } else {
    const BruteForceOptions bf{a.cap, resolve_threads(g.threads)};
    const auto del_opt = brute_force_optimum(inst, AttackMode::delete_only, bf).optimum.total;
    const auto del_greedy = objective_eq3(inst, greedy_attack_restricted(inst, AttackMode::delete_only).strategy).total;
    const double ratio = del_greedy / del_opt;
    summary["delete_only"] = {{"greedy", del_greedy}, {"optimum", del_opt}, {"ratio", ratio}};
    if (a.property == "greedy-vs-optimal") {
      const auto ins_opt = brute_force_optimum(inst, AttackMode::insert_only, bf).optimum.total;
      const auto ins_greedy =
          objective_eq3(inst, greedy_attack_restricted(inst, AttackMode::insert_only).strategy).total;
      const auto mix_opt = brute_force_optimum(inst, AttackMode::mixed, bf).optimum.total;
      const auto mix_greedy = objective_eq3(inst, greedy_attack(inst).strategy).total;
      summary["insert_only"] = {{"greedy", ins_greedy}, {"optimum", ins_opt}};
      summary["mixed"] = {{"greedy", mix_greedy}, {"optimum", mix_opt}, {"ratio", mix_greedy / mix_opt}};
      const bool ins_equal = std::abs(ins_greedy - ins_opt) <= 1e-12 * ins_opt;
      pass = ins_equal && del_greedy <= del_opt * (1 + 1e-12) && mix_greedy <= mix_opt * (1 + 1e-12);
      std::cout << "greedy-vs-optimal: " << (pass ? "pass" : "FAIL") << "\n"
                << "  insert-only greedy " << ins_greedy << " optimum " << ins_opt << "\n"
                << "  delete-only ratio " << ratio << "\n"
                << "  mixed ratio " << mix_greedy / mix_opt << "\n";
    } else {
      KappaOptions ko;
      ko.seed = a.seed;
      const auto k = estimate_kappa(inst, ko);
      pass = del_greedy >= (1 - k.kappa) * del_opt - 1e-9;
      summary["kappa"] = k.kappa;
      summary["kappa_exhaustive"] = k.exhaustive;
      std::cout << "kappa: " << (pass ? "pass" : "FAIL") << ", kappa " << k.kappa
                << (k.exhaustive ? " (exhaustive)" : " (sampled)") << ", greedy/OPT " << ratio << " >= "
                << 1 - k.kappa << "\n";
    }
  }
  summary["pass"] = pass;
  m.lap("verify");
  if (!a.out.empty()) {
    write_text_file(a.out, summary.dump(2) + "\n");
    m.inputs["instance"] = a.instance;
    m.outputs["summary"] = a.out;
    write_manifest(app, m, a.out);
  }
  return pass ? kOk : kVerifyFailed;
}

struct GenerateArgs {
  SynSpec spec;
  std::string dist = "uniform";
  std::string out;
};

int run_generate(const CLI::App& app, GenerateArgs a) {
  Manifest m("generate");
  if (a.dist == "zipf") a.spec.weights.kind = WeightDistribution::Kind::zipf;
  auto inst = generate(a.spec);
  m.lap("generate");
  save_instance(a.out, inst);
  m.seed = a.spec.seed;
  m.outputs["instance"] = a.out;
  write_manifest(app, m, a.out);
  return kOk;
}

void report_error(const Global& g, const char* kind, const std::string& message, std::uint64_t row = 0) {
  if (g.json_errors) {
    json j{{"error", kind}, {"message", message}};
    if (row) j["row"] = row;
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-centric cardinality attack toolkit"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config file; flags override it");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Global g;
  app.add_flag("--json", g.json_errors, "Machine-readable errors on stderr");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->envname("DACA_THREADS");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Joint weights from a materialized result set CSV");
  extract->add_option("result_csv", ex.input)->required()->check(CLI::ExistingFile);
  extract->add_option("--n-tuples", ex.n_tuples)->required();
  extract->add_option("--n-queries", ex.n_queries)->required();
  extract->add_option("--budget", ex.budget, "Budget stored in the instance")->check(CLI::PositiveNumber);
  extract->add_flag("--grouped", ex.grouped, "Input is query_id,tuple_pk,count");
  extract->add_option("--out", ex.out)->required();

  AttackArgs at;
  auto* attack = app.add_subcommand("attack", "Compute an attack strategy");
  attack->add_option("instance", at.instance)->required()->check(CLI::ExistingFile);
  attack->add_option("--algo", at.algo)->check(CLI::IsMember({"greedy", "random", "sa", "ga"}));
  attack->add_option("--mode", at.mode)->check(CLI::IsMember({"mixed", "delete-only", "insert-only"}));
  attack->add_option("--budget", at.budget, "Overrides the instance budget")->check(CLI::PositiveNumber);
  attack->add_option("--seed", at.seed);
  attack->add_option("--gain", at.gain)->check(CLI::IsMember({"objective", "local"}));
  attack->add_option("--out", at.out)->required();
  attack->add_option("--trace", at.trace, "Greedy trace (JSON lines)");
  attack->add_option("--sa-initial-temp", at.sa_temp);
  attack->add_option("--sa-cooling", at.sa_cooling);
  attack->add_option("--sa-iterations", at.sa_iterations);
  attack->add_option("--ga-population", at.ga_population);
  attack->add_option("--ga-generations", at.ga_generations);
  attack->add_option("--ga-crossover", at.ga_crossover);
  attack->add_option("--ga-mutation", at.ga_mutation);

  EvaluateArgs ev;
  auto* eval = app.add_subcommand("evaluate", "Qerror report of the surrogate oracle");
  eval->add_option("instance", ev.instance)->required()->check(CLI::ExistingFile);
  eval->add_option("--strategy", ev.strategy, "Strategy JSON (default: no attack)")->check(CLI::ExistingFile);
  eval->add_option("--defense", ev.defense)->check(CLI::IsMember({"none", "noise", "ensemble"}));
  eval->add_option("--alpha", ev.alpha)->check(CLI::NonNegativeNumber);
  eval->add_option("--sigma", ev.sigma, "Declared noise sigma (default: stddev of the estimates)");
  eval->add_option("--seed", ev.seed);
  eval->add_option("--member", ev.members, "Extra ensemble member: strategy JSON or 'clean'");
  eval->add_option("--weights", ev.weights, "Ensemble weights, one per member, or 'fit'");
  eval->add_option("--fit-queries", ev.fit_queries, "Fit on the first N queries (default all)");
  eval->add_option("--out", ev.out, "Report JSON");

  ReduceArgs rd;
  auto* reduce = app.add_subcommand("reduce-dks", "Gadget instance from a graph edge list");
  reduce->add_option("edgelist", rd.edgelist)->required()->check(CLI::ExistingFile);
  reduce->add_option("--k", rd.k)->required()->check(CLI::PositiveNumber);
  reduce->add_option("--x", rd.x)->check(CLI::PositiveNumber);
  reduce->add_option("--out", rd.out)->required();

  VerifyArgs vf;
  auto* verify = app.add_subcommand("verify", "Check a structural property on an instance");
  verify->add_option("instance", vf.instance)->required()->check(CLI::ExistingFile);
  verify->add_option("--property", vf.property)
      ->required()
      ->check(CLI::IsMember({"supermodular", "modular", "greedy-vs-optimal", "kappa"}));
  verify->add_option("--trials", vf.trials);
  verify->add_option("--seed", vf.seed);
  verify->add_option("--cap", vf.cap, "Brute-force candidate cap");
  verify->add_option("--out", vf.out, "Summary JSON");

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Synthetic instance");
  generate_cmd->add_option("--n-tuples", gen.spec.n_tuples);
  generate_cmd->add_option("--n-queries", gen.spec.n_queries);
  generate_cmd->add_option("--budget", gen.spec.budget)->check(CLI::PositiveNumber);
  generate_cmd->add_option("--support-min", gen.spec.support_min);
  generate_cmd->add_option("--support-max", gen.spec.support_max);
  generate_cmd->add_option("--dist", gen.dist)->check(CLI::IsMember({"uniform", "zipf"}));
  generate_cmd->add_option("--lo", gen.spec.weights.lo);
  generate_cmd->add_option("--hi", gen.spec.weights.hi);
  generate_cmd->add_option("--zipf-s", gen.spec.weights.s);
  generate_cmd->add_option("--zipf-max", gen.spec.weights.max);
  generate_cmd->add_option("--seed", gen.spec.seed);
  generate_cmd->add_option("--out", gen.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(g, "usage", e.what());
    return kInputError;
  }

  try {
    if (*extract) return run_extract(app, ex);
    if (*attack) return run_attack(app, at, g);
    if (*eval) return run_evaluate(app, ev);
    if (*reduce) return run_reduce(app, rd);
    if (*verify) return run_verify(app, vf, g);
    if (*generate_cmd) return run_generate(app, gen);
  } catch (const InputError& e) {
    report_error(g, "input", e.what(), e.row());
    return kInputError;
  } catch (const CapacityError& e) {
    report_error(g, "capacity", e.what());
    return kCapacityError;
  } catch (const DegenerateError& e) {
    report_error(g, "degenerate", e.what());
    return kInputError;
  } catch (const ValidationError& e) {
    report_error(g, "validation", e.what());
    return kInputError;
  }
  return kOk;
}
