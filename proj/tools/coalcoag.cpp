// coalcoag <simulate|solve|couple|verify> --config <path.json> --out <path.csv> [--seed N] [--threads N]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "coalcoag/branching.hpp"
#include "coalcoag/coag_solver.hpp"
#include "coalcoag/coalescent.hpp"
#include "coalcoag/config.hpp"
#include "coalcoag/csv.hpp"
#include "coalcoag/feller.hpp"
#include "coalcoag/harness.hpp"
#include "coalcoag/kingman.hpp"

using namespace coalcoag;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidParameter, "cannot write '" + path + "'");
  return out;
}

std::uint64_t resolve_seed(const CommonOptions& opt, const ModelParams& p) {
  if (opt.seed) return *opt.seed;
  return p.seed.value_or(1);
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

SolverOptions solver_options(const json& j) {
  SolverOptions o;
  o.dt = value_or(j, "dt", o.dt);
  o.n_max = value_or(j, "n_max", o.n_max);
  o.record_interval = value_or(j, "record_interval", o.record_interval);
  return o;
}

int simulate(const CommonOptions& opt) {
  const json j = load_json(opt.config);
  const ModelParams p = validate_params(model_from_json(j));
  const std::uint64_t seed = resolve_seed(opt, p);
  const std::string process = value_or<std::string>(j, "process", "coalescent");
  const double horizon = value_or(j, "horizon", 1.0);
  auto out = open_output(opt.out);

  if (process == "coalescent") {
    Rng rng = make_stream(seed, 0);
    CoalescentState s = init_state(p);
    if (value_or(j, "event_log", false)) {
      write_event_log_header(out);
      simulate_until(s, p, horizon, rng, NoOp{}, [&](const CoalescentState&, const Event& ev) { write_event(out, ev); });
    } else {
      simulate_until(s, p, horizon, rng);
      write_snapshot(out, s);
    }
    return 0;
  }
  const std::size_t samples = value_or<std::size_t>(j, "samples", 1000);
  if (process == "branching") {
    const BranchingParams bp = branching_params(p);
    for (std::size_t i = 0; i < p.d; ++i) {
      const auto states = sample_branching(bp, i, horizon, samples, make_stream(seed, i)(), opt.threads);
      write_branching_states(out, i, states, i == 0);
    }
    return 0;
  }
  if (process == "feller") {
    const DiffusionParams dp = diffusion_params(p);
    const auto start = value_or(j, "start", std::vector<double>(p.d, 1.0));
    const double dt = value_or(j, "sde_dt", 1e-3);
    const auto states = run_replicates(
        samples, seed, [&](std::size_t, Rng& rng) { return euler_maruyama(dp, start, horizon, dt, rng); }, opt.threads);
    write_diffusion_states(out, states);
    return 0;
  }
  throw Error(ErrorKind::InvalidParameter, "process must be coalescent, branching or feller");
}

int solve(const CommonOptions& opt) {
  const json j = load_json(opt.config);
  ModelParams p = validate_params(model_from_json(j));
  const std::string solver = value_or<std::string>(j, "solver", "discrete");
  const double horizon = value_or(j, "horizon", 1.0);
  const SolverOptions so = solver_options(j);
  auto out = open_output(opt.out);

  if (solver == "discrete") {
    write_discrete(out, solve_discrete(p, horizon, so));
  } else if (solver == "mass") {
    const auto path = solve_total_mass(p, horizon, so);
    write_mass(out, path.times, path.rho);
  } else if (solver == "laplace" || solver == "pgf") {
    const auto grid = value_or(j, "lambda_grid", std::vector<std::vector<double>>{std::vector<double>(p.d, 1.0)});
    write_exponent_header(out, p.d);
    for (const auto& lambda : grid) {
      if (lambda.size() != p.d) throw Error(ErrorKind::InvalidParameter, "lambda vectors must have length d");
      const auto path = solver == "laplace" ? solve_laplace_exponent(p, lambda, horizon, so)
                                            : solve_generating_function(p, lambda, horizon, so);
      for (const auto& w : path.warnings) std::cerr << "warning: " << w << '\n';
      write_exponent(out, lambda, path);
    }
  } else {
    throw Error(ErrorKind::InvalidParameter, "solver must be discrete, mass, laplace or pgf");
  }
  return 0;
}

int couple(const CommonOptions& opt) {
  const json j = load_json(opt.config);
  const ModelParams p = validate_params(model_from_json(j));
  Rng rng = make_stream(resolve_seed(opt, p), 0);
  auto out = open_output(opt.out);
  if (j.contains("emigrant_colony")) {
    const auto i = j.at("emigrant_colony").get<std::size_t>();
    if (i >= p.d) throw Error(ErrorKind::InvalidParameter, "emigrant_colony out of range");
    const double horizon = value_or(j, "horizon", 1.0);
    write_emigrant_bound(out, simulate_emigration_bound(p.L0[i], p.w_out(i), p.alpha[i], p.K, horizon, rng));
  } else {
    const double horizon = value_or(j, "horizon", 1.0);
    write_coupling(out, coupled_simulate(p, horizon, rng));
  }
  return 0;
}

int verify(const CommonOptions& opt) {
  ExperimentConfig cfg = experiment_from_json(load_json(opt.config));
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.threads = opt.threads;
  const auto rows = run_experiment(cfg);
  auto out = open_output(opt.out);
  write_report(out, rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.pass ? 0 : 1;
  std::cerr << to_string(cfg.kind) << ": " << rows.size() - failed << "/" << rows.size() << " rows pass\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured coalescent simulation and coagulation-equation verification"};
  app.require_subcommand(1);
  CommonOptions opt;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output CSV path")->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
    return sub;
  };
  auto* sim = add("simulate", "simulate the coalescent, the branching process or the Feller diffusion");
  auto* sol = add("solve", "solve the discrete, total-mass, Laplace-exponent or generating-function equations");
  auto* cpl = add("couple", "run the Kingman coupling or the emigrant bound process");
  auto* ver = add("verify", "run a verification experiment and write its report");
  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return simulate(opt);
    if (sol->parsed()) return solve(opt);
    if (cpl->parsed()) return couple(opt);
    if (ver->parsed()) return verify(opt);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
