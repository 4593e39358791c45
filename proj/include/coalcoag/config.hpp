#pragma once

// JSON configuration. Model keys: d, W, alpha, K, N_K, L0, regime, c, beta,
// seed. Experiment keys are read by experiment_from_json; command-specific
// keys are left to the caller.

#include <fstream>
#include <string>

#include <json.hpp>

#include "coalcoag/error.hpp"
#include "coalcoag/harness.hpp"
#include "coalcoag/model.hpp"

namespace coalcoag {

using json = nlohmann::json;

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidParameter, "cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParameter, "invalid JSON in '" + path + "': " + e.what());
  }
}

inline Regime regime_from_string(const std::string& s) {
  if (s == "critical") return Regime::Critical;
  if (s == "large") return Regime::Large;
  throw Error(ErrorKind::InvalidParameter, "regime must be \"critical\" or \"large\"");
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

/// Unvalidated model parameters; N_K defaults to sum(L0).
inline ModelParams model_from_json(const json& j) {
  try {
    ModelParams p;
    p.d = j.at("d").get<std::size_t>();
    p.W = j.at("W").get<Matrix>();
    p.alpha = j.at("alpha").get<std::vector<double>>();
    read_if(j, "K", p.K);
    read_if(j, "L0", p.L0);
    p.N = 0;
    for (auto l : p.L0) p.N += l;
    read_if(j, "N_K", p.N);
    if (j.contains("regime")) p.regime = regime_from_string(j.at("regime").get<std::string>());
    if (j.contains("c")) p.c = j.at("c").get<double>();
    read_if(j, "beta", p.beta);
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParameter, std::string("bad model parameters: ") + e.what());
  }
}

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.model = model_from_json(j);
  try {
    if (j.contains("experiment")) cfg.kind = experiment_from_string(j.at("experiment").get<std::string>());
    if (cfg.model.seed) cfg.seed = *cfg.model.seed;
    read_if(j, "K_list", cfg.K_list);
    read_if(j, "replicates", cfg.replicates);
    read_if(j, "times", cfg.times);
    read_if(j, "lambda_grid", cfg.lambda_grid);
    read_if(j, "output", cfg.output);
    read_if(j, "n_max", cfg.n_max);
    read_if(j, "dt", cfg.dt);
    read_if(j, "N_exponent", cfg.N_exponent);
    read_if(j, "indicator_max", cfg.indicator_max);
    read_if(j, "pmf_max", cfg.pmf_max);
    read_if(j, "samples", cfg.samples);
    read_if(j, "entrance_samples", cfg.entrance_samples);
    read_if(j, "x0", cfg.x0);
    read_if(j, "start", cfg.start);
    read_if(j, "sde_dt", cfg.sde_dt);
    read_if(j, "entrance_dt", cfg.entrance_dt);
    read_if(j, "kingman_rate", cfg.kingman_rate);
    read_if(j, "kingman_N", cfg.kingman_N);
    read_if(j, "kingman_times", cfg.kingman_times);
    read_if(j, "moment_orders", cfg.moment_orders);
    read_if(j, "threads", cfg.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidParameter, std::string("bad experiment parameters: ") + e.what());
  }
  return cfg;
}

}  // namespace coalcoag
