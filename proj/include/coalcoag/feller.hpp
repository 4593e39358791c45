#pragma once

// d-dimensional Feller diffusion whose Laplace exponent solves dv/dt = -psi(v):
//   dZ_i = sqrt(alpha_i beta_i Z_i) dB_i + sum_{j != i} (w_{i,j} beta_i / beta_j Z_j - w_{i,j} Z_i) dt,
// i.e. mass of type j turns into type i at rate w_{i,j} beta_i / beta_j, the
// same type-change rate as in the branching particle system. Discretized by
// full-truncation Euler-Maruyama; also the Monte-Carlo estimate of the
// entrance law from an infinitesimal mass of one type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "coalcoag/branching.hpp"
#include "coalcoag/error.hpp"
#include "coalcoag/model.hpp"
#include "coalcoag/parallel.hpp"
#include "coalcoag/stats.hpp"

namespace coalcoag {

struct DiffusionParams {
  std::vector<double> diffusion;  // alpha_i beta_i
  Matrix drift;                   // drift[i][j]: coefficient of Z_j in the drift of Z_i

  std::size_t d() const { return diffusion.size(); }
};

inline DiffusionParams diffusion_params(const ModelParams& p) {
  require_positive_beta(p);
  DiffusionParams dp;
  dp.diffusion.resize(p.d);
  dp.drift.assign(p.d, std::vector<double>(p.d, 0.0));
  for (std::size_t i = 0; i < p.d; ++i) {
    dp.diffusion[i] = p.alpha[i] * p.beta[i];
    for (std::size_t j = 0; j < p.d; ++j)
      dp.drift[i][j] = j == i ? -p.w_out(i) : p.w(i, j) * p.beta[i] / p.beta[j];
  }
  return dp;
}

/// Full truncation: the auxiliary state may go negative, the square root and
/// the drift see max(Z, 0), and max(Z, 0) is returned. Clipping the auxiliary
/// state itself would inject mass whenever a nearly empty coordinate is fed by
/// migration. The run stops early once every coordinate is <= 0 (absorbed).
inline std::vector<double> euler_maruyama(const DiffusionParams& dp, std::span<const double> x0, double t, double dt,
                                          Rng& rng) {
  for (double x : x0)
    if (x < 0.0) throw Error(ErrorKind::InvalidParameter, "initial state must be nonnegative");
  const std::size_t d = dp.d();
  std::vector<double> z(x0.begin(), x0.end()), pos(z), next(d);
  const auto steps = static_cast<std::int64_t>(std::ceil(t / dt - 1e-9));
  if (steps <= 0) return z;
  const double h = t / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::int64_t s = 0; s < steps; ++s) {
    bool alive = false;
    for (std::size_t i = 0; i < d; ++i) {
      double drift = 0.0;
      for (std::size_t j = 0; j < d; ++j) drift += dp.drift[i][j] * pos[j];
      const double noise = std::sqrt(dp.diffusion[i] * pos[i]) * sqrt_h * normal(rng);
      next[i] = z[i] + drift * h + noise;
    }
    z.swap(next);
    for (std::size_t i = 0; i < d; ++i) {
      pos[i] = std::max(0.0, z[i]);
      alive = alive || pos[i] > 0.0;
    }
    if (!alive) break;
  }
  return pos;
}

/// Monte-Carlo mean of exp(-<lambda, Z_t>) from x0.
inline Summary feller_laplace(const DiffusionParams& dp, std::span<const double> x0, std::span<const double> lambda,
                              double t, double dt, std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
  const auto values = run_replicates(
      samples, seed,
      [&](std::size_t, Rng& rng) {
        const auto z = euler_maruyama(dp, x0, t, dt, rng);
        double dot = 0.0;
        for (std::size_t h = 0; h < z.size(); ++h) dot += lambda[h] * z[h];
        return std::exp(-dot);
      },
      threads);
  return summarize(values);
}

/// Empirical law of Z_t started from x0 e_i, each sample weighted 1 / (x0 samples):
/// an approximation of the entrance law Q_i(t, .).
struct EntranceLawEstimate {
  std::vector<std::vector<double>> states;  // terminal states by replicate
  double x0 = 0.0;

  double weight() const { return 1.0 / (x0 * static_cast<double>(states.size())); }

  /// <Q_i(t), 1 - exp(-<lambda, .>)> with its standard error.
  Summary laplace_functional(std::span<const double> lambda) const {
    RunningStats s;
    for (const auto& z : states) {
      double dot = 0.0;
      for (std::size_t h = 0; h < z.size(); ++h) dot += lambda[h] * z[h];
      s.add(-std::expm1(-dot) / x0);
    }
    return s.summary();
  }

  /// Weighted mass of the paths that have not been absorbed at 0.
  double survival_mass() const {
    std::size_t alive = 0;
    for (const auto& z : states)
      for (double v : z)
        if (v > 0.0) {
          ++alive;
          break;
        }
    return static_cast<double>(alive) * weight();
  }
};

inline EntranceLawEstimate entrance_law_estimate(const DiffusionParams& dp, std::size_t colony, double t, double x0,
                                                 std::size_t samples, std::uint64_t seed, double dt = 1e-3,
                                                 unsigned threads = 0) {
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidParameter, "entrance law needs t > 0");
  if (!(x0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "entrance law needs x0 > 0");
  if (samples == 0) throw Error(ErrorKind::InsufficientSamples, "samples must be positive");
  std::vector<double> start(dp.d(), 0.0);
  start[colony] = x0;
  EntranceLawEstimate est;
  est.x0 = x0;
  est.states = run_replicates(
      samples, seed, [&](std::size_t, Rng& rng) { return euler_maruyama(dp, start, t, dt, rng); }, threads);
  return est;
}

}  // namespace coalcoag
