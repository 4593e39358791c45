#pragma once

// Continuous-time multi-type branching process representing the discrete
// coagulation equation: u_i(t, n) = c beta_i P_{e_i}(Z(t) = n).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "coalcoag/error.hpp"
#include "coalcoag/model.hpp"
#include "coalcoag/parallel.hpp"
#include "coalcoag/stats.hpp"

namespace coalcoag {

struct BranchingParams {
  std::vector<double> branch;   // c alpha_i beta_i / 2
  std::vector<double> death;    // branch_i - sum_{j != i} (beta_j / beta_i w_{j,i} - w_{i,j})
  Matrix migrate;               // migrate[i][j] = beta_j / beta_i * w_{j,i}, j != i

  std::size_t d() const { return branch.size(); }

  /// All death rates nonnegative, the condition under which the particle system exists.
  bool valid() const {
    for (double x : death)
      if (x < 0.0) return false;
    return true;
  }
};

inline void require_positive_beta(const ModelParams& p) {
  if (p.beta.size() != p.d) throw Error(ErrorKind::InvalidParameter, "beta must have length d");
  for (double b : p.beta)
    if (!(b > 0.0)) throw Error(ErrorKind::ZeroBeta, "every beta_i must be positive");
}

inline BranchingParams branching_params(const ModelParams& p) {
  require_positive_beta(p);
  const double c = p.c_value();
  BranchingParams bp;
  bp.branch.resize(p.d);
  bp.death.resize(p.d);
  bp.migrate.assign(p.d, std::vector<double>(p.d, 0.0));
  for (std::size_t i = 0; i < p.d; ++i) {
    bp.branch[i] = c * p.alpha[i] * p.beta[i] / 2.0;
    double net_inflow = 0.0;
    for (std::size_t j = 0; j < p.d; ++j) {
      if (j == i) continue;
      bp.migrate[i][j] = p.beta[j] / p.beta[i] * p.w(j, i);
      net_inflow += bp.migrate[i][j] - p.w(i, j);
    }
    bp.death[i] = bp.branch[i] - net_inflow;
  }
  return bp;
}

inline constexpr std::int64_t kPopulationCap = 10'000'000;

/// Exact simulation of Z(t) from a single particle of type `start`.
inline std::vector<std::int64_t> simulate_branching(const BranchingParams& bp, std::size_t start, double t, Rng& rng) {
  if (!bp.valid()) throw Error(ErrorKind::RepresentationInvalid, "negative death rate");
  const std::size_t d = bp.d();
  std::vector<double> per_particle(d);
  for (std::size_t i = 0; i < d; ++i) {
    per_particle[i] = bp.branch[i] + bp.death[i];
    for (std::size_t j = 0; j < d; ++j) per_particle[i] += bp.migrate[i][j];
  }
  std::vector<std::int64_t> z(d, 0);
  z[start] = 1;
  std::int64_t population = 1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double now = 0.0;
  while (population > 0) {
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += static_cast<double>(z[i]) * per_particle[i];
    if (!(total > 0.0)) break;
    now += std::exponential_distribution<double>(total)(rng);
    if (now > t) break;
    double u = unif(rng) * total;
    std::size_t i = 0;
    for (; i + 1 < d; ++i) {
      const double r = static_cast<double>(z[i]) * per_particle[i];
      if (u < r) break;
      u -= r;
    }
    u /= static_cast<double>(z[i]);
    if (u < bp.branch[i]) {
      ++z[i];
      if (++population > kPopulationCap) throw Error(ErrorKind::ExplosionGuard, "population exceeded 1e7");
      continue;
    }
    u -= bp.branch[i];
    if (u < bp.death[i]) {
      --z[i];
      --population;
      continue;
    }
    u -= bp.death[i];
    std::size_t j = 0, last = i;
    for (; j < d; ++j) {
      if (bp.migrate[i][j] <= 0.0) continue;
      last = j;
      if (u < bp.migrate[i][j]) break;
      u -= bp.migrate[i][j];
    }
    if (j == d) j = last;
    --z[i];
    ++z[j];
  }
  return z;
}

/// Terminal states of `samples` independent runs, ordered by replicate.
inline std::vector<std::vector<std::int64_t>> sample_branching(const BranchingParams& bp, std::size_t start, double t,
                                                               std::size_t samples, std::uint64_t seed,
                                                               unsigned threads = 0) {
  return run_replicates(
      samples, seed, [&](std::size_t, Rng& rng) { return simulate_branching(bp, start, t, rng); }, threads);
}

struct PmfEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Frequency of {Z = n} with its binomial standard error.
inline PmfEstimate pmf_from_samples(const std::vector<std::vector<std::int64_t>>& samples,
                                    std::span<const std::int64_t> n) {
  if (samples.empty()) throw Error(ErrorKind::InsufficientSamples, "no samples");
  std::size_t hits = 0;
  for (const auto& z : samples)
    if (std::equal(z.begin(), z.end(), n.begin(), n.end())) ++hits;
  const double m = static_cast<double>(samples.size());
  const double f = static_cast<double>(hits) / m;
  return {f, std::sqrt(f * (1.0 - f) / m), samples.size()};
}

inline PmfEstimate estimate_pmf(const BranchingParams& bp, std::size_t start, double t,
                                std::span<const std::int64_t> n, std::size_t samples, std::uint64_t seed,
                                unsigned threads = 0) {
  if (samples == 0) throw Error(ErrorKind::InsufficientSamples, "samples must be positive");
  return pmf_from_samples(sample_branching(bp, start, t, samples, seed, threads), n);
}

/// Monte-Carlo E[prod_h lambda_h^{Z_h}].
inline Summary pgf_from_samples(const std::vector<std::vector<std::int64_t>>& samples, std::span<const double> lambda) {
  RunningStats s;
  for (const auto& z : samples) {
    double v = 1.0;
    for (std::size_t h = 0; h < z.size(); ++h)
      if (z[h] > 0) v *= std::pow(lambda[h], static_cast<double>(z[h]));
    s.add(v);
  }
  return s.summary();
}

}  // namespace coalcoag
