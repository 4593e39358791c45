#pragma once

// Comparison of the structured coalescent with single-type Kingman
// coalescents: deterministic rate inequalities, the three-process coupling of
// block counts, the analytic moment bound and the emigrant upper-bound process.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "coalcoag/error.hpp"
#include "coalcoag/model.hpp"
#include "coalcoag/parallel.hpp"

namespace coalcoag {

struct RateBounds {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
};

/// (alpha_min(d) |l|(|l|-1), sum_i alpha_i l_i (l_i - 1), alpha_max |l|(|l|-1)) for |l| >= d + 1.
inline RateBounds rate_bounds_check(std::span<const std::int64_t> ell, std::span<const double> alpha) {
  const std::size_t d = ell.size();
  const auto n = static_cast<double>(std::accumulate(ell.begin(), ell.end(), std::int64_t{0}));
  if (n < static_cast<double>(d + 1)) throw Error(ErrorKind::TooFewBlocks, "rate bounds need at least d + 1 blocks");
  const double a_min = *std::min_element(alpha.begin(), alpha.end()) / static_cast<double>(d * d);
  const double a_max = *std::max_element(alpha.begin(), alpha.end());
  RateBounds r;
  r.lower = a_min * n * (n - 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto l = static_cast<double>(ell[i]);
    r.middle += alpha[i] * l * (l - 1.0);
  }
  r.upper = a_max * n * (n - 1.0);
  if (!(r.lower <= r.middle && r.middle <= r.upper)) throw std::logic_error("rate bounds violated");
  return r;
}

struct CouplingRecord {
  double time = 0.0;  // unscaled
  std::int64_t lhat = 0;
  std::vector<std::int64_t> l;
  std::int64_t ltilde = 0;

  std::int64_t l_total() const { return std::accumulate(l.begin(), l.end(), std::int64_t{0}); }
};

struct CoupledPaths {
  std::vector<CouplingRecord> records;
  ModelParams params;

  /// Lhat <= |L| <= max(Ltilde, d + 1) at every record.
  std::size_t order_violations() const {
    std::size_t bad = 0;
    const auto floor = static_cast<std::int64_t>(params.d + 1);
    for (const auto& r : records) {
      const auto total = r.l_total();
      if (r.lhat > total || total > std::max(r.ltilde, floor)) ++bad;
    }
    return bad;
  }
};

namespace detail {

inline double pairs(std::int64_t n) { return static_cast<double>(n) * static_cast<double>(n - 1) / 2.0; }

struct TimedCount {
  double time;
  std::int64_t count;
};

/// Pure death chain n -> n - 1 at rate rate * n (n - 1) / 2, started at (t0, n0).
inline std::vector<TimedCount> kingman_death_chain(std::int64_t n0, double rate, double t0, double horizon, Rng& rng) {
  std::vector<TimedCount> path{{t0, n0}};
  double t = t0;
  std::int64_t n = n0;
  while (n > 1 && rate > 0.0) {
    t += std::exponential_distribution<double>(rate * pairs(n))(rng);
    if (t > horizon) break;
    path.push_back({t, --n});
  }
  return path;
}

}  // namespace detail

/// Joint construction of (Lhat, L, Ltilde) on unscaled time [0, horizon].
///
/// While |L| >= d + 1 the three processes share one exponential clock of rate
/// rho(L) + max(c_hat, c, c_tilde). A coalescence moves the process with the
/// largest rate; the second moves with probability (second / largest); the
/// third only if the second moved, with probability (third / second). Ties are
/// ranked Lhat, L, Ltilde. Once |L| < d + 1, Ltilde runs on its own stream.
inline CoupledPaths coupled_simulate(const ModelParams& p, double horizon, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double a_max = p.alpha_max();
  const double a_min = p.alpha_min_d();
  const auto floor = static_cast<std::int64_t>(p.d + 1);

  CoupledPaths out;
  out.params = p;

  std::int64_t lhat = p.N;
  std::vector<std::int64_t> l = p.L0;
  std::int64_t ltilde = p.N;
  double t = 0.0;
  bool joint = std::accumulate(l.begin(), l.end(), std::int64_t{0}) >= floor;
  out.records.push_back({t, lhat, l, ltilde});

  // Path of (Lhat, L) after Ltilde decouples; merged with Ltilde at the end.
  std::vector<CouplingRecord> pair_path;
  double split_time = 0.0;

  auto migration_rate = [&] {
    double rho = 0.0;
    for (std::size_t i = 0; i < p.d; ++i) rho += p.K * static_cast<double>(l[i]) * p.w_out(i);
    return rho;
  };
  auto coalescence_rate = [&] {
    double c = 0.0;
    for (std::size_t i = 0; i < p.d; ++i) c += p.alpha[i] * detail::pairs(l[i]);
    return c;
  };
  auto migrate = [&] {
    std::vector<double> weights(p.d * p.d, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < p.d; ++i)
      for (std::size_t j = 0; j < p.d; ++j) {
        weights[i * p.d + j] = static_cast<double>(l[i]) * p.w(i, j);
        total += weights[i * p.d + j];
      }
    double u = unif(rng) * total, acc = 0.0;
    std::size_t pick = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      pick = k;
      acc += weights[k];
      if (u < acc) break;
    }
    --l[pick / p.d];
    ++l[pick % p.d];
  };
  auto coalesce_l = [&](double c) {
    double u = unif(rng) * c, acc = 0.0;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < p.d; ++i) {
      const double r = p.alpha[i] * detail::pairs(l[i]);
      if (r <= 0.0) continue;
      pick = i;
      acc += r;
      if (u < acc) break;
    }
    --l[pick];
  };

  while (true) {
    const double rho = migration_rate();
    const double c = coalescence_rate();
    const double c_hat = a_max * detail::pairs(lhat);
    const double c_tilde = joint ? a_min * detail::pairs(ltilde) : 0.0;

    // Index 0: Lhat, 1: L, 2: Ltilde. Stable sort keeps the tie order.
    std::array<std::size_t, 3> order{0, 1, 2};
    const std::array<double, 3> rate{c_hat, c, c_tilde};
    const std::size_t ranked = joint ? 3 : 2;
    std::stable_sort(order.begin(), order.begin() + ranked, [&](auto a, auto b) { return rate[a] > rate[b]; });
    const double c_top = rate[order[0]];
    const double total = rho + c_top;
    if (!(total > 0.0)) break;
    t += std::exponential_distribution<double>(total)(rng);
    if (t > horizon) break;

    if (unif(rng) * total < rho) {
      migrate();
    } else {
      auto fire = [&](std::size_t which) {
        if (which == 0) --lhat;
        else if (which == 1) coalesce_l(c);
        else --ltilde;
      };
      fire(order[0]);
      for (std::size_t k = 1; k < ranked; ++k) {
        const double prev = rate[order[k - 1]];
        if (prev <= 0.0 || !(unif(rng) * prev < rate[order[k]])) break;
        fire(order[k]);
      }
    }

    if (joint) {
      out.records.push_back({t, lhat, l, ltilde});
      if (std::accumulate(l.begin(), l.end(), std::int64_t{0}) < floor) {
        joint = false;
        split_time = t;
      }
    } else {
      pair_path.push_back({t, lhat, l, 0});
    }
  }

  if (!joint) {
    // Independent continuation of Ltilde from the split time.
    Rng tail_rng = make_stream(rng(), 1);
    const auto tilde = detail::kingman_death_chain(ltilde, a_min, split_time, horizon, tail_rng);
    std::size_t a = 0, b = 1;  // tilde[0] is the split state itself
    CouplingRecord cur = out.records.back();
    while (a < pair_path.size() || b < tilde.size()) {
      const bool take_pair = b >= tilde.size() || (a < pair_path.size() && pair_path[a].time <= tilde[b].time);
      if (take_pair) {
        cur.time = pair_path[a].time;
        cur.lhat = pair_path[a].lhat;
        cur.l = pair_path[a].l;
        ++a;
      } else {
        cur.time = tilde[b].time;
        cur.ltilde = tilde[b].count;
        ++b;
      }
      out.records.push_back(cur);
    }
  }
  return out;
}

/// (N^{-1/p} + rho t / (4p))^{-p}
inline double kingman_moment_bound(double N, double rho, double t, double p) {
  return std::pow(std::pow(N, -1.0 / p) + rho * t / (4.0 * p), -p);
}

struct KingmanPath {
  std::vector<double> times;
  std::vector<std::int64_t> counts;

  std::int64_t count_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return counts[static_cast<std::size_t>(std::distance(times.begin(), it)) - 1];
  }
};

/// Block-counting process of a Kingman coalescent with pair rate rho, started
/// from N blocks, on [0, horizon].
inline KingmanPath kingman_simulate(std::int64_t N, double rho, double horizon, Rng& rng) {
  KingmanPath path;
  for (const auto& tc : detail::kingman_death_chain(N, rho, 0.0, horizon, rng)) {
    path.times.push_back(tc.time);
    path.counts.push_back(tc.count);
  }
  return path;
}

struct EmigrantBoundPath {
  std::vector<double> times;            // scaled time
  std::vector<std::int64_t> values;     // Ehat, nondecreasing
  std::vector<std::int64_t> block_sizes;  // auxiliary Kingman blocks at the horizon

  std::int64_t value_at(double t_scaled) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t_scaled);
    return values[static_cast<std::size_t>(std::distance(times.begin(), it)) - 1];
  }
};

/// Upper-bound process for the number of color-i leaves outside colony i: a
/// Kingman coalescent at pair rate alpha_i from L0_i singletons in which, at
/// rate w_i K per block, the size of a uniformly chosen block is added to Ehat.
/// The block is duplicated rather than removed.
inline EmigrantBoundPath simulate_emigration_bound(std::int64_t L0, double w, double alpha, double K,
                                                   double horizon_scaled, Rng& rng) {
  EmigrantBoundPath path;
  path.times.push_back(0.0);
  path.values.push_back(0);
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(L0), 1);
  const double horizon = horizon_scaled / K;
  double t = 0.0;
  std::int64_t ehat = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (!sizes.empty()) {
    const auto n = static_cast<std::int64_t>(sizes.size());
    const double coal = alpha * detail::pairs(n);
    const double count = w * K * static_cast<double>(n);
    const double total = coal + count;
    if (!(total > 0.0)) break;
    t += std::exponential_distribution<double>(total)(rng);
    if (t > horizon) break;
    if (unif(rng) * total < count) {
      const auto k = std::uniform_int_distribution<std::size_t>(0, sizes.size() - 1)(rng);
      ehat += sizes[k];
      path.times.push_back(t * K);
      path.values.push_back(ehat);
    } else {
      const auto a = std::uniform_int_distribution<std::size_t>(0, sizes.size() - 1)(rng);
      auto b = std::uniform_int_distribution<std::size_t>(0, sizes.size() - 2)(rng);
      if (b >= a) ++b;
      sizes[a] += sizes[b];
      sizes[b] = sizes.back();
      sizes.pop_back();
    }
  }
  path.block_sizes = std::move(sizes);
  return path;
}

}  // namespace coalcoag
