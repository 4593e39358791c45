#pragma once

// Deterministic solvers for the limiting systems: the d-dimensional discrete
// coagulation equation on a truncated lattice, its total-mass companion, the
// generating-function ODE of the branching representation and the Laplace
// exponent ODE dv/dt = -psi(v) of the continuous equation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coalcoag/branching.hpp"
#include "coalcoag/coalescent.hpp"
#include "coalcoag/error.hpp"
#include "coalcoag/model.hpp"
#include "coalcoag/rk4.hpp"

namespace coalcoag {

/// All n in N_0^d \ {0} with |n|_1 <= n_max, plus the ordered decompositions
/// n = n1 + n2 (n1, n2 nonzero) used by the convolution.
class Lattice {
 public:
  struct Decomposition {
    std::size_t first, second, sum;
  };

  Lattice(std::size_t d, std::int64_t n_max) : d_(d), n_max_(n_max) {
    std::size_t dense = 1;
    for (std::size_t h = 0; h < d; ++h) dense *= static_cast<std::size_t>(n_max + 1);
    dense_.assign(dense, npos);
    Configuration n(d, 0);
    enumerate(n, 0, 0);
    for (std::size_t a = 0; a < points_.size(); ++a) {
      const auto na = l1_norm(points_[a]);
      for (std::size_t b = 0; b < points_.size(); ++b) {
        if (na + l1_norm(points_[b]) > n_max_) continue;
        decompositions_.push_back({a, b, index_of(points_[a] + points_[b])});
      }
    }
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t d() const { return d_; }
  std::int64_t n_max() const { return n_max_; }
  std::size_t size() const { return points_.size(); }
  const Configuration& point(std::size_t idx) const { return points_[idx]; }
  const std::vector<Configuration>& points() const { return points_; }
  const std::vector<Decomposition>& decompositions() const { return decompositions_; }

  /// npos when n is zero or outside the truncation.
  std::size_t index_of(const Configuration& n) const {
    if (n.size() != d_) return npos;
    std::int64_t norm = 0;
    std::size_t key = 0;
    for (std::size_t h = d_; h-- > 0;) {
      if (n[h] < 0) return npos;
      norm += n[h];
      key = key * static_cast<std::size_t>(n_max_ + 1) + static_cast<std::size_t>(n[h]);
    }
    if (norm == 0 || norm > n_max_) return npos;
    return dense_[key];
  }

 private:
  void enumerate(Configuration& n, std::size_t h, std::int64_t used) {
    if (h == d_) {
      if (used == 0) return;
      std::size_t key = 0;
      for (std::size_t k = d_; k-- > 0;) key = key * static_cast<std::size_t>(n_max_ + 1) + static_cast<std::size_t>(n[k]);
      dense_[key] = points_.size();
      points_.push_back(n);
      return;
    }
    for (std::int64_t v = 0; used + v <= n_max_; ++v) {
      n[h] = v;
      enumerate(n, h + 1, used + v);
    }
    n[h] = 0;
  }

  std::size_t d_;
  std::int64_t n_max_;
  std::vector<Configuration> points_;
  std::vector<std::size_t> dense_;
  std::vector<Decomposition> decompositions_;
};

/// Lattice function: one value per lattice point.
using LatticeFunction = std::vector<double>;

/// sum over ordered decompositions n1 + n2 = n with n1, n2 nonzero of u(n1) u(n2).
inline double convolve(const Lattice& lattice, std::span<const double> u, const Configuration& n) {
  const std::size_t d = lattice.d();
  double acc = 0.0;
  Configuration n1(d, 0);
  // Odometer over 0 <= n1 <= n componentwise.
  while (true) {
    const Configuration n2 = [&] {
      Configuration r(d);
      for (std::size_t h = 0; h < d; ++h) r[h] = n[h] - n1[h];
      return r;
    }();
    const auto a = lattice.index_of(n1);
    const auto b = lattice.index_of(n2);
    if (a != Lattice::npos && b != Lattice::npos) acc += u[a] * u[b];
    std::size_t h = 0;
    while (h < d && n1[h] == n[h]) n1[h++] = 0;
    if (h == d) break;
    ++n1[h];
  }
  return acc;
}

/// Right-hand side of the discrete coagulation equation. The loss term uses
/// the supplied total masses rho_i rather than the truncated sums.
inline std::vector<LatticeFunction> rhs_discrete(const Lattice& lattice, const std::vector<LatticeFunction>& u,
                                                 std::span<const double> rho, const ModelParams& p) {
  std::vector<LatticeFunction> du(p.d, LatticeFunction(lattice.size(), 0.0));
  for (std::size_t i = 0; i < p.d; ++i) {
    auto& out = du[i];
    const auto& ui = u[i];
    for (const auto& dec : lattice.decompositions()) out[dec.sum] += 0.5 * p.alpha[i] * ui[dec.first] * ui[dec.second];
    for (std::size_t k = 0; k < lattice.size(); ++k) {
      out[k] -= p.alpha[i] * rho[i] * ui[k];
      for (std::size_t j = 0; j < p.d; ++j) {
        if (j == i) continue;
        out[k] += p.w(j, i) * u[j][k] - p.w(i, j) * ui[k];
      }
    }
  }
  return du;
}

inline void total_mass_rhs(std::span<const double> rho, std::span<double> out, const ModelParams& p) {
  for (std::size_t i = 0; i < p.d; ++i) {
    double v = -p.alpha[i] / 2.0 * rho[i] * rho[i];
    for (std::size_t j = 0; j < p.d; ++j) {
      if (j == i) continue;
      v += p.w(j, i) * rho[j] - p.w(i, j) * rho[i];
    }
    out[i] = v;
  }
}

struct SolverOptions {
  double dt = 1e-3;
  std::int64_t n_max = 40;
  /// Spacing of recorded times; 0 records only the endpoints.
  double record_interval = 0.0;
};

namespace detail {

inline constexpr double kNegativeAbort = -1e-9;
inline constexpr int kMaxHalvings = 6;

/// Clips values in [-1e-9, 0) to zero; returns false if anything is below -1e-9
/// or not finite.
inline bool clip_small_negatives(std::span<double> x, bool* clipped_below_roundoff = nullptr) {
  for (double& v : x) {
    if (!std::isfinite(v) || v < kNegativeAbort) return false;
    if (v < 0.0) {
      if (clipped_below_roundoff && v < -1e-12) *clipped_below_roundoff = true;
      v = 0.0;
    }
  }
  return true;
}

/// Integrates x' = f(x) on [0, horizon] with RK4, halving dt up to six times
/// when a component drops below -1e-9. `record(t, x)` is called at t = 0, at
/// every multiple of the record interval and at the horizon of the accepted run.
template <class System, class Record>
double integrate_nonnegative(System&& system, std::vector<double> x0, double horizon, double dt,
                             double record_interval, Record&& record, bool clip = true,
                             bool* clipped_below_roundoff = nullptr) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "dt must be positive");
  if (horizon < 0.0) throw Error(ErrorKind::InvalidParameter, "horizon must be nonnegative");
  for (int attempt = 0; attempt <= kMaxHalvings; ++attempt, dt /= 2.0) {
    std::vector<std::pair<double, std::vector<double>>> trace;
    trace.emplace_back(0.0, x0);
    if (horizon == 0.0) {
      record(0.0, x0);
      return dt;
    }
    const auto steps = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
    const double h = horizon / static_cast<double>(steps);
    const std::int64_t stride =
        record_interval > 0.0 ? std::max<std::int64_t>(1, std::llround(record_interval / h)) : steps;
    RungeKutta4 rk(x0.size());
    std::vector<double> x = x0;
    bool ok = true;
    for (std::int64_t s = 0; s < steps; ++s) {
      rk.do_step(system, x, static_cast<double>(s) * h, h);
      if (clip && !clip_small_negatives(x, clipped_below_roundoff)) {
        ok = false;
        break;
      }
      if (!clip) {
        for (double v : x)
          if (!std::isfinite(v)) ok = false;
        if (!ok) break;
      }
      if ((s + 1) % stride == 0 || s + 1 == steps) trace.emplace_back(static_cast<double>(s + 1) * h, x);
    }
    if (!ok) continue;
    for (const auto& [t, state] : trace) record(t, state);
    return h;
  }
  throw Error(ErrorKind::StepTooLarge, "solution left the nonnegative cone after 6 step halvings");
}

}  // namespace detail

struct MassPath {
  std::vector<double> times;
  std::vector<std::vector<double>> rho;  // rho[time][colony]
};

/// d rho_i / dt = -(alpha_i / 2) rho_i^2 + sum_{j != i} (w_{j,i} rho_j - w_{i,j} rho_i), rho(0) = c beta.
inline MassPath solve_total_mass(const ModelParams& p, double horizon, const SolverOptions& opt = {}) {
  if (p.regime != Regime::Critical) throw Error(ErrorKind::InvalidParameter, "total-mass system needs the critical regime");
  std::vector<double> rho0(p.d);
  for (std::size_t i = 0; i < p.d; ++i) rho0[i] = p.c_value() * p.beta[i];
  MassPath out;
  detail::integrate_nonnegative(
      [&](const std::vector<double>& x, std::vector<double>& dx, double) { total_mass_rhs(x, dx, p); }, rho0, horizon,
      opt.dt, opt.record_interval, [&](double t, const std::vector<double>& x) {
        out.times.push_back(t);
        out.rho.push_back(x);
      });
  return out;
}

struct DiscreteSolution {
  Lattice lattice;
  std::vector<double> times;
  std::vector<std::vector<LatticeFunction>> u;  // u[time][colony][lattice index]
  std::vector<std::vector<double>> rho;         // companion total masses
  double dt_used = 0.0;

  /// u_i(times[k], n); zero outside the truncation.
  double value(std::size_t k, std::size_t colony, const Configuration& n) const {
    const auto idx = lattice.index_of(n);
    return idx == Lattice::npos ? 0.0 : u[k][colony][idx];
  }

  double truncated_mass(std::size_t k, std::size_t colony) const {
    double s = 0.0;
    for (double v : u[k][colony]) s += v;
    return s;
  }

  std::size_t last() const { return times.size() - 1; }
};

/// Integrates the discrete coagulation equation from u_i(0, n) = c beta_i 1{n = e_i}
/// jointly with its total-mass companion (whose solution feeds the loss term).
inline DiscreteSolution solve_discrete(const ModelParams& p, double horizon, const SolverOptions& opt = {}) {
  if (p.regime != Regime::Critical) throw Error(ErrorKind::InvalidParameter, "discrete equation needs the critical regime");
  DiscreteSolution sol{Lattice(p.d, opt.n_max), {}, {}, {}, 0.0};
  const Lattice& lattice = sol.lattice;
  const std::size_t m = lattice.size();
  const std::size_t d = p.d;
  const double c = p.c_value();

  // Layout: [rho_0..rho_{d-1}, u_0(lattice), ..., u_{d-1}(lattice)].
  std::vector<double> x0(d + d * m, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    x0[i] = c * p.beta[i];
    const auto idx = lattice.index_of(unit_config(d, i));
    if (idx != Lattice::npos) x0[d + i * m + idx] = c * p.beta[i];
  }

  auto system = [&](const std::vector<double>& x, std::vector<double>& dx, double) {
    total_mass_rhs(std::span(x).first(d), std::span(dx).first(d), p);
    std::fill(dx.begin() + static_cast<std::ptrdiff_t>(d), dx.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double* ui = x.data() + d + i * m;
      double* out = dx.data() + d + i * m;
      const double a = p.alpha[i];
      for (const auto& dec : lattice.decompositions()) out[dec.sum] += 0.5 * a * ui[dec.first] * ui[dec.second];
      const double loss = a * x[i] + p.w_out(i);
      for (std::size_t k = 0; k < m; ++k) out[k] -= loss * ui[k];
      for (std::size_t j = 0; j < d; ++j) {
        const double w = p.w(j, i);
        if (j == i || w == 0.0) continue;
        const double* uj = x.data() + d + j * m;
        for (std::size_t k = 0; k < m; ++k) out[k] += w * uj[k];
      }
    }
  };

  sol.dt_used = detail::integrate_nonnegative(system, x0, horizon, opt.dt, opt.record_interval,
                                              [&](double t, const std::vector<double>& x) {
                                                sol.times.push_back(t);
                                                sol.rho.emplace_back(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
                                                std::vector<LatticeFunction> slice(d);
                                                for (std::size_t i = 0; i < d; ++i)
                                                  slice[i].assign(x.begin() + static_cast<std::ptrdiff_t>(d + i * m),
                                                                  x.begin() + static_cast<std::ptrdiff_t>(d + (i + 1) * m));
                                                sol.u.push_back(std::move(slice));
                                              });
  return sol;
}

struct OdePath {
  std::vector<double> times;
  std::vector<std::vector<double>> v;  // v[time][colony]
  std::vector<std::string> warnings;

  const std::vector<double>& final() const { return v.back(); }
};

/// Probability generating function ODE of the branching representation:
/// dv_i/dt = b_i v_i^2 + d_i - (b_i + d_i) v_i + sum_{j != i} m_{i->j} (v_j - v_i), v(0) = lambda.
inline OdePath solve_generating_function(const ModelParams& p, std::span<const double> lambda, double horizon,
                                         const SolverOptions& opt = {}) {
  const BranchingParams bp = branching_params(p);
  OdePath out;
  if (!bp.valid())
    out.warnings.emplace_back("some death rate d_i is negative: the branching representation does not apply");
  auto system = [&](const std::vector<double>& v, std::vector<double>& dv, double) {
    for (std::size_t i = 0; i < p.d; ++i) {
      double r = bp.branch[i] * v[i] * v[i] + bp.death[i] - (bp.branch[i] + bp.death[i]) * v[i];
      for (std::size_t j = 0; j < p.d; ++j)
        if (j != i) r += bp.migrate[i][j] * (v[j] - v[i]);
      dv[i] = r;
    }
  };
  detail::integrate_nonnegative(system, std::vector<double>(lambda.begin(), lambda.end()), horizon, opt.dt,
                                opt.record_interval, [&](double t, const std::vector<double>& v) {
                                  out.times.push_back(t);
                                  out.v.push_back(v);
                                });
  return out;
}

/// psi_i(lambda) = (alpha_i beta_i / 2) lambda_i^2 - sum_{j != i} (w_{j,i} beta_j / beta_i lambda_j - w_{i,j} lambda_i).
inline std::vector<double> psi(std::span<const double> lambda, const ModelParams& p) {
  require_positive_beta(p);
  std::vector<double> out(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    double v = 0.5 * p.alpha[i] * p.beta[i] * lambda[i] * lambda[i];
    for (std::size_t j = 0; j < p.d; ++j) {
      if (j == i) continue;
      v -= p.w(j, i) * p.beta[j] / p.beta[i] * lambda[j] - p.w(i, j) * lambda[i];
    }
    out[i] = v;
  }
  return out;
}

/// dv/dt = -psi(v), v(0) = lambda.
inline OdePath solve_laplace_exponent(const ModelParams& p, std::span<const double> lambda, double horizon,
                                      const SolverOptions& opt = {}) {
  require_positive_beta(p);
  OdePath out;
  auto system = [&](const std::vector<double>& v, std::vector<double>& dv, double) {
    const auto rate = psi(v, p);
    for (std::size_t i = 0; i < p.d; ++i) dv[i] = -rate[i];
  };
  bool clipped = false;
  detail::integrate_nonnegative(
      system, std::vector<double>(lambda.begin(), lambda.end()), horizon, opt.dt, opt.record_interval,
      [&](double t, const std::vector<double>& v) {
        out.times.push_back(t);
        out.v.push_back(v);
      },
      true, &clipped);
  if (clipped) out.warnings.emplace_back("Laplace exponent crossed -1e-12 and was clipped at 0");
  return out;
}

}  // namespace coalcoag
