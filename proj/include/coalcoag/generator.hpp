#pragma once

// Action of the pre-limit generator A^K and of the limit generator on
// functions H(q) = F(<q_1, f_1>, ..., <q_d, f_d>).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "coalcoag/empirical.hpp"

namespace coalcoag {

using OuterFunction = std::function<double(std::span<const double>)>;
using Gradient = std::function<std::vector<double>(std::span<const double>)>;

inline std::vector<double> pairings(const MeasureVector& q, const std::vector<TestFunction>& f) {
  std::vector<double> y(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) y[i] = integrate(q[i], f[i]);
  return y;
}

/// A^K_M H + A^K_C H by enumeration of every transition out of q, including the
/// same-configuration pair term p (K p - 1).
inline double evaluate_generator(const MeasureVector& q, const OuterFunction& F, const std::vector<TestFunction>& f,
                                 const ModelParams& p) {
  const std::vector<double> y = pairings(q, f);
  const double base = F(y);
  const double K = p.K;
  std::vector<double> shifted = y;
  auto delta_F = [&](std::size_t i, double di, std::size_t j, double dj) {
    shifted[i] += di;
    shifted[j] += dj;
    const double out = F(shifted) - base;
    shifted[i] = y[i];
    shifted[j] = y[j];
    return out;
  };

  double migration = 0.0;
  for (std::size_t i = 0; i < p.d; ++i) {
    for (const auto& [k, mass] : q[i].atoms) {
      const auto x = q[i].position(k);
      const double fi = f[i](x);
      for (std::size_t j = 0; j < p.d; ++j) {
        const double w = p.w(i, j);
        if (w == 0.0) continue;
        migration += K * w * mass * delta_F(j, f[j](x) / K, i, -fi / K);
      }
    }
  }

  double coalescence = 0.0;
  for (std::size_t i = 0; i < p.d; ++i) {
    if (p.alpha[i] == 0.0) continue;
    std::vector<std::pair<const Configuration*, double>> atoms;
    std::vector<double> f_at;
    for (const auto& [k, mass] : q[i].atoms) {
      atoms.emplace_back(&k, mass);
      f_at.push_back(f[i](q[i].position(k)));
    }
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const auto& [ka, ma] = atoms[a];
      // Same configuration: p (K p - 1) / 2 pairs per unit K-scaled time.
      {
        const double gain = f[i](q[i].position(*ka + *ka)) - 2.0 * f_at[a];
        coalescence += 0.5 * p.alpha[i] * ma * (K * ma - 1.0) * delta_F(i, gain / K, i, 0.0);
      }
      for (std::size_t b = a + 1; b < atoms.size(); ++b) {
        const auto& [kb, mb] = atoms[b];
        const double gain = f[i](q[i].position(*ka + *kb)) - f_at[a] - f_at[b];
        coalescence += K * p.alpha[i] * ma * mb * delta_F(i, gain / K, i, 0.0);
      }
    }
  }
  return migration + coalescence;
}

/// Central differences with h = 1e-6 * max(1, |y_k|).
inline std::vector<double> finite_difference_gradient(const OuterFunction& F, std::span<const double> y) {
  std::vector<double> g(y.size());
  std::vector<double> z(y.begin(), y.end());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(y[k]));
    z[k] = y[k] + h;
    const double up = F(z);
    z[k] = y[k] - h;
    const double down = F(z);
    z[k] = y[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// <f, q * q> for the self-convolution of an atomic measure.
inline double self_convolution_pairing(const EmpiricalMeasure& q, const TestFunction& f) {
  double acc = 0.0;
  for (const auto& [ka, ma] : q.atoms)
    for (const auto& [kb, mb] : q.atoms) acc += ma * mb * f(q.position(ka + kb));
  return acc;
}

/// Limit generator: sum_{i != j} w_{i,j} [<f_j,q_i> dF_j - <f_i,q_i> dF_i]
///   + 1/2 sum_i (<f_i, q_i * q_i> - 2 <1,q_i> <f_i,q_i>) dF_i.
inline double evaluate_limit_generator(const MeasureVector& q, const OuterFunction& F,
                                       const std::vector<TestFunction>& f, const ModelParams& p,
                                       const std::optional<Gradient>& grad = std::nullopt) {
  const std::vector<double> y = pairings(q, f);
  const std::vector<double> dF = grad ? (*grad)(y) : finite_difference_gradient(F, y);
  double out = 0.0;
  for (std::size_t i = 0; i < p.d; ++i) {
    for (std::size_t j = 0; j < p.d; ++j) {
      const double w = p.w(i, j);
      if (w == 0.0) continue;
      out += w * (integrate(q[i], f[j]) * dF[j] - y[i] * dF[i]);
    }
    const double conv = self_convolution_pairing(q[i], f[i]);
    out += 0.5 * p.alpha[i] * (conv - 2.0 * q[i].total_mass() * y[i]) * dF[i];
  }
  return out;
}

}  // namespace coalcoag
