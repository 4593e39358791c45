#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "coalcoag/coalescent.hpp"

namespace coalcoag {

/// Finite atomic measure on the rescaled lattice. Atoms are keyed by their
/// integer configuration k; the atom sits at k / scale.
struct EmpiricalMeasure {
  std::map<Configuration, double> atoms;
  double scale = 1.0;

  double total_mass() const {
    double m = 0.0;
    for (const auto& [k, mass] : atoms) m += mass;
    return m;
  }

  std::vector<double> position(const Configuration& k) const {
    std::vector<double> x(k.size());
    for (std::size_t h = 0; h < k.size(); ++h) x[h] = static_cast<double>(k[h]) / scale;
    return x;
  }
};

using MeasureVector = std::vector<EmpiricalMeasure>;
using TestFunction = std::function<double(std::span<const double>)>;

/// mu_i^K: mass count / K at k / s_K for every configuration stored in colony i.
inline MeasureVector to_empirical(const CoalescentState& s, const ModelParams& p) {
  MeasureVector out(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    out[i].scale = p.scale;
    for (const auto& [k, n] : s.colonies[i].blocks) out[i].atoms.emplace(k, static_cast<double>(n) / p.K);
  }
  return out;
}

inline double integrate(const EmpiricalMeasure& m, const TestFunction& f) {
  double acc = 0.0;
  for (const auto& [k, mass] : m.atoms) {
    const auto x = m.position(k);
    acc += f(x) * mass;
  }
  return acc;
}

/// <m, <lambda, .>>
inline double linear_functional(const EmpiricalMeasure& m, std::span<const double> lambda) {
  double acc = 0.0;
  for (const auto& [k, mass] : m.atoms) {
    double dot = 0.0;
    for (std::size_t h = 0; h < k.size(); ++h) dot += lambda[h] * static_cast<double>(k[h]);
    acc += mass * dot / m.scale;
  }
  return acc;
}

/// <m, 1 - exp(-<lambda, .>)>, lambda > 0 componentwise.
inline double laplace_functional(const EmpiricalMeasure& m, std::span<const double> lambda) {
  for (double l : lambda)
    if (!(l > 0.0)) throw Error(ErrorKind::NonPositiveLambda, "lambda must be positive componentwise");
  double acc = 0.0;
  for (const auto& [k, mass] : m.atoms) {
    double dot = 0.0;
    for (std::size_t h = 0; h < k.size(); ++h) dot += lambda[h] * static_cast<double>(k[h]);
    acc += -std::expm1(-dot / m.scale) * mass;
  }
  return acc;
}

/// Splits every block of colony i into its home-color part (coordinate i kept)
/// and its foreign part (coordinate i zeroed). Returns (mono, poly).
inline std::pair<MeasureVector, MeasureVector> mono_poly_split(const CoalescentState& s, const ModelParams& p) {
  MeasureVector mono(p.d), poly(p.d);
  for (std::size_t i = 0; i < p.d; ++i) {
    mono[i].scale = poly[i].scale = p.scale;
    for (const auto& [k, n] : s.colonies[i].blocks) {
      Configuration home(p.d, 0), foreign = k;
      home[i] = k[i];
      foreign[i] = 0;
      const double mass = static_cast<double>(n) / p.K;
      mono[i].atoms[home] += mass;
      poly[i].atoms[foreign] += mass;
    }
  }
  return {std::move(mono), std::move(poly)};
}

}  // namespace coalcoag
