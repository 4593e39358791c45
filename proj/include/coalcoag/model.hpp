#pragma once

// Shared parameters of the structured coalescent: migration matrix, per-colony
// coalescence rates, scale K, sample size and the derived scaling quantities
// gamma_K = N_K / K, s_K (1 or gamma_K) and b = gamma_K / s_K.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "coalcoag/error.hpp"

namespace coalcoag {

enum class Regime { Critical, Large };

inline std::string to_string(Regime r) { return r == Regime::Critical ? "critical" : "large"; }

using Matrix = std::vector<std::vector<double>>;

struct ModelParams {
  std::size_t d = 1;
  Matrix W;                       // row-major, W[i][j] = w_{i,j}; diagonal ignored
  std::vector<double> alpha;      // per-colony pair coalescence rates
  double K = 1.0;
  std::int64_t N = 1;             // N_K
  std::vector<std::int64_t> L0;   // initial singletons per colony
  Regime regime = Regime::Critical;
  std::optional<double> c;        // critical regime limit of gamma_K
  std::vector<double> beta;       // sampling fractions; defaults to L0 / N
  std::optional<std::uint64_t> seed;

  // Derived by derive_scaling().
  double gamma = 0.0;
  double scale = 1.0;  // s_K
  double b = 0.0;

  double w(std::size_t i, std::size_t j) const { return i == j ? 0.0 : W[i][j]; }

  /// Total emigration rate sum_{j != i} w_{i,j} of colony i (before K-scaling).
  double w_out(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += w(i, j);
    return s;
  }

  double alpha_max() const { return *std::max_element(alpha.begin(), alpha.end()); }

  /// min_i alpha_i / d^2, the rate of the lower Kingman comparison process.
  double alpha_min_d() const {
    return *std::min_element(alpha.begin(), alpha.end()) / static_cast<double>(d * d);
  }

  /// The constant c of the critical regime; falls back to gamma_K.
  double c_value() const { return c.value_or(gamma); }
};

/// Fills gamma, scale, b and the default beta without checking the model
/// assumptions. Used directly for degenerate configurations (alpha = 0, W = 0).
inline ModelParams derive_scaling(ModelParams p) {
  if (p.K <= 0.0 || !std::isfinite(p.K)) throw Error(ErrorKind::InvalidParameter, "K must be positive");
  if (p.N <= 0) throw Error(ErrorKind::InvalidParameter, "N_K must be positive");
  p.gamma = static_cast<double>(p.N) / p.K;
  p.scale = p.regime == Regime::Critical ? 1.0 : p.gamma;
  p.b = p.gamma / p.scale;
  if (p.beta.empty() && p.L0.size() == p.d) {
    p.beta.resize(p.d);
    for (std::size_t i = 0; i < p.d; ++i) p.beta[i] = static_cast<double>(p.L0[i]) / static_cast<double>(p.N);
  }
  return p;
}

/// Primitivity test on the off-diagonal support: (A + I)^d entrywise positive.
inline bool is_primitive(const Matrix& W) {
  const std::size_t d = W.size();
  std::vector<std::vector<char>> reach(d, std::vector<char>(d, 0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) reach[i][j] = (i == j) || W[i][j] > 0.0;
  const auto step = reach;
  for (std::size_t power = 1; power < d; ++power) {
    auto next = reach;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        char any = 0;
        for (std::size_t k = 0; k < d && !any; ++k) any = reach[i][k] && step[k][j];
        next[i][j] = any;
      }
    reach = std::move(next);
  }
  for (const auto& row : reach)
    for (char v : row)
      if (!v) return false;
  return true;
}

inline ModelParams validate_params(ModelParams p) {
  if (p.d == 0) throw Error(ErrorKind::InvalidParameter, "d must be positive");
  if (p.W.size() != p.d) throw Error(ErrorKind::InvalidParameter, "W must be d x d");
  for (const auto& row : p.W) {
    if (row.size() != p.d) throw Error(ErrorKind::InvalidParameter, "W must be d x d");
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidParameter, "W entries must be finite and nonnegative");
  }
  if (p.alpha.size() != p.d) throw Error(ErrorKind::InvalidParameter, "alpha must have length d");
  for (double a : p.alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorKind::NonPositiveRate, "coalescence rates must be positive");
  if (!(p.K > 0.0)) throw Error(ErrorKind::NonPositiveRate, "K must be positive");
  if (p.L0.size() != p.d) throw Error(ErrorKind::InvalidParameter, "L0 must have length d");
  std::int64_t total = 0;
  for (auto l : p.L0) {
    if (l < 0) throw Error(ErrorKind::InconsistentCounts, "L0 entries must be nonnegative");
    total += l;
  }
  if (total != p.N) throw Error(ErrorKind::InconsistentCounts, "sum of L0 must equal N_K");
  if (p.c && !(*p.c > 0.0)) throw Error(ErrorKind::NonPositiveRate, "c must be positive");
  if (!p.beta.empty()) {
    if (p.beta.size() != p.d) throw Error(ErrorKind::InvalidParameter, "beta must have length d");
    double s = 0.0;
    for (double v : p.beta) {
      if (!(v >= 0.0)) throw Error(ErrorKind::InconsistentCounts, "beta entries must be nonnegative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error(ErrorKind::InconsistentCounts, "beta must sum to 1");
  }
  if (!is_primitive(p.W)) throw Error(ErrorKind::NonPrimitiveMatrix, "migration matrix is not primitive");
  return derive_scaling(std::move(p));
}

/// Unique stationary distribution xi of the migration generator
/// (rates w_{i,j} off the diagonal): xi^T Q = 0, sum xi = 1.
inline std::vector<double> stationary_distribution(const ModelParams& p) {
  if (!is_primitive(p.W)) throw Error(ErrorKind::NonPrimitiveMatrix, "migration matrix is not primitive");
  const auto d = static_cast<Eigen::Index>(p.d);
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      // Row i of Q^T: inflow into i from j, outflow on the diagonal.
      A(i, j) = i == j ? -p.w_out(static_cast<std::size_t>(i)) : p.w(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
    }
  }
  A.row(d - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  rhs(d - 1) = 1.0;
  Eigen::VectorXd xi = A.fullPivLu().solve(rhs);
  return {xi.data(), xi.data() + d};
}

/// Splits N into nonnegative integers proportional to beta (largest remainder).
inline std::vector<std::int64_t> split_counts(std::int64_t N, const std::vector<double>& beta) {
  const double total = std::accumulate(beta.begin(), beta.end(), 0.0);
  std::vector<std::int64_t> out(beta.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double exact = static_cast<double>(N) * beta[i] / total;
    out[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += out[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < N; ++k, ++assigned) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace coalcoag
