#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "coalcoag/coag_solver.hpp"

using namespace coalcoag;

namespace {

// Single colony, alpha = 2, c = 1: rho = 1/(1+t), u(t,n) = t^{n-1}/(1+t)^{n+1}.
ModelParams single_colony() {
  ModelParams p;
  p.d = 1;
  p.W = {{0.0}};
  p.alpha = {2.0};
  p.K = 10.0;
  p.L0 = {10};
  p.N = 10;
  return validate_params(p);
}

double u_exact(double t, std::int64_t n) {
  return std::pow(t, static_cast<double>(n - 1)) / std::pow(1.0 + t, static_cast<double>(n + 1));
}

ModelParams symmetric_pair(Regime regime) {
  ModelParams p;
  p.d = 2;
  p.W = {{0, 1}, {1, 0}};
  p.alpha = {1, 1};
  p.K = 10.0;
  p.L0 = {5, 5};
  p.N = 10;
  p.regime = regime;
  return validate_params(p);
}

ModelParams asymmetric_triple() {
  ModelParams p;
  p.d = 3;
  p.W = {{0, 1.0, 0.5}, {0.2, 0, 2.0}, {1.0, 0.3, 0}};
  p.alpha = {1.0, 2.0, 0.5};
  p.K = 10.0;
  p.L0 = {5, 3, 2};
  p.N = 10;
  p.c = 1.5;
  return validate_params(p);
}

}  // namespace

TEST(Convolve, OrderedDecompositions) {
  const Lattice lattice(1, 10);
  std::vector<double> u(lattice.size(), 0.0);
  for (std::int64_t n = 1; n <= 10; ++n) u[lattice.index_of(Configuration{n})] = static_cast<double>(n);
  // 1*3 + 2*2 + 3*1
  EXPECT_DOUBLE_EQ(convolve(lattice, u, Configuration{4}), 10.0);
  EXPECT_DOUBLE_EQ(convolve(lattice, u, Configuration{1}), 0.0);
}

TEST(Convolve, TwoDimensional) {
  const Lattice lattice(2, 4);
  std::vector<double> u(lattice.size(), 0.0);
  u[lattice.index_of(Configuration{1, 0})] = 2.0;
  u[lattice.index_of(Configuration{0, 1})] = 3.0;
  // (1,0)+(0,1) and (0,1)+(1,0).
  EXPECT_DOUBLE_EQ(convolve(lattice, u, Configuration{1, 1}), 12.0);
  EXPECT_DOUBLE_EQ(convolve(lattice, u, Configuration{2, 0}), 4.0);
}

TEST(Lattice, SizeAndIndexing) {
  const Lattice lattice(2, 5);
  EXPECT_EQ(lattice.size(), 20u);  // (5+1)(5+2)/2 - 1
  for (std::size_t k = 0; k < lattice.size(); ++k) EXPECT_EQ(lattice.index_of(lattice.point(k)), k);
  EXPECT_EQ(lattice.index_of(Configuration{0, 0}), Lattice::npos);
  EXPECT_EQ(lattice.index_of(Configuration{3, 3}), Lattice::npos);
}

TEST(RhsDiscrete, SingleColonyAtTimeZero) {
  const ModelParams p = single_colony();
  const Lattice lattice(1, 5);
  std::vector<LatticeFunction> u(1, LatticeFunction(lattice.size(), 0.0));
  u[0][lattice.index_of(Configuration{1})] = 1.0;
  const std::vector<double> rho{1.0};
  const auto du = rhs_discrete(lattice, u, rho, p);
  EXPECT_DOUBLE_EQ(du[0][lattice.index_of(Configuration{1})], -2.0);
  EXPECT_DOUBLE_EQ(du[0][lattice.index_of(Configuration{2})], 1.0);
  EXPECT_DOUBLE_EQ(du[0][lattice.index_of(Configuration{3})], 0.0);
}

TEST(RhsDiscrete, MigrationMovesMass) {
  ModelParams p = symmetric_pair(Regime::Critical);
  p.W = {{0, 2.0}, {0.5, 0}};
  const Lattice lattice(2, 3);
  std::vector<LatticeFunction> u(2, LatticeFunction(lattice.size(), 0.0));
  const auto e0 = lattice.index_of(Configuration{1, 0});
  u[0][e0] = 1.0;
  const std::vector<double> rho{0.0, 0.0};
  const auto du = rhs_discrete(lattice, u, rho, p);
  EXPECT_DOUBLE_EQ(du[0][e0], -2.0);
  EXPECT_DOUBLE_EQ(du[1][e0], 2.0);
}

TEST(SolveDiscrete, HorizonZeroIsInitialCondition) {
  const ModelParams p = asymmetric_triple();
  const auto sol = solve_discrete(p, 0.0, {.dt = 1e-2, .n_max = 5});
  ASSERT_EQ(sol.times.size(), 1u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(sol.value(0, i, unit_config(3, i)), 1.5 * p.beta[i]);
    EXPECT_DOUBLE_EQ(sol.truncated_mass(0, i), 1.5 * p.beta[i]);
  }
}

TEST(SolveDiscrete, SingleColonyClosedForm) {
  const ModelParams p = single_colony();
  const auto sol = solve_discrete(p, 1.0, {.dt = 1e-3, .n_max = 60});
  const auto k = sol.last();
  EXPECT_NEAR(sol.value(k, 0, Configuration{2}), 0.125, 1e-10);
  for (std::int64_t n = 1; n <= 20; ++n) EXPECT_NEAR(sol.value(k, 0, Configuration{n}), u_exact(1.0, n), 1e-10);
  EXPECT_NEAR(sol.rho[k][0], 0.5, 1e-12);
}

TEST(SolveDiscrete, LeafMassConserved) {
  const ModelParams p = single_colony();
  const auto sol = solve_discrete(p, 1.0, {.dt = 1e-3, .n_max = 60, .record_interval = 0.25});
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    double leaves = 0.0;
    for (std::size_t idx = 0; idx < sol.lattice.size(); ++idx)
      leaves += static_cast<double>(sol.lattice.point(idx)[0]) * sol.u[k][0][idx];
    EXPECT_NEAR(leaves, 1.0, 1e-4) << "t = " << sol.times[k];
  }
}

TEST(SolveDiscrete, RungeKuttaOrder) {
  const ModelParams p = single_colony();
  auto error = [&](double dt) {
    const auto sol = solve_discrete(p, 1.0, {.dt = dt, .n_max = 30});
    double e = 0.0;
    for (std::int64_t n = 1; n <= 10; ++n)
      e = std::max(e, std::abs(sol.value(sol.last(), 0, Configuration{n}) - u_exact(1.0, n)));
    return e;
  };
  const double coarse = error(0.1), fine = error(0.05);
  EXPECT_GE(coarse / fine, 8.0) << coarse << " vs " << fine;
}

TEST(SolveDiscrete, NonnegativeAndMassConsistent) {
  const ModelParams p = asymmetric_triple();
  const auto sol = solve_discrete(p, 2.0, {.dt = 1e-2, .n_max = 14, .record_interval = 0.5});
  const auto mass = solve_total_mass(p, 2.0, {.dt = 1e-2, .record_interval = 0.5});
  ASSERT_EQ(sol.times.size(), mass.times.size());
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    for (std::size_t i = 0; i < 3; ++i) {
      for (double v : sol.u[k][i]) EXPECT_GE(v, 0.0);
      EXPECT_NEAR(sol.rho[k][i], mass.rho[k][i], 1e-12);
      EXPECT_LE(sol.truncated_mass(k, i), sol.rho[k][i] + 1e-12);
      EXPECT_NEAR(sol.truncated_mass(k, i), sol.rho[k][i], 1e-3);
    }
}

TEST(SolveDiscrete, DecoupledColonies) {
  ModelParams p = symmetric_pair(Regime::Critical);
  p.W = {{0, 0}, {0, 0}};
  p.alpha = {2.0, 4.0};
  p.L0 = {3, 7};
  p.beta.clear();
  p = derive_scaling(p);
  const auto sol = solve_discrete(p, 1.0, {.dt = 1e-3, .n_max = 20});
  for (std::size_t i = 0; i < 2; ++i) {
    const double r0 = p.beta[i];
    const double rho = r0 / (1.0 + r0 * p.alpha[i] / 2.0);
    EXPECT_NEAR(sol.rho[sol.last()][i], rho, 1e-12);
    // u(t, e_i) = r0 (rho / r0)^2 when the loss rate is alpha rho.
    EXPECT_NEAR(sol.value(sol.last(), i, unit_config(2, i)), rho * rho / r0, 1e-10);
  }
}

TEST(SolveTotalMass, SymmetricPair) {
  const auto path = solve_total_mass(symmetric_pair(Regime::Critical), 1.0);
  EXPECT_NEAR(path.rho.back()[0], 0.4, 1e-12);
  EXPECT_NEAR(path.rho.back()[1], 0.4, 1e-12);
}

TEST(SolveTotalMass, NoCoalescenceConservesSum) {
  ModelParams p = asymmetric_triple();
  p.alpha = {0.0, 0.0, 0.0};
  p = derive_scaling(p);
  const auto path = solve_total_mass(p, 3.0, {.dt = 1e-2, .record_interval = 0.5});
  for (const auto& rho : path.rho) EXPECT_NEAR(rho[0] + rho[1] + rho[2], 1.5, 1e-12);
}

TEST(SolveTotalMass, StepTooLarge) {
  ModelParams p = single_colony();
  p.c = 1e6;
  try {
    solve_total_mass(p, 1.0, {.dt = 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepTooLarge);
  }
}

TEST(SolveTotalMass, RejectsLargeRegime) {
  EXPECT_THROW(solve_total_mass(symmetric_pair(Regime::Large), 1.0), Error);
}

TEST(GeneratingFunction, SingleColonyClosedForm) {
  const ModelParams p = single_colony();
  for (double lambda : {0.0, 0.3, 0.5, 0.9}) {
    const std::vector<double> l{lambda};
    const auto path = solve_generating_function(p, l, 1.0);
    EXPECT_NEAR(path.final()[0], 1.0 - (1.0 - lambda) / (2.0 - lambda), 1e-12);
    EXPECT_TRUE(path.warnings.empty());
  }
}

TEST(GeneratingFunction, OneIsFixed) {
  const ModelParams p = asymmetric_triple();
  const std::vector<double> one{1.0, 1.0, 1.0};
  const auto path = solve_generating_function(p, one, 2.0);
  for (double v : path.final()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(GeneratingFunction, StaysInUnitInterval) {
  ModelParams p = symmetric_pair(Regime::Critical);
  p.W = {{0, 0.4}, {0.7, 0}};
  p.alpha = {2.0, 3.0};
  const std::vector<double> lambda{0.2, 0.8};
  const auto path = solve_generating_function(p, lambda, 3.0, {.dt = 1e-3, .record_interval = 0.1});
  EXPECT_TRUE(path.warnings.empty());
  for (const auto& v : path.v)
    for (double x : v) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
}

TEST(GeneratingFunction, WarnsOnNegativeDeath) {
  ModelParams p = symmetric_pair(Regime::Critical);
  p.W = {{0, 0.1}, {5.0, 0}};
  p.beta = {0.5, 0.5};
  p.alpha = {0.1, 0.1};
  const std::vector<double> lambda{0.5, 0.5};
  const auto path = solve_generating_function(p, lambda, 0.1);
  EXPECT_FALSE(path.warnings.empty());
}

TEST(Psi, SymmetricValue) {
  const ModelParams p = symmetric_pair(Regime::Large);
  const std::vector<double> one{1.0, 1.0};
  const auto v = psi(one, p);
  EXPECT_DOUBLE_EQ(v[0], 0.25);
  EXPECT_DOUBLE_EQ(v[1], 0.25);
}

TEST(Psi, ZeroBeta) {
  ModelParams p = symmetric_pair(Regime::Large);
  p.beta = {1.0, 0.0};
  const std::vector<double> one{1.0, 1.0};
  try {
    psi(one, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroBeta);
  }
}

TEST(LaplaceExponent, SingleColonyClosedForm) {
  const ModelParams p = single_colony();
  for (double lambda : {0.1, 1.0, 5.0}) {
    const std::vector<double> l{lambda};
    EXPECT_NEAR(solve_laplace_exponent(p, l, 1.0).final()[0], lambda / (1.0 + lambda), 1e-10);
  }
}

TEST(LaplaceExponent, SymmetricPairDiagonal) {
  const ModelParams p = symmetric_pair(Regime::Large);
  const std::vector<double> one{1.0, 1.0};
  const auto v = solve_laplace_exponent(p, one, 1.0).final();
  EXPECT_NEAR(v[0], 0.8, 1e-12);
  EXPECT_NEAR(v[1], 0.8, 1e-12);
}

TEST(LaplaceExponent, SwapSymmetry) {
  const ModelParams p = symmetric_pair(Regime::Large);
  const std::vector<double> a{0.3, 2.0}, b{2.0, 0.3};
  const auto va = solve_laplace_exponent(p, a, 1.0).final();
  const auto vb = solve_laplace_exponent(p, b, 1.0).final();
  EXPECT_NEAR(va[0], vb[1], 1e-12);
  EXPECT_NEAR(va[1], vb[0], 1e-12);
}

TEST(LaplaceExponent, SemigroupProperty) {
  const ModelParams p = asymmetric_triple();
  const std::vector<double> lambda{0.5, 2.0, 1.0};
  const auto direct = solve_laplace_exponent(p, lambda, 1.5).final();
  const auto half = solve_laplace_exponent(p, lambda, 0.5).final();
  const auto composed = solve_laplace_exponent(p, half, 1.0).final();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(direct[i], composed[i], 1e-10);
}

TEST(LaplaceExponent, DecoupledBoundedByInitial) {
  ModelParams p = symmetric_pair(Regime::Large);
  p.W = {{0, 0}, {0, 0}};
  p = derive_scaling(p);
  const std::vector<double> lambda{0.7, 3.0};
  const auto v = solve_laplace_exponent(p, lambda, 2.0).final();
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE(v[i], lambda[i]);
    EXPECT_GE(v[i], 0.0);
  }
}
