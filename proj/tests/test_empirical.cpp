#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "coalcoag/empirical.hpp"

using namespace coalcoag;

namespace {

ModelParams params(Regime regime, double K, std::int64_t N) {
  ModelParams p;
  p.d = 2;
  p.W = {{0, 1}, {1, 0}};
  p.alpha = {1, 1};
  p.K = K;
  p.N = N;
  p.L0 = {N / 2, N - N / 2};
  p.regime = regime;
  return validate_params(p);
}

CoalescentState random_state(const ModelParams& p, std::uint64_t seed, double t) {
  Rng rng = make_stream(seed, 0);
  CoalescentState s = init_state(p);
  simulate_until(s, p, t, rng);
  return s;
}

}  // namespace

TEST(ToEmpirical, MassIsBlockCountOverK) {
  const ModelParams p = params(Regime::Critical, 20.0, 40);
  const auto s = random_state(p, 1, 0.7);
  const auto mu = to_empirical(s, p);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_NEAR(mu[i].total_mass(), static_cast<double>(s.colonies[i].block_count) / 20.0, 1e-14);
}

TEST(ToEmpirical, LargeRegimeRescalesPositions) {
  const ModelParams p = params(Regime::Large, 16.0, 64);  // gamma = s_K = 4
  const auto mu = to_empirical(init_state(p), p);
  ASSERT_EQ(mu[0].atoms.size(), 1u);
  const auto x = mu[0].position(Configuration{1, 0});
  EXPECT_DOUBLE_EQ(x[0], 0.25);
  EXPECT_DOUBLE_EQ(mu[0].atoms.begin()->second, 2.0);
}

TEST(Functionals, LinearAdditivity) {
  const ModelParams p = params(Regime::Large, 16.0, 64);
  const auto s = random_state(p, 2, 0.5);
  const auto mu = to_empirical(s, p);
  const std::vector<double> a{0.3, 1.1}, b{2.0, 0.4}, ab{2.3, 1.5};
  for (const auto& m : mu)
    EXPECT_NEAR(linear_functional(m, ab), linear_functional(m, a) + linear_functional(m, b), 1e-12);
}

TEST(Functionals, LaplaceMatchesIntegrate) {
  const ModelParams p = params(Regime::Large, 16.0, 64);
  const auto mu = to_empirical(random_state(p, 3, 0.5), p);
  const std::vector<double> lambda{0.7, 1.3};
  const TestFunction f = [&](std::span<const double> x) { return 1.0 - std::exp(-(0.7 * x[0] + 1.3 * x[1])); };
  for (const auto& m : mu) EXPECT_NEAR(laplace_functional(m, lambda), integrate(m, f), 1e-12);
}

TEST(Functionals, LaplaceBoundedByLinear) {
  const ModelParams p = params(Regime::Large, 25.0, 125);
  const auto mu = to_empirical(random_state(p, 4, 0.3), p);
  const std::vector<double> lambda{1.0, 2.0};
  for (const auto& m : mu) EXPECT_LE(laplace_functional(m, lambda), linear_functional(m, lambda) + 1e-15);
}

TEST(Functionals, LaplaceRejectsNonPositiveLambda) {
  const ModelParams p = params(Regime::Critical, 10.0, 10);
  const auto mu = to_empirical(init_state(p), p);
  const std::vector<double> bad{1.0, 0.0};
  try {
    laplace_functional(mu[0], bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveLambda);
  }
}

TEST(MonoPoly, AtomsSplitCoordinatewise) {
  const ModelParams p = params(Regime::Critical, 10.0, 20);
  const auto s = random_state(p, 5, 1.5);
  const auto [mono, poly] = mono_poly_split(s, p);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(mono[i].total_mass(), poly[i].total_mass(), 1e-14);
    for (const auto& [k, mass] : mono[i].atoms)
      for (std::size_t h = 0; h < 2; ++h) {
        if (h != i) {
          EXPECT_EQ(k[h], 0);
        }
      }
    for (const auto& [k, mass] : poly[i].atoms) EXPECT_EQ(k[i], 0);
  }
}
