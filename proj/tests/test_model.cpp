#include <gtest/gtest.h>

#include <random>

#include "coalcoag/model.hpp"

using namespace coalcoag;

namespace {

ModelParams two_colony() {
  ModelParams p;
  p.d = 2;
  p.W = {{0, 1}, {1, 0}};
  p.alpha = {1, 1};
  p.K = 10;
  p.N = 10;
  p.L0 = {5, 5};
  p.regime = Regime::Critical;
  return p;
}

ErrorKind kind_of(const ModelParams& p) {
  try {
    validate_params(p);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected validation error";
  return ErrorKind::InvalidParameter;
}

}  // namespace

TEST(ValidateParams, AcceptsSymmetricCritical) {
  const auto p = validate_params(two_colony());
  EXPECT_DOUBLE_EQ(p.gamma, 1.0);
  EXPECT_DOUBLE_EQ(p.scale, 1.0);
  EXPECT_DOUBLE_EQ(p.b, 1.0);
  ASSERT_EQ(p.beta.size(), 2u);
  EXPECT_DOUBLE_EQ(p.beta[0], 0.5);
}

TEST(ValidateParams, RejectsReducibleMatrix) {
  auto p = two_colony();
  p.W = {{0, 1}, {0, 0}};
  EXPECT_EQ(kind_of(p), ErrorKind::NonPrimitiveMatrix);
}

TEST(ValidateParams, RejectsInconsistentCounts) {
  auto p = two_colony();
  p.L0 = {5, 4};
  EXPECT_EQ(kind_of(p), ErrorKind::InconsistentCounts);
}

TEST(ValidateParams, RejectsNonPositiveRates) {
  auto p = two_colony();
  p.alpha = {1, 0};
  EXPECT_EQ(kind_of(p), ErrorKind::NonPositiveRate);
  p.alpha = {1, -2};
  EXPECT_EQ(kind_of(p), ErrorKind::NonPositiveRate);
}

TEST(ValidateParams, RejectsBetaNotSummingToOne) {
  auto p = two_colony();
  p.beta = {0.7, 0.7};
  EXPECT_EQ(kind_of(p), ErrorKind::InconsistentCounts);
}

TEST(ValidateParams, LargeRegimeHasUnitB) {
  auto p = two_colony();
  p.regime = Regime::Large;
  p.N = 40;
  p.L0 = {20, 20};
  const auto v = validate_params(p);
  EXPECT_DOUBLE_EQ(v.gamma, 4.0);
  EXPECT_DOUBLE_EQ(v.scale, 4.0);
  EXPECT_DOUBLE_EQ(v.b, 1.0);
}

TEST(ValidateParams, BBounds) {
  // b <= max(gamma, 1) in both regimes, b = 1 in the large regime.
  for (std::int64_t N : {3, 10, 25, 99}) {
    for (auto regime : {Regime::Critical, Regime::Large}) {
      auto p = two_colony();
      p.regime = regime;
      p.N = N;
      p.L0 = split_counts(N, {0.5, 0.5});
      const auto v = validate_params(p);
      EXPECT_LE(v.b, std::max(v.gamma, 1.0));
      if (regime == Regime::Critical) {
        EXPECT_DOUBLE_EQ(v.b, v.gamma);
      }
      if (regime == Regime::Large) {
        EXPECT_DOUBLE_EQ(v.b, 1.0);
      }
    }
  }
}

TEST(Primitivity, ThreeCycleIsPrimitive) {
  EXPECT_TRUE(is_primitive({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}));
  EXPECT_FALSE(is_primitive({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}));
  EXPECT_TRUE(is_primitive({{0}}));
}

TEST(StationaryDistribution, Symmetric) {
  const auto xi = stationary_distribution(two_colony());
  EXPECT_NEAR(xi[0], 0.5, 1e-14);
  EXPECT_NEAR(xi[1], 0.5, 1e-14);
}

TEST(StationaryDistribution, AsymmetricTwoColony) {
  // Balance: xi_1 * 2 = xi_2 * 1 with xi_1 + xi_2 = 1.
  auto p = two_colony();
  p.W = {{0, 2}, {1, 0}};
  const auto xi = stationary_distribution(p);
  EXPECT_NEAR(xi[0], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(xi[1], 2.0 / 3.0, 1e-14);
}

TEST(StationaryDistribution, RejectsReducible) {
  auto p = two_colony();
  p.W = {{0, 1}, {0, 0}};
  EXPECT_THROW(stationary_distribution(p), Error);
}

TEST(StationaryDistribution, BalanceEquationsRandomMatrices) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.05, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams p;
    p.d = 2 + static_cast<std::size_t>(trial % 5);
    p.W.assign(p.d, std::vector<double>(p.d, 0.0));
    for (std::size_t i = 0; i < p.d; ++i)
      for (std::size_t j = 0; j < p.d; ++j)
        if (i != j) p.W[i][j] = unif(rng);
    const auto xi = stationary_distribution(p);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.d; ++i) {
      sum += xi[i];
      EXPECT_GT(xi[i], 0.0);
      double inflow = 0.0;
      for (std::size_t j = 0; j < p.d; ++j)
        if (j != i) inflow += xi[j] * p.W[j][i];
      EXPECT_NEAR(inflow, xi[i] * p.w_out(i), 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SplitCounts, SumsToN) {
  EXPECT_EQ(split_counts(11, {0.5, 0.5}), (std::vector<std::int64_t>{6, 5}));
  const auto s = split_counts(100, {0.2, 0.3, 0.5});
  EXPECT_EQ(s, (std::vector<std::int64_t>{20, 30, 50}));
}
