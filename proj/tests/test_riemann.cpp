#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "radiant/riemann.hpp"

using namespace radiant;

namespace {

RadialProfile constant(double c) {
  return RadialProfile::analytic([c](double) { return c; }, [](double) { return 0.0; });
}

RadialProfile monomial(int k) {
  return RadialProfile::analytic([k](double r) { return std::pow(r, k); },
                                 [k](double r) { return k * std::pow(r, k - 1); });
}

RadialProfile bump_profile(double lo, double hi, double amp = 1.0) {
  return RadialProfile::analytic([=](double r) { return amp * oracle::bump(r, lo, hi); }, {}, 2, hi);
}

}  // namespace

TEST(RadialProfile, SampledInterpolationAndExtrapolation) {
  std::vector<double> x, y, d;
  for (int i = 1; i <= 200; ++i) {
    const double r = 0.05 * i;
    x.push_back(r);
    y.push_back(std::sin(r));
    d.push_back(std::cos(r));
  }
  auto hermite = RadialProfile::sampled(x, y, d);
  auto pchip = RadialProfile::sampled(x, y);
  auto linear = RadialProfile::sampled(x, y, {}, RadialProfile::Extrapolation::ZeroBeyondSupport, 0.0, 1);
  EXPECT_NEAR(hermite(1.234), std::sin(1.234), 1e-7);
  EXPECT_NEAR(pchip(1.234), std::sin(1.234), 1e-4);
  EXPECT_NEAR(linear(1.234), std::sin(1.234), 1e-3);
  EXPECT_DOUBLE_EQ(hermite(20.0), 0.0);
  EXPECT_DOUBLE_EQ(hermite(0.01), y.front());
  auto tail = RadialProfile::sampled(x, y, {}, RadialProfile::Extrapolation::PowerLawTail, 2.0);
  EXPECT_NEAR(tail(20.0), y.back() / 4.0, 1e-14);
  EXPECT_FALSE(tail.support_end().has_value());
  EXPECT_EQ(*hermite.support_end(), 10.0);
}

TEST(RadialProfile, RejectsInvalidTables) {
  EXPECT_THROW(RadialProfile::sampled({1.0, 1.0}, {0.0, 0.0}), DomainError);
  EXPECT_THROW(RadialProfile::sampled({0.0, 1.0}, {0.0, 0.0}), DomainError);
  EXPECT_THROW(RadialProfile::sampled({1.0, 2.0}, {0.0}), DomainError);
  EXPECT_THROW(RadialProfile::sampled({1.0, 2.0, 3.0}, {0.0, 1.0, 2.0}, {5.0, 5.0, 5.0}), DomainError);
}

TEST(QuadratureSpec, Validation) {
  QuadratureSpec q;
  EXPECT_NO_THROW(q.validate());
  q.panels_per_unit = 3;
  EXPECT_THROW(q.validate(), DomainError);
  q = {};
  q.abs_tol = 0.0;
  EXPECT_THROW(q.validate(), DomainError);
}

TEST(ApplyL, ConstantDataGivesTime) {
  for (int n = 2; n <= 6; ++n) {
    auto dims = DimensionParams::of(n);
    for (auto [r, t] : {std::pair{0.7, 0.3}, {1.0, 1.0}, {0.5, 2.5}, {3.0, 5.0}}) {
      EXPECT_NEAR(apply_L(constant(1.0), dims, r, t), t, 1e-8) << "n=" << n << " r=" << r << " t=" << t;
    }
  }
}

TEST(ApplyL, ZeroData) {
  for (int n = 2; n <= 6; ++n) EXPECT_EQ(apply_L(RadialProfile::zero(), DimensionParams::of(n), 1.3, 2.1), 0.0);
}

// Polynomial velocity data solve exactly: u = sum_j t^{2j+1}/(2j+1)! Delta^j psi.
TEST(ApplyL, PolynomialDataMatchesPowerSeries) {
  for (int n = 2; n <= 6; ++n) {
    auto dims = DimensionParams::of(n);
    for (auto [r, t] : {std::pair{2.0, 1.0}, {0.4, 1.7}, {1.5, 1.5}, {0.05, 3.0}}) {
      const double u2 = t * r * r + n * t * t * t / 3.0;
      const double u4 = t * std::pow(r, 4) + std::pow(t, 3) / 6.0 * 4.0 * (n + 2) * r * r +
                        std::pow(t, 5) / 120.0 * 8.0 * n * (n + 2);
      EXPECT_NEAR(apply_L(monomial(2), dims, r, t), u2, 1e-7 * (1 + u2)) << n << " " << r << " " << t;
      EXPECT_NEAR(apply_L(monomial(4), dims, r, t), u4, 1e-7 * (1 + u4)) << n << " " << r << " " << t;
    }
  }
}

TEST(ApplyL, EvenDimensionBruteForce) {
  // n = 4, f(lambda) = lambda, (r,t) = (2,1): the single integral over [1,3].
  const double r = 2.0, t = 1.0;
  const int N = 100000;
  const double a = 1.0, b = 3.0, h = (b - a) / N;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const double l = a + (i + 0.5) * h;
    sum += std::pow(l, 1.5) * l * oracle::u_kernel_reference(1, z_ratio(l, r, t));
  }
  const double brute = sum * h / (2.0 * std::pow(r, 1.5));
  EXPECT_NEAR(apply_L(monomial(1), DimensionParams::of(4), r, t), brute, 1e-6);
}

TEST(ApplyL, Linearity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.2, 4.0);
  auto f = bump_profile(0.5, 2.5);
  auto g = RadialProfile::analytic([](double r) { return std::exp(-r); });
  const double alpha = 1.7, beta = -0.6;
  auto h = RadialProfile::analytic([&](double r) { return alpha * f(r) + beta * g(r); });
  for (int n : {3, 4}) {
    auto dims = DimensionParams::of(n);
    for (int i = 0; i < 8; ++i) {
      const double r = U(rng), t = U(rng);
      const double lhs = apply_L(h, dims, r, t);
      const double rhs = alpha * apply_L(f, dims, r, t) + beta * apply_L(g, dims, r, t);
      EXPECT_NEAR(lhs, rhs, 1e-8) << n;
    }
  }
}

TEST(ApplyL, PositivityCone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int n : {3, 4}) {
    auto dims = DimensionParams::of(n);
    const double beta = positivity_constants(n).beta_n;
    for (int i = 0; i < 60; ++i) {
      const double R = 0.5 + 2.0 * U(rng);
      const double lo = R + 0.01 + U(rng), hi = lo + 0.2 + 2.0 * U(rng);
      auto f = bump_profile(lo, hi, 0.1 + U(rng));
      const double t = 3.0 * U(rng);
      const double r = std::max(beta * t, t + R) * (1.0 + 0.5 * U(rng)) + 1e-3;
      EXPECT_GE(apply_L(f, dims, r, t), -1e-9) << n << " " << r << " " << t;
    }
  }
}

TEST(ApplyL, Errors) {
  auto dims = DimensionParams::of(3);
  EXPECT_THROW(apply_L(constant(1.0), dims, 0.0, 1.0), DomainError);
  EXPECT_THROW(apply_L(constant(1.0), dims, -1.0, 1.0), DomainError);
  EXPECT_THROW(apply_L(constant(1.0), dims, 1.0, -1.0), DomainError);
  QuadratureSpec q;
  q.abs_tol = 1e-300;
  q.max_refinements = 1;
  EXPECT_THROW(apply_L(bump_profile(0.5, 1.5), DimensionParams::of(4), 1.0, 2.0, q), ToleranceNotMet);
}

TEST(HomogeneousSolution, TrivialCases) {
  auto d3 = DimensionParams::of(3);
  EXPECT_EQ(homogeneous_solution(RadialProfile::zero(), RadialProfile::zero(), d3, 1.0, 2.0), 0.0);
  for (double t : {0.0, 0.3, 1.0, 4.0}) EXPECT_NEAR(homogeneous_solution({}, constant(1.0), d3, 1.2, t), t, 1e-8);
}

TEST(HomogeneousSolution, PositionDataPowerSeries) {
  // phi = r^2: u = r^2 + n t^2.
  for (int n = 2; n <= 5; ++n) {
    auto dims = DimensionParams::of(n);
    for (auto [r, t] : {std::pair{1.0, 2.0}, {2.0, 0.5}, {0.7, 0.0}, {0.3, 0.004}}) {
      EXPECT_NEAR(homogeneous_solution(monomial(2), {}, dims, r, t), r * r + n * t * t, 1e-6) << n;
    }
  }
}

TEST(HomogeneousSolution, DAlembertOracle) {
  auto d3 = DimensionParams::of(3);
  auto phi = [](double r) { return oracle::bump(r, 1.0, 2.0); };
  auto psi = [](double r) { return 0.5 * oracle::bump(r, 1.0, 2.0); };
  auto P = bump_profile(1.0, 2.0), S = bump_profile(1.0, 2.0, 0.5);
  for (auto [r, t] : {std::pair{3.0, 0.5}, {2.5, 1.0}, {0.5, 1.2}, {1.1, 0.3}, {0.2, 1.6}}) {
    const double exact = oracle::dalembert_n3(phi, psi, r, t);
    EXPECT_NEAR(homogeneous_solution(P, S, d3, r, t), exact, 1e-6) << r << " " << t;
  }
}

TEST(HomogeneousSolution, HuygensSupport) {
  auto d3 = DimensionParams::of(3);
  const double R1 = 1.0, R2 = 2.0;
  auto P = bump_profile(R1, R2), S = bump_profile(R1, R2, 0.7);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.05, 6.0);
  int checked = 0;
  while (checked < 40) {
    const double r = U(rng), t = U(rng);
    if (!(t - r > R2 || r - t > R2 || r + t < R1)) continue;
    EXPECT_LT(std::abs(homogeneous_solution(P, S, d3, r, t)), 1e-8) << r << " " << t;
    ++checked;
  }
}

TEST(ApplyL, SampledProfileMatchesAnalytic) {
  std::vector<double> x, y, d;
  for (int i = 1; i <= 2000; ++i) {
    const double r = 0.005 * i;
    x.push_back(r);
    y.push_back(std::exp(-r * r));
    d.push_back(-2.0 * r * std::exp(-r * r));
  }
  auto sampled = RadialProfile::sampled(x, y, d);
  auto exact = RadialProfile::analytic([](double r) { return std::exp(-r * r); });
  for (int n : {3, 4}) {
    auto dims = DimensionParams::of(n);
    for (auto [r, t] : {std::pair{1.0, 2.0}, {2.0, 0.7}}) {
      EXPECT_NEAR(apply_L(sampled, dims, r, t), apply_L(exact, dims, r, t), 1e-6) << n;
    }
  }
}
