#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "radiant/kernels.hpp"

using namespace radiant;

TEST(DimensionParams, ParityParameters) {
  for (int n = 1; n <= 12; ++n) {
    auto d = DimensionParams::of(n);
    EXPECT_DOUBLE_EQ(d.a + d.m, 0.5 * (n - 1)) << n;
    if (n >= 4) EXPECT_GE(d.m, 1.0);
    if (n >= 2) EXPECT_NEAR((n - 1) * d.p_n * d.p_n - (n + 1) * d.p_n - 2.0, 0.0, 1e-12);
  }
  EXPECT_NEAR(DimensionParams::of(3).p_n, 1.0 + std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(DimensionParams::of(4).p_n, 2.0, 1e-14);
  EXPECT_THROW(DimensionParams::of(0), DomainError);
}

TEST(ZRatio, Identities) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.01, 10.0);
  for (int i = 0; i < 50; ++i) {
    double r = U(rng), t = U(rng);
    EXPECT_NEAR(z_ratio(r + t, r, t), 1.0, 1e-12);
    if (std::abs(t - r) > 1e-6) EXPECT_NEAR(z_ratio(std::abs(t - r), r, t), r > t ? 1.0 : -1.0, 1e-9);
  }
  EXPECT_DOUBLE_EQ(z_ratio(1, 1, 1), 0.5);
  EXPECT_THROW(z_ratio(0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(z_ratio(1.0, -1.0, 1.0), DomainError);
}

TEST(ZRatio, AdmissibleRangeProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double r = 0.01 + 10 * U(rng), t = 10 * U(rng);
    double lo = std::max(std::abs(t - r), 1e-9), hi = t + r;
    double lam = lo + (hi - lo) * U(rng);
    double z = z_ratio(lam, r, t);
    EXPECT_LE(z, 1.0 + 1e-12);
    EXPECT_GE(z, -1.0 - 1e-12);
  }
}

TEST(OrthoPoly, Examples) {
  for (double x : {-0.7, 0.0, 0.3, 2.0}) EXPECT_EQ(orthopoly(PolyKind::Legendre, 0, x), 1.0);
  for (int m = 0; m < 25; ++m) EXPECT_NEAR(orthopoly(PolyKind::Chebyshev, m, 1.0), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(orthopoly(PolyKind::Legendre, 2, 0.5), -0.125);
  EXPECT_THROW(orthopoly(PolyKind::Legendre, -1, 0.0), DomainError);
}

TEST(OrthoPoly, RecurrenceProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    double x = U(rng);
    for (int m = 1; m < 20; ++m) {
      double P = orthopoly(PolyKind::Legendre, m, x), Pm = orthopoly(PolyKind::Legendre, m - 1, x),
             Pp = orthopoly(PolyKind::Legendre, m + 1, x);
      EXPECT_NEAR((m + 1) * Pp, (2 * m + 1) * x * P - m * Pm, 1e-12);
      double T = orthopoly(PolyKind::Chebyshev, m, x), Tm = orthopoly(PolyKind::Chebyshev, m - 1, x),
             Tp = orthopoly(PolyKind::Chebyshev, m + 1, x);
      EXPECT_NEAR(Tp, 2 * x * T - Tm, 1e-12);
      EXPECT_NEAR(T, std::cos(m * std::acos(x)), 1e-12);
    }
  }
}

TEST(UKernel, UnitValueAtOne) {
  for (int m = 0; m <= 8; ++m) {
    EXPECT_NEAR(u_kernel(m, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(u_kernel_substitution(m, 1.0, 32), 1.0, 1e-12);
    EXPECT_NEAR(u_kernel_split(m, 1.0 - 1e-10, 32), 1.0, 1e-8);
  }
}

TEST(UKernel, ZeroAgainstTrapezoidOracle) {
  // 10^6-panel trapezoid of the U2 form after the endpoint substitution
  // nu = sin^2(theta/2): [nu(1-nu)]^{-1/2} dnu = dtheta on [0, pi].
  const int panels = 1000000;
  const double h = std::numbers::pi / panels;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    double th = i * h, nu = std::sin(0.5 * th) * std::sin(0.5 * th);
    double w = (i == 0 || i == panels) ? 0.5 : 1.0;
    s += w / std::sqrt(1.0 + nu);
  }
  const double trapezoid = std::numbers::sqrt2 / std::numbers::pi * s * h;
  EXPECT_NEAR(u_kernel(0, 0.0), trapezoid, 1e-8);
  EXPECT_NEAR(u_kernel(0, 0.0), 2.0 / std::numbers::pi * std::comp_ellint_1(std::sqrt(0.5)), 1e-12);
}

TEST(UKernel, MatchesLegendreFunctionsOfHalfIntegerDegree) {
  for (int m = 0; m <= 6; ++m) {
    for (double z : {-0.999, -0.9, -0.5, -0.1, 0.0, 0.2, 0.5, 0.9, 0.999}) {
      EXPECT_NEAR(u_kernel(m, z), oracle::legendre_half_integer(m, z), 1e-9) << m << " " << z;
    }
    for (double z : {-1.001, -1.5, -3.0, -20.0, -1000.0}) {
      EXPECT_NEAR(u_kernel(m, z), oracle::u_kernel_below_minus_one(m, z), 1e-9) << m << " " << z;
    }
  }
}

TEST(UKernel, NearLogSingularityFixedOrder) {
  // Reference values from 40-digit evaluations (mpmath legenp of degree m-1/2 above -1,
  // adaptive quadrature of the cos-substituted integral below -1).
  // Gaps are powers of two so that -1 +/- gap is exact in double precision.
  struct Ref { int m; int log2_gap; double above, below; };
  const Ref refs[] = {
      {0, 10, 3.3098603718528584475, 3.3092078048447963215},
      {0, 20, 5.5158905854707802715, 5.5158894221621046368},
      {0, 30, 7.7222460061676812273, 7.7222460045179303108},
      {0, 40, 9.9286020068703780789, 9.9286020068682653268},
      {1, 10, -2.0351600341638050781, -2.0374285845955397722},
      {1, 20, -4.2426485623358732521, -4.2426523558258632676},
      {1, 30, -6.4490064579847921162, -6.4490064632304940485},
      {1, 40, -8.6553624621308451379, -8.6553624621374728955},
      {2, 10, 1.6076099736396365005, 1.6161550796486463648},
      {2, 40, 8.2309492805405048158, 8.2309492805710380935},
      {3, 20, -3.5635716921513247805, -3.5636070449916236889},
      {3, 30, -5.769945343830216414, -5.7699453963342295971},
      {4, 10, 1.1612804515571355251, 1.189460865765374578},
      {4, 40, 7.7944100080146141792, 7.7944100081356743167},
  };
  for (const auto& ref : refs) {
    const double gap = std::ldexp(1.0, -ref.log2_gap);
    EXPECT_NEAR(u_kernel_fixed(ref.m, -1.0 + gap, 32), ref.above, 1e-9) << ref.m << " " << gap;
    EXPECT_NEAR(u_kernel_fixed(ref.m, -1.0 - gap, 32), ref.below, 1e-9) << ref.m << " " << gap;
  }
}

TEST(UKernel, SubstitutionAgreesWithSplitProperty) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int m = 0; m <= 6; ++m) {
    for (int i = 0; i < 200; ++i) {
      double z = U(rng);
      EXPECT_NEAR(u_kernel_substitution(m, z, 64), u_kernel_split(m, z, 64), 1e-7) << m << " " << z;
    }
  }
}

TEST(UKernel, BoundedOnUnitInterval) {
  // sup_{[0,1]} |U_m| is finite; on a fine grid it never exceeds 1 + small slack.
  for (int m = 0; m <= 6; ++m) {
    double sup = 0.0;
    for (int i = 0; i <= 2000; ++i) sup = std::max(sup, std::abs(u_kernel(m, i / 2000.0)));
    EXPECT_LT(sup, 2.0) << m;
  }
}

TEST(UKernel, Errors) {
  EXPECT_THROW(u_kernel(0, 1.5), DomainError);
  EXPECT_THROW(u_kernel(0, -1.0), DomainError);
  EXPECT_THROW(u_kernel(-1, 0.0), DomainError);
  KernelOptions tight{2, 1e-300, 1};
  EXPECT_THROW(u_kernel(3, 0.3, tight), ToleranceNotMet);
}

TEST(Positivity, FourDimensions) {
  auto pc = positivity_constants(4);
  EXPECT_GT(pc.beta_n, 1.0);
  EXPECT_DOUBLE_EQ(pc.beta_n, 1.0 / (1.0 - pc.alpha_m));
  for (double z = pc.alpha_m; z <= 1.0; z += pc.scan_resolution) EXPECT_GT(u_kernel(1, z), 0.0);
}

TEST(Positivity, ThreeDimensions) {
  auto pc = positivity_constants(3);
  EXPECT_NEAR(pc.alpha_m, 0.0, pc.scan_resolution + 1e-15);
  EXPECT_NEAR(pc.beta_n, 1.0, 2 * pc.scan_resolution);
}

TEST(Positivity, SixDimensionsRootScan) {
  // Largest root of U_2 = P_{3/2} in (0,1): sign-change bisection on a 1e5-point grid of the closed form.
  const int N = 100000;
  double root = -1;
  for (int i = N; i > 0; --i) {
    double hi = double(i) / N, lo = double(i - 1) / N;
    if (oracle::legendre_half_integer(2, lo) <= 0 && oracle::legendre_half_integer(2, hi) > 0) {
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (oracle::legendre_half_integer(2, mid) > 0 ? hi : lo) = mid;
      }
      root = 0.5 * (lo + hi);
      break;
    }
  }
  ASSERT_GT(root, 0.0);
  auto pc = positivity_constants(6);
  EXPECT_NEAR(pc.alpha_m, root, pc.scan_resolution);
  EXPECT_GE(pc.alpha_m, root);
}

TEST(UKernel, ClosedFormBelowMinusOne) {
  for (int m = 0; m <= 3; ++m)
    for (double z : {-1.5, -3.0, -10.0}) {
      EXPECT_NEAR(oracle::legendre_q_kernel(m, z), oracle::u_kernel_below_minus_one(m, z), 1e-10) << m << " " << z;
      EXPECT_NEAR(u_kernel(m, z), oracle::legendre_q_kernel(m, z), 1e-9) << m << " " << z;
    }
  for (double gap : {1e-3, 1e-6})
    EXPECT_NEAR(u_kernel(1, -1.0 - gap), oracle::legendre_q_kernel(1, -1.0 - gap), 1e-9);
}
