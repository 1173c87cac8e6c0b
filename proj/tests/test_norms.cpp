#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "radiant/norms.hpp"

using namespace radiant;

TEST(DecayParams, Invariants) {
  for (int n = 2; n <= 7; ++n) {
    auto dims = DimensionParams::of(n);
    for (double k : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5}) {
      auto dp = DecayParams::of(dims, k);
      EXPECT_NEAR(dp.mu + dp.nu, k - dims.m, 1e-15);
      if (k < dims.a + dims.m + 1) EXPECT_LT(dp.nu, 1.0);
      EXPECT_GE(dp.nu, 0.0);
      EXPECT_EQ(dp.log_flag, std::abs(k - dims.m - dims.a) < 1e-12 ? 1 : 0);
    }
  }
  EXPECT_THROW(DecayParams::of(DimensionParams::of(3), -1.0), DomainError);
}

TEST(WeightW, Examples) {
  auto d5 = DimensionParams::of(5);
  auto flat = DecayParams::of(d5, d5.m);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 50.0);
  for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(weight_W(flat, U(rng), U(rng)), 1.0);
  for (double k : {0.0, 1.0, 2.0, 2.7}) EXPECT_DOUBLE_EQ(weight_W(DecayParams::of(d5, k), 0.0, 0.0), 1.0);
  auto dp = DecayParams::of(d5, 2.0);
  EXPECT_EQ(dp.log_flag, 1);
  EXPECT_NEAR(weight_W(dp, 1.0, 1.0), 3.0 / (1.0 + std::log(3.0)), 1e-14);
  EXPECT_NEAR(weight_W(dp, 1.0, 1.0), 1.42947, 1e-4);
}

TEST(WeightW, PositiveAndSymmetricArgument) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 100.0);
  for (int n = 2; n <= 6; ++n)
    for (double k : {0.0, 0.5, 1.0, 2.0}) {
      auto dp = DecayParams::of(DimensionParams::of(n), k);
      for (int i = 0; i < 50; ++i) {
        const double r = U(rng), t = U(rng);
        EXPECT_GT(weight_W(dp, r, t), 0.0);
        const double sym = std::pow(japanese(2 * r), dp.mu) * std::pow(1.0 + std::log(japanese(2 * r)), -dp.log_flag);
        EXPECT_NEAR(weight_W(dp, r, r), sym, 1e-12 * sym);
      }
    }
}

TEST(PhiK, ExamplesAndMonotonicity) {
  EXPECT_DOUBLE_EQ(phi_k(0.0, 2.0, 2.0), 9.0);
  EXPECT_DOUBLE_EQ(phi_k(1.0, 2.0, 3.0), 4.0);
  for (double y : {0.0, 1.0, 10.0, 1e3}) EXPECT_DOUBLE_EQ(phi_k(2.0 / 1.5, 2.5, y), 1.0);
  for (double p : {1.5, 2.0, 3.0})
    for (double k = 0.0; k < 3.0; k += 0.25)
      for (double y = 0.0; y < 20.0; y += 0.5) {
        EXPECT_LE(phi_k(k, p, y), phi_k(k, p, y + 0.5));
        EXPECT_GE(phi_k(k, p, y), phi_k(k + 0.25, p, y));
      }
}

namespace {
std::vector<double> rgrid() { return biased_grid(0.05, 20.0, 120, 1.5); }
std::vector<double> tgrid() { return biased_grid(0.0, 10.0, 80); }
}  // namespace

TEST(WeightedNorms, ZeroAndScaling) {
  auto dp = DecayParams::of(DimensionParams::of(4), 1.0);
  auto zero = SpacetimeField::sample(rgrid(), tgrid(), [](double, double) { return 0.0; });
  auto n0 = weighted_norms(zero, dp);
  EXPECT_EQ(n0.norm_X, 0.0);
  EXPECT_EQ(n0.norm_aux, 0.0);
  auto u = SpacetimeField::sample(rgrid(), tgrid(), [](double r, double t) { return std::sin(r - t) / (1 + r * r); });
  auto n1 = weighted_norms(u, dp);
  auto n2 = weighted_norms(u.scaled(-3.5), dp);
  EXPECT_NEAR(n2.norm_X, 3.5 * n1.norm_X, 1e-12 * n2.norm_X);
  EXPECT_NEAR(n2.norm_aux, 3.5 * n1.norm_aux, 1e-12 * n2.norm_aux);
  EXPECT_LE(n1.norm_aux, n1.norm_X);
}

TEST(WeightedNorms, AuxNeverExceedsX) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = U(rng), b = U(rng), c = U(rng);
    auto u = SpacetimeField::sample(rgrid(), tgrid(), [&](double r, double t) {
      return a * std::exp(-(r - t) * (r - t)) + b * std::cos(c * r) / (1 + t);
    });
    for (int n : {3, 4, 5, 6}) {
      auto w = weighted_norms(u, DecayParams::of(DimensionParams::of(n), std::abs(c)));
      EXPECT_LE(w.norm_aux, w.norm_X);
    }
  }
}

TEST(WeightedNorms, InvertedWeightField) {
  for (int n : {4, 5, 6}) {
    auto dp = DecayParams::of(DimensionParams::of(n), 1.3);
    const double m = dp.dims.m;
    auto fn = [&](double r, double t) { return std::pow(r, 1.0 - m) / weight_W(dp, r, t) / japanese(r); };
    std::vector<double> logr;
    for (int i = 0; i < 400; ++i) logr.push_back(0.05 * std::pow(400.0, i / 399.0));
    auto u = SpacetimeField::sample(logr, tgrid(), fn);
    EXPECT_NEAR(weighted_norms(u, dp).term0, 1.0, 1e-12);
    EXPECT_NEAR(weighted_norms_refined(u, dp).term0, 1.0, 1e-3);
  }
}

TEST(WeightedNorms, NonFinite) {
  auto dp = DecayParams::of(DimensionParams::of(3), 0.0);
  EXPECT_THROW(SpacetimeField::sample(rgrid(), tgrid(), [](double, double) { return NAN; }), NonFiniteError);
  EXPECT_THROW(envelope_diagnostic([](double, double) { return INFINITY; }, 1.0, dp, {1.0}, {1.0}), NonFiniteError);
}

TEST(WeightedNorms, CausalMaskExcludesInvalidNodes) {
  auto dp = DecayParams::of(DimensionParams::of(3), 0.0);
  auto u = SpacetimeField::sample(rgrid(), tgrid(), [](double r, double t) { return r + t > 20.0 ? 1e6 : 1.0; }, 20.0);
  EXPECT_LT(weighted_norms(u, dp).norm_aux, 1e3);
}

TEST(EnvelopeDiagnostic, ZeroAndLinearity) {
  auto dp = DecayParams::of(DimensionParams::of(4), 1.0);
  std::vector<double> rg = {0.1, 1.0, 10.0}, tg = {0.0, 1.0, 5.0};
  EXPECT_EQ(envelope_diagnostic([](double, double) { return 0.0; }, 1.0, dp, rg, tg), 0.0);
  auto shape = [](double r, double t) { return std::exp(-(r - t) * (r - t)) / (1 + r); };
  for (double eps : {1e-3, 0.37}) {
    const double c1 = envelope_diagnostic([&](double r, double t) { return eps * shape(r, t); }, eps, dp, rg, tg);
    const double c2 =
        envelope_diagnostic([&](double r, double t) { return 0.5 * eps * shape(r, t); }, 0.5 * eps, dp, rg, tg);
    EXPECT_NEAR(c1, c2, 1e-9 * c1);
  }
}

TEST(SpacetimeField, InterpolationAndDerivative) {
  auto fn = [](double r, double t) { return std::sin(r) * std::cos(0.5 * t); };
  auto u = SpacetimeField::sample(biased_grid(0.01, 10.0, 400, 1.0), biased_grid(0.0, 5.0, 101), fn);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> R(0.02, 9.9), T(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double r = R(rng), t = T(rng);
    EXPECT_NEAR(u(r, t), fn(r, t), 2e-6);
    EXPECT_NEAR(u.dr(r, t), std::cos(r) * std::cos(0.5 * t), 2e-3);
  }
  // Interior derivatives agree with centered differences to O(h^2).
  for (size_t ir = 1; ir + 1 < u.nr(); ir += 37) {
    const auto& g = u.r_grid();
    const double cd = (u.value(3, ir + 1) - u.value(3, ir - 1)) / (g[ir + 1] - g[ir - 1]);
    const double h = g[ir + 1] - g[ir - 1];
    EXPECT_NEAR(u.r_derivative(3, ir), cd, h * h);
  }
  EXPECT_THROW(u(11.0, 1.0), CoverageError);
  EXPECT_THROW(u(1.0, 6.0), CoverageError);
  EXPECT_DOUBLE_EQ(u(0.001, 0.0), u.value(0, 0));
  u.set_extension(SpacetimeField::Extension::Zero);
  EXPECT_EQ(u(11.0, 1.0), 0.0);
}

TEST(SpacetimeField, CsvRoundTrip) {
  auto u = SpacetimeField::sample(biased_grid(0.1, 2.0, 7), biased_grid(0.0, 1.0, 5),
                                  [](double r, double t) { return r * r - 1.0 / 3.0 * t; });
  std::stringstream ss;
  u.write_csv(ss, "n=3 test");
  std::string header;
  auto v = SpacetimeField::read_csv(ss, &header);
  EXPECT_EQ(header, "n=3 test");
  EXPECT_EQ(v.values(), u.values());
  EXPECT_EQ(v.r_grid(), u.r_grid());
  EXPECT_THROW(SpacetimeField({1.0, 0.5}, {0.0}, {1.0, 2.0}), DomainError);
  EXPECT_THROW(SpacetimeField({1.0, 2.0}, {0.0}, {1.0}), DomainError);
}
