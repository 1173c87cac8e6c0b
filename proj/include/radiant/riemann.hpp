#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/kernels.hpp"
#include "radiant/profile.hpp"
#include "radiant/quadrature.hpp"

namespace radiant {

namespace detail {

/// Integrates g over [lo, hi] at refinement `level`. Geometric grading is
/// applied within one base panel of each flagged endpoint; the remainder is
/// split at the profile knots and covered with uniform Gauss panels.
template <class G>
double integrate_piece(G&& g, double lo, double hi, bool singular_lo, bool singular_hi, int level,
                       const QuadratureSpec& q, std::span<const double> knots) {
  if (!(hi > lo)) return 0.0;
  const double base = 1.0 / q.panels_per_unit;
  double total = 0.0;
  if (singular_lo || singular_hi) {
    const auto& grule = quad::gauss_legendre(q.nodes_per_panel + 4 * level);
    const int levels = q.graded_levels + 4 * level;
    double len = hi - lo;
    if (singular_lo && singular_hi) {
      const double mid = lo + 0.5 * len;
      return integrate_piece(g, lo, mid, true, false, level, q, knots) +
             integrate_piece(g, mid, hi, false, true, level, q, knots);
    }
    const double gz = std::min(len, base);
    if (singular_lo) {
      total += quad::integrate_graded(g, lo, lo + gz, true, q.graded_ratio, levels, grule);
      lo += gz;
    } else {
      total += quad::integrate_graded(g, hi - gz, hi, false, q.graded_ratio, levels, grule);
      hi -= gz;
    }
    if (!(hi > lo)) return total;
  }
  const auto& rule = quad::gauss_legendre(q.nodes_per_panel);
  const int mult = 1 << level;
  double a = lo;
  auto cover = [&](double b) {
    if (!(b > a)) return;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / base - 1e-9))) * mult;
    total += quad::integrate_panels(g, a, b, panels, rule);
    a = b;
  };
  auto it = std::upper_bound(knots.begin(), knots.end(), lo);
  for (; it != knots.end() && *it < hi; ++it) cover(*it);
  cover(hi);
  return total;
}

/// One evaluation of [Lf](r,t) at a fixed refinement level.
inline double apply_L_level(const RadialProfile& f, const DimensionParams& dims, double r, double t,
                            const QuadratureSpec& q, int level) {
  const double h = dims.half_n_minus_1();
  const bool even = !dims.odd();
  const double top = f.support_end() ? std::min(t + r, *f.support_end()) : t + r;
  const double a = std::abs(t - r);
  const auto knots = f.knots();
  const int korder = q.kernel_order;

  auto main_integrand = [&](double lambda) {
    double z = std::clamp(z_ratio(lambda, r, t), -1.0, 1.0);
    if (even && z == -1.0) z = std::nextafter(-1.0, 0.0);
    return std::pow(lambda, h) * f(lambda) * riemann_kernel(dims, z, korder);
  };
  double total = 0.0;
  if (top > a) {
    const bool grade_lo = q.singular_substitution && even && (t > r || a < top - a);
    total += integrate_piece(main_integrand, a, top, grade_lo, false, level, q, knots);
  }
  if (even && t > r) {
    const double b = std::min(t - r, f.support_end() ? *f.support_end() : t - r);
    if (b > 0.0) {
      const double below = std::nextafter(-1.0, -2.0);
      auto inner = [&](double lambda) {
        const double z = std::min(z_ratio(lambda, r, t), below);
        return std::pow(lambda, h) * f(lambda) * riemann_kernel(dims, z, korder);
      };
      if (q.singular_substitution) {
        // lambda = s^2 smooths the origin; grading handles the log singularity at t - r.
        auto sub = [&](double s) { return s > 0.0 ? 2.0 * s * inner(s * s) : 0.0; };
        std::vector<double> sknots;
        sknots.reserve(knots.size());
        for (double k : knots)
          if (k < b) sknots.push_back(std::sqrt(k));
        const bool reaches = b == t - r;
        total += integrate_piece(sub, 0.0, std::sqrt(b), false, reaches, level, q, sknots);
      } else {
        total += integrate_piece(inner, 0.0, b, false, false, level, q, knots);
      }
    }
  }
  return total / (2.0 * std::pow(r, h));
}

}  // namespace detail

/// [Lf](r,t) with the refinement level and the last-difference error estimate.
inline quad::Certified apply_L_certified(const RadialProfile& f, const DimensionParams& dims, double r, double t,
                                         const QuadratureSpec& q = {}) {
  if (!(r > 0.0)) throw DomainError("apply_L: r must be positive");
  if (dims.n < 2) throw DomainError("apply_L: dimension must be at least 2");
  if (!(t >= 0.0)) throw DomainError("apply_L: t must be non-negative");
  if (f.is_zero() || t == 0.0) return {0.0, 0.0, 0};
  return quad::refine_until([&](int level) { return detail::apply_L_level(f, dims, r, t, q, level); }, q.abs_tol,
                            q.max_refinements, "apply_L");
}

inline double apply_L(const RadialProfile& f, const DimensionParams& dims, double r, double t,
                      const QuadratureSpec& q = {}) {
  return apply_L_certified(f, dims, r, t, q).value;
}

/// d/dt [Lf](r,t) by Richardson-extrapolated central differences. L is odd in
/// t, so steps reaching below t = 0 use [Lf](r,-s) = -[Lf](r,s).
inline double time_derivative_L(const RadialProfile& f, const DimensionParams& dims, double r, double t,
                                const QuadratureSpec& q = {}) {
  if (!(r > 0.0)) throw DomainError("time_derivative_L: r must be positive");
  if (!(t >= 0.0)) throw DomainError("time_derivative_L: t must be non-negative");
  if (f.is_zero()) return 0.0;
  const double probe = std::max(t, q.time_step);
  const int level = apply_L_certified(f, dims, r, probe, q).level;
  auto L = [&](double s) {
    if (s == 0.0) return 0.0;
    const double v = detail::apply_L_level(f, dims, r, std::abs(s), q, level);
    return s > 0.0 ? v : -v;
  };
  auto D = [&](double step) { return (L(t + step) - L(t - step)) / (2.0 * step); };
  const double tol = 100.0 * q.abs_tol;
  double h = q.time_step;
  double diff = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt, h *= 0.5) {
    const double d0 = D(h), d1 = D(0.5 * h), d2 = D(0.25 * h);
    const double r1 = (4.0 * d1 - d0) / 3.0, r2 = (4.0 * d2 - d1) / 3.0;
    if (!std::isfinite(r2)) throw NonFiniteError("time_derivative_L: non-finite difference");
    diff = std::abs(r2 - r1);
    if (diff <= tol) return (16.0 * r2 - r1) / 15.0;
  }
  throw ToleranceNotMet("time_derivative_L: Richardson extrapolation not certified", diff);
}

/// u0 = L psi + d/dt L phi.
inline double homogeneous_solution(const RadialProfile& phi, const RadialProfile& psi, const DimensionParams& dims,
                                   double r, double t, const QuadratureSpec& q = {}) {
  return apply_L(psi, dims, r, t, q) + time_derivative_L(phi, dims, r, t, q);
}

}  // namespace radiant
