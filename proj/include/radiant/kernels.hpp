#pragma once

// Geometric ratio z, the Legendre/Chebyshev polynomials, the even-dimension
// singular kernel U_m and the positivity thresholds alpha_m / beta_n.

#include <cmath>
#include <numbers>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/quadrature.hpp"

namespace radiant {

enum class PolyKind { Legendre, Chebyshev };

/// z(lambda, r, t) = (lambda^2 + r^2 - t^2) / (2 r lambda).
inline double z_ratio(double lambda, double r, double t) {
  if (!(lambda > 0.0) || !(r > 0.0)) throw DomainError("z_ratio: lambda and r must be positive");
  // (lambda - t)(lambda + t) keeps precision when lambda is close to t.
  return ((lambda - t) * (lambda + t) + r * r) / (2.0 * r * lambda);
}

/// P_m(x) or T_m(x) by the three-term recurrence.
inline double orthopoly(PolyKind kind, int m, double x) {
  if (m < 0) throw DomainError("orthopoly: degree must be non-negative");
  if (m == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int k = 1; k < m; ++k) {
    double p2 = (kind == PolyKind::Legendre) ? ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0)
                                             : 2.0 * x * p1 - p0;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

inline double chebyshev_t(int m, double x) { return orthopoly(PolyKind::Chebyshev, m, x); }

struct KernelOptions {
  int order = 32;          ///< starting quadrature order
  double abs_tol = 1e-9;   ///< certification tolerance between successive orders
  int max_doublings = 6;
};

/// U_m(z) for z in [0, 1] through sigma = z + nu (1 - z), which turns the
/// integral into int_0^1 [nu(1-nu)]^{-1/2} T_m(sigma) (1+sigma)^{-1/2} dnu,
/// evaluated with `order` Gauss-Chebyshev nodes.
inline double u_kernel_substitution(int m, double z, int order) {
  if (z < 0.0 || z > 1.0) throw DomainError("u_kernel_substitution: z must lie in [0, 1]");
  const auto& x = quad::gauss_chebyshev_nodes(order);
  double sum = 0.0;
  for (double xi : x) {
    const double nu = 0.5 * (1.0 + xi);
    const double sigma = z + nu * (1.0 - z);
    sum += chebyshev_t(m, sigma) / std::sqrt(1.0 + sigma);
  }
  return std::numbers::sqrt2 * sum / order;
}

/// U_m(z) for any z <= 1 (z != -1) by splitting the sigma-interval and
/// removing each endpoint singularity with a substitution:
///  - lower piece: sigma = -1 + delta cosh^2 w (z > -1) or -1 + d sinh^2 w
///    (z < -1) absorbs (sigma - z)^{-1/2} (1 + sigma)^{-1/2} into dw,
///  - upper piece: sigma = 1 - s^2 absorbs (1 - sigma)^{-1/2}.
/// Each piece uses `order`-point Gauss-Legendre panels; the w-range grows like
/// log(1/|1+z|) and is cut into unit-width panels.
inline double u_kernel_split(int m, double z, int order) {
  if (z > 1.0) throw DomainError("u_kernel_split: z must not exceed 1");
  if (z == -1.0) throw DomainError("u_kernel_split: U_m is logarithmically singular at z = -1");
  if (z == 1.0) return 1.0;
  const auto& rule = quad::gauss_legendre(order);
  double lower = 0.0, upper = 0.0;
  if (z > -1.0) {
    const double delta = 1.0 + z;
    const double mid = 0.5 * (z + 1.0);
    const double w_end = std::acosh(std::sqrt((1.0 + mid) / delta));
    lower = quad::integrate_panels(
        [&](double w) {
          const double sh = std::sinh(w);
          const double sigma = z + delta * sh * sh;
          const double one_minus = (1.0 - z) - delta * sh * sh;
          return 2.0 * chebyshev_t(m, sigma) / std::sqrt(one_minus);
        },
        0.0, w_end, static_cast<int>(std::ceil(w_end)), rule);
    upper = quad::integrate_gauss(
        [&](double s) {
          const double sigma = 1.0 - s * s;
          return 2.0 * chebyshev_t(m, sigma) / (std::sqrt(2.0 - s * s) * std::sqrt((1.0 - z) - s * s));
        },
        0.0, std::sqrt(1.0 - mid), rule);
  } else {
    const double d = -1.0 - z;
    const double w_end = std::asinh(1.0 / std::sqrt(d));
    lower = quad::integrate_panels(
        [&](double w) {
          const double sh = std::sinh(w);
          const double sigma = -1.0 + d * sh * sh;
          return 2.0 * chebyshev_t(m, sigma) / std::sqrt(2.0 - d * sh * sh);
        },
        0.0, w_end, static_cast<int>(std::ceil(w_end)), rule);
    upper = quad::integrate_gauss(
        [&](double s) {
          const double sigma = 1.0 - s * s;
          return 2.0 * chebyshev_t(m, sigma) / (std::sqrt(2.0 - s * s) * std::sqrt((1.0 - z) - s * s));
        },
        0.0, 1.0, rule);
  }
  return std::numbers::sqrt2 / std::numbers::pi * (lower + upper);
}

namespace detail {

inline double clamp_kernel_argument(double z) {
  if (std::isnan(z)) throw DomainError("u_kernel: z is NaN");
  if (z > 1.0) {
    if (z > 1.0 + 1e-12) throw DomainError("u_kernel: z must not exceed 1");
    z = 1.0;
  }
  return z;
}

}  // namespace detail

/// Fixed-order U_m(z), no certification. Hot-path variant for operator loops.
inline double u_kernel_fixed(int m, double z, int order) {
  z = detail::clamp_kernel_argument(z);
  if (z >= 0.0) return u_kernel_substitution(m, z, order);
  return u_kernel_split(m, z, order);
}

/// U_m(z) = (sqrt2/pi) int_{max(z,-1)}^1 (sigma - z)^{-1/2} T_m(sigma) (1 - sigma^2)^{-1/2} dsigma,
/// with the order doubled until two successive orders agree within opts.abs_tol.
inline double u_kernel(int m, double z, const KernelOptions& opts = {}) {
  if (m < 0) throw DomainError("u_kernel: m must be non-negative");
  z = detail::clamp_kernel_argument(z);
  if (z == 1.0) return 1.0;
  auto estimate = [&](int level) { return u_kernel_fixed(m, z, opts.order << level); };
  return quad::refine_until(estimate, opts.abs_tol, opts.max_doublings, "u_kernel").value;
}

/// Kernel of the Riemann operator in dimension n at fixed order: P_m for odd
/// n (P_{-1} = P_0 when n = 1), U_m for even n.
inline double riemann_kernel(const DimensionParams& dims, double z, int order) {
  if (dims.odd()) {
    const int m = dims.kernel_index();
    return orthopoly(PolyKind::Legendre, m < 0 ? 0 : m, z);
  }
  return u_kernel_fixed(dims.kernel_index(), z, order);
}

struct PositivityConstants {
  double alpha_m = 0.0;
  double beta_n = 1.0;
  double scan_resolution = 1e-4;
};

/// Smallest grid point alpha_m in [scan_resolution, 1) such that the
/// dimension's kernel exceeds `tol` on every grid point of [alpha_m, 1]; the
/// floor at scan_resolution keeps alpha_m > 0 and hence beta_n > 1.
inline PositivityConstants positivity_constants(int n, double tol = 1e-12, double scan_resolution = 1e-4,
                                                const KernelOptions& opts = {}) {
  if (!(scan_resolution > 0.0) || scan_resolution >= 0.5)
    throw DomainError("positivity_constants: scan_resolution must lie in (0, 0.5)");
  const DimensionParams dims = DimensionParams::of(n);
  const int m = dims.kernel_index() < 0 ? 0 : dims.kernel_index();
  auto kernel = [&](double z) {
    return dims.odd() ? orthopoly(PolyKind::Legendre, m, z) : u_kernel(m, z, opts);
  };
  const long steps = static_cast<long>(std::floor(1.0 / scan_resolution + 1e-9));
  double alpha = 0.0;
  for (long j = 0; j <= steps; ++j) {
    const double z = 1.0 - j * scan_resolution;
    if (z < 0.0) break;
    if (!(kernel(z) > tol)) {
      if (j <= 2) throw DomainError("positivity_constants: no certified threshold below 1 - scan_resolution");
      alpha = 1.0 - (j - 1) * scan_resolution;
      break;
    }
    alpha = z;
  }
  alpha = std::max(alpha, scan_resolution);
  return {alpha, 1.0 / (1.0 - alpha), scan_resolution};
}

}  // namespace radiant
