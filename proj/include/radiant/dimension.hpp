#pragma once

#include <cmath>
#include <limits>

#include "radiant/error.hpp"

namespace radiant {

/// Parity-dependent parameters of the radial wave operator in n space
/// dimensions: a = 1 (odd) or 1/2 (even), m = (n-3)/2 (odd) or (n-2)/2
/// (even), and the Strauss exponent p_n, the positive root of
/// (n-1) p^2 - (n+1) p - 2 = 0.
struct DimensionParams {
  int n = 3;
  double a = 1.0;
  double m = 0.0;
  double p_n = 1.0 + std::sqrt(2.0);

  bool odd() const { return n % 2 == 1; }
  /// Integer index of the kernel polynomial (Legendre for odd n, Chebyshev for even n).
  int kernel_index() const { return static_cast<int>(m); }
  /// (n-1)/2, the power of lambda in the Riemann operator.
  double half_n_minus_1() const { return 0.5 * (n - 1); }

  static DimensionParams of(int n) {
    if (n < 1) throw DomainError("DimensionParams: n must be >= 1");
    DimensionParams d;
    d.n = n;
    if (n % 2 == 1) {
      d.a = 1.0;
      d.m = (n - 3) / 2.0;
    } else {
      d.a = 0.5;
      d.m = (n - 2) / 2.0;
    }
    if (n == 1) {
      // (n-1) p^2 = (n+1) p + 2 has no positive root; blow-up for every p > 1.
      d.p_n = std::numeric_limits<double>::infinity();
    } else {
      const double A = n - 1.0, B = -(n + 1.0), C = -2.0;
      d.p_n = (-B + std::sqrt(B * B - 4.0 * A * C)) / (2.0 * A);
    }
    return d;
  }
};

}  // namespace radiant
