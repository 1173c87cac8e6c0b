#pragma once

// Gauss rules and the composite/graded integrators used by the kernel,
// Riemann and Duhamel evaluators.

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "radiant/error.hpp"

namespace radiant::quad {

/// Nodes and weights on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

inline Rule build_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule. The returned reference stays valid for
/// the lifetime of the program.
inline const Rule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be positive");
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::build_gauss_legendre(n)).first;
  return it->second;
}

/// Cached Gauss-Chebyshev (first kind) nodes for the weight (1-x^2)^{-1/2};
/// every weight equals pi/n.
inline const std::vector<double>& gauss_chebyshev_nodes(int n) {
  if (n < 1) throw DomainError("gauss_chebyshev_nodes: order must be positive");
  static std::mutex mutex;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::cos(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * n));
    it = cache.emplace(n, std::move(x)).first;
  }
  return it->second;
}

/// Composite rule with `panels` equal panels on [a, b].
template <class F>
double integrate_panels(F&& f, double a, double b, int panels, const Rule& rule) {
  if (!(b > a) || panels < 1) return 0.0;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double half = 0.5 * h, mid = lo + half;
    double s = 0.0;
    for (int i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    total += half * s;
  }
  return total;
}

/// Single Gauss panel on [a, b].
template <class F>
double integrate_gauss(F&& f, double a, double b, const Rule& rule) {
  return integrate_panels(std::forward<F>(f), a, b, 1, rule);
}

/// Geometrically graded panels clustering toward one endpoint of [a, b];
/// suited to integrable endpoint singularities (logarithmic or algebraic).
/// Panel k covers a fraction ratio^k..ratio^{k+1} of the interval measured
/// from the singular end; the innermost sliver of relative width ratio^levels
/// is integrated with one panel as well.
template <class F>
double integrate_graded(F&& f, double a, double b, bool singular_at_a, double ratio, int levels,
                        const Rule& rule) {
  if (!(b > a)) return 0.0;
  const double len = b - a;
  double total = 0.0;
  double outer = 1.0;
  for (int k = 0; k <= levels; ++k) {
    const double inner = (k == levels) ? 0.0 : outer * ratio;
    double lo, hi;
    if (singular_at_a) {
      lo = a + inner * len;
      hi = a + outer * len;
    } else {
      lo = b - outer * len;
      hi = b - inner * len;
    }
    total += integrate_gauss(f, lo, hi, rule);
    outer = inner;
  }
  return total;
}

/// Result of a refinement loop.
struct Certified {
  double value = 0.0;
  double error_estimate = 0.0;
  int level = 0;
};

/// Runs estimate(0), estimate(1), ... until two successive levels agree to
/// `tol`. Throws ToleranceNotMet when `max_refinements` is exhausted.
template <class Estimate>
Certified refine_until(Estimate&& estimate, double tol, int max_refinements, const char* what) {
  double prev = estimate(0);
  double diff = 0.0;
  for (int level = 1; level <= max_refinements; ++level) {
    double cur = estimate(level);
    diff = std::abs(cur - prev);
    if (!std::isfinite(cur)) throw NonFiniteError(std::string(what) + ": non-finite quadrature value");
    if (diff <= tol) return {cur, diff, level};
    prev = cur;
  }
  throw ToleranceNotMet(std::string(what) + ": tolerance not met", diff);
}

}  // namespace radiant::quad
