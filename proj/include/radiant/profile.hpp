#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "radiant/error.hpp"

namespace radiant {

/// A radial function on (0, inf): either a closed-form callable or a sampled
/// table with an interpolation and extrapolation rule. Copies share the
/// immutable representation.
class RadialProfile {
 public:
  enum class Extrapolation { ZeroBeyondSupport, PowerLawTail };

  RadialProfile() = default;  // identically zero

  static RadialProfile zero() { return {}; }

  /// Closed-form profile. `support_end`, when given, promises f = 0 beyond it.
  static RadialProfile analytic(std::function<double(double)> value, std::function<double(double)> derivative = {},
                                int smoothness_order = 2, std::optional<double> support_end = std::nullopt) {
    auto rep = std::make_shared<Rep>();
    rep->fn = std::move(value);
    rep->dfn = std::move(derivative);
    rep->smoothness = smoothness_order;
    rep->support_end = support_end;
    RadialProfile p;
    p.rep_ = std::move(rep);
    return p;
  }

  /// Sampled profile. Between samples: cubic Hermite with the supplied
  /// derivatives, otherwise monotone (Fritsch-Carlson) cubic for
  /// smoothness_order 2 and linear for order 1. Below the first sample the
  /// first value is held.
  static RadialProfile sampled(std::vector<double> points, std::vector<double> values,
                               std::vector<double> derivatives = {},
                               Extrapolation extrapolation = Extrapolation::ZeroBeyondSupport,
                               double tail_exponent = 0.0, int smoothness_order = 2) {
    if (points.size() < 2 || points.size() != values.size())
      throw DomainError("RadialProfile: need at least two samples with matching values");
    if (!derivatives.empty() && derivatives.size() != points.size())
      throw DomainError("RadialProfile: derivative_values length mismatch");
    if (!(points.front() > 0.0)) throw DomainError("RadialProfile: sample points must be positive");
    for (size_t i = 1; i < points.size(); ++i)
      if (!(points[i] > points[i - 1])) throw DomainError("RadialProfile: sample points must be strictly increasing");
    if (smoothness_order != 1 && smoothness_order != 2)
      throw DomainError("RadialProfile: smoothness_order must be 1 or 2");
    if (!derivatives.empty()) {
      // Finite-difference slopes must match the supplied derivatives to O(h):
      // the mismatch may not exceed the largest derivative change of a cell.
      double scale = 0.0, jump = 0.0;
      for (size_t i = 0; i < derivatives.size(); ++i) {
        scale = std::max(scale, std::abs(derivatives[i]));
        if (i > 0) jump = std::max(jump, std::abs(derivatives[i] - derivatives[i - 1]));
      }
      for (size_t i = 0; i + 1 < points.size(); ++i) {
        const double fd = (values[i + 1] - values[i]) / (points[i + 1] - points[i]);
        const double avg = 0.5 * (derivatives[i] + derivatives[i + 1]);
        if (std::abs(fd - avg) > jump + 1e-9 * (scale + 1.0))
          throw DomainError("RadialProfile: derivative_values inconsistent with values");
      }
    }
    auto rep = std::make_shared<Rep>();
    rep->x = std::move(points);
    rep->y = std::move(values);
    rep->smoothness = smoothness_order;
    rep->extrapolation = extrapolation;
    rep->tail_exponent = tail_exponent;
    if (!derivatives.empty()) {
      rep->d = std::move(derivatives);
    } else if (smoothness_order == 2) {
      rep->d = monotone_slopes(rep->x, rep->y);
    }
    if (extrapolation == Extrapolation::ZeroBeyondSupport) rep->support_end = rep->x.back();
    RadialProfile p;
    p.rep_ = std::move(rep);
    return p;
  }

  bool is_zero() const { return !rep_ || rep_->scale == 0.0; }
  /// True when both handles share one representation.
  bool identical(const RadialProfile& other) const { return rep_ == other.rep_; }
  bool is_sampled() const { return rep_ && !rep_->fn; }
  int smoothness_order() const { return rep_ ? rep_->smoothness : 2; }
  std::optional<double> support_end() const { return rep_ ? rep_->support_end : 0.0; }

  /// Sample points (empty for closed-form profiles).
  std::span<const double> knots() const {
    if (!rep_) return {};
    return rep_->x;
  }

  double operator()(double r) const {
    if (is_zero()) return 0.0;
    return rep_->scale * (rep_->fn ? rep_->fn(r) : eval_table(r, false));
  }

  /// f'(r); closed-form profiles without a derivative use a central difference.
  double derivative(double r) const {
    if (is_zero()) return 0.0;
    if (rep_->fn) {
      if (rep_->dfn) return rep_->scale * rep_->dfn(r);
      const double h = 1e-5 * std::max(1.0, std::abs(r));
      return rep_->scale * (rep_->fn(r + h) - rep_->fn(r - h)) / (2.0 * h);
    }
    return rep_->scale * eval_table(r, true);
  }

  /// Closed-form profile with panel breakpoints attached (for piecewise data).
  RadialProfile with_knots(std::vector<double> knots) const {
    if (!rep_ || !rep_->fn) throw DomainError("RadialProfile: knots can only be attached to closed-form profiles");
    RadialProfile p;
    p.rep_ = std::make_shared<Rep>(*rep_);
    p.rep_->x = std::move(knots);
    return p;
  }

  RadialProfile scaled(double c) const {
    if (is_zero() || c == 1.0) return *this;
    RadialProfile p;
    p.rep_ = std::make_shared<Rep>(*rep_);
    p.rep_->scale *= c;
    return p;
  }

 private:
  struct Rep {
    std::function<double(double)> fn, dfn;
    std::vector<double> x, y, d;
    int smoothness = 2;
    Extrapolation extrapolation = Extrapolation::ZeroBeyondSupport;
    double tail_exponent = 0.0;
    std::optional<double> support_end;
    double scale = 1.0;
  };

  static std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    std::vector<double> delta(n - 1), d(n);
    for (size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d[i] = 0.0;
      } else {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    return d;
  }

  double eval_table(double r, bool want_derivative) const {
    const auto& x = rep_->x;
    const auto& y = rep_->y;
    if (r <= x.front()) return want_derivative ? 0.0 : y.front();
    if (r >= x.back()) {
      if (rep_->extrapolation == Extrapolation::ZeroBeyondSupport) return r == x.back() && !want_derivative ? y.back() : 0.0;
      const double e = rep_->tail_exponent;
      const double v = y.back() * std::pow(r / x.back(), -e);
      return want_derivative ? -e * v / r : v;
    }
    const size_t i = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1;
    const double h = x[i + 1] - x[i];
    const double s = (r - x[i]) / h;
    if (rep_->smoothness == 1 && rep_->d.empty()) {
      return want_derivative ? (y[i + 1] - y[i]) / h : y[i] + s * (y[i + 1] - y[i]);
    }
    const auto& d = rep_->d;
    const double s2 = s * s, s3 = s2 * s;
    if (want_derivative) {
      const double dh00 = 6 * s2 - 6 * s, dh10 = 3 * s2 - 4 * s + 1, dh01 = -6 * s2 + 6 * s, dh11 = 3 * s2 - 2 * s;
      return (dh00 * y[i] + dh01 * y[i + 1]) / h + dh10 * d[i] + dh11 * d[i + 1];
    }
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1];
  }

  std::shared_ptr<Rep> rep_;
};

/// Panel quadrature controls for the Riemann and Duhamel operators.
struct QuadratureSpec {
  int panels_per_unit = 16;
  int nodes_per_panel = 8;
  double abs_tol = 1e-8;
  int max_refinements = 8;
  bool singular_substitution = true;  ///< graded panels / lambda = s^2 near kernel singularities
  int kernel_order = 32;              ///< fixed Gauss order of the U_m evaluations (even n)
  int graded_levels = 24;
  double graded_ratio = 0.2;
  double time_step = 1e-2;            ///< base step of the Richardson time derivative

  void validate() const {
    if (!(abs_tol > 0.0)) throw DomainError("QuadratureSpec: abs_tol must be positive");
    if (panels_per_unit < 4) throw DomainError("QuadratureSpec: panels_per_unit must be >= 4");
    if (nodes_per_panel < 1 || max_refinements < 1 || kernel_order < 2)
      throw DomainError("QuadratureSpec: non-positive order");
    if (!(graded_ratio > 0.0 && graded_ratio < 1.0)) throw DomainError("QuadratureSpec: graded_ratio must lie in (0,1)");
    if (!(time_step > 0.0)) throw DomainError("QuadratureSpec: time_step must be positive");
  }
};

}  // namespace radiant
