#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/profile.hpp"

namespace radiant {

inline double japanese(double x) { return 1.0 + std::abs(x); }

/// F(u) = A|u|^p or A|u|^{p-1}u, or F = 0.
struct Nonlinearity {
  enum class Kind { Power, Signed, Zero };
  Kind kind = Kind::Zero;
  double A = 1.0;
  double p = 2.0;

  static Nonlinearity zero() { return {}; }
  static Nonlinearity power(double A, double p) { return {Kind::Power, A, p}; }
  static Nonlinearity signed_power(double A, double p) { return {Kind::Signed, A, p}; }

  bool is_zero() const { return kind == Kind::Zero || A == 0.0; }

  double operator()(double u) const {
    switch (kind) {
      case Kind::Power: return A * std::pow(std::abs(u), p);
      case Kind::Signed: return A * std::pow(std::abs(u), p - 1.0) * u;
      case Kind::Zero: break;
    }
    return 0.0;
  }

  double derivative(double u) const {
    switch (kind) {
      case Kind::Power: return u == 0.0 ? 0.0 : A * p * std::pow(std::abs(u), p - 1.0) * (u > 0 ? 1.0 : -1.0);
      case Kind::Signed: return A * p * std::pow(std::abs(u), p - 1.0);
      case Kind::Zero: break;
    }
    return 0.0;
  }

  void validate() const {
    if (kind == Kind::Zero) return;
    if (!(p > 1.0)) throw ValidationError("p", "exponent must exceed 1");
    if (!(A > 0.0)) throw ValidationError("A", "amplitude must be positive");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Power: return "power";
      case Kind::Signed: return "signed";
      case Kind::Zero: break;
    }
    return "zero";
  }
};

/// Radial potential V(r).
struct PotentialSpec {
  enum class Family { Zero, PowerTail, CompactBump, SquareWell, Table };
  Family family = Family::Zero;
  double V0 = 0.0;      ///< amplitude (power tail, bump) or depth (square well)
  double kappa = 3.0;   ///< tail exponent
  int sign = 1;         ///< +1 or -1 for power tail and bump
  double radius = 1.0;  ///< well radius or bump support
  double scale = 1.0;   ///< overall multiplier a in a*V
  std::optional<RadialProfile> table;

  static PotentialSpec zero() { return {}; }
  static PotentialSpec power_tail(double V0, double kappa, int sign = 1) {
    PotentialSpec v;
    v.family = Family::PowerTail;
    v.V0 = V0;
    v.kappa = kappa;
    v.sign = sign;
    return v;
  }
  static PotentialSpec compact_bump(double V0, double radius, int sign = 1) {
    PotentialSpec v;
    v.family = Family::CompactBump;
    v.V0 = V0;
    v.radius = radius;
    v.sign = sign;
    return v;
  }
  static PotentialSpec square_well(double depth, double radius) {
    PotentialSpec v;
    v.family = Family::SquareWell;
    v.V0 = depth;
    v.radius = radius;
    return v;
  }
  static PotentialSpec from_table(RadialProfile profile) {
    PotentialSpec v;
    v.family = Family::Table;
    v.V0 = 1.0;
    v.table = std::move(profile);
    return v;
  }

  PotentialSpec scaled(double a) const {
    PotentialSpec v = *this;
    v.scale *= a;
    return v;
  }

  bool is_zero() const { return family == Family::Zero || V0 == 0.0 || scale == 0.0; }

  double operator()(double r) const {
    switch (family) {
      case Family::Zero: return 0.0;
      case Family::PowerTail: return scale * sign * V0 * std::pow(japanese(r), -kappa);
      case Family::CompactBump: {
        const double x = r / radius;
        return x >= 1.0 ? 0.0 : scale * sign * V0 * std::exp(1.0 - 1.0 / (1.0 - x * x));
      }
      case Family::SquareWell: return r < radius ? -scale * V0 : 0.0;
      case Family::Table: return scale * (*table)(r);
    }
    return 0.0;
  }

  /// V'(r); the square well's jump is not represented.
  double derivative(double r) const {
    switch (family) {
      case Family::Zero:
      case Family::SquareWell: return 0.0;
      case Family::PowerTail: return -kappa * scale * sign * V0 * std::pow(japanese(r), -kappa - 1.0);
      case Family::CompactBump: {
        const double x = r / radius;
        if (x >= 1.0) return 0.0;
        const double q = 1.0 - x * x;
        return (*this)(r) * (-2.0 * x / (q * q)) / radius;
      }
      case Family::Table: return scale * table->derivative(r);
    }
    return 0.0;
  }

  /// Smallest constant C with |V| + <r>|V'| <= C <r>^{-kappa} on a uniform
  /// sample of [0, r_max]. For the power tail this is (1 + kappa) V0.
  double decay_bound_constant(double r_max, int samples = 4000) const {
    double c = 0.0;
    for (int i = 0; i <= samples; ++i) {
      const double r = r_max * i / samples;
      const double lhs = std::abs((*this)(r)) + japanese(r) * std::abs(derivative(r));
      c = std::max(c, lhs * std::pow(japanese(r), kappa));
    }
    return c;
  }

  double sup_abs(double r_max, int samples = 4000) const {
    double s = 0.0;
    for (int i = 0; i <= samples; ++i) s = std::max(s, std::abs((*this)(r_max * i / samples)));
    return s;
  }

  /// Points where V jumps (used to align meshes).
  std::optional<double> discontinuity() const {
    if (family == Family::SquareWell) return radius;
    return std::nullopt;
  }

  void validate() const {
    if (!(V0 >= 0.0)) throw ValidationError("V0", "must be non-negative");
    if (sign != 1 && sign != -1) throw ValidationError("sign", "must be +1 or -1");
    if ((family == Family::SquareWell || family == Family::CompactBump) && !(radius > 0.0))
      throw ValidationError("radius", "must be positive");
    if (family == Family::Table && !table) throw ValidationError("potential", "table family needs a profile");
  }

  std::string name() const {
    switch (family) {
      case Family::Zero: return "zero";
      case Family::PowerTail: return "power-tail";
      case Family::CompactBump: return "compact-bump";
      case Family::SquareWell: return "square-well";
      case Family::Table: return "table";
    }
    return "zero";
  }

  bool operator==(const PotentialSpec& o) const {
    if (family != o.family || V0 != o.V0 || kappa != o.kappa || sign != o.sign || radius != o.radius ||
        scale != o.scale)
      return false;
    if (table.has_value() != o.table.has_value()) return false;
    return !table || table->identical(*o.table);
  }
};

/// One experiment: the radial problem with data epsilon*(phi, psi).
struct ProblemSpec {
  DimensionParams dims = DimensionParams::of(3);
  Nonlinearity nonlinearity;
  PotentialSpec potential;
  RadialProfile phi, psi;  ///< unit-amplitude data shapes
  double epsilon = 1.0;
  double k = 0.0;
  double horizon_T = 1.0;
  std::string data_label = "custom";

  RadialProfile scaled_phi() const { return phi.scaled(epsilon); }
  RadialProfile scaled_psi() const { return psi.scaled(epsilon); }

  /// p_n < p < 1 + 2/m.
  bool in_existence_range() const {
    const double p = nonlinearity.p;
    const double upper = dims.m > 0 ? 1.0 + 2.0 / dims.m : std::numeric_limits<double>::infinity();
    return p > dims.p_n && p < upper;
  }

  bool supercritical() const { return k >= 2.0 / (nonlinearity.p - 1.0); }

  void validate() const {
    nonlinearity.validate();
    potential.validate();
    if (!(epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");
    if (!(k >= 0.0)) throw ValidationError("k", "must be non-negative");
    if (!(horizon_T > 0.0)) throw ValidationError("T", "must be positive");
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "n=" << dims.n << " nonlinearity=" << nonlinearity.name() << " A=" << nonlinearity.A
       << " p=" << nonlinearity.p << " potential=" << potential.name() << " V0=" << potential.V0
       << " kappa=" << potential.kappa << " sign=" << potential.sign << " radius=" << potential.radius
       << " scale=" << potential.scale << " epsilon=" << epsilon << " k=" << k << " T=" << horizon_T
       << " data=" << data_label;
    return os.str();
  }
};

namespace data {

/// psi(r) = (1 + r^2)^{-(k+1)/2}: velocity data with decay rate k.
inline RadialProfile decay_velocity(double k) {
  return RadialProfile::analytic([k](double r) { return std::pow(1.0 + r * r, -0.5 * (k + 1.0)); },
                                 [k](double r) { return -(k + 1.0) * r * std::pow(1.0 + r * r, -0.5 * (k + 3.0)); });
}

/// C-infinity bump supported in [lo, hi] with peak value 1.
inline RadialProfile bump(double lo, double hi) {
  auto f = [lo, hi](double r) {
    if (r <= lo || r >= hi) return 0.0;
    const double x = (2.0 * r - lo - hi) / (hi - lo);
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
  };
  auto df = [lo, hi](double r) {
    if (r <= lo || r >= hi) return 0.0;
    const double x = (2.0 * r - lo - hi) / (hi - lo);
    const double q = 1.0 - x * x;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * x / (q * q)) * 2.0 / (hi - lo);
  };
  return RadialProfile::analytic(f, df, 2, hi);
}

}  // namespace data

}  // namespace radiant
