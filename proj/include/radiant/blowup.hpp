#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/fd_oracle.hpp"
#include "radiant/kernels.hpp"
#include "radiant/parallel.hpp"
#include "radiant/problem.hpp"

namespace radiant {

/// Quintic smoothstep 6s^5 - 15s^4 + 10s^3 clamped to [0, 1].
inline double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Plateau cutoff: 0 for r <= T*, 1 on [2T*, 3T*], 0 for r >= 4T*, with C^2
/// quintic transitions in between.
inline double cutoff_zeta(double r, double T_star) {
  if (!(T_star > 0.0)) throw DomainError("cutoff_zeta: T_star must be positive");
  const double s = r / T_star;
  if (s <= 3.0) return smoothstep5(s - 1.0);
  return 1.0 - smoothstep5(s - 3.0);
}

/// d zeta / dr.
inline double cutoff_zeta_derivative(double r, double T_star) {
  if (!(T_star > 0.0)) throw DomainError("cutoff_zeta_derivative: T_star must be positive");
  auto ds = [](double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : 30.0 * s * s * (1.0 - s) * (1.0 - s); };
  const double s = r / T_star;
  return (s <= 3.0 ? ds(s - 1.0) : -ds(s - 3.0)) / T_star;
}

/// T* = max((beta_n + 2) T, 2T + R).
inline double cutoff_T_star(double beta_n, double T, double R) {
  return std::max((beta_n + 2.0) * T, 2.0 * T + R);
}

/// Composite Simpson rule for samples on a uniform grid; an odd number of
/// intervals closes with the 3/8 rule on the last three.
inline double simpson_uniform(std::span<const double> y, double h) {
  const size_t n = y.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (y[0] + y[1]);
  const size_t intervals = n - 1;
  size_t even_end = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = 0.0;
  if (even_end > 0) {
    double acc = y[0] + y[even_end];
    for (size_t i = 1; i < even_end; ++i) acc += (i % 2 ? 4.0 : 2.0) * y[i];
    s = acc * h / 3.0;
  }
  if (even_end != intervals) {
    const size_t j = even_end;
    s += 3.0 * h / 8.0 * (y[j] + 3.0 * y[j + 1] + 3.0 * y[j + 2] + y[j + 3]);
  }
  return s;
}

struct FunctionalValue {
  double value = 0.0;
  bool truncated = false;  ///< |u| at the grid edge exceeds 1e-10 max|u|
};

/// f = int u(r) w(r) r^{n-1} dr on a uniform grid (w = 1 when `weight` is empty).
inline FunctionalValue functional_f(std::span<const double> u, std::span<const double> r, const DimensionParams& dims,
                                    std::span<const double> weight = {}) {
  if (u.size() != r.size()) throw DomainError("functional_f: value and grid sizes differ");
  if (!weight.empty() && weight.size() != r.size()) throw DomainError("functional_f: weight and grid sizes differ");
  FunctionalValue out;
  if (u.empty()) return out;
  if (u.size() == 1) throw DomainError("functional_f: need at least two grid points");
  const double h = r[1] - r[0];
  if (!(h > 0.0)) throw DomainError("functional_f: grid must be increasing");
  for (size_t i = 1; i < r.size(); ++i)
    if (std::abs((r[i] - r[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(r[i])))
      throw DomainError("functional_f: grid must be uniform");
  std::vector<double> y(u.size());
  double umax = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    const double w = weight.empty() ? 1.0 : weight[i];
    y[i] = u[i] * w * std::pow(r[i], dims.n - 1);
    umax = std::max(umax, std::abs(u[i]));
  }
  out.value = simpson_uniform(y, h);
  out.truncated = std::abs(u.back()) > 1e-10 * umax;
  return out;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need at least two matching points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= x.size();
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw DomainError("loglog_slope: x values must not all coincide");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// ODE comparison f'' = lambda f + c f^p.

struct OdeOptions {
  double threshold = 1e12;
  double check_threshold = 1e14;  ///< second stop used to certify the tail
  double certify_rtol = 1e-4;
  double rtol = 1e-11;
  double horizon = 1e4;
  long max_steps = 2'000'000;
};

struct OdeBlowup {
  double time = 0.0;  ///< estimate from the primary threshold
  double check_time = 0.0;  ///< estimate from the check threshold
  double stop_time = 0.0;  ///< integration time at which f first reached the threshold
  long steps = 0;
};

namespace detail {

struct OdeState {
  double t, f, fp;
};

/// Integrates f'' = lambda f + c |f|^{p-1} f with the Dormand-Prince 5(4) pair
/// until f >= threshold. Returns the state at the stop.
inline OdeState integrate_to_threshold(double c, double p, double lambda, OdeState s, double threshold,
                                       const OdeOptions& opt, long& steps) {
  auto rhs = [&](double f, double fp, double& df, double& dfp) {
    df = fp;
    dfp = lambda * f + c * std::pow(std::abs(f), p - 1.0) * f;
  };
  static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                          a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84, e1 = 71.0 / 57600,
                          e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                          e7 = -1.0 / 40;
  const double atol = opt.rtol * 1e-3;
  double h = 1e-3;
  std::array<double, 7> kf{}, kp{};
  rhs(s.f, s.fp, kf[0], kp[0]);
  while (s.f < threshold) {
    if (s.t > opt.horizon) throw NoBlowupError("ode_blowup_time: f stayed below the threshold up to the horizon");
    if (++steps > opt.max_steps) throw NoBlowupError("ode_blowup_time: step budget exhausted before blow-up");
    h = std::min(h, opt.horizon + 1.0 - s.t);
    auto stage = [&](int i, double cf, double cp) { rhs(s.f + h * cf, s.fp + h * cp, kf[i], kp[i]); };
    stage(1, a21 * kf[0], a21 * kp[0]);
    stage(2, a31 * kf[0] + a32 * kf[1], a31 * kp[0] + a32 * kp[1]);
    stage(3, a41 * kf[0] + a42 * kf[1] + a43 * kf[2], a41 * kp[0] + a42 * kp[1] + a43 * kp[2]);
    stage(4, a51 * kf[0] + a52 * kf[1] + a53 * kf[2] + a54 * kf[3],
          a51 * kp[0] + a52 * kp[1] + a53 * kp[2] + a54 * kp[3]);
    stage(5, a61 * kf[0] + a62 * kf[1] + a63 * kf[2] + a64 * kf[3] + a65 * kf[4],
          a61 * kp[0] + a62 * kp[1] + a63 * kp[2] + a64 * kp[3] + a65 * kp[4]);
    const double nf = s.f + h * (b1 * kf[0] + b3 * kf[2] + b4 * kf[3] + b5 * kf[4] + b6 * kf[5]);
    const double np = s.fp + h * (b1 * kp[0] + b3 * kp[2] + b4 * kp[3] + b5 * kp[4] + b6 * kp[5]);
    rhs(nf, np, kf[6], kp[6]);
    const double ef = h * (e1 * kf[0] + e3 * kf[2] + e4 * kf[3] + e5 * kf[4] + e6 * kf[5] + e7 * kf[6]);
    const double ep = h * (e1 * kp[0] + e3 * kp[2] + e4 * kp[3] + e5 * kp[4] + e6 * kp[5] + e7 * kp[6]);
    const double sf = atol + opt.rtol * std::max(std::abs(s.f), std::abs(nf));
    const double sp = atol + opt.rtol * std::max(std::abs(s.fp), std::abs(np));
    const double err = std::sqrt(0.5 * ((ef / sf) * (ef / sf) + (ep / sp) * (ep / sp)));
    if (!std::isfinite(err)) {
      h *= 0.1;
      continue;
    }
    if (err <= 1.0) {
      s = {s.t + h, nf, np};
      kf[0] = kf[6];
      kp[0] = kp[6];
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= err <= 1.0 ? factor : std::min(factor, 1.0);
    if (!(h > 0.0) || s.t + h == s.t) throw ToleranceNotMet("ode_blowup_time: step size underflow", h);
  }
  return s;
}

}  // namespace detail

/// Blow-up time of f'' = lambda f + c f^p, f(0) = f0, f'(0) = fp0. The
/// integration stops at f >= threshold and adds the dominant-balance tail
/// T - t = (2/(p-1)) f/f' of f ~ K (T-t)^{-2/(p-1)}. The estimate is
/// certified by repeating the stop at `check_threshold`.
inline OdeBlowup ode_blowup_time(double c, double p, double lambda, double f0, double fp0, const OdeOptions& opt = {}) {
  if (!(c > 0.0)) throw DomainError("ode_blowup_time: c must be positive");
  if (!(p > 1.0)) throw DomainError("ode_blowup_time: p must exceed 1");
  if (!(lambda >= 0.0)) throw DomainError("ode_blowup_time: lambda must be non-negative");
  if (!(f0 >= 0.0)) throw DomainError("ode_blowup_time: f0 must be non-negative");
  if (!(fp0 > 0.0)) throw DomainError("ode_blowup_time: fp0 must be positive");
  if (!(opt.check_threshold > opt.threshold && opt.threshold > f0))
    throw DomainError("ode_blowup_time: thresholds must increase and exceed f0");
  const double alpha = 2.0 / (p - 1.0);
  OdeOptions o = opt;
  for (int attempt = 0; attempt < 3; ++attempt) {
    OdeBlowup out;
    auto s1 = detail::integrate_to_threshold(c, p, lambda, {0.0, f0, fp0}, o.threshold, o, out.steps);
    out.stop_time = s1.t;
    out.time = s1.t + alpha * s1.f / s1.fp;
    auto s2 = detail::integrate_to_threshold(c, p, lambda, s1, o.check_threshold, o, out.steps);
    out.check_time = s2.t + alpha * s2.f / s2.fp;
    if (std::abs(out.time - out.check_time) <= o.certify_rtol * std::abs(out.check_time)) return out;
    if (attempt == 2)
      throw ToleranceNotMet("ode_blowup_time: tail estimate not stable under the threshold change",
                            std::abs(out.time - out.check_time) / std::abs(out.check_time));
    o.rtol *= 0.01;
  }
  return {};
}

// ---------------------------------------------------------------------------
// PDE blow-up runs.

struct BlowupRun {
  enum class Detection { Threshold, OdeExtrapolation };

  ProblemSpec prob;  ///< problem actually evolved (cutoff applied to psi when requested)
  double R = 0.0;
  double T_star = 0.0;
  std::vector<std::pair<double, double>> f_trajectory;
  std::vector<double> sup_trajectory;
  std::optional<double> detected_T;
  Detection detection_rule = Detection::Threshold;
  bool truncated = false;  ///< some recorded f had visible support at the grid edge
};

struct BlowupOptions {
  FDConfig fd;
  double horizon = 50.0;
  int record_stride = 1;
  BlowupRun::Detection detection = BlowupRun::Detection::Threshold;
};

/// Evolves `prob` with the finite-difference engine and records
/// f(t) = int u r^{n-1} dr every `record_stride` steps.
inline BlowupRun blowup_run(const ProblemSpec& prob, double R, double T_star, const BlowupOptions& opt) {
  if (!(R > 0.0)) throw ValidationError("R", "must be positive");
  if (opt.record_stride < 1) throw ValidationError("record_stride", "must be at least 1");
  BlowupRun run;
  run.prob = prob;
  run.R = R;
  run.T_star = T_star;
  run.detection_rule = opt.detection;
  long step = 0;
  auto res = solve_fd(prob, opt.fd, opt.horizon, {}, [&](const FDStep& s) {
    if (step++ % opt.record_stride != 0 && !(s.sup > opt.fd.blowup_threshold)) return;
    auto f = functional_f(s.u, s.r, prob.dims);
    run.truncated = run.truncated || f.truncated;
    run.f_trajectory.emplace_back(s.t, f.value);
    run.sup_trajectory.push_back(s.sup);
  });
  if (res.blew_up) {
    run.detected_T = res.blowup_time;
    const auto& tr = run.f_trajectory;
    if (opt.detection == BlowupRun::Detection::OdeExtrapolation && tr.size() >= 2 && prob.nonlinearity.p > 1.0) {
      const auto [t1, f1] = tr[tr.size() - 1];
      const auto [t0, f0] = tr[tr.size() - 2];
      const double fp = (f1 - f0) / (t1 - t0);
      if (f1 > 0.0 && fp > 0.0) run.detected_T = t1 + 2.0 / (prob.nonlinearity.p - 1.0) * f1 / fp;
    }
  }
  return run;
}

/// Cutoff construction of the upper-bound argument: psi is replaced by
/// zeta psi with T* = max((beta_n + 2) T, 2T + R), phi by 0, and the run
/// covers [0, min(T, horizon)].
inline BlowupRun cutoff_blowup_run(const ProblemSpec& base, double T, double R, BlowupOptions opt) {
  if (!(T > 0.0)) throw ValidationError("T", "must be positive");
  const double beta = positivity_constants(base.dims.n).beta_n;
  const double Ts = cutoff_T_star(beta, T, R);
  ProblemSpec prob = base;
  const RadialProfile psi = base.psi;
  prob.phi = RadialProfile::zero();
  prob.psi = RadialProfile::analytic(
      [psi, Ts](double r) { return cutoff_zeta(r, Ts) * psi(r); },
      [psi, Ts](double r) { return cutoff_zeta_derivative(r, Ts) * psi(r) + cutoff_zeta(r, Ts) * psi.derivative(r); },
      2, 4.0 * Ts);
  opt.horizon = std::min(opt.horizon, T);
  opt.fd.r_max = std::max(opt.fd.r_max, 4.0 * Ts + opt.horizon + 4.0 * opt.fd.dr);
  return blowup_run(prob, R, Ts, opt);
}

/// Lower bound t * int_{2T*}^{3T*} psi r^{n-1} dr for f(t) under the cutoff construction.
inline double cutoff_slope_bound(const ProblemSpec& prob, double T_star, int panels = 512) {
  const double a = 2.0 * T_star, b = 3.0 * T_star, h = (b - a) / panels;
  std::vector<double> y(panels + 1);
  for (int i = 0; i <= panels; ++i) {
    const double r = a + i * h;
    y[i] = prob.scaled_psi()(r) * std::pow(r, prob.dims.n - 1);
  }
  return simpson_uniform(y, h);
}

// ---------------------------------------------------------------------------
// Lifespan sweep.

struct LifespanRow {
  double epsilon = 0.0;
  std::optional<double> detected_T;
  std::optional<double> refined_T;  ///< detected time with dr halved, when requested
  bool blew_up = false;
};

struct LifespanTable {
  std::vector<LifespanRow> rows;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double predicted_exponent = 0.0;  ///< -(p-1)/(2 - k(p-1))
  std::vector<double> excluded;  ///< epsilons without blow-up before the horizon
  double max_refinement_change = 0.0;
};

struct LifespanOptions {
  FDConfig fd;
  double horizon = 200.0;
  int jobs = 1;
  bool refinement_check = false;
};

inline double lifespan_exponent(double p, double k) { return -(p - 1.0) / (2.0 - k * (p - 1.0)); }

/// Preconditions of lifespan_experiment; throws ValidationError naming the key.
inline void validate_lifespan(const ProblemSpec& base, const std::vector<double>& eps_list, const LifespanOptions& opt) {
  const double p = base.nonlinearity.p;
  base.nonlinearity.validate();
  if (base.nonlinearity.kind == Nonlinearity::Kind::Zero) throw ValidationError("p", "lifespan needs a nonlinearity");
  if (!(base.k >= 0.0 && base.k < 2.0 / (p - 1.0))) throw ValidationError("k", "must satisfy 0 <= k < 2/(p-1)");
  if (eps_list.size() < 2) throw ValidationError("eps_list", "needs at least two values");
  for (double e : eps_list)
    if (!(e > 0.0)) throw ValidationError("eps_list", "values must be positive");
  const auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (*hi / *lo < 25.0 * (1.0 - 1e-12)) throw ValidationError("eps_list", "must span at least a factor of 25");
  if (!(opt.horizon > 0.0)) throw ValidationError("horizon", "must be positive");
  const bool compact = base.phi.support_end() && base.psi.support_end();
  if (!compact && opt.fd.r_max < 2.0 * opt.horizon)
    throw ValidationError("r_max", "must be at least twice the horizon for non-compact data");
}

/// Runs the finite-difference engine for every epsilon until the sup norm
/// passes the blow-up threshold, then fits log T against log epsilon.
inline LifespanTable lifespan_experiment(const ProblemSpec& base, const std::vector<double>& eps_list,
                                         const LifespanOptions& opt) {
  validate_lifespan(base, eps_list, opt);
  const double p = base.nonlinearity.p;
  LifespanTable table;
  table.predicted_exponent = lifespan_exponent(p, base.k);
  table.rows.resize(eps_list.size());
  const int per = opt.refinement_check ? 2 : 1;
  parallel_for(eps_list.size() * per, opt.jobs, [&](size_t job) {
    const size_t i = job / per;
    ProblemSpec prob = base;
    prob.epsilon = eps_list[i];
    FDConfig cfg = opt.fd;
    if (job % per == 1) cfg.dr *= 0.5;
    auto res = solve_fd(prob, cfg, opt.horizon);
    auto& row = table.rows[i];
    if (job % per == 0) {
      row.epsilon = eps_list[i];
      row.blew_up = res.blew_up;
      row.detected_T = res.blowup_time;
    } else {
      row.refined_T = res.blowup_time;
    }
  });
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    if (!row.blew_up) {
      table.excluded.push_back(row.epsilon);
      continue;
    }
    xs.push_back(row.epsilon);
    ys.push_back(*row.detected_T);
    if (row.refined_T)
      table.max_refinement_change =
          std::max(table.max_refinement_change, std::abs(*row.refined_T - *row.detected_T) / *row.detected_T);
    else if (opt.refinement_check)
      table.max_refinement_change = std::numeric_limits<double>::infinity();
  }
  if (xs.size() >= 2) table.fitted_slope = loglog_slope(xs, ys);
  return table;
}

/// CSV columns: epsilon, detected_T, converged_flag (1 when blow-up was detected).
inline void write_lifespan_csv(std::ostream& os, const LifespanTable& table) {
  const auto old = os.precision(17);
  os << "epsilon,detected_T,converged_flag\n";
  for (const auto& row : table.rows) {
    os << row.epsilon << ',';
    if (row.detected_T) os << *row.detected_T;
    else os << "nan";
    os << ',' << (row.blew_up ? 1 : 0) << '\n';
  }
  os.precision(old);
}

}  // namespace radiant
