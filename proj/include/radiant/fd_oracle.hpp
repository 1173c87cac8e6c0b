#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radiant/error.hpp"
#include "radiant/field.hpp"
#include "radiant/problem.hpp"

namespace radiant {

struct FDConfig {
  enum class Boundary { Outflow, Dirichlet };

  double dr = 0.02;
  double cfl = 0.5;  ///< dt = cfl * dr
  double r_max = 20.0;
  Boundary boundary = Boundary::Outflow;
  double blowup_threshold = 1e6;

  double dt() const { return cfl * dr; }

  void validate(const ProblemSpec& prob, double horizon) const {
    if (!(dr > 0.0)) throw ValidationError("dr", "must be positive");
    if (!(cfl > 0.0 && cfl <= 0.9)) throw ValidationError("cfl", "must lie in (0, 0.9]");
    if (!(r_max > 4.0 * dr)) throw ValidationError("r_max", "must span at least four cells");
    if (!(blowup_threshold > 0.0)) throw ValidationError("blowup_threshold", "must be positive");
    auto sp = prob.phi.support_end(), sq = prob.psi.support_end();
    if (sp && sq) {
      if (r_max < horizon + std::max(*sp, *sq))
        throw ValidationError("r_max", "must reach horizon + data support radius");
    } else if (boundary == Boundary::Dirichlet) {
      throw ValidationError("boundary", "dirichlet boundary needs compactly supported data");
    }
  }
};

struct FDResult {
  SpacetimeField snapshots;  ///< u at the observer times on the nodes r > 0
  std::vector<double> r_nodes;  ///< all nodes including r = 0
  std::vector<std::vector<double>> snapshot_values;  ///< full node vectors per observer time
  bool blew_up = false;
  std::optional<double> blowup_time;
  double final_time = 0.0;
  long steps = 0;
};

/// State handed to per-step observers: the current time and nodal values.
struct FDStep {
  double t;
  std::span<const double> r;
  std::span<const double> u;
  double sup;
};

namespace detail {

/// Radial Laplacian in flux form on r_i = i dr. Cell volumes
/// w_i = (r_{i+1/2}^n - r_{i-1/2}^n)/n and face areas r_{i+1/2}^{n-1}.
/// The origin value follows the even extension u_0 = (4u_1 - u_2)/3.
class RadialLaplacian {
 public:
  RadialLaplacian(int n, double dr, size_t nodes) : dr_(dr), area_(nodes), inv_vol_(nodes) {
    for (size_t i = 0; i < nodes; ++i) {
      const double plus = (i + 0.5) * dr;
      area_[i] = std::pow(plus, n - 1);
      const double minus = i == 0 ? 0.0 : (i - 0.5) * dr;
      inv_vol_[i] = n / (std::pow(plus, n) - std::pow(minus, n));
    }
  }

  /// (Lu)_i for 1 <= i < nodes - 1.
  double apply(const std::vector<double>& u, size_t i) const {
    return (area_[i] * (u[i + 1] - u[i]) - area_[i - 1] * (u[i] - u[i - 1])) * inv_vol_[i] / dr_;
  }

  double area(size_t i) const { return area_[i]; }
  double volume(size_t i) const { return 1.0 / inv_vol_[i]; }

 private:
  double dr_;
  std::vector<double> area_, inv_vol_;
};

}  // namespace detail

/// Leapfrog integration of u_tt = u_rr + (n-1)/r u_r + F(u) - V u with data
/// epsilon*(phi, psi). Snapshots are taken at the observer times (linear
/// interpolation between steps). The run stops at `horizon` or when the sup
/// norm passes the blow-up threshold.
inline FDResult solve_fd(const ProblemSpec& prob, const FDConfig& cfg, double horizon,
                         const std::vector<double>& observers = {},
                         const std::function<void(const FDStep&)>& on_step = {}) {
  prob.validate();
  cfg.validate(prob, horizon);
  if (!(horizon > 0.0)) throw ValidationError("horizon", "must be positive");
  const int n = prob.dims.n;
  const double dr = cfg.dr, dt = cfg.dt();
  const size_t N = static_cast<size_t>(std::ceil(cfg.r_max / dr)) + 1;
  std::vector<double> r(N), V(N);
  const auto jump = prob.potential.discontinuity();
  for (size_t i = 0; i < N; ++i) {
    r[i] = i * dr;
    V[i] = prob.potential(r[i]);
    // A jump on a node takes the mean of the one-sided limits.
    if (jump && std::abs(r[i] - *jump) < 1e-9 * dr) {
      const double d = 1e-9 * std::max(1.0, r[i]);
      V[i] = 0.5 * (prob.potential(r[i] - d) + prob.potential(r[i] + d));
    }
  }
  const detail::RadialLaplacian lap(n, dr, N);
  const auto phi = prob.scaled_phi(), psi = prob.scaled_psi();
  const auto& F = prob.nonlinearity;
  const bool linear_free = F.is_zero() && prob.potential.is_zero();

  auto fix_origin = [](std::vector<double>& u) { u[0] = (4.0 * u[1] - u[2]) / 3.0; };

  std::vector<double> prev(N), cur(N), next(N);
  for (size_t i = 1; i < N; ++i) prev[i] = phi(r[i]);
  fix_origin(prev);
  for (size_t i = 1; i + 1 < N; ++i)
    cur[i] = prev[i] + dt * psi(r[i]) + 0.5 * dt * dt * (lap.apply(prev, i) + F(prev[i]) - V[i] * prev[i]);
  const double c_out = dt / dr;
  auto boundary = [&](const std::vector<double>& older, std::vector<double>& u) {
    const size_t e = N - 1;
    if (cfg.boundary == FDConfig::Boundary::Dirichlet) {
      u[e] = 0.0;
    } else {
      // Upwind u_t + u_r + (n-1)/(2r) u = 0.
      u[e] = older[e] - c_out * (older[e] - older[e - 1]) - dt * (n - 1) / (2.0 * r[e]) * older[e];
    }
  };
  boundary(prev, cur);
  fix_origin(cur);

  auto energy = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (size_t i = 0; i + 1 < N; ++i) {
      const double ut = (b[i] - a[i]) / dt;
      e += 0.5 * lap.volume(i) * ut * ut;
      e += 0.5 * lap.area(i) * (b[i + 1] - b[i]) * (a[i + 1] - a[i]) / dr;
    }
    return e;
  };
  auto sup = [](const std::vector<double>& u) {
    double s = 0.0;
    for (double v : u) s = std::max(s, std::abs(v));
    return s;
  };

  FDResult res;
  res.r_nodes = r;
  std::vector<double> obs = observers;
  std::sort(obs.begin(), obs.end());
  size_t next_obs = 0;
  std::vector<double> snap_t;
  auto record = [&](double t_obs, double t0, const std::vector<double>& a, const std::vector<double>& b) {
    const double w = (t_obs - t0) / dt;
    std::vector<double> v(N);
    for (size_t i = 0; i < N; ++i) v[i] = (1.0 - w) * a[i] + w * b[i];
    res.snapshot_values.push_back(std::move(v));
    snap_t.push_back(t_obs);
  };
  while (next_obs < obs.size() && obs[next_obs] <= 0.0) record(obs[next_obs++], 0.0, prev, prev);

  const double e0 = linear_free ? energy(prev, cur) : 0.0;
  double t = dt;
  double sup_prev = sup(prev);
  if (on_step) on_step({0.0, r, prev, sup_prev});
  long steps = 1;
  for (;;) {
    const double s = sup(cur);
    if (!std::isfinite(s) && !res.blew_up) throw InstabilityError("solve_fd: non-finite values at t = " + std::to_string(t));
    while (next_obs < obs.size() && obs[next_obs] <= t + 1e-12) record(obs[next_obs++], t - dt, prev, cur);
    if (on_step) on_step({t, r, cur, s});
    if (s > cfg.blowup_threshold) {
      if (linear_free) throw InstabilityError("solve_fd: linear solution passed the blow-up threshold (cfl too large?)");
      res.blew_up = true;
      // Log-linear interpolation of the threshold crossing.
      double tb = t;
      if (sup_prev > 0.0 && s > sup_prev)
        tb = t - dt + dt * std::clamp(std::log(cfg.blowup_threshold / sup_prev) / std::log(s / sup_prev), 0.0, 1.0);
      res.blowup_time = tb;
      break;
    }
    if (t >= horizon - 1e-12) break;
    for (size_t i = 1; i + 1 < N; ++i)
      next[i] = 2.0 * cur[i] - prev[i] + dt * dt * (lap.apply(cur, i) + F(cur[i]) - V[i] * cur[i]);
    boundary(cur, next);
    fix_origin(next);
    if (linear_free && steps % 16 == 0) {
      const double e = energy(cur, next);
      if (e > 10.0 * e0 + 1e-300)
        throw InstabilityError("solve_fd: linear energy grew more than tenfold (cfl too large?)");
    }
    std::swap(prev, cur);
    std::swap(cur, next);
    sup_prev = s;
    t += dt;
    ++steps;
  }
  res.final_time = t;
  res.steps = steps;
  if (!snap_t.empty()) {
    std::vector<double> rr(r.begin() + 1, r.end()), vals;
    for (const auto& v : res.snapshot_values) vals.insert(vals.end(), v.begin() + 1, v.end());
    // Snapshot times must be strictly increasing for the field type.
    std::vector<double> ts = snap_t;
    for (size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1])) throw ValidationError("observers", "observer times must be distinct");
    res.snapshots = SpacetimeField(std::move(rr), std::move(ts), std::move(vals));
  }
  return res;
}

/// Modified leapfrog energy of consecutive levels (exposed for diagnostics).
inline double fd_energy(int n, double dr, double dt, const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<double>& V = {}) {
  const detail::RadialLaplacian lap(n, dr, a.size());
  double e = 0.0;
  for (size_t i = 0; i + 1 < a.size(); ++i) {
    const double ut = (b[i] - a[i]) / dt;
    e += 0.5 * lap.volume(i) * ut * ut;
    e += 0.5 * lap.area(i) * (b[i + 1] - b[i]) * (a[i + 1] - a[i]) / dr;
    if (!V.empty()) e += 0.5 * lap.volume(i) * V[i] * a[i] * b[i];
  }
  return e;
}

}  // namespace radiant
