#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/field.hpp"
#include "radiant/parallel.hpp"
#include "radiant/problem.hpp"

namespace radiant {

struct DecayParams {
  double k = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  int log_flag = 0;
  DimensionParams dims = DimensionParams::of(3);

  static DecayParams of(const DimensionParams& dims, double k) {
    if (!(k >= 0.0)) throw DomainError("DecayParams: k must be non-negative");
    DecayParams dp;
    dp.k = k;
    dp.dims = dims;
    dp.mu = std::min(k - dims.m, dims.a);
    dp.nu = std::max(k - dims.m - dims.a, 0.0);
    dp.log_flag = std::abs(k - (dims.m + dims.a)) < 1e-12 ? 1 : 0;
    return dp;
  }
};

/// W_k(r,t) = <t+r>^mu <t-r>^nu (1 + ln(<t+r>/<t-r>))^{-log_flag}.
inline double weight_W(const DecayParams& dp, double r, double t) {
  const double plus = japanese(t + r), minus = japanese(t - r);
  double w = std::pow(plus, dp.mu) * std::pow(minus, dp.nu);
  if (dp.log_flag) w /= 1.0 + std::log(plus / minus);
  return w;
}

/// Phi_k(y) = <y>^{max(2 - k(p-1), 0)}.
inline double phi_k(double k, double p, double y) {
  return std::pow(japanese(y), std::max(2.0 - k * (p - 1.0), 0.0));
}

struct WeightedNorms {
  double norm_X = 0.0;    ///< sum of the two sup terms
  double norm_aux = 0.0;  ///< sup |u| r^m W
  double term0 = 0.0;     ///< sup |u| r^{m-1} <r> W
  double term1 = 0.0;     ///< sup |u_r| r^m W
};

namespace detail {

inline void accumulate_norms(WeightedNorms& out, const DecayParams& dp, double r, double t, double u, double ur) {
  if (!std::isfinite(u) || !std::isfinite(ur)) throw NonFiniteError("weighted_norms: non-finite sample");
  const double m = dp.dims.m;
  const double W = weight_W(dp, r, t);
  const double rm = std::pow(r, m);
  out.term0 = std::max(out.term0, std::abs(u) * (rm / r) * japanese(r) * W);
  out.term1 = std::max(out.term1, std::abs(ur) * rm * W);
  out.norm_aux = std::max(out.norm_aux, std::abs(u) * rm * W);
}

}  // namespace detail

/// Grid suprema over the nodes where the field is valid.
inline WeightedNorms weighted_norms(const SpacetimeField& u, const DecayParams& dp) {
  WeightedNorms out;
  for (size_t it = 0; it < u.nt(); ++it)
    for (size_t ir = 0; ir < u.nr(); ++ir) {
      if (!u.node_valid(it, ir)) continue;
      detail::accumulate_norms(out, dp, u.r_grid()[ir], u.t_grid()[it], u.value(it, ir), u.r_derivative(it, ir));
    }
  out.norm_X = out.term0 + out.term1;
  return out;
}

/// The same suprema over a grid refined `factor` times in each direction,
/// using the field's interpolant between nodes.
inline WeightedNorms weighted_norms_refined(const SpacetimeField& u, const DecayParams& dp, int factor = 2) {
  auto refine = [factor](const std::vector<double>& g) {
    std::vector<double> out;
    for (size_t i = 0; i + 1 < g.size(); ++i)
      for (int s = 0; s < factor; ++s) out.push_back(g[i] + (g[i + 1] - g[i]) * s / factor);
    out.push_back(g.back());
    return out;
  };
  const auto rg = refine(u.r_grid()), tg = refine(u.t_grid());
  WeightedNorms out;
  for (double t : tg)
    for (double r : rg) {
      if (!u.is_valid(r, t)) continue;
      detail::accumulate_norms(out, dp, r, t, u(r, t), u.dr(r, t));
    }
  out.norm_X = out.term0 + out.term1;
  return out;
}

/// sup over the grid of |u0| r^{m-1} <t+r> W_k / eps.
inline double envelope_diagnostic(const std::function<double(double, double)>& u0, double eps, const DecayParams& dp,
                                  const std::vector<double>& r_grid, const std::vector<double>& t_grid, int jobs = 1) {
  if (!(eps > 0.0)) throw DomainError("envelope_diagnostic: eps must be positive");
  std::vector<double> best(r_grid.size() * t_grid.size(), 0.0);
  const size_t nr = r_grid.size();
  parallel_for(best.size(), jobs, [&](size_t idx) {
    const double r = r_grid[idx % nr], t = t_grid[idx / nr];
    const double v = u0(r, t);
    if (!std::isfinite(v)) throw NonFiniteError("envelope_diagnostic: non-finite u0");
    best[idx] = std::abs(v) * std::pow(r, dp.dims.m - 1.0) * japanese(t + r) * weight_W(dp, r, t) / eps;
  });
  return *std::max_element(best.begin(), best.end());
}

}  // namespace radiant
