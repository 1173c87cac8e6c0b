#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "radiant/dimension.hpp"
#include "radiant/error.hpp"
#include "radiant/field.hpp"
#include "radiant/kernels.hpp"
#include "radiant/norms.hpp"
#include "radiant/parallel.hpp"
#include "radiant/problem.hpp"
#include "radiant/quadrature.hpp"
#include "radiant/riemann.hpp"

namespace radiant {

namespace detail {

/// The radial slice lambda -> G(lambda, tau) of a field, as a profile whose
/// knots are the field's radial nodes. The profile refers to G.
inline RadialProfile slice_profile(const SpacetimeField& G, double tau) {
  std::array<double, 4> w{};
  size_t k0 = 0;
  const int width = G.time_stencil(tau, w, k0);
  auto fn = [&G, w, k0, width](double lambda) {
    double v = 0.0;
    for (int a = 0; a < width; ++a) v += w[a] * G.slice_value(k0 + a, lambda);
    return v;
  };
  std::optional<double> support;
  if (G.extension() == SpacetimeField::Extension::Zero) support = G.r_max();
  return RadialProfile::analytic(fn, {}, 2, support).with_knots(G.r_grid());
}

/// Breakpoints of the tau integrand on [0, t]: time nodes and the kink at t - r.
inline std::vector<double> tau_breakpoints(const std::vector<double>& t_grid, double r, double t) {
  std::vector<double> bp{0.0};
  for (double tk : t_grid)
    if (tk > 0.0 && tk < t) bp.push_back(tk);
  if (t - r > 0.0) bp.push_back(t - r);
  bp.push_back(t);
  std::sort(bp.begin(), bp.end());
  std::vector<double> out;
  for (double b : bp)
    if (out.empty() || b - out.back() > 1e-14 * std::max(1.0, t)) out.push_back(b);
  if (out.back() != t) out.back() = t;
  return out;
}

inline void check_duhamel_coverage(const SpacetimeField& G, double r, double t) {
  if (t > G.t_max() * (1.0 + 1e-12) + 1e-300)
    throw CoverageError("apply_duhamel: time grid ends before t = " + std::to_string(t));
  if (G.extension() == SpacetimeField::Extension::Strict && r + t > G.r_max() * (1.0 + 1e-12))
    throw CoverageError("apply_duhamel: radial grid does not reach r + t = " + std::to_string(r + t));
}

}  // namespace detail

/// int_0^t [L G(., tau)](r, t - tau) dtau with outer Gauss panels in tau
/// (refined by doubling) around certified inner Riemann evaluations.
inline quad::Certified apply_duhamel_certified(const SpacetimeField& G, const DimensionParams& dims, double r,
                                               double t, const QuadratureSpec& q = {}) {
  if (!(r > 0.0)) throw DomainError("apply_duhamel: r must be positive");
  if (!(t >= 0.0)) throw DomainError("apply_duhamel: t must be non-negative");
  if (t == 0.0) return {0.0, 0.0, 0};
  detail::check_duhamel_coverage(G, r, t);
  const auto bp = detail::tau_breakpoints(G.t_grid(), r, t);
  QuadratureSpec inner = q;
  inner.abs_tol = q.abs_tol / (4.0 * (1.0 + t));
  const auto& rule = quad::gauss_legendre(4);
  auto estimate = [&](int level) {
    double total = 0.0;
    for (size_t p = 0; p + 1 < bp.size(); ++p) {
      total += quad::integrate_panels(
          [&](double tau) { return apply_L(detail::slice_profile(G, tau), dims, r, t - tau, inner); }, bp[p],
          bp[p + 1], 1 << level, rule);
    }
    return total;
  };
  return quad::refine_until(estimate, q.abs_tol, q.max_refinements, "apply_duhamel");
}

inline double apply_duhamel(const SpacetimeField& G, const DimensionParams& dims, double r, double t,
                            const QuadratureSpec& q = {}) {
  return apply_duhamel_certified(G, dims, r, t, q).value;
}

/// Duhamel evaluator for odd n on a fixed field. The Legendre kernel makes
/// lambda^{m+1} P_m(z) a polynomial in lambda with odd powers 1..2m+1, so
/// every slice integral reduces to prefix moments int_0^x lambda^j G(lambda,
/// tau_k) dlambda of the field's piecewise-cubic slices, which are tabulated
/// once. Narrow lambda intervals, where those moments would cancel, are
/// integrated directly.
class OddDuhamelEngine {
 public:
  OddDuhamelEngine(const SpacetimeField& G, const DimensionParams& dims, int tau_nodes = 4)
      : G_(G), m_(dims.kernel_index()), nj_(m_ + 1), h_(dims.half_n_minus_1()),
        cell_rule_(quad::gauss_legendre(m_ + 3)), direct_rule_(quad::gauss_legendre(6)),
        tau_rule_(quad::gauss_legendre(tau_nodes)),
        zero_ext_(G.extension() == SpacetimeField::Extension::Zero) {
    if (!dims.odd() || dims.n < 3) throw DomainError("OddDuhamelEngine: needs odd n >= 3");
    if (G.nr() < 2) throw DomainError("OddDuhamelEngine: field needs two radial nodes");
    build_kernel_terms();
    build_prefix();
  }

  double operator()(double r, double t) const {
    if (!(r > 0.0)) throw DomainError("apply_duhamel: r must be positive");
    if (!(t > 0.0)) return 0.0;
    detail::check_duhamel_coverage(G_, r, t);
    const auto bp = detail::tau_breakpoints(G_.t_grid(), r, t);
    double total = 0.0;
    for (size_t p = 0; p + 1 < bp.size(); ++p) {
      const double half = 0.5 * (bp[p + 1] - bp[p]), mid = 0.5 * (bp[p + 1] + bp[p]);
      double s = 0.0;
      for (int i = 0; i < tau_rule_.size(); ++i) {
        const double tau = mid + half * tau_rule_.nodes[i];
        s += tau_rule_.weights[i] * slice_L(r, t - tau, tau);
      }
      total += half * s;
    }
    return total;
  }

  /// [L G(., tau)](r, s).
  double slice_L(double r, double s, double tau) const {
    if (!(s > 0.0)) return 0.0;
    double a = std::abs(s - r), b = s + r;
    const double rmax = G_.r_max();
    if (b > rmax) {
      if (!zero_ext_ && b > rmax * (1.0 + 1e-12))
        throw CoverageError("apply_duhamel: radial grid does not reach " + std::to_string(b));
      b = rmax;
      if (!(b > a)) return 0.0;
    }
    std::array<double, 4> w{};
    size_t k0 = 0;
    const int width = G_.time_stencil(tau, w, k0);
    const size_t ca = a <= G_.r_min() ? 0 : G_.cell(a), cb = G_.cell(b);
    double value;
    if (b - a < 0.25 * b || cb - ca <= 2) {
      value = direct(r, s, a, b, w, k0, width);
    } else {
      std::array<double, 8> ia{}, ib{}, moments{};
      for (int k = 0; k < width; ++k) {
        partial_moments(k0 + k, b, ib.data());
        partial_moments(k0 + k, a, ia.data());
        for (int jj = 0; jj < nj_; ++jj) moments[jj] += w[k] * (ib[jj] - ia[jj]);
      }
      std::array<double, 8> A{};
      kernel_coefficients(r, s, A.data());
      value = 0.0;
      for (int jj = 0; jj < nj_; ++jj) value += A[jj] * moments[jj];
    }
    return value / (2.0 * std::pow(r, h_));
  }

 private:
  struct Term {
    int i;       // power of z
    int l;       // binomial index
    double coef; // p_i * binom(i, l)
    int jj;      // lambda power index, j = 2 jj + 1
  };

  void build_kernel_terms() {
    // Monomial coefficients of P_m from (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
    std::vector<double> prev{1.0}, cur{0.0, 1.0};
    std::vector<double> pm = m_ == 0 ? prev : cur;
    for (int k = 1; k < m_; ++k) {
      std::vector<double> next(k + 2, 0.0);
      for (int i = 0; i <= k; ++i) next[i + 1] += (2.0 * k + 1.0) * cur[i] / (k + 1.0);
      for (int i = 0; i < k; ++i) next[i] -= k * prev[i] / (k + 1.0);
      prev = cur;
      cur = next;
      pm = cur;
    }
    for (int i = 0; i <= m_; ++i) {
      if (pm[i] == 0.0) continue;
      double binom = 1.0;
      for (int l = 0; l <= i; ++l) {
        if (l > 0) binom = binom * (i - l + 1) / l;
        const int j = m_ + 1 - i + 2 * l;
        terms_.push_back({i, l, pm[i] * binom, (j - 1) / 2});
      }
    }
  }

  /// lambda^{m+1} P_m(z(lambda,r,s)) = sum_jj A[jj] lambda^{2jj+1}.
  void kernel_coefficients(double r, double s, double* A) const {
    const double c = (r - s) * (r + s);
    for (const auto& term : terms_) A[term.jj] += term.coef * std::pow(c, term.i - term.l) / std::pow(2.0 * r, term.i);
  }

  double hermite(size_t k, size_t i, double x) const {
    const auto& rg = G_.r_grid();
    const double hh = rg[i + 1] - rg[i];
    const double s = (x - rg[i]) / hh, s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * G_.value(k, i) + (s3 - 2 * s2 + s) * hh * G_.r_derivative(k, i) +
           (-2 * s3 + 3 * s2) * G_.value(k, i + 1) + (s3 - s2) * hh * G_.r_derivative(k, i + 1);
  }

  /// Adds int_lo^hi lambda^{2jj+1} H_k(lambda) dlambda, lo and hi inside cell i.
  void cell_moments(size_t k, size_t i, double lo, double hi, double* out) const {
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int q = 0; q < cell_rule_.size(); ++q) {
      const double x = mid + half * cell_rule_.nodes[q];
      const double base = half * cell_rule_.weights[q] * hermite(k, i, x);
      const double x2 = x * x;
      double xp = x;
      for (int jj = 0; jj < nj_; ++jj, xp *= x2) out[jj] += base * xp;
    }
  }

  void build_prefix() {
    const size_t nr = G_.nr(), nt = G_.nt();
    prefix_.assign(nt * nj_ * nr, 0.0);
    const double r0 = G_.r_min();
    std::vector<double> acc(nj_);
    for (size_t k = 0; k < nt; ++k) {
      const double g0 = G_.value(k, 0);
      for (int jj = 0; jj < nj_; ++jj) acc[jj] = g0 * std::pow(r0, 2 * jj + 2) / (2 * jj + 2);
      for (size_t i = 0; i < nr; ++i) {
        for (int jj = 0; jj < nj_; ++jj) prefix_[(k * nj_ + jj) * nr + i] = acc[jj];
        if (i + 1 < nr) cell_moments(k, i, G_.r_grid()[i], G_.r_grid()[i + 1], acc.data());
      }
    }
  }

  /// out[jj] = int_0^x lambda^{2jj+1} H_k(lambda) dlambda.
  void partial_moments(size_t k, double x, double* out) const {
    const size_t nr = G_.nr();
    const double r0 = G_.r_min();
    if (x <= r0) {
      const double g0 = G_.value(k, 0);
      for (int jj = 0; jj < nj_; ++jj) out[jj] = g0 * std::pow(x, 2 * jj + 2) / (2 * jj + 2);
      return;
    }
    if (x >= G_.r_max()) {
      for (int jj = 0; jj < nj_; ++jj) out[jj] = prefix_[(k * nj_ + jj) * nr + nr - 1];
      return;
    }
    const size_t i = G_.cell(x);
    for (int jj = 0; jj < nj_; ++jj) out[jj] = prefix_[(k * nj_ + jj) * nr + i];
    cell_moments(k, i, G_.r_grid()[i], x, out);
  }

  double direct(double r, double s, double a, double b, const std::array<double, 4>& w, size_t k0,
                int width) const {
    const auto& rg = G_.r_grid();
    const double r0 = G_.r_min();
    double total = 0.0;
    auto piece = [&](double lo, double hi, long cell) {
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      double acc = 0.0;
      for (int q = 0; q < direct_rule_.size(); ++q) {
        const double x = mid + half * direct_rule_.nodes[q];
        double g = 0.0;
        for (int k = 0; k < width; ++k)
          g += w[k] * (cell < 0 ? G_.value(k0 + k, 0) : hermite(k0 + k, static_cast<size_t>(cell), x));
        const double z = std::clamp(z_ratio(x, r, s), -1.0, 1.0);
        acc += direct_rule_.weights[q] * std::pow(x, h_) * orthopoly(PolyKind::Legendre, m_, z) * g;
      }
      total += half * acc;
    };
    if (a < r0) {
      piece(a, std::min(b, r0), -1);
      a = r0;
      if (!(b > a)) return total;
    }
    for (size_t i = G_.cell(a); i + 1 < rg.size() && rg[i] < b; ++i) {
      const double lo = std::max(a, rg[i]), hi = std::min(b, rg[i + 1]);
      if (hi > lo) piece(lo, hi, static_cast<long>(i));
    }
    return total;
  }

  const SpacetimeField& G_;
  int m_, nj_;
  double h_;
  const quad::Rule& cell_rule_;
  const quad::Rule& direct_rule_;
  const quad::Rule& tau_rule_;
  bool zero_ext_;
  std::vector<Term> terms_;
  std::vector<double> prefix_;
};

/// Duhamel evaluator for any n >= 2: Gauss nodes in tau between time nodes,
/// each with one fixed-level Riemann evaluation of the interpolated slice.
class NestedDuhamelEngine {
 public:
  NestedDuhamelEngine(const SpacetimeField& G, const DimensionParams& dims, const QuadratureSpec& q,
                      int tau_nodes = 4)
      : G_(G), dims_(dims), q_(q), tau_rule_(quad::gauss_legendre(tau_nodes)) {}

  double operator()(double r, double t) const {
    if (!(r > 0.0)) throw DomainError("apply_duhamel: r must be positive");
    if (!(t > 0.0)) return 0.0;
    detail::check_duhamel_coverage(G_, r, t);
    const auto bp = detail::tau_breakpoints(G_.t_grid(), r, t);
    double total = 0.0;
    for (size_t p = 0; p + 1 < bp.size(); ++p) {
      const double half = 0.5 * (bp[p + 1] - bp[p]), mid = 0.5 * (bp[p + 1] + bp[p]);
      double s = 0.0;
      for (int i = 0; i < tau_rule_.size(); ++i) {
        const double tau = mid + half * tau_rule_.nodes[i];
        s += tau_rule_.weights[i] *
             detail::apply_L_level(detail::slice_profile(G_, tau), dims_, r, t - tau, q_, 0);
      }
      total += half * s;
    }
    return total;
  }

 private:
  const SpacetimeField& G_;
  DimensionParams dims_;
  QuadratureSpec q_;
  const quad::Rule& tau_rule_;
};

enum class DuhamelEngine { Auto, Prefix, Nested };

/// Duhamel values at every node of G's own grid.
inline std::vector<double> duhamel_on_grid(const SpacetimeField& G, const DimensionParams& dims,
                                           const QuadratureSpec& q, DuhamelEngine engine = DuhamelEngine::Auto,
                                           int jobs = 1) {
  std::vector<double> out(G.nr() * G.nt(), 0.0);
  const auto& rg = G.r_grid();
  const auto& tg = G.t_grid();
  const size_t nr = G.nr();
  const bool prefix = engine == DuhamelEngine::Prefix || (engine == DuhamelEngine::Auto && dims.odd() && dims.n >= 3);
  if (prefix) {
    OddDuhamelEngine e(G, dims);
    parallel_for(out.size(), jobs, [&](size_t idx) { out[idx] = e(rg[idx % nr], tg[idx / nr]); });
  } else {
    NestedDuhamelEngine e(G, dims, q);
    parallel_for(out.size(), jobs, [&](size_t idx) { out[idx] = e(rg[idx % nr], tg[idx / nr]); });
  }
  return out;
}

struct IterationRecord {
  double norm_X = 0.0;
  double norm_aux = 0.0;
  double residual = 0.0;  ///< norm_X(u_{i+1} - u_i)
};

struct ConvergenceReport {
  std::vector<IterationRecord> per_iteration;
  std::vector<double> contraction_ratios;
  bool converged = false;
  int iterations = 0;
  WeightedNorms norms_u0;
  double refinement_change = 0.0;  ///< relative change of norm_X when the sup is taken on a 2x refined grid
  double wall_seconds = 0.0;
};

struct PicardGrid {
  std::vector<double> r;
  std::vector<double> t;
};

/// Radial nodes biased toward r_min, uniform time nodes on [0, T].
inline PicardGrid make_picard_grid(double T, double r_max, int nr = 200, int nt = 200, double r_min = 1e-3,
                                   double bias = 2.0) {
  return {biased_grid(r_min, r_max, nr, bias), biased_grid(0.0, T, nt)};
}

struct PicardOptions {
  int jobs = 1;
  DuhamelEngine engine = DuhamelEngine::Auto;
  double noise_floor = 1e-12;  ///< also stop once the residual is this small relative to norm_X
  std::function<void(int, const IterationRecord&)> on_iteration;
};

struct PicardResult {
  SpacetimeField u;
  SpacetimeField u0;
  ConvergenceReport report;
};

/// Samples u0 on the grid, then iterates u_{i+1} = u0 + Duhamel(F(u_i) - V u_i).
/// Values are trusted where r + t <= r_max.
inline PicardResult picard_solve(const ProblemSpec& prob, const PicardGrid& grid, const QuadratureSpec& quad,
                                 int max_iter, double tol, const PicardOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  prob.validate();
  quad.validate();
  if (max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("tol", "must be positive");
  if (grid.t.empty() || grid.t.back() < prob.horizon_T * (1.0 - 1e-12))
    throw DomainError("picard_solve: time grid must reach horizon_T");
  const auto& dims = prob.dims;
  const double causal = grid.r.back();
  const auto phi = prob.scaled_phi(), psi = prob.scaled_psi();
  auto u0 = SpacetimeField::sample(
      grid.r, grid.t, [&](double r, double t) { return homogeneous_solution(phi, psi, dims, r, t, quad); }, causal,
      SpacetimeField::Extension::Zero, opts.jobs);
  const auto dp = DecayParams::of(dims, prob.k);

  PicardResult result{u0, u0, {}};
  auto& report = result.report;
  report.norms_u0 = weighted_norms(u0, dp);
  const auto& F = prob.nonlinearity;
  const auto& V = prob.potential;
  int growth = 0;
  double prev_residual = 0.0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    const auto G = result.u.map([&](double r, double, double v) { return F(v) - V(r) * v; });
    std::vector<double> next = u0.values();
    bool forcing = false;
    for (double g : G.values())
      if (g != 0.0) forcing = true;
    if (forcing) {
      const auto d = duhamel_on_grid(G, dims, quad, opts.engine, opts.jobs);
      for (size_t i = 0; i < next.size(); ++i) next[i] += d[i];
    }
    for (size_t i = 0; i < next.size(); ++i)
      if (!std::isfinite(next[i]))
        throw DivergenceError("picard_solve: non-finite iterate at iteration " + std::to_string(iter));
    SpacetimeField u_next(grid.r, grid.t, std::move(next), causal, SpacetimeField::Extension::Zero);
    const double residual = weighted_norms(u_next - result.u, dp).norm_X;
    const auto norms = weighted_norms(u_next, dp);
    report.per_iteration.push_back({norms.norm_X, norms.norm_aux, residual});
    if (iter > 1) report.contraction_ratios.push_back(prev_residual > 0.0 ? residual / prev_residual : 0.0);
    if (opts.on_iteration) opts.on_iteration(iter, report.per_iteration.back());
    result.u = std::move(u_next);
    report.iterations = iter;
    if (residual < tol || residual <= opts.noise_floor * norms.norm_X) {
      report.converged = true;
      break;
    }
    growth = (iter > 1 && residual > prev_residual) ? growth + 1 : 0;
    if (growth >= 3)
      throw DivergenceError("picard_solve: residual grew for 3 consecutive iterations (iteration " +
                            std::to_string(iter) + ", residual " + std::to_string(residual) + ")");
    prev_residual = residual;
  }
  const double nx = report.per_iteration.back().norm_X;
  if (nx > 0.0) report.refinement_change = std::abs(weighted_norms_refined(result.u, dp).norm_X - nx) / nx;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

struct ResidualReport {
  double max_residual = 0.0;
  double truncation_estimate = 0.0;  ///< Richardson estimate from stencils of step h and 2h
  size_t nodes = 0;
  bool within(double factor = 10.0) const { return max_residual <= factor * truncation_estimate + 1e-14; }
};

/// Discrete residual u_tt - u_rr - (n-1)/r u_r - F(u) + V u at trusted
/// interior nodes with r > r_floor, using 3-point stencils with step h; the
/// truncation estimate compares against the same stencils with step 2h.
inline ResidualReport pde_residual(const SpacetimeField& u, const ProblemSpec& prob, double r_floor = 0.5) {
  const auto& rg = u.r_grid();
  const auto& tg = u.t_grid();
  const int n = prob.dims.n;
  auto second = [](double xm, double x0, double xp, double fm, double f0, double fp) {
    return 2.0 * (fm / ((xm - x0) * (xm - xp)) + f0 / ((x0 - xm) * (x0 - xp)) + fp / ((xp - xm) * (xp - x0)));
  };
  auto first = [](double xm, double x0, double xp, double fm, double f0, double fp) {
    return fm * (x0 - xp) / ((xm - x0) * (xm - xp)) + f0 * (2 * x0 - xm - xp) / ((x0 - xm) * (x0 - xp)) +
           fp * (x0 - xm) / ((xp - xm) * (xp - x0));
  };
  auto residual = [&](size_t it, size_t ir, size_t step) {
    const double r = rg[ir], v = u.value(it, ir);
    const double utt = second(tg[it - step], tg[it], tg[it + step], u.value(it - step, ir), v, u.value(it + step, ir));
    const double urr = second(rg[ir - step], r, rg[ir + step], u.value(it, ir - step), v, u.value(it, ir + step));
    const double ur = first(rg[ir - step], r, rg[ir + step], u.value(it, ir - step), v, u.value(it, ir + step));
    return utt - urr - (n - 1.0) / r * ur - prob.nonlinearity(v) + prob.potential(r) * v;
  };
  ResidualReport rep;
  for (size_t it = 2; it + 2 < tg.size(); ++it)
    for (size_t ir = 2; ir + 2 < rg.size(); ++ir) {
      if (rg[ir] <= r_floor || !u.node_valid(it + 2, ir + 2)) continue;
      const double r1 = residual(it, ir, 1), r2 = residual(it, ir, 2);
      rep.max_residual = std::max(rep.max_residual, std::abs(r1));
      rep.truncation_estimate = std::max(rep.truncation_estimate, std::abs(r2 - r1) / 3.0);
      ++rep.nodes;
    }
  return rep;
}

inline void write_field_csv(std::ostream& os, const SpacetimeField& u, const ProblemSpec& prob) {
  u.write_csv(os, prob.describe());
}

}  // namespace radiant
