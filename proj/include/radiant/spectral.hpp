#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "radiant/blowup.hpp"
#include "radiant/error.hpp"
#include "radiant/fd_oracle.hpp"
#include "radiant/problem.hpp"
#include "radiant/profile.hpp"

namespace radiant {

/// Uniform interior mesh r_i = i h, i = 1..N, with Dirichlet ends at 0 and (N+1)h.
struct EigenMesh {
  double h = 0.0;
  size_t nodes = 0;
  double r_max = 0.0;
  double coarse_eigenvalue = std::numeric_limits<double>::quiet_NaN();  ///< same problem with h doubled
  bool tail_truncated = false;  ///< |V(r_max)| >= 1e-8 max|V|; the eigenvalue is then an upper bound
};

struct EigenPair {
  int n = 3;
  PotentialSpec potential;
  double eigenvalue = 0.0;  ///< lowest discrete eigenvalue of -Delta + V on the mesh
  bool negative = false;
  RadialProfile eigenfunction;  ///< chi, positive, int chi^2 r^{n-1} dr = 1 (zero profile when not negative)
  std::vector<double> mesh_values;  ///< w_i = r_i^{(n-1)/2} chi(r_i)
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double decay_window_lo = 0.0, decay_window_hi = 0.0;  ///< radii of the decay-rate fit
  EigenMesh mesh;

  double r(size_t i) const { return (i + 1) * mesh.h; }
};

struct SpectralOptions {
  double bound_tol = 1e-10;  ///< eigenvalues >= -bound_tol count as the continuum edge
  bool check_mesh = true;
  double mesh_rtol = 0.01;
};

namespace detail {

/// Symmetric tridiagonal form of -w'' + ((n-1)(n-3)/(4 r^2) + V) w.
struct RadialHamiltonian {
  double h = 0.0;
  std::vector<double> diag;
  double off = 0.0;  ///< common off-diagonal entry -1/h^2

  RadialHamiltonian(const PotentialSpec& V, int n, double h_, size_t N) : h(h_), diag(N), off(-1.0 / (h_ * h_)) {
    const double c = 0.25 * (n - 1.0) * (n - 3.0);
    const auto jump = V.discontinuity();
    for (size_t i = 0; i < N; ++i) {
      const double r = (i + 1) * h;
      double v = V(r);
      if (jump && std::abs(r - *jump) < 1e-9 * h) {
        const double d = 1e-9 * std::max(1.0, r);
        v = 0.5 * (V(r - d) + V(r + d));
      }
      diag[i] = 2.0 / (h * h) + c / (r * r) + v;
    }
  }

  size_t size() const { return diag.size(); }

  /// Number of eigenvalues below x (Sturm count of the LDL^T pivots).
  size_t count_below(double x) const {
    size_t count = 0;
    double d = 1.0;
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    for (size_t i = 0; i < diag.size(); ++i) {
      d = diag[i] - x - (i ? off * off / d : 0.0);
      if (d == 0.0) d = -tiny;
      if (d < 0.0) ++count;
    }
    return count;
  }

  double gershgorin_lower() const {
    double lo = std::numeric_limits<double>::infinity();
    for (double d : diag) lo = std::min(lo, d - 2.0 * std::abs(off));
    return lo;
  }

  /// Lowest eigenvalue by bisection on the Sturm count.
  double lowest() const {
    double lo = gershgorin_lower(), hi = lo;
    double step = std::max(1.0, std::abs(lo));
    while (count_below(hi) == 0) {
      hi += step;
      step *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) >= 1 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// Solves (H - sigma) x = b for sigma below the spectrum (an M-matrix, so
  /// positive b gives positive x without cancellation).
  std::vector<double> solve_shifted(double sigma, std::vector<double> b) const {
    const size_t N = diag.size();
    std::vector<double> d(N);
    d[0] = diag[0] - sigma;
    for (size_t i = 1; i < N; ++i) {
      const double l = off / d[i - 1];
      d[i] = diag[i] - sigma - l * off;
      b[i] -= l * b[i - 1];
    }
    b[N - 1] /= d[N - 1];
    for (size_t i = N - 1; i-- > 0;) b[i] = (b[i] - off * b[i + 1]) / d[i];
    return b;
  }

  /// x^T H x / x^T x, with the kinetic part summed as squared differences.
  double rayleigh(const std::vector<double>& x) const {
    const double kin = 2.0 / (h * h);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i <= x.size(); ++i) {
      const double left = i ? x[i - 1] : 0.0, right = i < x.size() ? x[i] : 0.0;
      num += (right - left) * (right - left) / (h * h);
    }
    for (size_t i = 0; i < x.size(); ++i) {
      num += (diag[i] - kin) * x[i] * x[i];
      den += x[i] * x[i];
    }
    return num / den;
  }
};

/// Mesh width near r_max/(N+1) chosen so that a potential jump falls on an
/// even-numbered node (it then stays on a node when h doubles).
inline double aligned_step(const PotentialSpec& V, double r_max, size_t N) {
  double h = r_max / (N + 1.0);
  if (auto jump = V.discontinuity(); jump && *jump < r_max) {
    const double j = 2.0 * std::max(1.0, std::round(*jump / (2.0 * h)));
    h = *jump / j;
  }
  return h;
}

}  // namespace detail

/// Smallest eigenvalue of -Delta + V on radial functions in R^n, discretized
/// through w = r^{(n-1)/2} u with Dirichlet conditions at 0 and r_max.
inline EigenPair ground_state(const PotentialSpec& V, int n, double r_max, size_t mesh_size,
                              const SpectralOptions& opt = {}) {
  V.validate();
  if (n < 2) throw ValidationError("n", "must be at least 2");
  if (!(r_max > 0.0)) throw ValidationError("r_max", "must be positive");
  if (mesh_size < 16) throw ValidationError("mesh_size", "must be at least 16");
  const double vmax = V.sup_abs(r_max);
  if (!std::isfinite(vmax)) throw ValidationError("potential", "must be bounded on (0, r_max]");

  EigenPair out;
  out.n = n;
  out.potential = V;
  const double h = detail::aligned_step(V, r_max, mesh_size);
  const size_t N = static_cast<size_t>(std::llround(r_max / h)) - 1;
  out.mesh.h = h;
  out.mesh.nodes = N;
  out.mesh.r_max = (N + 1) * h;
  out.mesh.tail_truncated = std::abs(V(out.mesh.r_max)) >= 1e-8 * vmax && vmax > 0.0;

  const detail::RadialHamiltonian H(V, n, h, N);
  const double lambda = H.lowest();
  out.eigenvalue = lambda;
  if (opt.check_mesh) {
    const detail::RadialHamiltonian Hc(V, n, 2.0 * h, (N + 1) / 2 - 1);
    out.mesh.coarse_eigenvalue = Hc.lowest();
  }
  if (!(lambda < -opt.bound_tol)) return out;
  out.negative = true;
  if (opt.check_mesh && std::abs(out.mesh.coarse_eigenvalue - lambda) > opt.mesh_rtol * std::abs(lambda))
    throw MeshTooCoarse("ground_state: eigenvalue moved from " + std::to_string(out.mesh.coarse_eigenvalue) + " to " +
                        std::to_string(lambda) + " when the mesh was refined");

  // Inverse iteration just below the eigenvalue.
  const double gap = std::max(1e-12, 1e-9 * std::abs(lambda));
  std::vector<double> x(N, 1.0);
  for (int it = 0; it < 50; ++it) {
    auto y = H.solve_shifted(lambda - gap, x);
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm * h);
    double change = 0.0;
    for (size_t i = 0; i < N; ++i) {
      y[i] /= norm;
      change = std::max(change, std::abs(y[i] - x[i]));
    }
    x = std::move(y);
    if (it > 0 && change < 1e-13) break;
  }
  out.mesh_values = x;

  const double half = 0.5 * (n - 1.0);
  std::vector<double> rs(N), chi(N);
  for (size_t i = 0; i < N; ++i) {
    rs[i] = (i + 1) * h;
    chi[i] = x[i] / std::pow(rs[i], half);
  }
  out.eigenfunction = RadialProfile::sampled(rs, chi, {}, RadialProfile::Extrapolation::ZeroBeyondSupport);

  // Exponential rate from a least-squares fit of log w on [r_max/2, 7 r_max/8];
  // the last eighth is bent by the Dirichlet wall.
  const double lo = 0.5 * out.mesh.r_max, hi = 0.875 * out.mesh.r_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t cnt = 0;
  double wmax = 0.0;
  for (double v : x) wmax = std::max(wmax, v);
  for (size_t i = 0; i < N; ++i) {
    if (rs[i] < lo || rs[i] > hi || !(x[i] > 1e-280 * wmax)) continue;
    const double y = std::log(x[i]);
    sx += rs[i];
    sy += y;
    sxx += rs[i] * rs[i];
    sxy += rs[i] * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double den = cnt * sxx - sx * sx;
    if (den > 0.0) out.decay_rate = -(cnt * sxy - sx * sy) / den;
  }
  out.decay_window_lo = lo;
  out.decay_window_hi = hi;
  return out;
}

/// Discrete Rayleigh quotient of the stored mesh vector.
inline double discrete_rayleigh_quotient(const EigenPair& pair) {
  if (pair.mesh_values.empty()) throw DomainError("discrete_rayleigh_quotient: no eigenvector stored");
  const detail::RadialHamiltonian H(pair.potential, pair.n, pair.mesh.h, pair.mesh.nodes);
  return H.rayleigh(pair.mesh_values);
}

/// Eigenvalue of -Delta + aV for each a (0 when no bound state).
inline std::vector<EigenPair> amplification_sweep(const PotentialSpec& V, int n, const std::vector<double>& scales,
                                                  double r_max, size_t mesh_size, int jobs = 1,
                                                  SpectralOptions opt = {}) {
  std::vector<EigenPair> out(scales.size());
  parallel_for(scales.size(), jobs, [&](size_t i) { out[i] = ground_state(V.scaled(scales[i]), n, r_max, mesh_size, opt); });
  return out;
}

/// Bisection for the smallest scale a at which -Delta + aV has a bound state.
inline double bound_state_threshold(const PotentialSpec& V, int n, double a_lo, double a_hi, double r_max,
                                    size_t mesh_size, double tol = 1e-3, SpectralOptions opt = {}) {
  opt.check_mesh = false;
  auto bound = [&](double a) { return ground_state(V.scaled(a), n, r_max, mesh_size, opt).negative; };
  if (bound(a_lo)) throw DomainError("bound_state_threshold: lower scale already binds");
  if (!bound(a_hi)) throw DomainError("bound_state_threshold: upper scale does not bind");
  while (a_hi - a_lo > tol) {
    const double mid = 0.5 * (a_lo + a_hi);
    (bound(mid) ? a_hi : a_lo) = mid;
  }
  return 0.5 * (a_lo + a_hi);
}

// ---------------------------------------------------------------------------
// Blow-up driven by the negative eigenvalue.

struct EigenTrajectoryPoint {
  double t = 0.0;
  double f = 0.0;  ///< int chi u r^{n-1} dr
  double sup = 0.0;
  double chi_power = 0.0;  ///< int chi |u|^p r^{n-1} dr
};

struct EigenBlowupRun {
  std::vector<EigenTrajectoryPoint> trajectory;
  std::optional<double> detected_T;
  double lambda = 0.0;  ///< -eigenvalue > 0
  double chi_mass = 0.0;  ///< int chi r^{n-1} dr
  double c = 0.0;  ///< A (int chi r^{n-1} dr)^{-(p-1)}
  bool f_increasing = true;  ///< f' > 0 at every step after t = 0
  bool holder_holds = true;  ///< int chi|u|^p >= chi_mass^{-(p-1)} |f|^p at every step
  double min_ode_slack = std::numeric_limits<double>::infinity();  ///< min of (f'' - lambda f - c f^p)/scale
  bool ode_inequality_holds = true;  ///< min_ode_slack >= -ode_tol
};

struct EigenBlowupOptions {
  FDConfig fd;
  double horizon = 30.0;
  double epsilon = 1.0;
  double ode_tol = 1e-3;
};

/// Evolves u_tt - Delta u + V u = A|u|^p with data epsilon (phi, psi) and
/// records f(t) = int chi u r^{n-1} dr.
inline EigenBlowupRun eigen_blowup_run(const PotentialSpec& V, const EigenPair& chi, const RadialProfile& phi,
                                       const RadialProfile& psi, double A, double p, const EigenBlowupOptions& opt) {
  if (!(chi.potential == V)) throw HypothesisError("eigen_blowup_run: eigenpair was computed for another potential");
  if (!chi.negative) throw HypothesisError("eigen_blowup_run: the potential has no negative eigenvalue");
  if (!(A > 0.0)) throw ValidationError("A", "must be positive");
  if (!(p > 1.0)) throw ValidationError("p", "must exceed 1");
  if (!(opt.epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");

  ProblemSpec prob;
  prob.dims = DimensionParams::of(chi.n);
  prob.nonlinearity = Nonlinearity::power(A, p);
  prob.potential = V;
  prob.phi = phi;
  prob.psi = psi;
  prob.epsilon = opt.epsilon;
  opt.fd.validate(prob, opt.horizon);

  const size_t N = static_cast<size_t>(std::ceil(opt.fd.r_max / opt.fd.dr)) + 1;
  std::vector<double> r(N), w(N), ones(N, 1.0);
  bool psi_positive = false;
  for (size_t i = 0; i < N; ++i) {
    r[i] = i * opt.fd.dr;
    w[i] = chi.eigenfunction(r[i]);
    if (phi(r[i]) < 0.0 || psi(r[i]) < 0.0) throw HypothesisError("eigen_blowup_run: data must be non-negative");
    psi_positive = psi_positive || psi(r[i]) > 0.0;
  }
  if (!psi_positive) throw HypothesisError("eigen_blowup_run: psi must not vanish identically");

  EigenBlowupRun run;
  run.lambda = -chi.eigenvalue;
  run.chi_mass = functional_f(w, r, prob.dims).value;
  run.c = A * std::pow(run.chi_mass, -(p - 1.0));
  std::vector<double> upow(N);
  auto res = solve_fd(prob, opt.fd, opt.horizon, {}, [&](const FDStep& s) {
    for (size_t i = 0; i < N; ++i) upow[i] = std::pow(std::abs(s.u[i]), p);
    EigenTrajectoryPoint pt;
    pt.t = s.t;
    pt.f = functional_f(s.u, r, prob.dims, w).value;
    pt.sup = s.sup;
    pt.chi_power = functional_f(upow, r, prob.dims, w).value;
    run.trajectory.push_back(pt);
  });
  run.detected_T = res.blowup_time;

  const auto& tr = run.trajectory;
  const double dt = opt.fd.dt();
  for (size_t i = 0; i < tr.size(); ++i) {
    const double bound = std::pow(run.chi_mass, -(p - 1.0)) * std::pow(std::abs(tr[i].f), p);
    if (tr[i].chi_power < bound * (1.0 - 1e-12)) run.holder_holds = false;
    if (i >= 1 && !(tr[i].f > tr[i - 1].f)) run.f_increasing = false;
    if (i >= 1 && i + 1 < tr.size() && tr[i + 1].sup <= opt.fd.blowup_threshold) {
      const double f2 = (tr[i + 1].f - 2.0 * tr[i].f + tr[i - 1].f) / (dt * dt);
      const double rhs = run.lambda * tr[i].f + run.c * std::pow(std::abs(tr[i].f), p);
      const double scale = std::abs(f2) + std::abs(rhs) + 1e-300;
      run.min_ode_slack = std::min(run.min_ode_slack, (f2 - rhs) / scale);
    }
  }
  run.ode_inequality_holds = run.min_ode_slack >= -opt.ode_tol;
  return run;
}

/// CSV columns: t, f, sup.
inline void write_eigen_trajectory_csv(std::ostream& os, const EigenBlowupRun& run) {
  const auto old = os.precision(17);
  os << "t,f,sup\n";
  for (const auto& pt : run.trajectory) os << pt.t << ',' << pt.f << ',' << pt.sup << '\n';
  os.precision(old);
}

}  // namespace radiant
