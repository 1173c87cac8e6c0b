#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiant/blowup.hpp"
#include "radiant/config.hpp"
#include "radiant/duhamel.hpp"
#include "radiant/fd_oracle.hpp"
#include "radiant/kernels.hpp"
#include "radiant/norms.hpp"
#include "radiant/riemann.hpp"
#include "radiant/spectral.hpp"

namespace radiant {

struct ExperimentContext {
  std::filesystem::path out_dir = ".";
  int jobs = 1;
  unsigned long long seed = 0;
  double tol_scale = 1.0;
};

struct ExperimentOutput {
  std::vector<std::string> files;  ///< paths relative to the output directory
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json tolerances = nlohmann::json::object();
};

using ExperimentRunner = std::function<ExperimentOutput()>;

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names = {"kernel-table",  "homogeneous-decay", "picard",         "oracle-compare",
                                                 "lifespan",      "spectral-blowup",   "positivity-scan"};
  return names;
}

namespace detail {

/// Output file opened in binary mode (LF endings) with 17 significant digits.
class OutputFile {
 public:
  OutputFile(const ExperimentContext& ctx, ExperimentOutput& out, const std::string& name)
      : os_(ctx.out_dir / name, std::ios::binary) {
    if (!os_) throw Error("cannot write " + (ctx.out_dir / name).string());
    os_.precision(17);
    out.files.push_back(name);
  }
  std::ofstream& operator*() { return os_; }

 private:
  std::ofstream os_;
};

inline void write_jsonl(const ExperimentContext& ctx, ExperimentOutput& out, const std::string& name,
                        const nlohmann::json& record) {
  OutputFile f(ctx, out, name);
  *f << record.dump() << '\n';
}

inline QuadratureSpec quadrature_from_config(const Config& c, double tol_scale) {
  QuadratureSpec q;
  q.abs_tol = c.get_double("abs_tol", q.abs_tol * tol_scale);
  q.panels_per_unit = static_cast<int>(c.get_int("panels_per_unit", q.panels_per_unit));
  if (!(q.abs_tol > 0.0)) throw ValidationError("abs_tol", "must be positive");
  if (q.panels_per_unit < 4) throw ValidationError("panels_per_unit", "must be at least 4");
  return q;
}

inline nlohmann::json quadrature_json(const QuadratureSpec& q) {
  return {{"abs_tol", q.abs_tol}, {"panels_per_unit", q.panels_per_unit}, {"max_refinements", q.max_refinements}};
}

inline FDConfig fd_from_config(const Config& c, const std::string& r_max_key, double r_max_default) {
  FDConfig f;
  f.dr = c.get_double("dr", f.dr);
  f.cfl = c.get_double("cfl", f.cfl);
  f.r_max = c.get_double(r_max_key, r_max_default);
  f.blowup_threshold = c.get_double("blowup_threshold", f.blowup_threshold);
  const std::string b = c.get_string("boundary", "outflow");
  if (b == "outflow") f.boundary = FDConfig::Boundary::Outflow;
  else if (b == "dirichlet") f.boundary = FDConfig::Boundary::Dirichlet;
  else throw ValidationError("boundary", "expected outflow or dirichlet");
  if (!(f.dr > 0.0)) throw ValidationError("dr", "must be positive");
  if (!(f.cfl > 0.0 && f.cfl <= 0.9)) throw ValidationError("cfl", "must lie in (0, 0.9]");
  return f;
}

inline double positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0.0)) throw ValidationError(key, "must be positive");
  return v;
}

inline long at_least(const Config& c, const std::string& key, long fallback, long lo) {
  const long v = c.get_int(key, fallback);
  if (v < lo) throw ValidationError(key, "must be at least " + std::to_string(lo));
  return v;
}

inline DuhamelEngine engine_from_config(const Config& c) {
  const std::string e = c.get_string("engine", "auto");
  if (e == "auto") return DuhamelEngine::Auto;
  if (e == "prefix") return DuhamelEngine::Prefix;
  if (e == "nested") return DuhamelEngine::Nested;
  throw ValidationError("engine", "expected auto, prefix or nested");
}

struct PicardSetup {
  ProblemSpec prob;
  PicardGrid grid;
  QuadratureSpec quad;
  int max_iter = 20;
  double tol = 1e-10;
  PicardOptions opts;
  double r_max = 0.0;
};

inline PicardSetup picard_from_config(const Config& c, const ExperimentContext& ctx) {
  PicardSetup s;
  s.prob = problem_from_config(c);
  s.quad = quadrature_from_config(c, ctx.tol_scale);
  const int nr = static_cast<int>(at_least(c, "nr", 200, 8)), nt = static_cast<int>(at_least(c, "nt", 200, 4));
  s.r_max = detail::positive(c, "r_max", 3.0 * s.prob.horizon_T);
  const double r_min = detail::positive(c, "r_min", 1e-3);
  if (!(r_min < s.r_max)) throw ValidationError("r_min", "must be below r_max");
  const double bias = c.get_double("bias", 2.0);
  if (!(bias >= 0.0)) throw ValidationError("bias", "must be non-negative");
  s.grid = make_picard_grid(s.prob.horizon_T, s.r_max, nr, nt, r_min, bias);
  s.max_iter = static_cast<int>(at_least(c, "max_iter", 20, 1));
  s.tol = detail::positive(c, "tol", 1e-10 * ctx.tol_scale);
  s.opts.jobs = ctx.jobs;
  s.opts.engine = engine_from_config(c);
  if (s.opts.engine == DuhamelEngine::Prefix && !(s.prob.dims.odd() && s.prob.dims.n >= 3))
    throw ValidationError("engine", "prefix engine needs odd n >= 3");
  return s;
}

inline nlohmann::json norms_json(const WeightedNorms& w) {
  return {{"norm_X", w.norm_X}, {"norm_aux", w.norm_aux}, {"term0", w.term0}, {"term1", w.term1}};
}

inline ExperimentOutput run_picard(const PicardSetup& s, const ExperimentContext& ctx, PicardResult* keep = nullptr) {
  ExperimentOutput out;
  out.tolerances = quadrature_json(s.quad);
  out.tolerances["picard_tol"] = s.tol;
  auto res = picard_solve(s.prob, s.grid, s.quad, s.max_iter, s.tol, s.opts);
  {
    OutputFile f(ctx, out, "picard_field.csv");
    write_field_csv(*f, res.u, s.prob);
  }
  {
    OutputFile f(ctx, out, "picard_iterations.csv");
    *f << "iteration,norm_X,norm_aux,residual,contraction_ratio\n";
    const auto& rep = res.report;
    for (size_t i = 0; i < rep.per_iteration.size(); ++i) {
      const auto& it = rep.per_iteration[i];
      *f << i + 1 << ',' << it.norm_X << ',' << it.norm_aux << ',' << it.residual << ',';
      if (i >= 1 && i - 1 < rep.contraction_ratios.size()) *f << rep.contraction_ratios[i - 1];
      else *f << "nan";
      *f << '\n';
    }
  }
  const auto& rep = res.report;
  double max_ratio = 0.0;
  for (double r : rep.contraction_ratios) max_ratio = std::max(max_ratio, r);
  out.summary = {{"problem", s.prob.describe()},
                 {"converged", rep.converged},
                 {"iterations", rep.iterations},
                 {"max_contraction_ratio", max_ratio},
                 {"contraction_ratios", rep.contraction_ratios},
                 {"norms_u0", norms_json(rep.norms_u0)},
                 {"refinement_change", rep.refinement_change}};
  if (!rep.per_iteration.empty()) out.summary["final"] = {{"norm_X", rep.per_iteration.back().norm_X},
                                                          {"residual", rep.per_iteration.back().residual}};
  write_jsonl(ctx, out, "picard.jsonl", out.summary);
  if (keep) *keep = std::move(res);
  return out;
}

inline RadialProfile random_nonnegative_profile(std::mt19937_64& rng, double R, int bumps) {
  std::uniform_real_distribution<double> start(0.0, 4.0), width(0.2, 3.0), amp(0.1, 2.0);
  std::vector<std::pair<RadialProfile, double>> parts;
  double support = R;
  for (int b = 0; b < bumps; ++b) {
    const double lo = R + start(rng), hi = lo + width(rng), a = amp(rng);
    parts.emplace_back(data::bump(lo, hi), a);
    support = std::max(support, hi);
  }
  return RadialProfile::analytic(
      [parts](double r) {
        double s = 0.0;
        for (const auto& [f, a] : parts) s += a * f(r);
        return s;
      },
      [parts](double r) {
        double s = 0.0;
        for (const auto& [f, a] : parts) s += a * f.derivative(r);
        return s;
      },
      2, support);
}

}  // namespace detail

struct PositivitySample {
  double r, t, value;
};

struct PositivityScan {
  double beta_n = 0.0;
  std::vector<PositivitySample> samples;
};

/// apply_L of random non-negative bump sums supported in (R, R+7) at random
/// points of the cone r > max(beta_n t, t + R), t in (0, t_max].
inline PositivityScan positivity_scan(int n, size_t samples, double R, double t_max, double span, int bumps,
                                      unsigned long long seed, const QuadratureSpec& q = {}, int jobs = 1) {
  const auto dims = DimensionParams::of(n);
  PositivityScan out;
  out.beta_n = positivity_constants(n).beta_n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  std::vector<RadialProfile> fs;
  out.samples.resize(samples);
  for (auto& x : out.samples) {
    fs.push_back(detail::random_nonnegative_profile(rng, R, bumps));
    x.t = t_max * (1e-3 + (1.0 - 1e-3) * ut(rng));
    x.r = std::max(out.beta_n * x.t, x.t + R) * (1.0 + 1e-9) + span * ut(rng);
  }
  parallel_for(samples, jobs, [&](size_t s) {
    auto& x = out.samples[s];
    x.value = apply_L(fs[s], dims, x.r, x.t, q);
  });
  return out;
}

/// Parses and validates every key `command` needs, then returns the run
/// closure. Unknown keys and out-of-range values raise ValidationError before
/// any computation starts.
inline ExperimentRunner prepare_experiment(const std::string& command, const Config& c, const ExperimentContext& ctx) {
  if (std::find(experiment_commands().begin(), experiment_commands().end(), command) == experiment_commands().end())
    throw ValidationError("command", "unknown command \"" + command + "\"");
  if (c.has("command") && c.get_string("command") != command)
    throw ValidationError("command", "config names \"" + c.get_string("command") + "\" but \"" + command + "\" was requested");
  for (const char* k : {"output_dir", "seed", "jobs"})
    if (c.has(k)) c.get_string(k);

  ExperimentRunner run;
  if (command == "kernel-table") {
    const long n = c.get_int("n");
    if (n < 2 || n > 64) throw ValidationError("n", "must lie in [2, 64]");
    const double step = detail::positive(c, "z_step", 0.01);
    if (step > 1.0) throw ValidationError("z_step", "must not exceed 1");
    KernelOptions ko;
    ko.abs_tol = c.get_double("kernel_tol", ko.abs_tol * ctx.tol_scale);
    c.reject_unused();
    run = [=] {
      ExperimentOutput out;
      out.tolerances = {{"kernel_tol", ko.abs_tol}};
      const auto dims = DimensionParams::of(static_cast<int>(n));
      const int m = std::max(dims.kernel_index(), 0);
      const long rows = std::lround(2.0 / step);
      std::vector<double> z(rows + 1), u(rows + 1);
      for (long i = 0; i <= rows; ++i) z[i] = i == rows ? 1.0 : -1.0 + i * step;
      parallel_for(z.size(), ctx.jobs, [&](size_t i) {
        if (dims.odd()) u[i] = orthopoly(PolyKind::Legendre, m, z[i]);
        else if (z[i] <= -1.0) u[i] = (m % 2 ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
        else u[i] = u_kernel(m, z[i], ko);
      });
      {
        detail::OutputFile f(ctx, out, "kernel_table.csv");
        *f << "z,U\n";
        for (size_t i = 0; i < z.size(); ++i) *f << z[i] << ',' << u[i] << '\n';
      }
      out.summary = {{"n", n}, {"m", m}, {"kernel", dims.odd() ? "P_m" : "U_m"}, {"rows", z.size()},
                     {"last_value", u.back()}};
      detail::write_jsonl(ctx, out, "kernel_table.jsonl", out.summary);
      return out;
    };
  } else if (command == "homogeneous-decay") {
    const auto prob = problem_from_config(c);
    const auto q = detail::quadrature_from_config(c, ctx.tol_scale);
    const double t_max = detail::positive(c, "t_max", 50.0), t_ext = detail::positive(c, "t_max_extended", 2.0 * t_max);
    if (!(t_ext > t_max)) throw ValidationError("t_max_extended", "must exceed t_max");
    const int nr = static_cast<int>(detail::at_least(c, "nr", 30, 4)), nt = static_cast<int>(detail::at_least(c, "nt", 30, 4));
    const double r_min = detail::positive(c, "r_min", 1e-2), r_factor = detail::positive(c, "r_factor", 2.0);
    const double bias = c.get_double("bias", 3.0);
    c.reject_unused();
    run = [=] {
      ExperimentOutput out;
      out.tolerances = detail::quadrature_json(q);
      const auto dp = DecayParams::of(prob.dims, prob.k);
      const auto phi = prob.scaled_phi(), psi = prob.scaled_psi();
      auto u0 = [&](double r, double t) { return homogeneous_solution(phi, psi, prob.dims, r, t, q); };
      std::vector<double> env;
      for (double T : {t_max, t_ext})
        env.push_back(envelope_diagnostic(u0, prob.epsilon, dp, biased_grid(r_min, r_factor * T, nr, bias),
                                          biased_grid(0.0, T, nt), ctx.jobs));
      {
        detail::OutputFile f(ctx, out, "envelope.csv");
        *f << "t_max,envelope\n" << t_max << ',' << env[0] << '\n' << t_ext << ',' << env[1] << '\n';
      }
      out.summary = {{"problem", prob.describe()}, {"envelope", env[0]}, {"envelope_extended", env[1]},
                     {"relative_change", std::abs(env[1] - env[0]) / env[0]}};
      detail::write_jsonl(ctx, out, "homogeneous_decay.jsonl", out.summary);
      return out;
    };
  } else if (command == "picard") {
    const auto setup = detail::picard_from_config(c, ctx);
    c.reject_unused();
    run = [=] { return detail::run_picard(setup, ctx); };
  } else if (command == "oracle-compare") {
    const auto setup = detail::picard_from_config(c, ctx);
    const auto fd = detail::fd_from_config(c, "fd_r_max", setup.r_max + setup.prob.horizon_T);
    const double rel_tol = detail::positive(c, "compare_tol", 0.01);
    fd.validate(setup.prob, setup.prob.horizon_T);
    c.reject_unused();
    run = [=] {
      PicardResult res;
      auto out = detail::run_picard(setup, ctx, &res);
      std::vector<double> obs;
      for (double t : setup.grid.t)
        if (t <= 0.5 * setup.prob.horizon_T + 1e-12) obs.push_back(t);
      const auto fdres = solve_fd(setup.prob, fd, obs.back(), obs);
      double diff = 0.0, scale = 0.0;
      detail::OutputFile f(ctx, out, "oracle_compare.csv");
      *f << "r,t,picard,fd\n";
      const auto& rg = setup.grid.r;
      for (size_t it = 0; it < obs.size(); ++it)
        for (size_t ir = 0; ir < rg.size(); ++ir) {
          if (rg[ir] + obs[it] > setup.r_max || rg[ir] > fd.r_max - fd.dr) continue;
          const double x = rg[ir] / fd.dr;
          const size_t i = static_cast<size_t>(x);
          const double w = x - i;
          const auto& row = fdres.snapshot_values[it];
          const double vf = (1.0 - w) * row[i] + w * row[i + 1];
          const double vp = res.u.values()[it * rg.size() + ir];
          diff = std::max(diff, std::abs(vp - vf));
          scale = std::max(scale, std::abs(vf));
          *f << rg[ir] << ',' << obs[it] << ',' << vp << ',' << vf << '\n';
        }
      const double rel = scale > 0.0 ? diff / scale : diff;
      nlohmann::json rec = {{"relative_sup_difference", rel}, {"tolerance", rel_tol}, {"within_tolerance", rel <= rel_tol},
                            {"fd_dr", fd.dr}, {"fd_cfl", fd.cfl}};
      out.summary["oracle"] = rec;
      out.tolerances["compare_tol"] = rel_tol;
      detail::write_jsonl(ctx, out, "oracle_compare.jsonl", rec);
      return out;
    };
  } else if (command == "lifespan") {
    const auto prob = problem_from_config(c);
    std::vector<double> eps;
    if (c.has("eps_list")) {
      eps = c.get_list("eps_list");
    } else {
      const double lo = detail::positive(c, "eps_min", 0.02), hi = detail::positive(c, "eps_max", 0.5);
      const long count = detail::at_least(c, "eps_count", 8, 2);
      for (long j = 0; j < count; ++j) eps.push_back(lo * std::pow(hi / lo, double(j) / (count - 1)));
    }
    LifespanOptions opt;
    opt.horizon = detail::positive(c, "horizon", 200.0);
    opt.fd = detail::fd_from_config(c, "r_max", 2.0 * opt.horizon);
    opt.refinement_check = c.get_bool("refinement_check", false);
    opt.jobs = ctx.jobs;
    validate_lifespan(prob, eps, opt);
    c.reject_unused();
    run = [=] {
      ExperimentOutput out;
      const auto table = lifespan_experiment(prob, eps, opt);
      {
        detail::OutputFile f(ctx, out, "lifespan.csv");
        write_lifespan_csv(*f, table);
      }
      out.summary = {{"problem", prob.describe()},
                     {"fitted_slope", table.fitted_slope},
                     {"predicted_exponent", table.predicted_exponent},
                     {"excluded", table.excluded},
                     {"max_refinement_change", table.max_refinement_change}};
      out.tolerances = {{"blowup_threshold", opt.fd.blowup_threshold}, {"dr", opt.fd.dr}, {"cfl", opt.fd.cfl}};
      detail::write_jsonl(ctx, out, "lifespan.jsonl", out.summary);
      return out;
    };
  } else if (command == "spectral-blowup") {
    const auto prob = problem_from_config(c);
    if (prob.nonlinearity.kind != Nonlinearity::Kind::Power) throw ValidationError("nonlinearity", "must be power");
    const double sr = detail::positive(c, "spectral_r_max", 20.0);
    const long mesh = detail::at_least(c, "mesh_size", 20000, 16);
    EigenBlowupOptions opt;
    opt.horizon = detail::positive(c, "horizon", 30.0);
    opt.epsilon = prob.epsilon;
    const double support = std::max(prob.phi.support_end().value_or(0.0), prob.psi.support_end().value_or(0.0));
    opt.fd = detail::fd_from_config(c, "fd_r_max", opt.horizon + support + 1.0);
    opt.fd.validate(prob, opt.horizon);
    c.reject_unused();
    run = [=] {
      ExperimentOutput out;
      const auto pair = ground_state(prob.potential, prob.dims.n, sr, static_cast<size_t>(mesh));
      nlohmann::json eig = {{"eigenvalue", pair.eigenvalue},   {"negative", pair.negative},
                            {"decay_rate", pair.decay_rate},   {"mesh_size", pair.mesh.nodes},
                            {"h", pair.mesh.h},                {"r_max", pair.mesh.r_max},
                            {"coarse_eigenvalue", pair.mesh.coarse_eigenvalue},
                            {"tail_truncated", pair.mesh.tail_truncated},
                            {"decay_window", {pair.decay_window_lo, pair.decay_window_hi}}};
      const auto run = eigen_blowup_run(prob.potential, pair, prob.phi, prob.psi, prob.nonlinearity.A,
                                        prob.nonlinearity.p, opt);
      detail::write_jsonl(ctx, out, "eigen.jsonl", eig);
      {
        detail::OutputFile f(ctx, out, "trajectory.csv");
        write_eigen_trajectory_csv(*f, run);
      }
      out.summary = {{"problem", prob.describe()},
                     {"eigen", eig},
                     {"detected_T", run.detected_T ? nlohmann::json(*run.detected_T) : nlohmann::json(nullptr)},
                     {"f_increasing", run.f_increasing},
                     {"holder_holds", run.holder_holds},
                     {"ode_inequality_holds", run.ode_inequality_holds},
                     {"min_ode_slack", run.min_ode_slack},
                     {"lambda", run.lambda},
                     {"c", run.c}};
      out.tolerances = {{"ode_tol", opt.ode_tol}, {"bound_tol", SpectralOptions{}.bound_tol}, {"dr", opt.fd.dr}};
      detail::write_jsonl(ctx, out, "spectral_blowup.jsonl", out.summary);
      return out;
    };
  } else if (command == "positivity-scan") {
    const long n = c.get_int("n");
    if (n < 2 || n > 64) throw ValidationError("n", "must lie in [2, 64]");
    const long samples = detail::at_least(c, "samples", 500, 1);
    const double R = detail::positive(c, "R", 1.0), t_max = detail::positive(c, "t_max", 5.0), span = detail::positive(c, "span", 2.0);
    const int bumps = static_cast<int>(detail::at_least(c, "bumps", 3, 1));
    const double floor = c.get_double("negativity_tol", -1e-9);
    const auto q = detail::quadrature_from_config(c, ctx.tol_scale);
    c.reject_unused();
    run = [=] {
      ExperimentOutput out;
      out.tolerances = detail::quadrature_json(q);
      out.tolerances["negativity_tol"] = floor;
      const auto scan = positivity_scan(static_cast<int>(n), static_cast<size_t>(samples), R, t_max, span, bumps, ctx.seed,
                                        q, ctx.jobs);
      const double beta = scan.beta_n;
      double vmin = std::numeric_limits<double>::infinity();
      long negatives = 0;
      {
        detail::OutputFile f(ctx, out, "positivity.csv");
        *f << "sample,r,t,value\n";
        for (long s = 0; s < samples; ++s) {
          const auto& x = scan.samples[s];
          *f << s << ',' << x.r << ',' << x.t << ',' << x.value << '\n';
          vmin = std::min(vmin, x.value);
          if (x.value < floor) ++negatives;
        }
      }
      out.summary = {{"n", n}, {"beta_n", beta}, {"samples", samples}, {"min_value", vmin}, {"below_tolerance", negatives}};
      detail::write_jsonl(ctx, out, "positivity.jsonl", out.summary);
      return out;
    };
  }
  return run;
}

}  // namespace radiant
