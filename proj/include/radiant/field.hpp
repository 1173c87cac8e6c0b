#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "radiant/error.hpp"
#include "radiant/parallel.hpp"

namespace radiant {

/// Grid on [lo, hi] with n points, denser toward lo for bias > 0:
/// x_i = lo + (hi - lo) (e^{bias s} - 1)/(e^{bias} - 1), s = i/(n-1).
inline std::vector<double> biased_grid(double lo, double hi, int n, double bias = 0.0) {
  if (n < 2 || !(hi > lo)) throw DomainError("biased_grid: need n >= 2 and hi > lo");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    x[i] = bias == 0.0 ? lo + (hi - lo) * s : lo + (hi - lo) * std::expm1(bias * s) / std::expm1(bias);
  }
  x.back() = hi;
  return x;
}

namespace detail {

/// Weights of the derivative at x[i] from the 3-point (nonuniform) stencil.
inline void three_point_derivative(const std::vector<double>& x, const double* f, double* df, size_t stride) {
  const size_t n = x.size();
  if (n == 2) {
    const double s = (f[stride] - f[0]) / (x[1] - x[0]);
    df[0] = df[stride] = s;
    return;
  }
  for (size_t i = 0; i < n; ++i) {
    size_t c = std::clamp<size_t>(i, 1, n - 2);
    const double x0 = x[c - 1], x1 = x[c], x2 = x[c + 1];
    const double xi = x[i];
    // Derivative of the quadratic through the three points, evaluated at xi.
    const double w0 = (2 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const double w1 = (2 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const double w2 = (2 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1));
    df[i * stride] = w0 * f[(c - 1) * stride] + w1 * f[c * stride] + w2 * f[(c + 1) * stride];
  }
}

/// Lagrange weights on up to four nodes starting at x[k0].
inline int lagrange_weights(const std::vector<double>& x, double t, std::array<double, 4>& w, size_t& k0) {
  const size_t n = x.size();
  const int width = static_cast<int>(std::min<size_t>(4, n));
  size_t cell = static_cast<size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  cell = cell == 0 ? 0 : cell - 1;
  const size_t lo = cell >= 1 ? cell - 1 : 0;
  k0 = std::min(lo, n - width);
  for (int a = 0; a < width; ++a) {
    double v = 1.0;
    for (int b = 0; b < width; ++b)
      if (b != a) v *= (t - x[k0 + b]) / (x[k0 + a] - x[k0 + b]);
    w[a] = v;
  }
  return width;
}

}  // namespace detail

/// Values of u(r,t) and u_r on a tensor grid, stored row-major by time
/// slice. Interpolation is cubic Hermite in r (using the stored r
/// derivative) and four-point Lagrange in t. Below r_grid.front() the field
/// is continued as a constant in r. Beyond r_grid.back() it either raises a
/// coverage error or vanishes, depending on the extension rule. When a
/// causal limit R is set, values are only trusted where r + t <= R.
class SpacetimeField {
 public:
  enum class Extension { Strict, Zero };

  SpacetimeField() = default;

  SpacetimeField(std::vector<double> r_grid, std::vector<double> t_grid, std::vector<double> values,
                 std::optional<double> causal_limit = std::nullopt, Extension extension = Extension::Strict)
      : r_(std::move(r_grid)), t_(std::move(t_grid)), u_(std::move(values)), causal_(causal_limit),
        extension_(extension) {
    check_grid(r_, "r_grid");
    check_grid(t_, "t_grid");
    if (u_.size() != r_.size() * t_.size()) throw DomainError("SpacetimeField: table size does not match grids");
    for (double v : u_)
      if (!std::isfinite(v)) throw NonFiniteError("SpacetimeField: non-finite value");
    recompute_derivative();
  }

  template <class F>
  static SpacetimeField sample(std::vector<double> r_grid, std::vector<double> t_grid, F&& fn,
                               std::optional<double> causal_limit = std::nullopt,
                               Extension extension = Extension::Strict, int jobs = 1) {
    std::vector<double> values(r_grid.size() * t_grid.size());
    const size_t nr = r_grid.size();
    parallel_for(values.size(), jobs, [&](size_t idx) { values[idx] = fn(r_grid[idx % nr], t_grid[idx / nr]); });
    return SpacetimeField(std::move(r_grid), std::move(t_grid), std::move(values), causal_limit, extension);
  }

  size_t nr() const { return r_.size(); }
  size_t nt() const { return t_.size(); }
  const std::vector<double>& r_grid() const { return r_; }
  const std::vector<double>& t_grid() const { return t_; }
  const std::vector<double>& values() const { return u_; }
  const std::vector<double>& r_derivatives() const { return ur_; }
  double value(size_t it, size_t ir) const { return u_[it * nr() + ir]; }
  double r_derivative(size_t it, size_t ir) const { return ur_[it * nr() + ir]; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  double t_max() const { return t_.back(); }

  std::optional<double> causal_limit() const { return causal_; }
  Extension extension() const { return extension_; }
  void set_extension(Extension e) { extension_ = e; }
  void set_causal_limit(std::optional<double> limit) { causal_ = limit; }

  bool is_valid(double r, double t) const { return !causal_ || r + t <= *causal_ * (1.0 + 1e-12); }
  bool node_valid(size_t it, size_t ir) const { return is_valid(r_[ir], t_[it]); }

  /// Cubic Hermite value (or derivative) of slice `it` at radius r.
  double slice_value(size_t it, double r, bool derivative = false) const {
    if (r > r_.back()) {
      if (r <= r_.back() * (1.0 + 1e-12)) {
        r = r_.back();
      } else {
        if (extension_ == Extension::Zero) return 0.0;
        throw CoverageError("SpacetimeField: r = " + std::to_string(r) + " beyond r_max");
      }
    }
    if (r <= r_.front()) return derivative ? 0.0 : value(it, 0);
    const size_t i = cell(r);
    const double h = r_[i + 1] - r_[i];
    const double s = (r - r_[i]) / h;
    const double y0 = value(it, i), y1 = value(it, i + 1);
    const double d0 = r_derivative(it, i), d1 = r_derivative(it, i + 1);
    const double s2 = s * s, s3 = s2 * s;
    if (derivative) {
      return ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1;
    }
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
  }

  double operator()(double r, double t) const { return interpolate(r, t, false); }
  double dr(double r, double t) const { return interpolate(r, t, true); }

  /// Index i with r_grid[i] <= r < r_grid[i+1] (clamped to the last cell).
  size_t cell(double r) const {
    size_t i = static_cast<size_t>(std::upper_bound(r_.begin(), r_.end(), r) - r_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, r_.size() - 2);
  }

  /// Lagrange weights in t; returns the stencil width and first index.
  int time_stencil(double t, std::array<double, 4>& w, size_t& k0) const {
    check_time(t);
    return detail::lagrange_weights(t_, std::clamp(t, t_.front(), t_.back()), w, k0);
  }

  SpacetimeField map(const auto& fn) const {
    SpacetimeField out = *this;
    for (size_t it = 0; it < nt(); ++it)
      for (size_t ir = 0; ir < nr(); ++ir) out.u_[it * nr() + ir] = fn(r_[ir], t_[it], value(it, ir));
    out.recompute_derivative();
    return out;
  }

  SpacetimeField operator-(const SpacetimeField& o) const {
    same_grid(o);
    SpacetimeField out = *this;
    for (size_t i = 0; i < u_.size(); ++i) {
      out.u_[i] -= o.u_[i];
      out.ur_[i] -= o.ur_[i];
    }
    return out;
  }

  SpacetimeField scaled(double c) const {
    SpacetimeField out = *this;
    for (auto& v : out.u_) v *= c;
    for (auto& v : out.ur_) v *= c;
    return out;
  }

  void write_csv(std::ostream& os, const std::string& header) const {
    os << "# " << header << "\n";
    os << "r,t,u,u_r\n";
    os.precision(17);
    for (size_t it = 0; it < nt(); ++it)
      for (size_t ir = 0; ir < nr(); ++ir)
        os << r_[ir] << ',' << t_[it] << ',' << value(it, ir) << ',' << r_derivative(it, ir) << '\n';
  }

  /// Reads the format of write_csv; the header text is returned through `header`.
  static SpacetimeField read_csv(std::istream& is, std::string* header = nullptr) {
    std::string line;
    std::map<double, std::map<double, double>> rows;  // t -> r -> u
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (header) *header = line.size() > 2 ? line.substr(2) : "";
        continue;
      }
      if (line.rfind("r,", 0) == 0) continue;
      std::istringstream ls(line);
      double r, t, u;
      char c;
      if (!(ls >> r >> c >> t >> c >> u)) throw DomainError("SpacetimeField::read_csv: malformed row");
      rows[t][r] = u;
    }
    if (rows.empty()) throw DomainError("SpacetimeField::read_csv: no rows");
    std::vector<double> tg, rg, vals;
    for (auto& [r, u] : rows.begin()->second) rg.push_back(r);
    for (auto& [t, row] : rows) {
      tg.push_back(t);
      if (row.size() != rg.size()) throw DomainError("SpacetimeField::read_csv: ragged table");
      for (auto& [r, u] : row) vals.push_back(u);
    }
    return SpacetimeField(std::move(rg), std::move(tg), std::move(vals));
  }

 private:
  static void check_grid(const std::vector<double>& g, const char* name) {
    if (g.empty()) throw DomainError(std::string("SpacetimeField: empty ") + name);
    for (size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) throw DomainError(std::string("SpacetimeField: ") + name + " not strictly increasing");
  }

  void check_time(double t) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(t_.back()));
    if (t < t_.front() - slack || t > t_.back() + slack)
      throw CoverageError("SpacetimeField: t = " + std::to_string(t) + " outside the time grid");
  }

  void same_grid(const SpacetimeField& o) const {
    if (r_ != o.r_ || t_ != o.t_) throw DomainError("SpacetimeField: grids differ");
  }

  void recompute_derivative() {
    ur_.assign(u_.size(), 0.0);
    if (r_.size() < 2) return;
    for (size_t it = 0; it < nt(); ++it) detail::three_point_derivative(r_, &u_[it * nr()], &ur_[it * nr()], 1);
  }

  double interpolate(double r, double t, bool derivative) const {
    if (r_.size() < 2) throw DomainError("SpacetimeField: interpolation needs two radial nodes");
    std::array<double, 4> w{};
    size_t k0 = 0;
    const int width = time_stencil(t, w, k0);
    double v = 0.0;
    for (int a = 0; a < width; ++a) v += w[a] * slice_value(k0 + a, r, derivative);
    return v;
  }

  std::vector<double> r_, t_, u_, ur_;
  std::optional<double> causal_;
  Extension extension_ = Extension::Strict;
};

}  // namespace radiant
