#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "radiant/error.hpp"
#include "radiant/problem.hpp"

namespace radiant {

/// Flat `key = value` configuration with `#` comments. Every typed read marks
/// the key as used so that leftovers can be reported as unknown.
class Config {
 public:
  static Config parse(std::istream& is) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ValidationError("line " + std::to_string(lineno), "expected `key = value`");
      const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
      if (key.empty()) throw ValidationError("line " + std::to_string(lineno), "empty key");
      if (!c.entries_.emplace(key, value).second) throw ValidationError(key, "duplicate key");
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static Config load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("config", "cannot open " + path);
    return parse(is);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (!fallback) throw ValidationError(key, "missing required key");
      return *fallback;
    }
    if (it->second.empty()) throw ValidationError(key, "empty value");
    return it->second;
  }

  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (!fallback) throw ValidationError(key, "missing required key");
      return *fallback;
    }
    return to_double(key, it->second);
  }

  long get_int(const std::string& key, std::optional<long> fallback = std::nullopt) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (!fallback) throw ValidationError(key, "missing required key");
      return *fallback;
    }
    long v = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError(key, "expected an integer, got \"" + s + "\"");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ValidationError(key, "expected true or false");
  }

  std::vector<double> get_list(const std::string& key) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ValidationError(key, "missing required key");
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ValidationError(key, "empty list");
    return out;
  }

  /// Throws for the first key that no reader asked for.
  void reject_unused() const {
    for (const auto& [key, value] : entries_)
      if (!used_.count(key)) throw ValidationError(key, "unknown key");
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw ValidationError(key, "expected a number, got \"" + s + "\"");
    return v;
  }

  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

/// Multiplier for default tolerances from RADIANT_TOL_SCALE (1 when unset).
inline double tolerance_scale() {
  const char* env = std::getenv("RADIANT_TOL_SCALE");
  if (!env || !*env) return 1.0;
  const std::string s = env;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !(v > 0.0))
    throw ValidationError("RADIANT_TOL_SCALE", "must be a positive number");
  return v;
}

namespace detail {

inline RadialProfile data_profile(const Config& c, const std::string& which, double k) {
  const std::string kind = c.get_string(which, "zero");
  if (kind == "zero") return RadialProfile::zero();
  if (kind == "one") return RadialProfile::analytic([](double) { return 1.0; }, [](double) { return 0.0; });
  if (kind == "decay") return data::decay_velocity(k);
  if (kind == "bump") {
    const double lo = c.get_double(which + "_lo", 0.0), hi = c.get_double(which + "_hi", 2.0);
    if (!(lo >= 0.0)) throw ValidationError(which + "_lo", "must be non-negative");
    if (!(hi > lo)) throw ValidationError(which + "_hi", "must exceed " + which + "_lo");
    return data::bump(lo, hi);
  }
  throw ValidationError(which, "expected one of zero, one, decay, bump");
}

}  // namespace detail

/// Potential from the keys potential, V0, kappa, sign, radius, potential_scale.
inline PotentialSpec potential_from_config(const Config& c) {
  const std::string kind = c.get_string("potential", "zero");
  PotentialSpec v;
  if (kind == "zero") {
    v = PotentialSpec::zero();
  } else if (kind == "power-tail") {
    v = PotentialSpec::power_tail(c.get_double("V0"), c.get_double("kappa", 3.0), static_cast<int>(c.get_int("sign", 1)));
  } else if (kind == "compact-bump") {
    v = PotentialSpec::compact_bump(c.get_double("V0"), c.get_double("radius", 1.0),
                                    static_cast<int>(c.get_int("sign", 1)));
  } else if (kind == "square-well") {
    v = PotentialSpec::square_well(c.get_double("V0"), c.get_double("radius", 1.0));
  } else {
    throw ValidationError("potential", "expected one of zero, power-tail, compact-bump, square-well");
  }
  v = v.scaled(c.get_double("potential_scale", 1.0));
  v.validate();
  return v;
}

/// ProblemSpec from the flat keys n, nonlinearity, A, p, potential..., phi,
/// psi, epsilon, k, T. The nonlinearity defaults to power when p is present.
inline ProblemSpec problem_from_config(const Config& c) {
  ProblemSpec prob;
  const long n = c.get_int("n");
  if (n < 2 || n > 64) throw ValidationError("n", "must lie in [2, 64]");
  prob.dims = DimensionParams::of(static_cast<int>(n));
  const std::string nl = c.get_string("nonlinearity", c.has("p") ? "power" : "zero");
  if (nl == "zero") {
    prob.nonlinearity = Nonlinearity::zero();
  } else if (nl == "power" || nl == "signed") {
    const double A = c.get_double("A", 1.0), p = c.get_double("p");
    prob.nonlinearity = nl == "power" ? Nonlinearity::power(A, p) : Nonlinearity::signed_power(A, p);
  } else {
    throw ValidationError("nonlinearity", "expected one of power, signed, zero");
  }
  prob.potential = potential_from_config(c);
  prob.k = c.get_double("k", 0.0);
  prob.epsilon = c.get_double("epsilon", 1.0);
  prob.horizon_T = c.get_double("T", 1.0);
  prob.phi = detail::data_profile(c, "phi", prob.k);
  prob.psi = detail::data_profile(c, "psi", prob.k);
  prob.data_label = c.get_string("phi", "zero") + "/" + c.get_string("psi", "zero");
  prob.validate();
  return prob;
}

}  // namespace radiant
