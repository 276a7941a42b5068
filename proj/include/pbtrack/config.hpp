// Run configuration: a flat `key = value` text format with `#` comments and
// dotted sections, e.g.
//
//   system = two_link
//   path = circle
//   path.center = 0.5, 1.0
//   gains.kappa = 5.0
//
// Parsing collects every syntax and semantic error before failing.
#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pbtrack/models.hpp"
#include "pbtrack/path.hpp"
#include "pbtrack/reference.hpp"
#include "pbtrack/sim.hpp"
#include "pbtrack/sync.hpp"

namespace pbtrack {

enum class SystemKind { point_mass, two_link, external };
enum class PathKind { circle, line, parabola, csv };
enum class InitialPreset { standard, on_reference };

struct RunConfig {
  SystemKind system = SystemKind::point_mass;
  // point_mass
  double mass = 1.0;
  int dim = 2;
  double gravity = 0.0;
  // two_link
  TwoLinkParams two_link;
  // external
  std::string external_name;

  PathKind path = PathKind::circle;
  std::string path_file;  // csv paths, resolved against the config directory
  std::vector<double> center;  // empty: origin
  double radius = 1.0;
  double omega = 1.0;
  double phase = 0.0;
  std::optional<std::vector<double>> origin;
  std::optional<std::vector<double>> velocity;
  std::optional<std::vector<double>> accel;
  double s_min = 0.0;
  double s_max = 20.0;
  std::optional<Extension> extension;  // default depends on the path kind
  double beta = kDefaultBeta;

  CouplingGains gains;
  double pump_k = kDefaultPumpGain;
  ControllerMode controller = ControllerMode::theorem1_pump;
  BaselineGains baseline;
  double step = 1e-3;
  double horizon = 20.0;

  InitialPreset initial = InitialPreset::standard;
  double t0 = 0.3;  // offset used by the on-reference start and by `verify`
  std::optional<std::vector<double>> init_q;
  std::optional<std::vector<double>> init_qdot;
  std::optional<double> init_s;
  std::optional<double> init_sdot;
  std::optional<double> init_sigma;

  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return config.has_value(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (errno == ERANGE || end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<std::vector<double>> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto v = parse_double(cell);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::point_mass: return "point_mass";
    case SystemKind::two_link: return "two_link";
    case SystemKind::external: return "external";
  }
  return "?";
}

inline const char* to_string(InitialPreset p) {
  return p == InitialPreset::standard ? "standard" : "on_reference";
}

inline std::optional<Extension> parse_extension(const std::string& v) {
  if (v == "clamp") return Extension::clamp;
  if (v == "linear-extrapolate" || v == "extrapolate") return Extension::extrapolate;
  if (v == "periodic") return Extension::periodic;
  return std::nullopt;
}

}  // namespace detail

/// Canonical text form. Numbers carry 17 significant digits so that
/// parse_config(serialize_config(c)) reproduces c exactly.
inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "system = " << detail::to_string(c.system) << '\n';
  switch (c.system) {
    case SystemKind::point_mass:
      o << "system.mass = " << fmt(c.mass) << '\n'
        << "system.dim = " << c.dim << '\n'
        << "system.gravity = " << fmt(c.gravity) << '\n';
      break;
    case SystemKind::two_link: {
      const auto& p = c.two_link;
      o << "system.m1 = " << fmt(p.m1) << "\nsystem.m2 = " << fmt(p.m2) << "\nsystem.l1 = " << fmt(p.l1)
        << "\nsystem.l2 = " << fmt(p.l2) << "\nsystem.lc1 = " << fmt(p.lc1) << "\nsystem.lc2 = " << fmt(p.lc2)
        << "\nsystem.I1 = " << fmt(p.I1) << "\nsystem.I2 = " << fmt(p.I2) << "\nsystem.g = " << fmt(p.g) << '\n';
      break;
    }
    case SystemKind::external:
      o << "system.name = " << c.external_name << '\n';
      break;
  }
  switch (c.path) {
    case PathKind::circle:
      o << "path = circle\n";
      if (!c.center.empty()) o << "path.center = " << fmt(c.center) << '\n';
      o << "path.radius = " << fmt(c.radius) << "\npath.omega = " << fmt(c.omega) << "\npath.phase = "
        << fmt(c.phase) << '\n';
      break;
    case PathKind::line:
    case PathKind::parabola:
      o << "path = " << (c.path == PathKind::line ? "line" : "parabola") << '\n';
      if (c.origin) o << "path.origin = " << fmt(*c.origin) << '\n';
      if (c.velocity) o << "path.velocity = " << fmt(*c.velocity) << '\n';
      if (c.accel) o << "path.accel = " << fmt(*c.accel) << '\n';
      o << "path.s_min = " << fmt(c.s_min) << "\npath.s_max = " << fmt(c.s_max) << '\n';
      break;
    case PathKind::csv:
      o << "path = csv:" << c.path_file << '\n';
      break;
  }
  if (c.extension) o << "path.extension = " << to_string(*c.extension) << '\n';
  o << "path.beta = " << fmt(c.beta) << '\n';
  o << "gains.spring_K = " << fmt(c.gains.spring_K) << "\ngains.kappa = " << fmt(c.gains.kappa)
    << "\ngains.damping_R = " << fmt(c.gains.damping_R) << '\n';
  o << "pump_k = " << fmt(c.pump_k) << '\n';
  o << "controller = " << to_string(c.controller) << '\n';
  o << "baseline.kp = " << fmt(c.baseline.kp) << "\nbaseline.kd = " << fmt(c.baseline.kd) << '\n';
  o << "integrator.step = " << fmt(c.step) << "\nintegrator.horizon = " << fmt(c.horizon) << '\n';
  o << "initial = " << detail::to_string(c.initial) << "\ninitial.t0 = " << fmt(c.t0) << '\n';
  if (c.init_q) o << "initial.q = " << fmt(*c.init_q) << '\n';
  if (c.init_qdot) o << "initial.qdot = " << fmt(*c.init_qdot) << '\n';
  if (c.init_s) o << "initial.s = " << fmt(*c.init_s) << '\n';
  if (c.init_sdot) o << "initial.sdot = " << fmt(*c.init_sdot) << '\n';
  if (c.init_sigma) o << "initial.sigma = " << fmt(*c.init_sigma) << '\n';
  o << "output.dir = " << c.output_dir << '\n';
  return o.str();
}

/// FNV-1a hash of the canonical form, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Parses and validates a configuration. Relative csv path files are
/// resolved against `base_dir`.
inline ParseResult parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  ParseResult result;
  auto& errors = result.errors;
  RunConfig c;

  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(line_no) + ": syntax error, expected `key = value`");
        continue;
      }
      const std::string key = detail::trim(t.substr(0, eq));
      const std::string value = detail::trim(t.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
        errors.push_back("line " + std::to_string(line_no) + ": syntax error, bad key '" + key + "'");
        continue;
      }
      if (value.empty()) {
        errors.push_back("line " + std::to_string(line_no) + ": syntax error, empty value for '" + key + "'");
        continue;
      }
      if (auto it = entries.find(key); it != entries.end()) {
        errors.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                         std::to_string(it->second.second) + ")");
        continue;
      }
      entries.emplace(key, std::make_pair(value, line_no));
    }
  }

  std::set<std::string> used;
  auto where = [&](const std::string& key) { return "line " + std::to_string(entries.at(key).second) + ": "; };
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    used.insert(key);
    return it->second.first;
  };
  auto num = [&](const std::string& key, double& dst) {
    if (auto v = take(key)) {
      if (auto d = detail::parse_double(*v)) dst = *d;
      else errors.push_back(where(key) + "'" + key + "' expects a number, got '" + *v + "'");
    }
  };
  auto opt_num = [&](const std::string& key, std::optional<double>& dst) {
    if (auto v = take(key)) {
      if (auto d = detail::parse_double(*v)) dst = *d;
      else errors.push_back(where(key) + "'" + key + "' expects a number, got '" + *v + "'");
    }
  };
  auto vec = [&](const std::string& key, std::optional<std::vector<double>>& dst) {
    if (auto v = take(key)) {
      if (auto d = detail::parse_vector(*v)) dst = *d;
      else errors.push_back(where(key) + "'" + key + "' expects comma-separated numbers, got '" + *v + "'");
    }
  };

  if (auto v = take("system")) {
    if (*v == "point_mass") c.system = SystemKind::point_mass;
    else if (*v == "two_link") c.system = SystemKind::two_link;
    else if (*v == "external") c.system = SystemKind::external;
    else errors.push_back(where("system") + "unknown system '" + *v + "' (point_mass | two_link | external)");
  }
  if (c.system == SystemKind::point_mass) {
    num("system.mass", c.mass);
    double dim = c.dim;
    num("system.dim", dim);
    if (dim != std::floor(dim) || dim < 1 || dim > 64) errors.push_back("system.dim must be an integer in [1, 64]");
    else c.dim = static_cast<int>(dim);
    num("system.gravity", c.gravity);
    if (!(c.mass > 0)) errors.push_back("system.mass must be positive");
  } else if (c.system == SystemKind::two_link) {
    auto& p = c.two_link;
    num("system.m1", p.m1);
    num("system.m2", p.m2);
    num("system.l1", p.l1);
    num("system.l2", p.l2);
    num("system.lc1", p.lc1);
    num("system.lc2", p.lc2);
    num("system.I1", p.I1);
    num("system.I2", p.I2);
    num("system.g", p.g);
    if (!(p.m1 > 0 && p.m2 > 0 && p.l1 > 0 && p.l2 > 0)) errors.push_back("two-link masses and lengths must be positive");
    if (!(p.lc1 >= 0 && p.lc2 >= 0 && p.I1 >= 0 && p.I2 >= 0))
      errors.push_back("two-link centre-of-mass offsets and inertias must be non-negative");
  } else {
    if (auto v = take("system.name")) c.external_name = *v;
    else errors.push_back("system = external requires system.name");
  }

  if (auto v = take("path")) {
    if (*v == "circle") c.path = PathKind::circle;
    else if (*v == "line") c.path = PathKind::line;
    else if (*v == "parabola") c.path = PathKind::parabola;
    else if (v->rfind("csv:", 0) == 0 && v->size() > 4) {
      c.path = PathKind::csv;
      c.path_file = detail::trim(v->substr(4));
      std::filesystem::path file(c.path_file);
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      if (!std::filesystem::exists(file)) errors.push_back(where("path") + "path file '" + file.string() + "' does not exist");
    } else {
      errors.push_back(where("path") + "unknown path '" + *v + "' (circle | line | parabola | csv:<file>)");
    }
  }
  if (c.path == PathKind::circle) {
    std::optional<std::vector<double>> center;
    vec("path.center", center);
    if (center) c.center = *center;
    num("path.radius", c.radius);
    num("path.omega", c.omega);
    num("path.phase", c.phase);
    if (!(c.radius > 0)) errors.push_back("path.radius must be positive");
    if (c.omega == 0) errors.push_back("path.omega must be non-zero");
  } else if (c.path == PathKind::line || c.path == PathKind::parabola) {
    vec("path.origin", c.origin);
    vec("path.velocity", c.velocity);
    vec("path.accel", c.accel);
    num("path.s_min", c.s_min);
    num("path.s_max", c.s_max);
    if (!(c.s_max > c.s_min)) errors.push_back("path.s_max must exceed path.s_min");
    if (c.path == PathKind::line && c.accel && std::any_of(c.accel->begin(), c.accel->end(), [](double a) { return a != 0.0; }))
      errors.push_back("path.accel must be zero for a line (use path = parabola)");
  }
  if (auto v = take("path.extension")) {
    if (auto e = detail::parse_extension(*v)) c.extension = *e;
    else errors.push_back(where("path.extension") + "unknown extension '" + *v + "' (clamp | linear-extrapolate | periodic)");
  }
  if (c.extension == Extension::periodic && (c.path == PathKind::line || c.path == PathKind::parabola))
    errors.push_back("path.extension = periodic is only valid for circle and csv paths");
  if (c.path == PathKind::circle && c.extension && *c.extension != Extension::periodic)
    errors.push_back("circle paths are periodic; path.extension must be periodic");
  num("path.beta", c.beta);
  if (!(c.beta > 0)) errors.push_back("path.beta must be positive");

  num("gains.spring_K", c.gains.spring_K);
  num("gains.kappa", c.gains.kappa);
  num("gains.damping_R", c.gains.damping_R);
  if (!(c.gains.spring_K > 0)) errors.push_back("gains.spring_K must be positive (phi must be positive definite)");
  if (!(c.gains.kappa > 0))
    errors.push_back("gains.kappa must be positive: the synchronising interconnection requires kappa > 0 and R > 0");
  if (!(c.gains.damping_R > 0))
    errors.push_back("gains.damping_R must be positive: the synchronising interconnection requires kappa > 0 and R > 0");
  num("pump_k", c.pump_k);
  if (!(c.pump_k >= 0)) errors.push_back("pump_k must be >= 0");
  if (auto v = take("controller")) {
    if (auto m = parse_controller(*v)) c.controller = *m;
    else errors.push_back(where("controller") + "unknown controller '" + *v +
                          "' (theorem1 | theorem1+pump | computed_torque | open_loop)");
  }
  num("baseline.kp", c.baseline.kp);
  num("baseline.kd", c.baseline.kd);
  if (!(c.baseline.kp > 0 && c.baseline.kd > 0)) errors.push_back("baseline.kp and baseline.kd must be positive");
  num("integrator.step", c.step);
  num("integrator.horizon", c.horizon);
  if (!(c.step > 0)) errors.push_back("integrator.step must be positive");
  if (!(c.horizon >= c.step)) errors.push_back("integrator.horizon must be >= integrator.step");

  if (auto v = take("initial")) {
    if (*v == "standard") c.initial = InitialPreset::standard;
    else if (*v == "on_reference") c.initial = InitialPreset::on_reference;
    else errors.push_back(where("initial") + "unknown initial preset '" + *v + "' (standard | on_reference)");
  }
  num("initial.t0", c.t0);
  vec("initial.q", c.init_q);
  vec("initial.qdot", c.init_qdot);
  opt_num("initial.s", c.init_s);
  opt_num("initial.sdot", c.init_sdot);
  opt_num("initial.sigma", c.init_sigma);
  if (auto v = take("output.dir")) c.output_dir = *v;

  for (const auto& [key, entry] : entries) {
    if (!used.count(key)) errors.push_back("line " + std::to_string(entry.second) + ": unknown key '" + key + "'");
  }

  const std::size_t n = c.system == SystemKind::two_link ? 2 : static_cast<std::size_t>(c.dim);
  if (c.system != SystemKind::external) {
    auto check_len = [&](const char* key, const std::optional<std::vector<double>>& v) {
      if (v && v->size() != n) errors.push_back(std::string(key) + " has " + std::to_string(v->size()) +
                                                " entries, system dimension is " + std::to_string(n));
    };
    if (c.path == PathKind::circle) {
      if (n < 2) errors.push_back("circle paths need a system of dimension >= 2");
      if (!c.center.empty() && c.center.size() != n) errors.push_back("path.center length does not match the system dimension");
    }
    check_len("path.origin", c.origin);
    check_len("path.velocity", c.velocity);
    check_len("path.accel", c.accel);
    check_len("initial.q", c.init_q);
    check_len("initial.qdot", c.init_qdot);
  }

  if (errors.empty()) result.config = c;
  return result;
}

inline RunConfig parse_config_or_throw(const std::string& text, const std::filesystem::path& base_dir = {}) {
  auto r = parse_config(text, base_dir);
  if (!r.ok()) {
    std::string all;
    for (const auto& e : r.errors) all += "\n  " + e;
    throw Error(ErrorKind::config, "invalid configuration:" + all);
  }
  return *r.config;
}

// ---------------------------------------------------------------------------
// Scenario assembly

/// Factories for `system = external` models, keyed by system.name.
using ModelRegistry = std::map<std::string, std::function<ModelPtr(const RunConfig&)>>;

inline ModelPtr build_model(const RunConfig& c, const ModelRegistry& registry = {}) {
  switch (c.system) {
    case SystemKind::point_mass: return std::make_shared<PointMass>(c.mass, c.dim, c.gravity);
    case SystemKind::two_link: return std::make_shared<TwoLinkArm>(c.two_link);
    case SystemKind::external: {
      auto it = registry.find(c.external_name);
      require(it != registry.end(), ErrorKind::config, "no external model registered as '" + c.external_name + "'");
      return it->second(c);
    }
  }
  throw Error(ErrorKind::config, "unknown system");
}

inline PathPtr build_path(const RunConfig& c, Eigen::Index n, const std::filesystem::path& base_dir = {}) {
  switch (c.path) {
    case PathKind::circle: {
      const Vector center = c.center.empty() ? Vector::Zero(n) : detail::to_vector(c.center);
      return std::make_shared<CirclePath>(center, c.radius, c.omega, c.phase);
    }
    case PathKind::line:
    case PathKind::parabola: {
      Vector e1 = Vector::Zero(n);
      e1(0) = 1.0;
      const Vector origin = c.origin ? detail::to_vector(*c.origin) : Vector::Zero(n);
      const bool line = c.path == PathKind::line;
      const Vector velocity = c.velocity ? detail::to_vector(*c.velocity) : (line ? e1 : Vector::Zero(n));
      const Vector accel = c.accel ? detail::to_vector(*c.accel) : (line ? Vector::Zero(n) : e1);
      return std::make_shared<PolynomialPath>(
          origin, velocity, accel, PathDomain{c.s_min, c.s_max, c.extension.value_or(Extension::extrapolate)});
    }
    case PathKind::csv: {
      std::filesystem::path file(c.path_file);
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      return std::make_shared<SplinePath>(read_path_csv_file(file.string()), c.extension.value_or(Extension::clamp));
    }
  }
  throw Error(ErrorKind::config, "unknown path");
}

inline Scenario build_scenario(const RunConfig& c, const ModelRegistry& registry = {},
                               const std::filesystem::path& base_dir = {}) {
  const ModelPtr model = build_model(c, registry);
  const PathPtr path = build_path(c, model->dim(), base_dir);
  Scenario sc;
  sc.rm = std::make_shared<ReducedModel>(model, path, c.beta);
  sc.gains = c.gains;
  sc.pump_k = c.pump_k;
  sc.controller = c.controller;
  sc.baseline = c.baseline;
  sc.step = c.step;
  sc.horizon = c.horizon;
  const double s0 = c.path == PathKind::circle || c.path == PathKind::csv ? path->domain().lo : c.s_min;
  sc.initial = c.initial == InitialPreset::standard ? standard_perturbation(*sc.rm, s0) : on_reference(*sc.rm, c.t0);
  if (c.init_q) sc.initial.q = detail::to_vector(*c.init_q);
  if (c.init_qdot) sc.initial.qdot = detail::to_vector(*c.init_qdot);
  if (c.init_s) sc.initial.s = *c.init_s;
  if (c.init_sdot) sc.initial.sdot = *c.init_sdot;
  if (c.init_sigma) sc.initial.sigma = *c.init_sigma;
  sc.validate();
  return sc;
}

}  // namespace pbtrack
