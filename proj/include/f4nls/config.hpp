#pragma once

// JSON run configuration and command dispatch for the f4nls driver.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "f4nls/analysis.hpp"
#include "f4nls/error.hpp"
#include "f4nls/experiments.hpp"
#include "f4nls/integrators.hpp"
#include "f4nls/parallel.hpp"
#include "f4nls/report_io.hpp"

namespace f4nls {

using json = nlohmann::ordered_json;

enum class Command { evolve, decay, picard, selfsim, eps_limit, radial, norms };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::evolve: return "evolve";
    case Command::decay: return "decay";
    case Command::picard: return "picard";
    case Command::selfsim: return "selfsim";
    case Command::eps_limit: return "eps-limit";
    case Command::radial: return "radial";
    default: return "norms";
  }
}

/// Block name in the config file for the command-specific settings.
inline const char* block_name(Command c) {
  switch (c) {
    case Command::eps_limit: return "eps_limit";
    default: return to_string(c);
  }
}

enum ExitCode : int { exit_pass = 0, exit_verdict = 2, exit_config = 3, exit_numeric = 4, exit_io = 5 };

struct RunConfig {
  Command command = Command::evolve;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<GridSpec> grid;
  DispersionParams dispersion;
  NonlinearityParams nonlinearity;
  InitialSpec initial;

  EvolveConfig evolve;
  EvolveRunOptions evolve_run;
  std::vector<double> p_values;
  double t_lo = 0.0, t_hi = 0.0;
  DecayOptions decay;
  PicardConfig picard;
  PicardCertifyOptions certify;
  SelfSimOptions selfsim;
  std::vector<double> lambdas, times;
  EpsMode eps_mode = EpsMode::h2;
  std::vector<double> eps_list;
  double t_eval = 0.0;
  EpsLimitOptions eps;
  RadialOptions radial;

  /// Fully resolved config, defaults filled in; echoed by --dry-run and in summaries.
  json resolved;
};

namespace detail {

/// Reads one JSON object, filling defaults into it and recording every
/// problem instead of stopping at the first.
class Block {
 public:
  Block(json& obj, std::string path, std::vector<std::string>& errors) : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) {
      errors_.push_back(where("") + "must be an object");
      obj_ = json::object();
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) {
      obj_[key] = fallback;
      return fallback;
    }
    return read<T>(key, fallback);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) {
      errors_.push_back(where(key) + "is required");
      return T{};
    }
    return read<T>(key, T{});
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  json& child(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) obj_[key] = json::object();
    return obj_[key];
  }

  void allow(const std::string& key) { seen_.insert(key); }

  /// Reports every key that was never asked for.
  void reject_unknown() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(where(it.key()) + "unknown key");
  }

  std::string where(const std::string& key) const {
    std::string p = path_;
    if (!key.empty()) p += (p.empty() ? "" : ".") + key;
    return (p.empty() ? std::string("<root>") : p) + ": ";
  }

  void error(const std::string& key, const std::string& msg) { errors_.push_back(where(key) + msg); }

 private:
  template <class T>
  T read(const std::string& key, T fallback) {
    try {
      return obj_.at(key).template get<T>();
    } catch (const json::exception&) {
      errors_.push_back(where(key) + "has the wrong type (got " + std::string(obj_.at(key).type_name()) + ")");
      return fallback;
    }
  }

  json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid configuration:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::evolve, Command::decay, Command::picard, Command::selfsim, Command::eps_limit,
                    Command::radial, Command::norms})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

inline void read_grid(Block& root, RunConfig& rc, std::vector<std::string>& errors) {
  Block b(root.child("grid"), "grid", errors);
  const int ndim = b.require<int>("ndim");
  const auto pts = b.require<std::vector<int>>("points");
  const auto hw = b.require<std::vector<double>>("half_width");
  b.reject_unknown();
  if (pts.empty() || hw.empty()) return;
  try {
    rc.grid = make_grid(ndim, pts, hw);
  } catch (const DomainError& e) {
    errors.push_back(std::string("grid: ") + e.what());
  }
}

inline void read_dispersion(Block& root, RunConfig& rc, std::vector<std::string>& errors) {
  Block b(root.child("dispersion"), "dispersion", errors);
  rc.dispersion.epsilon = b.require<double>("epsilon");
  rc.dispersion.delta = b.require<double>("delta");
  const auto v = b.get<std::string>("variant", "isotropic");
  if (v == "isotropic")
    rc.dispersion.variant = Variant::isotropic;
  else if (v == "anisotropic")
    rc.dispersion.variant = Variant::anisotropic;
  else
    b.error("variant", "must be \"isotropic\" or \"anisotropic\"");
  rc.dispersion.d = b.get<int>("d", 0);
  b.reject_unknown();
}

inline void read_nonlinearity(Block& root, RunConfig& rc, std::vector<std::string>& errors) {
  Block b(root.child("nonlinearity"), "nonlinearity", errors);
  rc.nonlinearity.lambda = b.require<double>("lambda");
  rc.nonlinearity.alpha = b.require<double>("alpha");
  b.reject_unknown();
}

inline void read_initial(Block& root, RunConfig& rc, std::vector<std::string>& errors) {
  Block b(root.child("initial"), "initial", errors);
  InitialSpec& s = rc.initial;
  const auto kind = b.get<std::string>("kind", "gaussian");
  using K = InitialSpec::Kind;
  if (kind == "zero")
    s.kind = K::zero;
  else if (kind == "gaussian")
    s.kind = K::gaussian;
  else if (kind == "homogeneous")
    s.kind = K::homogeneous;
  else if (kind == "plane_wave")
    s.kind = K::plane_wave;
  else if (kind == "random")
    s.kind = K::random;
  else
    b.error("kind", "must be one of zero, gaussian, homogeneous, plane_wave, random");
  s.amplitude = b.get<double>("amplitude", 1.0);
  if (s.kind == K::gaussian) s.coefficients = b.get<std::vector<double>>("coefficients", {});
  if (s.kind == K::homogeneous) {
    s.exponent = b.get<double>("exponent", 2.0);
    s.mollify_radius = b.get<double>("mollify_radius", 0.0);
  }
  if (s.kind == K::plane_wave) s.modes = b.require<std::vector<int>>("modes");
  if (s.kind == K::random) {
    s.seed = b.get<std::uint64_t>("seed", rc.seed);
    s.band = b.get<int>("band", 0);
  }
  b.reject_unknown();
}

inline void read_evolve(Block& b, RunConfig& rc) {
  rc.evolve.dispersion = rc.dispersion;
  rc.evolve.nonlinearity = rc.nonlinearity;
  rc.evolve.dt = b.get<double>("dt", 1e-3);
  rc.evolve.t_end = b.require<double>("t_end");
  rc.evolve.snapshot_stride = b.get<int>("snapshot_stride", 1);
  rc.evolve.dealias_fraction = b.get<double>("dealias_fraction", 2.0 / 3.0);
}

inline void read_command_block(Block& root, RunConfig& rc, std::vector<std::string>& errors) {
  const std::string name = block_name(rc.command);
  Block b(root.child(name), name, errors);
  switch (rc.command) {
    case Command::evolve:
      read_evolve(b, rc);
      rc.evolve_run.metrics_p = b.get<double>("metrics_p", 2.0);
      rc.evolve_run.mass_tol = b.get<double>("mass_tol", 1e-8);
      rc.evolve_run.keep_snapshots = b.get<bool>("write_snapshots", true);
      break;
    case Command::decay:
      rc.p_values = b.get<std::vector<double>>("p_values", {1.0});
      rc.t_lo = b.require<double>("t_lo");
      rc.t_hi = b.require<double>("t_hi");
      rc.decay.samples = b.get<int>("samples", 20);
      rc.decay.tolerance = b.get<double>("tolerance", 0.05);
      rc.decay.band_threshold = b.get<double>("band_threshold", 0.5);
      rc.decay.box_doubling = b.get<bool>("box_doubling", true);
      break;
    case Command::picard: {
      PicardConfig& p = rc.picard;
      p.dispersion = rc.dispersion;
      p.nonlinearity = rc.nonlinearity;
      p.p = b.get<double>("p", 1.2);
      p.T_star = b.get<double>("T_star", 0.5);
      p.quad_nodes = b.get<int>("quad_nodes", 64);
      p.max_iters = b.get<int>("max_iters", 50);
      p.tol = b.get<double>("tol", 1e-10);
      p.K = b.get<double>("K", 0.0);
      p.M = b.get<double>("M", 0.0);
      p.gauss_order = b.get<int>("gauss_order", 4);
      rc.certify.ratio_limit = b.get<double>("ratio_limit", 0.5);
      rc.certify.agreement_tol = b.get<double>("agreement_tol", 1e-3);
      rc.certify.split_substeps = b.get<int>("split_substeps", 32);
      break;
    }
    case Command::selfsim: {
      SelfSimOptions& s = rc.selfsim;
      rc.lambdas = b.get<std::vector<double>>("lambdas", {1.0, 1.25, 1.5});
      rc.times = b.get<std::vector<double>>("times", {0.5, 1.0});
      s.eta = b.get<double>("eta", s.eta);
      s.points = b.get<int>("points", s.points);
      s.half_width = b.get<double>("half_width", s.half_width);
      s.band_limit = b.get<double>("band_limit", s.band_limit);
      s.window = b.get<double>("window", s.window);
      s.dt_max = b.get<double>("dt_max", s.dt_max);
      s.tolerance = b.get<double>("tolerance", s.tolerance);
      s.epsilon = rc.dispersion.epsilon;
      s.delta = rc.dispersion.delta;
      s.coupling = rc.nonlinearity.lambda;
      break;
    }
    case Command::eps_limit: {
      const auto mode = b.require<std::string>("mode");
      if (mode == "h2")
        rc.eps_mode = EpsMode::h2;
      else if (mode == "weak")
        rc.eps_mode = EpsMode::weak;
      else if (!mode.empty())
        b.error("mode", "must be \"h2\" or \"weak\"");
      rc.eps_list = b.require<std::vector<double>>("eps_list");
      rc.t_eval = b.require<double>("t_eval");
      rc.eps.dt = b.get<double>("dt", 1e-3);
      if (rc.eps_mode == EpsMode::weak) {
        rc.eps.p = b.get<double>("p", 1.2);
        rc.eps.r = b.get<double>("r", 0.0);
        rc.eps.snapshot_stride = b.get<int>("snapshot_stride", 10);
        rc.eps.shrink_min = b.get<double>("shrink_min", 10.0);
      } else {
        rc.eps.slope_min = b.get<double>("slope_min", 0.9);
      }
      rc.eps.monotone_tol = b.get<double>("monotone_tol", 0.01);
      break;
    }
    case Command::radial:
      read_evolve(b, rc);
      rc.radial.tolerance = b.get<double>("tolerance", 1e-8);
      rc.radial.radius_fraction = b.get<double>("radius_fraction", 0.5);
      break;
    case Command::norms:
      rc.p_values = b.get<std::vector<double>>("p_values", {2.0});
      break;
  }
  b.reject_unknown();
}

/// Hypothesis and module-level checks that need the whole config.
inline void check_constraints(RunConfig& rc) {
  const int ndim = rc.grid ? rc.grid->ndim() : 1;
  auto guard = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  guard("dispersion", [&] {
    if (rc.command != Command::selfsim) validate(rc.dispersion, ndim);
  });
  guard("nonlinearity", [&] { validate(rc.nonlinearity); });
  switch (rc.command) {
    case Command::evolve:
    case Command::radial:
      guard(block_name(rc.command), [&] { validate(rc.evolve, ndim); });
      if (rc.evolve.snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
      if (rc.command == Command::radial && ndim != 2) throw ConfigError("radial: needs a 2D grid");
      break;
    case Command::decay:
      for (double p : rc.p_values)
        if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("decay: each p must lie in [1, 2]");
      if (!(rc.t_lo > 0.0 && rc.t_hi > rc.t_lo)) throw ConfigError("decay: need 0 < t_lo < t_hi");
      if (rc.decay.samples < 5) throw ConfigError("decay: samples must be >= 5 for the fit");
      break;
    case Command::picard:
      guard("picard", [&] { validate(rc.picard, ndim); });
      break;
    case Command::selfsim: {
      if (rc.dispersion.epsilon != 0.0)
        throw ConfigError("selfsim: scaling invariance needs epsilon = 0, got " + format_double(rc.dispersion.epsilon));
      const ExponentSet e = exponent_set(3, 0, rc.nonlinearity.alpha, 1.5, Variant::isotropic);
      if (!((rc.nonlinearity.alpha + 1.0) * e.sigma < 1.0))
        throw ConfigError("selfsim: global existence needs (alpha + 1) sigma < 1, got " +
                          format_double((rc.nonlinearity.alpha + 1.0) * e.sigma));
      if (!is_power_of_two(rc.selfsim.points) || rc.selfsim.points < 8)
        throw ConfigError("selfsim: points must be a power of two >= 8");
      break;
    }
    case Command::eps_limit:
      guard("eps_limit", [&] { eps_limit_preconditions(ndim, rc.dispersion, rc.nonlinearity, rc.eps_mode, rc.eps); });
      if (rc.eps_list.empty()) throw ConfigError("eps_limit: eps_list must not be empty");
      for (double e : rc.eps_list)
        if (e < 0.0) throw ConfigError("eps_limit: epsilon values must be >= 0");
      if (!(rc.t_eval > 0.0)) throw ConfigError("eps_limit: t_eval must be positive");
      guard("eps_limit", [&] {
        EvolveConfig c;
        c.dt = rc.eps.dt;
        c.t_end = rc.t_eval;
        step_count(c);
      });
      break;
    case Command::norms:
      for (double p : rc.p_values)
        if (!(p > 1.0)) throw ConfigError("norms: each p must exceed 1");
      break;
  }
}

}  // namespace detail

/// Parses and validates a config document. Every schema problem is listed in
/// one ConfigError; theorem hypotheses are checked afterwards.
inline RunConfig parse_config_json(json doc, std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::vector<std::string> errors;
  RunConfig rc;
  detail::Block root(doc, "", errors);
  const auto cmd = root.require<std::string>("command");
  const auto parsed = detail::parse_command(cmd);
  if (!parsed) {
    if (!cmd.empty()) root.error("command", "unknown command '" + cmd + "'");
    root.reject_unknown();
    throw ConfigError(detail::join_errors(errors));
  }
  rc.command = *parsed;
  rc.out_dir = root.get<std::string>("out_dir", "out");
  rc.seed = root.get<std::uint64_t>("seed", 0);
  if (seed_override) {
    rc.seed = *seed_override;
    doc["seed"] = rc.seed;
  }
  rc.threads = root.get<int>("threads", 1);
  if (rc.command != Command::selfsim) detail::read_grid(root, rc, errors);
  detail::read_dispersion(root, rc, errors);
  detail::read_nonlinearity(root, rc, errors);
  if (rc.command != Command::selfsim) detail::read_initial(root, rc, errors);
  detail::read_command_block(root, rc, errors);
  root.reject_unknown();
  if (!errors.empty()) throw ConfigError(detail::join_errors(errors));
  detail::check_constraints(rc);
  rc.resolved = std::move(doc);
  return rc;
}

inline RunConfig parse_config(const std::filesystem::path& path,
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON (" + path.string() + "): " + e.what());
  }
  return parse_config_json(std::move(doc), seed_override);
}

/// Executes the mapped experiment. No files are touched before the experiment returns.
inline ExperimentReport execute(const RunConfig& rc) {
  set_thread_count(rc.threads);
  switch (rc.command) {
    case Command::evolve: return evolve_run(rc.initial, *rc.grid, rc.evolve, rc.evolve_run);
    case Command::decay: return decay_study(rc.initial, *rc.grid, rc.dispersion, rc.p_values, rc.t_lo, rc.t_hi, rc.decay);
    case Command::picard: return picard_certify(rc.initial, *rc.grid, rc.picard, rc.certify);
    case Command::selfsim: return self_similarity_study(rc.nonlinearity.alpha, rc.selfsim, rc.lambdas, rc.times);
    case Command::eps_limit:
      return eps_limit_study(rc.initial, *rc.grid, rc.dispersion, rc.nonlinearity, rc.eps_list, rc.t_eval, rc.eps_mode,
                             rc.eps);
    case Command::radial: return radial_study(rc.initial, *rc.grid, rc.evolve, rc.radial);
    case Command::norms: return norms_run(rc.initial, *rc.grid, rc.dispersion, rc.nonlinearity, rc.p_values);
  }
  throw DomainError("unknown command");
}

/// Flattens the resolved config into key: value pairs ("grid.points[0]: 64").
inline void flatten_json(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten_json(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten_json(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else if (j.is_number_float()) {
    out.emplace_back(prefix, format_double(j.get<double>()));
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

/// Runs, persists and reports. Returns the exit code of the contract
/// (0 pass, 2 verdict failure, 3 config error, 4 numeric failure, 5 I/O failure).
inline int run(const RunConfig& rc, const std::filesystem::path& out_dir, std::ostream& out = std::cout,
               std::ostream& err = std::cerr, const PersistOptions& persist = {}) {
  ExperimentReport rep;
  try {
    rep = execute(rc);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const DomainError& e) {
    err << "configuration rejected: " << e.what() << '\n';
    return exit_config;
  }
  // The echo of the input file replaces the experiment's own echo.
  rep.config.clear();
  flatten_json(rc.resolved, "", rep.config);
  try {
    persist_report(rep, out_dir, persist);
  } catch (const IoError& e) {
    err << "i/o failure: " << e.what() << '\n';
    return exit_io;
  }
  for (const auto& v : rep.verdicts)
    out << (v.pass ? "PASS " : "FAIL ") << v.criterion << ": " << format_double(v.measured) << ' ' << v.relation << ' '
        << format_double(v.tolerance) << '\n';
  if (const Verdict* f = rep.first_failure()) {
    err << "first failing verdict: " << f->criterion << '\n';
    return exit_verdict;
  }
  return exit_pass;
}

}  // namespace f4nls
