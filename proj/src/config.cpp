#include "invsq/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

const std::set<std::string> kKinds{"simulate", "scatter", "verify", "heatkernel", "constants", "dht-selftest"};
const std::set<std::string> kChecks{"hardy", "kinetic", "morawetz", "strichartz", "sobolev", "resolvent"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line, const std::string& key) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + v + "'", line);
  return x;
}

long long to_integer(const std::string& v, int line, const std::string& key) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
  return x;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'", line);
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), line, key));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list", line);
  return out;
}

std::string num(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

struct Model {
  long long n = 3;
  double a = 0.0;
  double p = 3.0;
  int n_line = 0;
  int a_line = 0;
  int p_line = 0;
};

using Setter = std::function<void(ExperimentConfig&, Model&, const std::string&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [](double ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, Model&, const std::string& key, const std::string& v, int line) {
        c.*field = to_double(v, line, key);
      };
    };
    auto solver_dbl = [](double SolverConfig::*field) {
      return [field](ExperimentConfig& c, Model&, const std::string& key, const std::string& v, int line) {
        c.solver.*field = to_double(v, line, key);
      };
    };
    auto lst = [](std::vector<double> ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, Model&, const std::string& key, const std::string& v, int line) {
        c.*field = to_list(v, line, key);
      };
    };
    auto integer = [](int ExperimentConfig::*field) {
      return [field](ExperimentConfig& c, Model&, const std::string& key, const std::string& v, int line) {
        c.*field = static_cast<int>(to_integer(v, line, key));
      };
    };
    auto env = [](double EnvelopeOptions::*field) {
      return [field](ExperimentConfig& c, Model&, const std::string& key, const std::string& v, int line) {
        c.envelope.*field = to_double(v, line, key);
      };
    };

    t["experiment"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      // "verify:hardy" is shorthand for experiment = verify, check = hardy.
      const auto colon = v.find(':');
      c.kind = v.substr(0, colon);
      if (colon != std::string::npos) c.check = v.substr(colon + 1);
      if (!kKinds.count(c.kind)) throw ConfigError("unknown experiment '" + v + "'", line);
    };
    t["check"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int) { c.check = v; };
    t["n"] = [](ExperimentConfig&, Model& m, const std::string&, const std::string& v, int line) {
      m.n = to_integer(v, line, "n");
      m.n_line = line;
    };
    t["a"] = [](ExperimentConfig&, Model& m, const std::string&, const std::string& v, int line) {
      m.a = to_double(v, line, "a");
      m.a_line = line;
    };
    t["p"] = [](ExperimentConfig&, Model& m, const std::string&, const std::string& v, int line) {
      m.p = to_double(v, line, "p");
      m.p_line = line;
    };
    t["nu-override"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      if (v == "none") {
        c.solver.nu_override.reset();
      } else {
        c.solver.nu_override = to_double(v, line, "nu-override");
      }
    };
    t["n-modes"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      c.solver.n_modes = static_cast<int>(to_integer(v, line, "n-modes"));
    };
    t["radius"] = solver_dbl(&SolverConfig::radius);
    t["dt"] = solver_dbl(&SolverConfig::dt);
    t["horizon"] = solver_dbl(&SolverConfig::horizon);
    t["snapshot-stride"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      c.solver.snapshot_stride = static_cast<int>(to_integer(v, line, "snapshot-stride"));
    };
    t["initial.family"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int) { c.solver.initial.family = v; };
    t["initial.width"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      c.solver.initial.width = to_double(v, line, "initial.width");
    };
    t["initial.amplitude"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      c.solver.initial.amplitude = to_double(v, line, "initial.amplitude");
    };
    t["initial.snapshot"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int) { c.initial_snapshot = v; };
    t["lwp-margin"] = solver_dbl(&SolverConfig::lwp_margin);
    t["nonlinear-coef"] = solver_dbl(&SolverConfig::nonlinear_coef);
    t["blowup-factor"] = solver_dbl(&SolverConfig::blowup_factor);
    t["wall-fraction"] = solver_dbl(&SolverConfig::wall_fraction);
    t["wall-threshold"] = solver_dbl(&SolverConfig::wall_threshold);
    t["diagnostics"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      c.solver.diagnostics = to_bool(v, line, "diagnostics");
    };
    t["out-dir"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int) { c.out_dir = v; };
    t["seed"] = [](ExperimentConfig& c, Model&, const std::string&, const std::string& v, int line) {
      const long long s = to_integer(v, line, "seed");
      if (s < 0) throw ConfigError("seed must be >= 0", line);
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["tolerance"] = dbl(&ExperimentConfig::tolerance);
    t["first-checkpoint"] = dbl(&ExperimentConfig::first_checkpoint);
    t["eta"] = dbl(&ExperimentConfig::eta);
    t["max-horizon"] = dbl(&ExperimentConfig::max_horizon);
    t["t-points"] = integer(&ExperimentConfig::t_points);
    t["r-points"] = integer(&ExperimentConfig::r_points);
    t["envelope.big-c-min"] = env(&EnvelopeOptions::big_c_min);
    t["envelope.big-c-max"] = env(&EnvelopeOptions::big_c_max);
    t["envelope.c-min"] = env(&EnvelopeOptions::c_min);
    t["envelope.c-max"] = env(&EnvelopeOptions::c_max);
    t["hardy.eps"] = lst(&ExperimentConfig::hardy_eps);
    t["hardy.s"] = lst(&ExperimentConfig::hardy_s);
    t["hardy.p"] = lst(&ExperimentConfig::hardy_p);
    t["strichartz.q"] = dbl(&ExperimentConfig::strichartz_q);
    t["strichartz.r"] = dbl(&ExperimentConfig::strichartz_r);
    t["sobolev.s"] = dbl(&ExperimentConfig::sobolev_s);
    t["sobolev.r"] = lst(&ExperimentConfig::sobolev_r);
    t["family-size"] = integer(&ExperimentConfig::family_size);
    t["resolvent.alpha-re"] = lst(&ExperimentConfig::resolvent_alpha_re);
    t["resolvent.alpha-im"] = lst(&ExperimentConfig::resolvent_alpha_im);
    t["dht.nu"] = lst(&ExperimentConfig::nu_list);
    return t;
  }();
  return table;
}

void build_params(ExperimentConfig& c, const Model& m) {
  auto attempt = [](long long n, double a, double p, int line) {
    try {
      return ModelParams(static_cast<int>(n), a, p);
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), line);
    }
  };
  if (m.n > 64) throw ConfigError("dimension n = " + std::to_string(m.n) + " is not supported", m.n_line);
  attempt(m.n, 0.0, 3.0, m.n_line);
  attempt(m.n, m.a, 3.0, m.a_line);
  c.solver.params = attempt(m.n, m.a, m.p, m.p_line);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const ConfigAdjust& adjust) {
  ExperimentConfig c;
  Model m;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'", line);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line);
    try {
      it->second(c, m, key, value, line);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what(), line);
    }
  }
  build_params(c, m);
  if (adjust) adjust(c);
  validate_for_kind(c);
  return c;
}

ExperimentConfig parse_config(const std::string& path, const ConfigAdjust& adjust) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), adjust);
}

std::string serialize_config(const ExperimentConfig& c) {
  const auto& s = c.solver;
  std::ostringstream o;
  o << "experiment = " << c.kind << "\n";
  if (!c.check.empty()) o << "check = " << c.check << "\n";
  o << "n = " << s.params.n() << "\n"
    << "a = " << num(s.params.a()) << "\n"
    << "p = " << num(s.params.p()) << "\n"
    << "nu-override = " << (s.nu_override ? num(*s.nu_override) : "none") << "\n"
    << "n-modes = " << s.n_modes << "\n"
    << "radius = " << num(s.radius) << "\n"
    << "dt = " << num(s.dt) << "\n"
    << "horizon = " << num(s.horizon) << "\n"
    << "snapshot-stride = " << s.snapshot_stride << "\n"
    << "initial.family = " << s.initial.family << "\n"
    << "initial.width = " << num(s.initial.width) << "\n"
    << "initial.amplitude = " << num(s.initial.amplitude) << "\n";
  if (!c.initial_snapshot.empty()) o << "initial.snapshot = " << c.initial_snapshot << "\n";
  o << "lwp-margin = " << num(s.lwp_margin) << "\n"
    << "nonlinear-coef = " << num(s.nonlinear_coef) << "\n"
    << "blowup-factor = " << num(s.blowup_factor) << "\n"
    << "wall-fraction = " << num(s.wall_fraction) << "\n"
    << "wall-threshold = " << num(s.wall_threshold) << "\n"
    << "diagnostics = " << (s.diagnostics ? "true" : "false") << "\n"
    << "out-dir = " << c.out_dir << "\n"
    << "seed = " << c.seed << "\n"
    << "tolerance = " << num(c.tolerance) << "\n"
    << "first-checkpoint = " << num(c.first_checkpoint) << "\n"
    << "eta = " << num(c.eta) << "\n"
    << "max-horizon = " << num(c.max_horizon) << "\n"
    << "t-points = " << c.t_points << "\n"
    << "r-points = " << c.r_points << "\n"
    << "envelope.big-c-min = " << num(c.envelope.big_c_min) << "\n"
    << "envelope.big-c-max = " << num(c.envelope.big_c_max) << "\n"
    << "envelope.c-min = " << num(c.envelope.c_min) << "\n"
    << "envelope.c-max = " << num(c.envelope.c_max) << "\n"
    << "hardy.eps = " << list(c.hardy_eps) << "\n"
    << "hardy.s = " << list(c.hardy_s) << "\n"
    << "hardy.p = " << list(c.hardy_p) << "\n"
    << "strichartz.q = " << num(c.strichartz_q) << "\n"
    << "strichartz.r = " << num(c.strichartz_r) << "\n"
    << "sobolev.s = " << num(c.sobolev_s) << "\n"
    << "sobolev.r = " << list(c.sobolev_r) << "\n"
    << "family-size = " << c.family_size << "\n"
    << "resolvent.alpha-re = " << list(c.resolvent_alpha_re) << "\n"
    << "resolvent.alpha-im = " << list(c.resolvent_alpha_im) << "\n"
    << "dht.nu = " << list(c.nu_list) << "\n";
  return o.str();
}

void validate_for_kind(const ExperimentConfig& c) {
  if (!kKinds.count(c.kind)) throw ConfigError("unknown experiment '" + c.kind + "'");
  c.solver.validate();
  const ModelParams& p = c.params();
  if (!c.initial_snapshot.empty() && !std::filesystem::is_regular_file(c.initial_snapshot)) {
    throw ConfigError("initial.snapshot '" + c.initial_snapshot + "' does not exist");
  }
  if (!c.initial_snapshot.empty() && c.kind != "simulate") {
    throw ConfigError("initial.snapshot is only supported for experiment = simulate");
  }
  if (c.kind == "verify") {
    if (!kChecks.count(c.check)) {
      throw ConfigError("verify needs check = hardy | kinetic | morawetz | strichartz | sobolev | resolvent, got '" +
                        c.check + "'");
    }
  } else if (!c.check.empty()) {
    throw ConfigError("check is only meaningful for experiment = verify");
  }
  if (c.kind == "scatter") {
    if (!p.p_in_range()) throw ConfigError("scatter needs 1 + 4/n < p < 1 + 4/(n-2): " + p.scattering_violation());
    if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (!(c.first_checkpoint > 0.0)) throw ConfigError("first-checkpoint must be > 0");
    if (!(c.max_horizon >= c.solver.horizon) || !(c.solver.horizon > 0.0)) {
      throw ConfigError("scatter needs 0 < horizon <= max-horizon");
    }
  }
  if (!(c.eta > 0.0)) throw ConfigError("eta must be > 0");
  if (c.kind == "heatkernel") {
    if (p.n() != 3) throw ConfigError("heatkernel synthesises H for n = 3 only");
    if (c.t_points < 2 || c.r_points < 2) throw ConfigError("t-points and r-points must be >= 2");
    const auto& e = c.envelope;
    if (!(e.big_c_min > 0.0 && e.big_c_min < e.big_c_max && e.c_min > 0.0 && e.c_min < e.c_max)) {
      throw ConfigError("envelope search box needs 0 < big-c-min < big-c-max and 0 < c-min < c-max");
    }
  }
  if (c.hardy_s.size() != c.hardy_p.size()) throw ConfigError("hardy.s and hardy.p must have the same length");
  if (c.resolvent_alpha_re.size() != c.resolvent_alpha_im.size()) {
    throw ConfigError("resolvent.alpha-re and resolvent.alpha-im must have the same length");
  }
  if (c.family_size < 1) throw ConfigError("family-size must be >= 1");
  for (double nu : c.nu_list) {
    if (!(nu >= 0.0)) throw ConfigError("dht.nu entries must be >= 0");
  }
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.out_dir = ExperimentConfig{}.out_dir;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << h;
  return o.str();
}

}  // namespace invsq
