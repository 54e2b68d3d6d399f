#include "experiment.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/version.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>

#include "invsq/diagnostics.hpp"
#include "invsq/errors.hpp"
#include "invsq/heatkernel.hpp"
#include "invsq/scattering.hpp"
#include "invsq/solver.hpp"
#include "invsq/specfun.hpp"

#ifndef INVSQ_VERSION
#define INVSQ_VERSION "0.0.0"
#endif

namespace invsq::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string num(int x) { return std::to_string(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(bool x) { return x ? "1" : "0"; }

// Emits into out_dir and records the file name for the manifest.
class Output {
 public:
  Output(fs::path dir, RunResult& result) : dir_(std::move(dir)), result_(result) {}

  std::ofstream open(const std::string& name, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(dir_ / name, mode);
    if (!f) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    result_.files.push_back(name);
    return f;
  }

  void snapshot(const std::string& name, const RadialField& f, double t) {
    auto out = open(name, std::ios::out | std::ios::binary);
    write_snapshot(out, f, t);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  RunResult& result_;
};

class Csv {
 public:
  Csv(Output& out, const std::string& name, const std::vector<std::string>& columns)
      : file_(out.open(name)), width_(columns.size()) {
    write(columns);
  }

  template <typename... T>
  void row(const T&... cells) {
    static_assert(sizeof...(T) > 0);
    std::vector<std::string> v{num(cells)...};
    if (v.size() != width_) throw std::logic_error("csv row width mismatch");
    write(v);
  }

 private:
  void write(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) file_ << (i ? "," : "") << cells[i];
    file_ << "\n";
  }

  std::ofstream file_;
  std::size_t width_;
};

struct PlotSpec {
  std::string csv;
  std::string x;
  std::vector<std::string> y;
  bool logy = false;
};

void plot_script(Output& out, const std::string& name, const PlotSpec& spec) {
  auto f = out.open(name);
  f << "import sys\n"
       "import pandas as pd\n"
       "import matplotlib\n"
       "matplotlib.use(\"Agg\")\n"
       "import matplotlib.pyplot as plt\n\n"
    << "df = pd.read_csv(\"" << spec.csv << "\")\n"
    << "fig, ax = plt.subplots()\n"
    << "for col in [";
  for (std::size_t i = 0; i < spec.y.size(); ++i) f << (i ? ", " : "") << '"' << spec.y[i] << '"';
  f << "]:\n"
    << "    ax.plot(df[\"" << spec.x << "\"], df[col], marker=\".\", label=col)\n"
    << "ax.set_xlabel(\"" << spec.x << "\")\n";
  if (spec.logy) f << "ax.set_yscale(\"log\")\n";
  f << "ax.legend()\n"
    << "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else \"" << fs::path(spec.csv).stem().string()
    << ".png\", dpi=150)\n";
}

void say(const RunOptions& options, const std::string& msg) {
  if (!options.quiet) std::cerr << msg << "\n";
}

RadialField initial_field(const ExperimentConfig& c) {
  const GridPtr grid = c.solver.grid();
  const int n = c.params().n();
  if (c.initial_snapshot.empty()) return make_initial(grid, n, c.solver.initial);
  std::ifstream in(c.initial_snapshot, std::ios::binary);
  if (!in) throw ConfigError("cannot read initial.snapshot '" + c.initial_snapshot + "'");
  LoadedSnapshot snap = read_snapshot(in);
  const auto& h = snap.header;
  if (h.n_modes != grid->size() || h.radius != grid->radius() || h.nu != grid->nu()) {
    throw ConfigError("initial.snapshot grid (N = " + std::to_string(h.n_modes) + ", R = " + num(h.radius) +
                      ", nu = " + num(h.nu) + ") does not match the configured grid (N = " +
                      std::to_string(grid->size()) + ", R = " + num(grid->radius()) + ", nu = " + num(grid->nu()) +
                      ")");
  }
  return RadialField(grid, std::move(snap.samples), n);
}

std::vector<DiagnosticsRecord> records_of(const Trajectory& traj) {
  if (!traj.records.empty()) return traj.records;
  std::vector<DiagnosticsRecord> out;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    out.push_back(make_record(traj.snapshots[j], traj.params, traj.times[j], traj.nonlinear_coef));
  }
  return out;
}

void note_run_status(const Trajectory& traj, RunResult& result) {
  result.scalars["run_status"] = to_string(traj.status);
  if (traj.status != RunStatus::Completed) {
    result.exit_code = kExitNumerics;
    result.status = to_string(traj.status);
    result.message = traj.message;
  }
}

// Snapshot indices nearest to T/4, T/2 and T.
std::vector<std::size_t> doubling_windows(const Trajectory& traj) {
  std::vector<std::size_t> out;
  const double T = traj.times.back();
  for (double frac : {0.25, 0.5, 1.0}) {
    const double target = frac * T;
    std::size_t best = 1;
    for (std::size_t j = 1; j < traj.size(); ++j) {
      if (std::abs(traj.times[j] - target) < std::abs(traj.times[best] - target)) best = j;
    }
    if (out.empty() || best > out.back()) out.push_back(best);
  }
  return out;
}

std::vector<RadialField> test_family(const GridPtr& grid, int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> width(0.5, 3.0);
  std::uniform_real_distribution<double> amp(0.5, 2.0);
  std::uniform_real_distribution<double> mix(-0.5, 0.5);
  std::vector<RadialField> out;
  for (int i = 0; i < count; ++i) {
    const double w1 = width(rng);
    const double a1 = amp(rng);
    const double w2 = width(rng);
    const double a2 = mix(rng) * a1;
    const auto f1 = make_initial(grid, n, {"sector-gaussian", w1, a1});
    const auto f2 = make_initial(grid, n, {"sector-gaussian", w2, a2});
    out.push_back(f1.with_samples(f1.samples() + f2.samples()));
  }
  return out;
}

double relative_growth(double later, double earlier) { return earlier > 0.0 ? later / earlier - 1.0 : kNaN; }

void simulate(const ExperimentConfig& c, Output& out, RunResult& result) {
  const Trajectory traj = run(c.solver, initial_field(c));
  const auto recs = records_of(traj);
  Csv csv(out, "trajectory.csv", {"t", "mass", "energy", "kinetic", "hardy_quotient", "sup_norm", "boundary_mass"});
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    csv.row(r.t, r.mass, r.energy, r.kinetic, r.hardy_quotient, r.sup_norm, r.boundary_mass);
    mass_drift = std::max(mass_drift, std::abs(r.mass - recs[0].mass) / recs[0].mass);
    if (recs[0].energy != 0.0) {
      energy_drift = std::max(energy_drift, std::abs(r.energy - recs[0].energy) / std::abs(recs[0].energy));
    }
    min_margin = std::min(min_margin, kinetic_check(r, c.params()));
  }
  out.snapshot("final.snap", traj.snapshots.back(), traj.times.back());
  plot_script(out, "plot_trajectory.py", {"trajectory.csv", "t", {"mass", "energy", "kinetic"}, false});

  auto& s = result.scalars;
  s["snapshots"] = traj.size();
  s["final_time"] = traj.times.back();
  s["mass_drift"] = mass_drift;
  s["energy_drift"] = energy_drift;
  s["min_kinetic_margin"] = min_margin;
  note_run_status(traj, result);
}

void scatter(const ExperimentConfig& c, Output& out, RunResult& result, const RunOptions& options) {
  const ScatteringOptions opts{c.tolerance, c.first_checkpoint, c.eta};
  say(options, "scatter: horizon " + num(c.solver.horizon) + ", doubling up to " + num(c.max_horizon));
  const ScatterExperiment ex = scatter_experiment(c.solver, opts, c.max_horizon);
  const ScatteringReport& rep = ex.report;
  if (!rep.warning.empty()) result.warnings.push_back(rep.warning);

  Csv csv(out, "scattering.csv", {"t", "cauchy_increment", "h1_distance_to_free", "tail_bound"});
  for (std::size_t j = 0; j < rep.times.size(); ++j) {
    csv.row(rep.times[j], rep.cauchy_increments[j], rep.distance_to_free[j], rep.tail_bounds[j]);
  }
  Csv sub(out, "subdivision.csv", {"start", "end", "norm"});
  for (std::size_t j = 0; j < rep.subdivision.count(); ++j) {
    sub.row(rep.subdivision.starts[j], rep.subdivision.ends[j], rep.subdivision.norms[j]);
  }
  out.snapshot("u_plus.snap", rep.u_plus, 0.0);
  plot_script(out, "plot_scattering.py",
              {"scattering.csv", "t", {"cauchy_increment", "h1_distance_to_free", "tail_bound"}, true});

  auto& s = result.scalars;
  const double last = rep.cauchy_increments.back();
  s["converged"] = rep.converged;
  s["hypotheses_ok"] = rep.hypotheses_ok;
  s["horizons"] = ex.horizons;
  s["horizon"] = ex.config.horizon;
  s["radius"] = ex.config.radius;
  s["u0_h1"] = rep.u0_h1;
  s["final_increment"] = last;
  s["relative_final_increment"] = last / rep.u0_h1;
  s["duhamel_defect"] = rep.duhamel_defect;
  s["defect_over_increment"] = last > 0.0 ? rep.duhamel_defect / last : kNaN;
  s["u0_mass"] = rep.u0_mass;
  s["u_plus_mass"] = rep.u_plus_mass;
  s["mass_rel_error"] = std::abs(rep.u_plus_mass - rep.u0_mass) / rep.u0_mass;
  s["intervals"] = rep.subdivision.count();
  s["single_snapshot_intervals"] = rep.subdivision.single_snapshot;
  note_run_status(ex.trajectory, result);
  if (result.exit_code == kExitOk && !rep.converged) {
    result.exit_code = kExitNotConverged;
    result.status = "not-converged";
    result.message = "final increment / ||u0||_H1 = " + num(last / rep.u0_h1) + " exceeds tolerance " +
                     num(c.tolerance) + " at horizon " + num(ex.config.horizon);
  }
}

void verify_hardy(const ExperimentConfig& c, Output& out, RunResult& result) {
  const int n = c.params().n();
  const double bound = hardy_constant(n);
  Csv csv(out, "hardy.csv", {"family", "eps", "s", "p", "n_modes", "quotient", "reference"});
  double best = 0.0;
  for (double eps : c.hardy_eps) {
    const double q = hardy_log_quotient(n, eps);
    best = std::max(best, q);
    csv.row(0, eps, 1.0, 2.0, 0, q, bound);
  }
  const BesselOrder free_order(0.5 * (n - 2.0));
  const auto g1 = make_grid(free_order, c.solver.n_modes, c.solver.radius);
  const auto g2 = make_grid(free_order, 2 * c.solver.n_modes, c.solver.radius);
  const InitialData bump{"gaussian", c.solver.initial.width, 1.0};
  double worst = 0.0;
  for (std::size_t i = 0; i < c.hardy_s.size(); ++i) {
    const double q1 = hardy_quotient(make_initial(g1, n, bump), c.hardy_s[i], c.hardy_p[i]);
    const double q2 = hardy_quotient(make_initial(g2, n, bump), c.hardy_s[i], c.hardy_p[i]);
    worst = std::max(worst, std::abs(q1 / q2 - 1.0));
    csv.row(1, 0.0, c.hardy_s[i], c.hardy_p[i], c.solver.n_modes, q1, q2);
  }
  plot_script(out, "plot_hardy.py", {"hardy.csv", "eps", {"quotient", "reference"}, false});
  auto& s = result.scalars;
  s["sharp_constant"] = bound;
  s["sharp_max_quotient"] = best;
  s["sharp_attains_95pct"] = best >= 0.95 * bound;
  s["sharp_never_exceeds"] = best <= bound;
  s["generalized_max_rel_change"] = worst;
}

void verify_kinetic(const ExperimentConfig& c, Output& out, RunResult& result) {
  SolverConfig cfg = c.solver;
  cfg.diagnostics = true;
  const Trajectory traj = run(cfg);
  const double ck = kinetic_bound_constant(c.params());
  Csv csv(out, "kinetic.csv", {"t", "energy", "kinetic", "c_kinetic", "margin", "relative_margin"});
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : traj.records) {
    const double margin = kinetic_check(r, c.params());
    const double rel = margin / std::abs(r.energy);
    worst = std::min(worst, rel);
    csv.row(r.t, r.energy, r.kinetic, ck, margin, rel);
  }
  plot_script(out, "plot_kinetic.py", {"kinetic.csv", "t", {"kinetic", "margin"}, false});
  result.scalars["c_kinetic"] = ck;
  result.scalars["min_relative_margin"] = worst;
  result.scalars["violations"] = kinetic_violations(traj).size();
  note_run_status(traj, result);
}

void verify_strichartz(const ExperimentConfig& c, Output& out, RunResult& result) {
  const int n = c.params().n();
  if (!admissible(c.strichartz_q, c.strichartz_r, n)) {
    throw ConfigError("(strichartz.q, strichartz.r) = (" + num(c.strichartz_q) + ", " + num(c.strichartz_r) +
                      ") is not admissible for n = " + std::to_string(n));
  }
  SolverConfig cfg = c.solver;
  cfg.nonlinear_coef = 0.0;
  cfg.diagnostics = false;
  const Trajectory traj = run(cfg);
  note_run_status(traj, result);
  if (result.exit_code != kExitOk) return;
  const double l2 = std::sqrt(mass(traj.snapshots.front()));
  Csv csv(out, "strichartz.csv", {"q", "r", "t_end", "norm", "ratio", "growth"});
  double prev = kNaN;
  double max_growth = 0.0;
  for (std::size_t j : doubling_windows(traj)) {
    const double norm = spacetime_norm(traj, {c.strichartz_q, c.strichartz_r, 0.0, traj.times[j]});
    const double ratio = norm / l2;
    const double growth = relative_growth(ratio, prev);
    if (!std::isnan(growth)) max_growth = std::max(max_growth, growth);
    csv.row(c.strichartz_q, c.strichartz_r, traj.times[j], norm, ratio, growth);
    prev = ratio;
  }
  plot_script(out, "plot_strichartz.py", {"strichartz.csv", "t_end", {"ratio"}, false});
  result.scalars["final_ratio"] = prev;
  result.scalars["max_growth_per_doubling"] = max_growth;
}

void verify_morawetz(const ExperimentConfig& c, Output& out, RunResult& result, const RunOptions& options) {
  SolverConfig cfg = c.solver;
  cfg.diagnostics = true;
  const Trajectory traj = run(cfg);
  note_run_status(traj, result);
  if (result.exit_code != kExitOk) return;
  const double gate = 0.25 - lambda_n(c.params().n());
  const bool weighted = c.params().a() > gate;
  if (!weighted) {
    const std::string w = "weighted decay skipped: it needs a > 1/4 - lambda_n = " + num(gate);
    result.warnings.push_back(w);
    say(options, w);
  }
  const double m0 = mass(traj.snapshots.front());
  Csv csv(out, "morawetz.csv",
          {"t_end", "l4_norm4", "mass0", "sup_h_half_sq", "ratio", "weighted_integral", "weighted_ratio"});
  double prev = kNaN;
  double prev_w = kNaN;
  double growth = kNaN;
  double growth_w = kNaN;
  for (std::size_t j : doubling_windows(traj)) {
    const double T = traj.times[j];
    const double l4 = std::pow(spacetime_norm(traj, {4.0, 4.0, 0.0, T}), 4.0);
    double sup = 0.0;
    for (std::size_t i = 0; i <= j; ++i) sup = std::max(sup, traj.records[i].h_half * traj.records[i].h_half);
    const double ratio = l4 / (m0 * sup);
    double wi = kNaN;
    double wr = kNaN;
    if (weighted) {
      const auto wd = morawetz_weighted_decay(traj, 0.0, T);
      wi = wd.integral;
      wr = wd.ratio;
    }
    csv.row(T, l4, m0, sup, ratio, wi, wr);
    growth = relative_growth(ratio, prev);
    growth_w = relative_growth(wr, prev_w);
    prev = ratio;
    prev_w = wr;
  }
  plot_script(out, "plot_morawetz.py", {"morawetz.csv", "t_end", {"ratio", "weighted_ratio"}, false});
  result.scalars["final_ratio"] = prev;
  result.scalars["last_doubling_growth"] = growth;
  result.scalars["weighted_final_ratio"] = prev_w;
  result.scalars["weighted_last_doubling_growth"] = growth_w;
}

void verify_sobolev(const ExperimentConfig& c, Output& out, RunResult& result) {
  const auto family = test_family(c.solver.grid(), c.params().n(), c.family_size, c.seed);
  Csv csv(out, "sobolev.csv", {"index", "s", "r", "ratio"});
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double r : c.sobolev_r) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      double q = 0.0;
      try {
        q = sobolev_equivalence_ratio(family[i], c.sobolev_s, r, c.params());
      } catch (const DomainError& e) {
        throw ConfigError(std::string("sobolev.r = ") + num(r) + ": " + e.what());
      }
      lo = std::min(lo, q);
      hi = std::max(hi, q);
      csv.row(i, c.sobolev_s, r, q);
    }
  }
  plot_script(out, "plot_sobolev.py", {"sobolev.csv", "index", {"ratio"}, false});
  result.scalars["min_ratio"] = lo;
  result.scalars["max_ratio"] = hi;
  result.scalars["max_over_min"] = hi / lo;
  result.scalars["max_deviation_from_1"] = std::max(std::abs(hi - 1.0), std::abs(lo - 1.0));
}

void verify_resolvent(const ExperimentConfig& c, Output& out, RunResult& result) {
  const auto family = test_family(c.solver.grid(), c.params().n(), c.family_size, c.seed);
  Csv csv(out, "resolvent.csv", {"alpha_re", "alpha_im", "index", "ratio"});
  double hi = 0.0;
  for (std::size_t k = 0; k < c.resolvent_alpha_re.size(); ++k) {
    const cplx alpha(c.resolvent_alpha_re[k], c.resolvent_alpha_im[k]);
    for (std::size_t i = 0; i < family.size(); ++i) {
      double q = 0.0;
      try {
        q = uniform_sobolev_ratio(family[i], alpha, c.params());
      } catch (const DomainError& e) {
        throw ConfigError("resolvent alpha = " + num(alpha.real()) + " + " + num(alpha.imag()) + "i: " + e.what());
      }
      hi = std::max(hi, q);
      csv.row(alpha.real(), alpha.imag(), i, q);
    }
  }
  plot_script(out, "plot_resolvent.py", {"resolvent.csv", "index", {"ratio"}, false});
  result.scalars["max_ratio"] = hi;
}

void heatkernel(const ExperimentConfig& c, Output& out, RunResult& result) {
  const auto queries = default_query_grid(c.t_points, c.r_points);
  const EnvelopeReport rep = envelope_check(c.params(), queries, c.envelope);
  Csv csv(out, "kernel_grid.csv",
          {"t", "r", "rp", "mu", "H", "envelope_lo", "envelope_hi", "sandwiched", "resolved"});
  for (const auto& p : rep.points) {
    csv.row(p.query.t, p.query.r, p.query.rp, p.query.mu, p.value, p.envelope_lo, p.envelope_hi, p.sandwiched,
            p.resolved);
  }
  plot_script(out, "plot_kernel_grid.py", {"kernel_grid.csv", "t", {"H", "envelope_lo", "envelope_hi"}, true});
  const auto& e = rep.envelope;
  auto& s = result.scalars;
  s["C1"] = e.C1;
  s["C2"] = e.C2;
  s["c1"] = e.c1;
  s["c2"] = e.c2;
  s["sigma"] = e.sigma;
  s["c_fit"] = e.c_fit;
  s["points"] = rep.points.size();
  s["resolved"] = rep.resolved;
  s["unresolved"] = rep.unresolved;
  s["violations"] = rep.violations;
  const double sandwiched = rep.resolved - rep.violations;
  s["sandwiched_fraction_of_resolved"] = rep.resolved ? sandwiched / rep.resolved : kNaN;
  s["sandwiched_fraction_of_grid"] = sandwiched / static_cast<double>(rep.points.size());
}

void dht(const ExperimentConfig& c, Output& out, RunResult& result) {
  Csv csv(out, "dht_selftest.csv",
          {"nu", "n_modes", "radius", "roundtrip_residual", "parseval_residual", "orthogonality_defect"});
  double rt = 0.0;
  double pv = 0.0;
  for (double nu : c.nu_list) {
    const auto st = dht_selftest(BesselOrder(nu), c.solver.n_modes, c.solver.radius);
    csv.row(st.nu, st.n_modes, st.radius, st.roundtrip_residual, st.parseval_residual, st.orthogonality_defect);
    rt = std::max(rt, st.roundtrip_residual);
    pv = std::max(pv, st.parseval_residual);
  }
  result.scalars["max_roundtrip_residual"] = rt;
  result.scalars["max_parseval_residual"] = pv;
}

void constants(const ExperimentConfig& c, Output& out, RunResult& result, const RunOptions& options) {
  const json j = constants_json(c.params(), c.solver.lwp_margin);
  out.open("constants.json") << j.dump(2) << "\n";
  result.scalars = j;
  if (!options.quiet) std::cout << j.dump(2) << "\n";
}

json manifest_of(const ExperimentConfig& c, const RunResult& r) {
  json m;
  m["manifest_version"] = 1;
  m["experiment"] = c.kind;
  if (!c.check.empty()) m["check"] = c.check;
  m["config_hash"] = config_hash(c);
  m["config"] = serialize_config(c);
  m["versions"] = {{"invsq", INVSQ_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                 "." + std::to_string(BOOST_VERSION % 100)},
                   {"compiler", __VERSION__}};
  m["csv_schema_version"] = kCsvSchemaVersion;
  m["snapshot_format_version"] = kSnapshotFormatVersion;
  m["status"] = r.status;
  m["exit_code"] = r.exit_code;
  m["message"] = r.message;
  m["warnings"] = r.warnings;
  m["files"] = r.files;
  m["scalars"] = r.scalars;
  return m;
}

}  // namespace

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const ConfigError& e) {
    message = e.what();
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    message = e.what();
    return kExitNotConverged;
  } catch (const NumericsError& e) {
    message = e.what();
    return kExitNumerics;
  } catch (const DomainError& e) {
    message = e.what();
    return kExitNumerics;
  } catch (const std::exception& e) {
    message = std::string("internal error: ") + e.what();
    return kExitNumerics;
  }
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = config.out_dir;
  try {
    validate_for_kind(config);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    {
      const fs::path probe = dir / ".write-probe";
      std::ofstream f(probe);
      if (!f) throw ConfigError("output directory '" + dir.string() + "' is not writable");
      f.close();
      fs::remove(probe, ec);
    }
  } catch (...) {
    result.exit_code = exit_code_for_current_exception(result.message);
    result.status = "error";
    return result;
  }

  Output out(dir, result);
  try {
    const std::string& k = config.kind;
    if (k == "simulate") {
      simulate(config, out, result);
    } else if (k == "scatter") {
      if (!config.params().scattering_ok()) {
        result.warnings.push_back(config.params().scattering_violation() + "; results are exploratory");
      }
      scatter(config, out, result, options);
    } else if (k == "heatkernel") {
      heatkernel(config, out, result);
    } else if (k == "constants") {
      constants(config, out, result, options);
    } else if (k == "dht-selftest") {
      dht(config, out, result);
    } else if (config.check == "hardy") {
      verify_hardy(config, out, result);
    } else if (config.check == "kinetic") {
      verify_kinetic(config, out, result);
    } else if (config.check == "strichartz") {
      verify_strichartz(config, out, result);
    } else if (config.check == "morawetz") {
      verify_morawetz(config, out, result, options);
    } else if (config.check == "sobolev") {
      verify_sobolev(config, out, result);
    } else {
      verify_resolvent(config, out, result);
    }
  } catch (...) {
    result.exit_code = exit_code_for_current_exception(result.message);
    result.status = "error";
  }

  for (const auto& w : result.warnings) say(options, "warning: " + w);
  result.files.push_back("manifest.json");
  result.files.push_back("runtime.json");
  std::ofstream(dir / "manifest.json") << manifest_of(config, result).dump(2) << "\n";
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(dir / "runtime.json") << json{{"wall_seconds", seconds}}.dump(2) << "\n";
  say(options, config.kind + (config.check.empty() ? "" : ":" + config.check) + ": " + result.status + ", wrote " +
                   dir.string());
  return result;
}

json constants_json(const ModelParams& params, double lwp_margin) {
  json j;
  j["n"] = params.n();
  j["a"] = params.a();
  j["p"] = params.p();
  j["lambda_n"] = lambda_n(params.n());
  j["sigma"] = sigma_a(params);
  const auto win = sobolev_window(params);
  j["sobolev_window"] = {{"r0", win.r0}, {"r1", win.r1 ? json(*win.r1) : json(nullptr)}};
  j["c_kinetic"] = kinetic_bound_constant(params);
  j["hardy_constant"] = hardy_constant(params.n());
  try {
    const auto plan = lwp_exponents(params, lwp_margin);
    j["lwp_exponents"] = {{"q", plan.q}, {"r", plan.r}, {"regime", to_string(plan.regime)}};
  } catch (const DomainError& e) {
    j["lwp_exponents"] = {{"unavailable", e.what()}};
  }
  j["p_in_range"] = params.p_in_range();
  j["scattering_ok"] = params.scattering_ok();
  j["scattering_violation"] = params.scattering_violation();
  return j;
}

json specfun_selftest() {
  namespace bm = boost::math;
  double j_err = 0.0;
  double i_err = 0.0;
  double zero_err = 0.0;
  double gamma_err = 0.0;
  for (double nu : {0.0, 0.5, 0.9, 1.5, 2.3, 7.25, 20.0}) {
    for (double x = 0.05; x < 80.0; x *= 1.17) {
      const double ref = bm::cyl_bessel_j(nu, x);
      j_err = std::max(j_err, std::abs(bessel_j(BesselOrder(nu), x) - ref));
      const double iref = bm::cyl_bessel_i(nu, x) * std::exp(-x);
      if (iref > 1e-280) i_err = std::max(i_err, std::abs(bessel_i_scaled(BesselOrder(nu), x) / iref - 1.0));
    }
    const auto zs = bessel_zeros(BesselOrder(nu), 50);
    for (int k = 0; k < 50; ++k) {
      zero_err = std::max(zero_err, std::abs(zs[k] - bm::cyl_bessel_j_zero(nu, k + 1)) / zs[k]);
    }
  }
  for (double x = 0.1; x < 150.0; x *= 1.3) {
    gamma_err = std::max(gamma_err, std::abs(gamma_fn(x) / bm::tgamma(x) - 1.0));
    gamma_err = std::max(gamma_err, std::abs(log_gamma(x) - bm::lgamma(x)) / std::max(1.0, std::abs(bm::lgamma(x))));
  }
  return json{{"bessel_j_max_abs_error", j_err},
              {"bessel_i_scaled_max_rel_error", i_err},
              {"bessel_zeros_max_rel_error", zero_err},
              {"gamma_max_rel_error", gamma_err}};
}

}  // namespace invsq::app
