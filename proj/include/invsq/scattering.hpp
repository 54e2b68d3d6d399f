#pragma once

#include <string>
#include <vector>

#include "invsq/solver.hpp"
#include "invsq/trajectory.hpp"

namespace invsq {

/// (omega sum_k W_k (1 + rho_k^2) |F_k|^2)^{1/2} on the field's own grid.
double h1_norm(const RadialField& f);

/// Same weight, for coefficient vectors on one grid.
double h1_norm(const GridPtr& grid, int dim, const Eigen::VectorXcd& coefficients);

/// Checkpoints T/2^m, ..., T/2, T with m the largest integer such that
/// T/2^m >= first; each is snapped to the nearest snapshot.
std::vector<std::size_t> dyadic_checkpoints(const Trajectory& traj, double first);

struct InteractionProfile {
  std::vector<double> times;             // checkpoint times
  std::vector<Eigen::VectorXcd> v_hat;   // Hankel coefficients of v(t) = e^{itP} u(t)
  std::vector<double> increments;        // ||v(t_j) - v(t_{j-1})||_{H^1}, with v(t_{-1}) = u_0
  bool hypotheses_ok = true;
  std::string warning;                   // set when the scattering hypotheses fail
};

/// v(t) = e^{itP_a} u(t) at the dyadic checkpoints and its H^1 increments.
/// A run outside the scattering range is processed anyway, with `warning` set.
InteractionProfile interaction_profile(const Trajectory& traj, double first_checkpoint = 1.0);

struct ScatterState {
  RadialField u_plus;
  double tail_bound = 0.0;      // last dyadic increment
  double duhamel_defect = 0.0;  // ||u_plus - v(T)||_{H^1}
  bool converged = false;       // tail_bound < tolerance * ||u_0||_{H^1}
};

/// u_+ = u_0 - i int_0^T e^{i tau P_a} (c |u|^{p-1} u)(tau) d tau by composite
/// Simpson on the snapshots (non-uniform spacing allowed; an odd interval
/// count closes with a three-point end correction). Needs at least two
/// snapshots.
ScatterState scatter_state(const Trajectory& traj, double tolerance = 1e-4, double first_checkpoint = 1.0);

struct Subdivision {
  std::vector<double> starts;
  std::vector<double> ends;
  std::vector<double> norms;  // ||u||_{L^{n+1}_t L^{2(n+1)/(n-1)}_x} per interval
  int single_snapshot = 0;    // intervals of one step that already exceed eta
  std::size_t count() const noexcept { return norms.size(); }
};

/// Greedy left-to-right split of [0, T] so that every interval's trapezoid
/// space-time norm stays <= eta, except single steps that exceed it alone.
Subdivision subdivide_by_norm(const Trajectory& traj, double eta);

struct ScatteringReport {
  explicit ScatteringReport(RadialField plus) : u_plus(std::move(plus)) {}

  std::vector<double> times;
  std::vector<double> cauchy_increments;
  std::vector<double> distance_to_free;  // ||u(t) - e^{-itP} u_+||_{H^1} = ||v(t) - u_+||_{H^1}
  std::vector<double> tail_bounds;       // geometric extrapolation of the increments
  RadialField u_plus;
  double u0_h1 = 0.0;
  double u0_mass = 0.0;
  double u_plus_mass = 0.0;
  double duhamel_defect = 0.0;
  bool converged = false;
  bool hypotheses_ok = true;
  std::string warning;
  Subdivision subdivision;
};

struct ScatteringOptions {
  double tolerance = 1e-4;        // relative to ||u_0||_{H^1}
  double first_checkpoint = 1.0;
  double eta = 0.5;               // subdivision threshold
};

ScatteringReport scattering_report(const Trajectory& traj, const ScatteringOptions& options = {});

struct ScatterExperiment {
  SolverConfig config;  // as last run: horizon, radius, stride 1, diagnostics off
  Trajectory trajectory;
  ScatteringReport report;
  std::vector<double> horizons;  // every horizon tried
};

/// Runs with snapshots at every step, doubling the horizon from
/// base.horizon until the tail criterion holds, the run stops early (wall or
/// blow-up) or the next horizon would exceed max_horizon. The radius for
/// each horizon is max(base.radius, scattering_radius(u0, T)).
ScatterExperiment scatter_experiment(const SolverConfig& base, const ScatteringOptions& options, double max_horizon);

/// 8 rho_rms T: four times the distance travelled at the rms group velocity
/// 2 rho_rms of u0's spectrum.
double scattering_radius(const RadialField& u0, double horizon);

}  // namespace invsq
