#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "invsq/trajectory.hpp"

namespace invsq {

/// Named initial data. Families:
///   gaussian         A exp(-r^2 / (2 w^2))
///   sector-gaussian  A (r/w)^{nu - (n-2)/2} exp(-r^2 / (2 w^2)), smooth in the
///                    operator's own eigenbasis
struct InitialData {
  std::string family = "gaussian";
  double width = 1.0;
  double amplitude = 1.0;
};

struct SolverConfig {
  ModelParams params{3, 0.0, 3.0};
  std::optional<double> nu_override;  // grid order; defaults to nu_0(a)
  int n_modes = 256;
  double radius = 20.0;
  double dt = 0.01;
  double horizon = 1.0;
  int snapshot_stride = 10;
  InitialData initial;
  double lwp_margin = 0.01;

  // Test and experiment knobs.
  double nonlinear_coef = 1.0;
  double blowup_factor = 1e6;
  double wall_fraction = 0.1;
  double wall_threshold = 1e-6;
  bool diagnostics = true;

  /// Throws ConfigError on dt <= 0, horizon < 0, stride < 1 and friends.
  void validate() const;
  double grid_order() const;
  GridPtr grid() const;
};

RadialField make_initial(const GridPtr& grid, int dim, const InitialData& data);

/// e^{-i t P_a} f.
RadialField linear_propagate(const RadialField& f, double t);

/// e^{-t P_a} f, t >= 0.
RadialField heat_propagate(const RadialField& f, double t);

/// One Strang step: half nonlinear phase, exact linear step, half phase.
RadialField nls_step_strang(const RadialField& f, double dt, const ModelParams& params, double nonlinear_coef = 1.0);

/// Steps from u0 to the horizon, storing a snapshot every `snapshot_stride`
/// steps and at the horizon. Blow-up and wall contact end the run early with
/// the status set; the snapshots up to that point are kept.
Trajectory run(const SolverConfig& config, const RadialField& u0);
Trajectory run(const SolverConfig& config);

/// Throws NumericsError unless the run completed.
void require_completed(const Trajectory& traj);

struct PicardResult {
  std::vector<double> distances;  // d_m = ||u^{(m+1)} - u^{(m)}||_{L^q_t L^r_x}
  double q = 0.0;
  double r = 0.0;
  bool diverged = false;  // d_m increased three times in a row
  std::vector<double> times;
  std::vector<RadialField> last_iterate;
};

/// Iterates the Duhamel map on [0, T] with T = config.horizon, using
/// `time_points` + 1 equispaced times (time_points even) and cumulative
/// Simpson quadrature in s.
PicardResult picard_iterate(const SolverConfig& config, const RadialField& u0, int iterations, int time_points);

/// Little-endian: int64 N, f64 R, f64 nu, f64 t, then N pairs (re, im).
void write_snapshot(std::ostream& out, const RadialField& f, double t);

struct SnapshotHeader {
  std::int64_t n_modes;
  double radius;
  double nu;
  double t;
};

struct LoadedSnapshot {
  SnapshotHeader header;
  Eigen::VectorXcd samples;
};

LoadedSnapshot read_snapshot(std::istream& in);

}  // namespace invsq
