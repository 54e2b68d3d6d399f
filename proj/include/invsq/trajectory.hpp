#pragma once

#include <string>
#include <vector>

#include "invsq/hankel.hpp"
#include "invsq/operator.hpp"

namespace invsq {

/// Functionals of one snapshot. `kinetic` is ||grad u||^2, `potential` is
/// a int |u|^2/|x|^2 and `nonlinear` is (2/(p+1)) int |u|^{p+1}, so that
/// energy = (kinetic + potential + nonlinear) / 2.
struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double nonlinear = 0.0;
  double h_half = 0.0;  // ||u||_{H^{1/2}} of the free Laplacian
  double sup_norm = 0.0;
  double boundary_mass = 0.0;
  double hardy_quotient = 0.0;  // int |u|^2/|x|^2 / ||grad u||^2
};

enum class RunStatus { Completed, BlowUp, WallReached };

const char* to_string(RunStatus status);

struct Trajectory {
  ModelParams params{3, 0.0, 3.0};
  double nonlinear_coef = 1.0;
  std::vector<double> times;
  std::vector<RadialField> snapshots;
  std::vector<DiagnosticsRecord> records;  // empty when diagnostics were off
  RunStatus status = RunStatus::Completed;
  std::string message;

  std::size_t size() const noexcept { return times.size(); }
};

}  // namespace invsq
