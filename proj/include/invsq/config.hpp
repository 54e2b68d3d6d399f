#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "invsq/heatkernel.hpp"
#include "invsq/solver.hpp"

namespace invsq {

/// Everything one CLI invocation needs. The file format is flat
/// `key = value` lines with `#` comments; docs/config.md lists the keys.
struct ExperimentConfig {
  std::string kind = "simulate";  // simulate | scatter | verify | heatkernel | constants | dht-selftest
  std::string check;              // verify only: hardy | kinetic | morawetz | strichartz | sobolev | resolvent
  SolverConfig solver;
  std::string initial_snapshot;   // optional binary snapshot replacing the named initial data
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  // scatter
  double tolerance = 1e-4;
  double first_checkpoint = 1.0;
  double eta = 0.5;
  double max_horizon = 160.0;

  // heatkernel
  int t_points = 7;
  int r_points = 7;
  EnvelopeOptions envelope;

  // verify
  std::vector<double> hardy_eps{0.3, 0.1, 0.03, 0.01, 0.003};
  std::vector<double> hardy_s{0.5, 1.0, 0.4};
  std::vector<double> hardy_p{2.0, 2.0, 3.0};
  double strichartz_q = 2.0;
  double strichartz_r = 6.0;
  double sobolev_s = 1.0;
  std::vector<double> sobolev_r{1.2, 1.5, 2.0, 2.4};
  int family_size = 20;
  std::vector<double> resolvent_alpha_re{1.0, -1.0, 4.0};
  std::vector<double> resolvent_alpha_im{0.5, 0.0, 0.1};

  // dht-selftest
  std::vector<double> nu_list{0.0, 0.5, 0.9, 2.3};

  const ModelParams& params() const noexcept { return solver.params; }
};

/// Throws ConfigError with the 1-based line number for syntax errors,
/// unknown keys, malformed values and violated model invariants. `adjust`
/// runs after parsing and before the kind-specific validation; the CLI uses
/// it to apply command-line overrides.
using ConfigAdjust = std::function<void(ExperimentConfig&)>;
ExperimentConfig parse_config_text(const std::string& text, const ConfigAdjust& adjust = {});
ExperimentConfig parse_config(const std::string& path, const ConfigAdjust& adjust = {});

/// Every key, in a fixed order, with round-trip precision.
std::string serialize_config(const ExperimentConfig& config);

/// Cross-field checks that depend on the experiment kind, for example the
/// scattering range of p. Throws ConfigError.
void validate_for_kind(const ExperimentConfig& config);

/// FNV-1a 64 of serialize_config with out-dir reset, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace invsq
