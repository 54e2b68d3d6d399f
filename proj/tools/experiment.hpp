#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "invsq/config.hpp"

namespace invsq::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerics = 3;
inline constexpr int kExitNotConverged = 4;

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr int kSnapshotFormatVersion = 1;

struct RunOptions {
  bool quiet = false;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string status = "ok";
  std::string message;
  nlohmann::ordered_json scalars = nlohmann::ordered_json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

/// Runs config.kind into config.out_dir and writes manifest.json (bit-stable
/// for a fixed config) and runtime.json (wall-clock only). Library errors are
/// mapped onto exit codes and recorded in the manifest; nothing escapes.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// The JSON printed by `constants`.
nlohmann::ordered_json constants_json(const ModelParams& params, double lwp_margin = 0.01);

/// Maximum residuals of the special functions against Boost.Math.
nlohmann::ordered_json specfun_selftest();

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::string& message);

}  // namespace invsq::app
