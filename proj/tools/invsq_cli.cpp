#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiment.hpp"
#include "invsq/errors.hpp"

namespace fs = std::filesystem;
using invsq::ExperimentConfig;
using namespace invsq::app;

namespace {

struct Globals {
  std::string config;
  std::string out_dir;
  bool quiet = false;
};

ExperimentConfig load(const Globals& g, const invsq::ConfigAdjust& adjust) {
  auto all = [&](ExperimentConfig& c) {
    if (adjust) adjust(c);
    if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  };
  if (g.config.empty()) return invsq::parse_config_text("", all);
  return invsq::parse_config(g.config, all);
}

int report(const RunResult& r) {
  if (r.exit_code != kExitOk) std::cerr << "error: " << r.message << "\n";
  return r.exit_code;
}

int run_kind(const Globals& g, const invsq::ConfigAdjust& adjust) {
  try {
    const ExperimentConfig c = load(g, adjust);
    return report(run_experiment(c, {g.quiet}));
  } catch (...) {
    std::string msg;
    const int code = exit_code_for_current_exception(msg);
    std::cerr << "error: " << msg << "\n";
    return code;
  }
}

invsq::ConfigAdjust set_kind(const std::string& kind) {
  return [kind](ExperimentConfig& c) { c.kind = kind; };
}

// One child process per config, at most `jobs` at a time.
int sweep(const Globals& g, const std::vector<std::string>& configs, int jobs) {
  const fs::path root = g.out_dir.empty() ? fs::path("sweep") : fs::path(g.out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) {
    std::cerr << "error: cannot create '" << root.string() << "'\n";
    return kExitConfig;
  }
  std::vector<fs::path> dirs;
  std::set<std::string> used;
  for (const auto& c : configs) {
    std::string stem = fs::path(c).stem().string();
    for (int k = 2; used.count(stem); ++k) stem = fs::path(c).stem().string() + "-" + std::to_string(k);
    used.insert(stem);
    dirs.push_back(root / stem);
  }

  const std::string self = fs::read_symlink("/proc/self/exe").string();
  std::map<pid_t, std::size_t> running;
  std::vector<int> codes(configs.size(), kExitNumerics);
  auto reap = [&] {
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid <= 0) return;
    const auto it = running.find(pid);
    if (it == running.end()) return;
    codes[it->second] = WIFEXITED(status) ? WEXITSTATUS(status) : kExitNumerics;
    running.erase(it);
  };
  for (std::size_t i = 0; i < configs.size(); ++i) {
    while (static_cast<int>(running.size()) >= jobs) reap();
    std::cout.flush();
    std::cerr.flush();
    const pid_t pid = fork();
    if (pid == 0) {
      const std::string dir = dirs[i].string();
      std::vector<const char*> argv{self.c_str(), "run", "--config", configs[i].c_str(), "--out-dir", dir.c_str()};
      if (g.quiet) argv.push_back("--quiet");
      argv.push_back(nullptr);
      execv(self.c_str(), const_cast<char* const*>(argv.data()));
      _exit(127);
    }
    if (pid < 0) {
      std::cerr << "error: fork failed for " << configs[i] << "\n";
      continue;
    }
    running[pid] = i;
  }
  while (!running.empty()) reap();

  std::ofstream csv(root / "sweep.csv");
  csv << "config,out_dir,exit_code\n";
  int worst = kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    csv << configs[i] << "," << dirs[i].string() << "," << codes[i] << "\n";
    worst = std::max(worst, codes[i]);
  }
  if (!g.quiet) std::cerr << "sweep: " << configs.size() << " runs, wrote " << (root / "sweep.csv").string() << "\n";
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial NLS with an inverse-square potential: simulation and verification runs"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "output directory (overrides out-dir in the config)");
  app.add_flag("--quiet", g.quiet, "only report errors");

  int code = kExitOk;

  auto* simulate = app.add_subcommand("simulate", "time-step a trajectory");
  simulate->callback([&] { code = run_kind(g, set_kind("simulate")); });

  auto* scatter = app.add_subcommand("scatter", "scattering state and Cauchy increments");
  scatter->callback([&] { code = run_kind(g, set_kind("scatter")); });

  auto* verify = app.add_subcommand("verify", "inequality and estimate checks");
  std::string check;
  verify->add_option("--check", check, "which check")
      ->check(CLI::IsMember({"hardy", "kinetic", "morawetz", "strichartz", "sobolev", "resolvent"}));
  verify->callback([&] {
    code = run_kind(g, [&](ExperimentConfig& c) {
      c.kind = "verify";
      if (!check.empty()) c.check = check;
    });
  });

  auto* heat = app.add_subcommand("heatkernel", "heat kernel synthesis and envelope fit");
  heat->callback([&] { code = run_kind(g, set_kind("heatkernel")); });

  auto* constants = app.add_subcommand("constants", "print the model constants as JSON");
  std::optional<int> cn;
  std::optional<double> ca;
  std::optional<double> cp;
  constants->add_option("--n", cn, "dimension");
  constants->add_option("--a", ca, "coupling");
  constants->add_option("--p", cp, "exponent");
  constants->callback([&] {
    code = run_kind(g, [&](ExperimentConfig& c) {
      c.kind = "constants";
      const auto& p = c.params();
      try {
        c.solver.params = invsq::ModelParams(cn.value_or(p.n()), ca.value_or(p.a()), cp.value_or(p.p()));
      } catch (const invsq::DomainError& e) {
        throw invsq::ConfigError(e.what());
      }
    });
  });

  auto* dht = app.add_subcommand("dht-selftest", "transform round-trip and Parseval residuals");
  std::optional<double> nu;
  std::optional<int> n_modes;
  std::optional<double> radius;
  dht->add_option("--nu", nu, "single order (default: the dht.nu list)");
  dht->add_option("--n-modes", n_modes, "number of modes");
  dht->add_option("--radius", radius, "truncation radius");
  dht->callback([&] {
    code = run_kind(g, [&](ExperimentConfig& c) {
      c.kind = "dht-selftest";
      if (nu) c.nu_list = {*nu};
      if (n_modes) c.solver.n_modes = *n_modes;
      if (radius) c.solver.radius = *radius;
    });
  });

  auto* sw = app.add_subcommand("sweep", "run several configs in isolated processes");
  std::vector<std::string> configs;
  int jobs = 1;
  sw->add_option("configs", configs, "config files")->required()->check(CLI::ExistingFile);
  sw->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sw->callback([&] { code = sweep(g, configs, jobs); });

  // Runs the kind named in the config; used by sweep.
  auto* run = app.add_subcommand("run", "run the experiment the config names");
  run->group("");
  run->callback([&] { code = run_kind(g, {}); });

  auto* spec = app.add_subcommand("selftest-specfun", "special-function residuals against Boost.Math");
  spec->group("");
  spec->callback([&] { std::cout << specfun_selftest().dump(2) << "\n"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return code;
}
