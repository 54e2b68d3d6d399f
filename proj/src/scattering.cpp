#include "invsq/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invsq/diagnostics.hpp"
#include "invsq/errors.hpp"

namespace invsq {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require_snapshots(const Trajectory& traj, std::size_t count, const char* what) {
  if (traj.size() < count) {
    throw DomainError(std::string(what) + " needs at least " + std::to_string(count) + " snapshots, got " +
                      std::to_string(traj.size()));
  }
}

// Hankel coefficients of e^{itP} u.
Eigen::VectorXcd interaction_coefficients(const RadialField& u, double t) {
  SpectralField F = dht_forward(u);
  const auto& rho = u.grid()->rho();
  auto& c = F.mutable_coefficients();
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, t * rho(k) * rho(k));
  return c;
}

RadialField nonlinearity(const RadialField& u, const ModelParams& params, double coef) {
  Eigen::VectorXcd out = u.samples();
  const double e = params.p() - 1.0;
  for (Eigen::Index m = 0; m < out.size(); ++m) out(m) *= coef * std::pow(std::abs(out(m)), e);
  return u.with_samples(std::move(out));
}

// Weights of composite Simpson on arbitrary increasing nodes.
std::vector<double> simpson_weights(const std::vector<double>& t) {
  const std::size_t n = t.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  if (n == 2) {
    w[0] = w[1] = 0.5 * (t[1] - t[0]);
    return w;
  }
  const std::size_t intervals = n - 1;
  const std::size_t paired = intervals - intervals % 2;
  for (std::size_t i = 0; i + 2 <= paired; i += 2) {
    const double h0 = t[i + 1] - t[i];
    const double h1 = t[i + 2] - t[i + 1];
    const double s = (h0 + h1) / 6.0;
    w[i] += s * (2.0 - h1 / h0);
    w[i + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
    w[i + 2] += s * (2.0 - h0 / h1);
  }
  if (paired < intervals) {
    // Last interval from the quadratic through the final three nodes.
    const double h0 = t[n - 2] - t[n - 3];
    const double h1 = t[n - 1] - t[n - 2];
    w[n - 1] += (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
    w[n - 2] += (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
    w[n - 3] -= h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
  }
  return w;
}

}  // namespace

double h1_norm(const GridPtr& grid, int dim, const Eigen::VectorXcd& coefficients) {
  const auto& W = grid->spectral_weights();
  const auto& rho = grid->rho();
  double s = 0.0;
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    s += W(k) * (1.0 + rho(k) * rho(k)) * std::norm(coefficients(k));
  }
  return std::sqrt(sphere_area(dim) * s);
}

double h1_norm(const RadialField& f) { return h1_norm(f.grid(), f.dim(), dht_forward(f).coefficients()); }

std::vector<std::size_t> dyadic_checkpoints(const Trajectory& traj, double first) {
  require_snapshots(traj, 2, "dyadic checkpoints");
  const double T = traj.times.back();
  if (!(first > 0.0) || !(first <= T)) {
    throw DomainError("first checkpoint must lie in (0, T] = (0, " + fmt(T) + "], got " + fmt(first));
  }
  const int m = static_cast<int>(std::floor(std::log2(T / first) + 1e-12));
  std::vector<std::size_t> out;
  for (int j = m; j >= 0; --j) {
    const double target = std::ldexp(T, -j);
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), target);
    std::size_t idx = static_cast<std::size_t>(it - traj.times.begin());
    if (idx == traj.size()) idx = traj.size() - 1;
    if (idx > 0 && target - traj.times[idx - 1] < traj.times[idx] - target) --idx;
    if (idx == 0) idx = 1;
    if (out.empty() || idx > out.back()) out.push_back(idx);
  }
  return out;
}

InteractionProfile interaction_profile(const Trajectory& traj, double first_checkpoint) {
  InteractionProfile out;
  if (!traj.params.scattering_ok()) {
    out.hypotheses_ok = false;
    out.warning = "parameters are outside the scattering range (a = " + fmt(traj.params.a()) +
                  ", p = " + fmt(traj.params.p()) + "); results are exploratory";
  }
  const auto idx = dyadic_checkpoints(traj, first_checkpoint);
  const RadialField& u0 = traj.snapshots.front();
  Eigen::VectorXcd prev = dht_forward(u0).coefficients();
  for (std::size_t i : idx) {
    Eigen::VectorXcd v = interaction_coefficients(traj.snapshots[i], traj.times[i]);
    out.increments.push_back(h1_norm(u0.grid(), u0.dim(), v - prev));
    out.times.push_back(traj.times[i]);
    prev = v;
    out.v_hat.push_back(std::move(v));
  }
  return out;
}

ScatterState scatter_state(const Trajectory& traj, double tolerance, double first_checkpoint) {
  require_snapshots(traj, 2, "scatter_state");
  const RadialField& u0 = traj.snapshots.front();
  const auto w = simpson_weights(traj.times);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(u0.size());
  if (traj.nonlinear_coef != 0.0) {
    for (std::size_t j = 0; j < traj.size(); ++j) {
      const RadialField nl = nonlinearity(traj.snapshots[j], traj.params, traj.nonlinear_coef);
      acc += w[j] * interaction_coefficients(nl, traj.times[j]);
    }
  }
  Eigen::VectorXcd plus = dht_forward(u0).coefficients() - cplx(0.0, 1.0) * acc;

  ScatterState out{dht_inverse(SpectralField(u0.grid(), plus, u0.dim(), u0.sector())), 0.0, 0.0, false};
  const Eigen::VectorXcd vT = interaction_coefficients(traj.snapshots.back(), traj.times.back());
  out.duhamel_defect = h1_norm(u0.grid(), u0.dim(), plus - vT);
  const auto profile = interaction_profile(traj, first_checkpoint);
  out.tail_bound = profile.increments.back();
  out.converged = out.tail_bound < tolerance * h1_norm(u0);
  return out;
}

Subdivision subdivide_by_norm(const Trajectory& traj, double eta) {
  if (!(eta > 0.0)) throw DomainError("subdivision threshold eta must be positive, got " + fmt(eta));
  require_snapshots(traj, 1, "subdivide_by_norm");
  const int n = traj.params.n();
  const double q = n + 1.0;
  const double r = 2.0 * (n + 1.0) / (n - 1.0);
  std::vector<double> g(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) g[j] = std::pow(lr_norm(traj.snapshots[j], r), q);

  Subdivision out;
  const double budget = std::pow(eta, q);
  std::size_t start = 0;
  while (start + 1 < traj.size()) {
    double total = 0.0;
    std::size_t end = start;
    while (end + 1 < traj.size()) {
      const double step = 0.5 * (traj.times[end + 1] - traj.times[end]) * (g[end] + g[end + 1]);
      if (end > start && total + step > budget) break;
      total += step;
      ++end;
      if (total > budget) break;
    }
    if (end == start + 1 && total > budget) ++out.single_snapshot;
    out.starts.push_back(traj.times[start]);
    out.ends.push_back(traj.times[end]);
    out.norms.push_back(std::pow(total, 1.0 / q));
    start = end;
  }
  if (out.norms.empty()) {
    out.starts.push_back(traj.times.front());
    out.ends.push_back(traj.times.front());
    out.norms.push_back(0.0);
  }
  return out;
}

ScatteringReport scattering_report(const Trajectory& traj, const ScatteringOptions& options) {
  const auto profile = interaction_profile(traj, options.first_checkpoint);
  const auto state = scatter_state(traj, options.tolerance, options.first_checkpoint);
  const RadialField& u0 = traj.snapshots.front();

  ScatteringReport rep(state.u_plus);
  rep.times = profile.times;
  rep.cauchy_increments = profile.increments;
  rep.hypotheses_ok = profile.hypotheses_ok;
  rep.warning = profile.warning;
  rep.u0_h1 = h1_norm(u0);
  rep.u0_mass = mass(u0);
  rep.u_plus_mass = mass(state.u_plus);
  rep.duhamel_defect = state.duhamel_defect;
  rep.converged = state.converged;

  const Eigen::VectorXcd plus = dht_forward(state.u_plus).coefficients();
  for (std::size_t j = 0; j < profile.times.size(); ++j) {
    rep.distance_to_free.push_back(h1_norm(u0.grid(), u0.dim(), profile.v_hat[j] - plus));
    const double inc = profile.increments[j];
    const double ratio = j > 0 && profile.increments[j - 1] > 0.0 ? inc / profile.increments[j - 1] : 1.0;
    rep.tail_bounds.push_back(ratio < 1.0 ? inc * ratio / (1.0 - ratio) : inc);
  }
  rep.subdivision = subdivide_by_norm(traj, options.eta);
  return rep;
}

ScatterExperiment scatter_experiment(const SolverConfig& base, const ScatteringOptions& options, double max_horizon) {
  base.validate();
  if (!(base.horizon > 0.0) || !(max_horizon >= base.horizon)) {
    throw ConfigError("scatter needs 0 < horizon <= max horizon, got " + fmt(base.horizon) + " and " +
                      fmt(max_horizon));
  }
  const RadialField probe = make_initial(base.grid(), base.params.n(), base.initial);
  std::vector<double> horizons;
  double T = base.horizon;
  for (;;) {
    SolverConfig cfg = base;
    cfg.horizon = T;
    cfg.radius = std::max(base.radius, scattering_radius(probe, T));
    cfg.snapshot_stride = 1;
    cfg.diagnostics = false;
    horizons.push_back(T);
    Trajectory traj = run(cfg);
    ScatteringReport rep = scattering_report(traj, options);
    const bool stop = rep.converged || traj.status != RunStatus::Completed || 2.0 * T > max_horizon * (1.0 + 1e-12);
    if (stop) return ScatterExperiment{cfg, std::move(traj), std::move(rep), std::move(horizons)};
    T *= 2.0;
  }
}

double scattering_radius(const RadialField& u0, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("scattering_radius needs a positive horizon");
  const SpectralField F = dht_forward(u0);
  const auto& W = u0.grid()->spectral_weights();
  const auto& rho = u0.grid()->rho();
  double m0 = 0.0;
  double m2 = 0.0;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    const double e = W(k) * std::norm(F.coefficients()(k));
    m0 += e;
    m2 += e * rho(k) * rho(k);
  }
  if (!(m0 > 0.0)) throw DomainError("scattering_radius needs nonzero data");
  return 8.0 * std::sqrt(m2 / m0) * horizon;
}

}  // namespace invsq
