#include "invsq/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
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

// s_m = sqrt(w_m) r_m^{(n-2)/2}; T (s u) holds the scaled coefficients
// sqrt(W) F, on which e^{-i t P_a} is diagonal.
Eigen::VectorXd sample_scale(const RadialGrid& grid, int dim) {
  return grid.weights().array().sqrt() * grid.nodes().array().pow(0.5 * (dim - 2.0));
}

// Advances samples by the linear flow with a precomputed phase.
class LinearStepper {
 public:
  LinearStepper(const GridPtr& grid, int dim, double dt)
      : grid_(grid), scale_(sample_scale(*grid, dim)), phase_(grid->size()) {
    for (int k = 0; k < grid->size(); ++k) phase_(k) = std::polar(1.0, -dt * grid->rho()(k) * grid->rho()(k));
  }

  void apply(Eigen::VectorXcd& u) const {
    const Eigen::MatrixXd& t = grid_->transform();
    Eigen::VectorXcd c = t * (scale_.cast<cplx>().cwiseProduct(u));
    c.array() *= phase_.array();
    u = (t * c).cwiseQuotient(scale_.cast<cplx>());
  }

 private:
  GridPtr grid_;
  Eigen::VectorXd scale_;
  Eigen::VectorXcd phase_;
};

void nonlinear_phase(Eigen::VectorXcd& u, double tau, double p, double coef) {
  if (coef == 0.0) return;
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    const double amp = std::abs(u(m));
    u(m) *= std::polar(1.0, -tau * coef * std::pow(amp, p - 1.0));
  }
}

bool all_finite(const Eigen::VectorXcd& u) { return u.allFinite(); }

template <typename T>
void put(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw ConfigError("snapshot file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed:
      return "completed";
    case RunStatus::BlowUp:
      return "blow-up";
    case RunStatus::WallReached:
      return "wall-reached";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0, got " + fmt(dt));
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be >= 0, got " + fmt(horizon));
  if (horizon > 0.0 && horizon < dt * (1.0 - 1e-12)) {
    throw ConfigError("horizon " + fmt(horizon) + " is shorter than dt " + fmt(dt));
  }
  if (snapshot_stride < 1) throw ConfigError("snapshot-stride must be >= 1");
  if (n_modes < 8) throw ConfigError("n-modes must be >= 8");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("radius must be > 0");
  if (!(initial.width > 0.0)) throw ConfigError("initial.width must be > 0");
  if (!std::isfinite(initial.amplitude)) throw ConfigError("initial.amplitude must be finite");
  if (initial.family != "gaussian" && initial.family != "sector-gaussian") {
    throw ConfigError("unknown initial.family '" + initial.family + "' (gaussian, sector-gaussian)");
  }
  if (nu_override && !(*nu_override > 0.0)) throw ConfigError("nu-override must be > 0");
  if (!(blowup_factor > 1.0)) throw ConfigError("blow-up factor must exceed 1");
  if (!(wall_fraction > 0.0 && wall_fraction < 1.0)) throw ConfigError("wall fraction must lie in (0, 1)");
  if (!(wall_threshold > 0.0)) throw ConfigError("wall threshold must be > 0");
}

double SolverConfig::grid_order() const { return nu_override.value_or(sector_spec(params, 0).nu); }

GridPtr SolverConfig::grid() const { return make_grid(BesselOrder(grid_order()), n_modes, radius); }

RadialField make_initial(const GridPtr& grid, int dim, const InitialData& data) {
  const auto& r = grid->nodes();
  Eigen::VectorXcd u(r.size());
  const double w = data.width;
  double power = 0.0;
  if (data.family == "sector-gaussian") {
    power = grid->nu() - 0.5 * (dim - 2.0);
  } else if (data.family != "gaussian") {
    throw ConfigError("unknown initial.family '" + data.family + "'");
  }
  for (Eigen::Index m = 0; m < r.size(); ++m) {
    const double x = r(m) / w;
    u(m) = data.amplitude * std::pow(x, power) * std::exp(-0.5 * x * x);
  }
  return RadialField(grid, std::move(u), dim);
}

RadialField linear_propagate(const RadialField& f, double t) {
  if (t == 0.0) return f;
  return apply_multiplier(f, [t](double lambda) { return std::polar(1.0, -t * lambda); });
}

RadialField heat_propagate(const RadialField& f, double t) {
  if (!(t >= 0.0)) throw DomainError("heat_propagate needs t >= 0, got t = " + fmt(t));
  if (t == 0.0) return f;
  return apply_multiplier(f, [t](double lambda) { return cplx(std::exp(-t * lambda), 0.0); });
}

RadialField nls_step_strang(const RadialField& f, double dt, const ModelParams& params, double nonlinear_coef) {
  if (!(dt > 0.0)) throw DomainError("nls_step_strang needs dt > 0");
  Eigen::VectorXcd u = f.samples();
  nonlinear_phase(u, 0.5 * dt, params.p(), nonlinear_coef);
  LinearStepper(f.grid(), f.dim(), dt).apply(u);
  nonlinear_phase(u, 0.5 * dt, params.p(), nonlinear_coef);
  if (!all_finite(u)) throw NumericsError("Strang step produced a non-finite field");
  return f.with_samples(std::move(u));
}

Trajectory run(const SolverConfig& config) {
  config.validate();
  return run(config, make_initial(config.grid(), config.params.n(), config.initial));
}

Trajectory run(const SolverConfig& config, const RadialField& u0) {
  config.validate();
  const GridPtr& grid = u0.grid();
  const int dim = u0.dim();
  Trajectory traj;
  // A grid order other than nu_0(a) encodes its own coupling.
  traj.params = config.params;
  if (std::abs(coupling_of(u0) - config.params.a()) > 1e-12 * std::max(1.0, std::abs(config.params.a()))) {
    traj.params = ModelParams(config.params.n(), coupling_of(u0), config.params.p());
  }
  traj.nonlinear_coef = config.nonlinear_coef;

  auto store = [&](const Eigen::VectorXcd& u, double t) {
    traj.times.push_back(t);
    traj.snapshots.push_back(u0.with_samples(u));
    if (config.diagnostics) {
      traj.records.push_back(make_record(traj.snapshots.back(), traj.params, t, config.nonlinear_coef));
    }
  };

  Eigen::VectorXcd u = u0.samples();
  store(u, 0.0);
  if (config.horizon == 0.0) return traj;

  const long steps = std::max(1L, static_cast<long>(std::ceil(config.horizon / config.dt - 1e-9)));
  const double dt = config.horizon / static_cast<double>(steps);
  const LinearStepper stepper(grid, dim, dt);
  const double p = traj.params.p();
  const double sup0 = u.cwiseAbs().maxCoeff();
  const double mass0 = mass(u0);
  const double wall = (1.0 - config.wall_fraction) * grid->radius();
  const Eigen::VectorXd vw =
      grid->weights().array() * grid->nodes().array().pow(dim - 2.0) * sphere_area(dim);

  Eigen::VectorXcd previous;
  for (long step = 1; step <= steps; ++step) {
    previous = u;
    nonlinear_phase(u, 0.5 * dt, p, config.nonlinear_coef);
    stepper.apply(u);
    nonlinear_phase(u, 0.5 * dt, p, config.nonlinear_coef);
    const double t = dt * static_cast<double>(step);

    if (!all_finite(u)) {
      traj.status = RunStatus::BlowUp;
      traj.message = "non-finite field at t = " + fmt(t) + "; last finite state kept at t = " + fmt(t - dt);
      store(previous, t - dt);
      return traj;
    }
    const double sup = u.cwiseAbs().maxCoeff();
    if (sup0 > 0.0 && sup > config.blowup_factor * sup0) {
      traj.status = RunStatus::BlowUp;
      traj.message = "sup-norm " + fmt(sup) + " exceeds " + fmt(config.blowup_factor) + " x initial " + fmt(sup0) +
                     " at t = " + fmt(t);
      store(u, t);
      return traj;
    }
    if (mass0 > 0.0) {
      double shell = 0.0;
      for (Eigen::Index m = 0; m < u.size(); ++m) {
        if (grid->nodes()(m) > wall) shell += vw(m) * std::norm(u(m));
      }
      if (shell > config.wall_threshold * mass0) {
        traj.status = RunStatus::WallReached;
        traj.message = "boundary mass fraction " + fmt(shell / mass0) + " exceeds " + fmt(config.wall_threshold) +
                       " at t = " + fmt(t) + "; enlarge the radius or shorten the horizon";
        store(u, t);
        return traj;
      }
    }
    if (step % config.snapshot_stride == 0 || step == steps) store(u, t);
  }
  return traj;
}

void require_completed(const Trajectory& traj) {
  if (traj.status != RunStatus::Completed) {
    throw NumericsError(std::string("run ended early (") + to_string(traj.status) + "): " + traj.message);
  }
}

PicardResult picard_iterate(const SolverConfig& config, const RadialField& u0, int iterations, int time_points) {
  config.validate();
  if (iterations < 1) throw DomainError("picard_iterate needs at least one iteration");
  if (time_points < 2 || time_points % 2 != 0) throw DomainError("picard_iterate needs an even number of time steps");
  if (!(config.horizon > 0.0)) throw DomainError("picard_iterate needs a horizon T > 0");
  const ExponentPlan plan = lwp_exponents(config.params, config.lwp_margin);
  const GridPtr& grid = u0.grid();
  const int dim = u0.dim();
  const Eigen::Index n = grid->size();
  const int steps = time_points;
  const double h = config.horizon / steps;
  const double p = config.params.p();
  const double coef = config.nonlinear_coef;
  const Eigen::MatrixXd& tr = grid->transform();
  const Eigen::VectorXcd scale = sample_scale(*grid, dim).cast<cplx>();
  const Eigen::ArrayXd lambda = grid->rho().array().square();

  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) times[static_cast<std::size_t>(j)] = h * j;

  const Eigen::VectorXcd c0 = tr * scale.cwiseProduct(u0.samples());
  auto flow = [&](double t) -> Eigen::ArrayXcd {
    Eigen::ArrayXcd out(n);
    for (Eigen::Index k = 0; k < n; ++k) out(k) = std::polar(1.0, -t * lambda(k));
    return out;
  };
  auto to_samples = [&](const Eigen::VectorXcd& c) -> Eigen::VectorXcd {
    return (tr * c).cwiseQuotient(scale);
  };

  std::vector<Eigen::VectorXcd> current(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    current[j] = to_samples((flow(times[j]) * c0.array()).matrix());
  }

  const Eigen::VectorXd vw = grid->weights().array() * grid->nodes().array().pow(dim - 2.0);
  auto distance = [&](const std::vector<Eigen::VectorXcd>& a, const std::vector<Eigen::VectorXcd>& b) {
    std::vector<double> g(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double norm = lr_norm(grid, a[j] - b[j], dim, plan.r);
      g[j] = std::pow(norm, plan.q);
    }
    double sum = 0.0;
    for (std::size_t j = 1; j < g.size(); ++j) sum += 0.5 * h * (g[j] + g[j - 1]);
    return std::pow(sum, 1.0 / plan.q);
  };

  PicardResult out;
  out.q = plan.q;
  out.r = plan.r;
  out.times = times;
  std::vector<Eigen::ArrayXcd> g(times.size());
  std::vector<Eigen::VectorXcd> next(times.size());
  int rises = 0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t j = 0; j < times.size(); ++j) {
      Eigen::VectorXcd nl = current[j];
      for (Eigen::Index m = 0; m < n; ++m) nl(m) *= coef * std::pow(std::abs(nl(m)), p - 1.0);
      g[j] = flow(-times[j]) * (tr * scale.cwiseProduct(nl)).array();
    }
    // Cumulative Simpson; odd indices finish with the 3/8 rule, index 1 with
    // the three-point end formula.
    std::vector<Eigen::ArrayXcd> integral(times.size(), Eigen::ArrayXcd::Zero(n));
    for (std::size_t j = 2; j < times.size(); j += 2) {
      integral[j] = integral[j - 2] + (h / 3.0) * (g[j - 2] + 4.0 * g[j - 1] + g[j]);
    }
    integral[1] = (h / 12.0) * (5.0 * g[0] + 8.0 * g[1] - g[2]);
    for (std::size_t j = 3; j < times.size(); j += 2) {
      integral[j] = integral[j - 3] + (3.0 * h / 8.0) * (g[j - 3] + 3.0 * g[j - 2] + 3.0 * g[j - 1] + g[j]);
    }
    const cplx minus_i(0.0, -1.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
      next[j] = to_samples((flow(times[j]) * (c0.array() + minus_i * integral[j])).matrix());
      if (!next[j].allFinite()) throw NumericsError("Picard iterate became non-finite");
    }
    out.distances.push_back(distance(next, current));
    const std::size_t m = out.distances.size();
    if (m >= 2 && out.distances[m - 1] > out.distances[m - 2]) {
      if (++rises >= 3) out.diverged = true;
    } else {
      rises = 0;
    }
    std::swap(current, next);
  }
  for (const auto& u : current) out.last_iterate.push_back(u0.with_samples(u));
  return out;
}

void write_snapshot(std::ostream& out, const RadialField& f, double t) {
  put<std::int64_t>(out, f.size());
  put<double>(out, f.grid()->radius());
  put<double>(out, f.grid()->nu());
  put<double>(out, t);
  for (Eigen::Index m = 0; m < f.samples().size(); ++m) {
    put<double>(out, f.samples()(m).real());
    put<double>(out, f.samples()(m).imag());
  }
  if (!out) throw NumericsError("failed to write snapshot");
}

LoadedSnapshot read_snapshot(std::istream& in) {
  LoadedSnapshot s;
  s.header.n_modes = get<std::int64_t>(in);
  s.header.radius = get<double>(in);
  s.header.nu = get<double>(in);
  s.header.t = get<double>(in);
  if (s.header.n_modes < 0 || s.header.n_modes > (1 << 26)) throw ConfigError("snapshot header has a bad size");
  s.samples.resize(s.header.n_modes);
  for (Eigen::Index m = 0; m < s.samples.size(); ++m) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    s.samples(m) = cplx(re, im);
  }
  return s;
}

}  // namespace invsq
