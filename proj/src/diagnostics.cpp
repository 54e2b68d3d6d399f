#include "invsq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

// w_m r_m^{n-2}: node weights for int g r^{n-1} dr.
Eigen::VectorXd volume_weights(const RadialGrid& grid, int dim) {
  return grid.weights().array() * grid.nodes().array().pow(dim - 2.0);
}

double sum_abs_pow(const Eigen::VectorXd& vw, const Eigen::VectorXcd& u, double r) {
  return (vw.array() * u.array().abs().pow(r)).sum();
}

double inverse_square_of_mapped(const RadialGrid& grid, const Eigen::VectorXcd& f) {
  const Eigen::MatrixXd& g = grid.moment_form(-1);
  const double re = f.real().dot(g * f.real());
  const double im = f.imag().dot(g * f.imag());
  return re + im;
}

double quadratic_form(const RadialField& f) {
  const SpectralField F = dht_forward(f);
  const auto& grid = *f.grid();
  const double sum =
      (grid.spectral_weights().array() * grid.rho().array().square() * F.coefficients().array().abs2()).sum();
  return sphere_area(f.dim()) * sum;
}

void check_params(const RadialField& f, const ModelParams& params) { require_sector(f, params); }

std::pair<std::size_t, std::size_t> window_indices(const Trajectory& traj, double t0, double t1) {
  if (traj.size() == 0) throw DomainError("window mismatch: trajectory is empty");
  if (!(t1 >= t0)) throw DomainError("window mismatch: t1 < t0");
  auto find = [&](double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    for (std::size_t j = 0; j < traj.size(); ++j) {
      if (std::abs(traj.times[j] - t) <= tol) return j;
    }
    throw DomainError("window mismatch: t = " + fmt(t) + " is not a snapshot time (covered range [" +
                      fmt(traj.times.front()) + ", " + fmt(traj.times.back()) + "])");
  };
  return {find(t0), find(t1)};
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& g) {
  double sum = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) sum += 0.5 * (t[j] - t[j - 1]) * (g[j] + g[j - 1]);
  return sum;
}

// Composite Gauss-Legendre in theta, graded towards theta = 0 where the
// distance |x - y| nearly vanishes for r close to r'.
struct AngularRule {
  std::vector<double> cos_theta;
  std::vector<double> weight;  // includes sin^{n-2} and the normalisation
};

AngularRule make_angular_rule(int n) {
  using rule = boost::math::quadrature::gauss<double, 12>;
  std::vector<double> edges{0.0};
  for (int d = 40; d >= 0; --d) edges.push_back(M_PI * std::ldexp(1.0, -d));
  AngularRule out;
  double total = 0.0;
  const auto& abscissa = rule::abscissa();
  const auto& weights = rule::weights();
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double mid = 0.5 * (edges[e] + edges[e + 1]);
    const double half = 0.5 * (edges[e + 1] - edges[e]);
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        if (abscissa[i] == 0.0 && sign < 0.0) continue;
        const double th = mid + sign * half * abscissa[i];
        const double w = half * weights[i] * std::pow(std::sin(th), n - 2);
        out.cos_theta.push_back(std::cos(th));
        out.weight.push_back(w);
        total += w;
      }
    }
  }
  for (double& w : out.weight) w /= total;
  return out;
}

const AngularRule& angular_rule(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const AngularRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<const AngularRule>(make_angular_rule(n));
  return *slot;
}

double kernel_with(const AngularRule& rule, double r, double rp) {
  const double s = r * r + rp * rp;
  const double c = 2.0 * r * rp;
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.weight.size(); ++q) {
    sum += rule.weight[q] * std::sqrt(std::max(0.0, s - c * rule.cos_theta[q]));
  }
  return sum;
}

struct KernelEntry {
  std::weak_ptr<const RadialGrid> grid;
  std::shared_ptr<const Eigen::MatrixXd> table;
};

std::shared_ptr<const Eigen::MatrixXd> kernel_table(const GridPtr& grid, int n) {
  static std::mutex mutex;
  static std::map<std::pair<const RadialGrid*, int>, KernelEntry> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(grid.get(), n);
  auto it = cache.find(key);
  if (it != cache.end() && it->second.grid.lock() == grid) return it->second.table;

  const AngularRule& rule = angular_rule(n);
  const auto& r = grid->nodes();
  const Eigen::Index size = r.size();
  auto table = std::make_shared<Eigen::MatrixXd>(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel_with(rule, r(i), r(j));
      (*table)(i, j) = k;
      (*table)(j, i) = k;
    }
  }
  cache[key] = KernelEntry{grid, table};
  return table;
}

}  // namespace

double mass(const RadialField& f) {
  const Eigen::VectorXd vw = volume_weights(*f.grid(), f.dim());
  return sphere_area(f.dim()) * sum_abs_pow(vw, f.samples(), 2.0);
}

double lr_norm(const GridPtr& grid, const Eigen::VectorXcd& samples, int dim, double r) {
  if (!(r >= 1.0)) throw DomainError("L^r norm needs r >= 1, got r = " + fmt(r));
  if (std::isinf(r)) return samples.size() == 0 ? 0.0 : samples.cwiseAbs().maxCoeff();
  const Eigen::VectorXd vw = volume_weights(*grid, dim);
  return std::pow(sphere_area(dim) * sum_abs_pow(vw, samples, r), 1.0 / r);
}

double lr_norm(const RadialField& f, double r) { return lr_norm(f.grid(), f.samples(), f.dim(), r); }

double inverse_square_integral(const RadialField& f) {
  return sphere_area(f.dim()) * inverse_square_of_mapped(*f.grid(), f.mapped());
}

EnergyParts energy_parts(const RadialField& f, const ModelParams& params, double nonlinear_coef) {
  check_params(f, params);
  EnergyParts e{};
  e.quadratic = quadratic_form(f);
  e.potential = params.a() == 0.0 ? 0.0 : params.a() * inverse_square_integral(f);
  e.kinetic = e.quadratic - e.potential;
  const double p1 = params.p() + 1.0;
  const Eigen::VectorXd vw = volume_weights(*f.grid(), f.dim());
  e.nonlinear = nonlinear_coef * (2.0 / p1) * sphere_area(f.dim()) * sum_abs_pow(vw, f.samples(), p1);
  e.energy = 0.5 * (e.quadratic + e.nonlinear);
  return e;
}

double energy(const RadialField& f, const ModelParams& params, double nonlinear_coef) {
  return energy_parts(f, params, nonlinear_coef).energy;
}

double boundary_mass(const RadialField& f, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("boundary shell fraction must lie in (0, 1]");
  const auto& grid = *f.grid();
  const double edge = (1.0 - fraction) * grid.radius();
  const Eigen::VectorXd vw = volume_weights(grid, f.dim());
  double sum = 0.0;
  for (Eigen::Index m = 0; m < vw.size(); ++m) {
    if (grid.nodes()(m) > edge) sum += vw(m) * std::norm(f.samples()(m));
  }
  return sphere_area(f.dim()) * sum;
}

DiagnosticsRecord make_record(const RadialField& f, const ModelParams& params, double t, double nonlinear_coef) {
  const EnergyParts e = energy_parts(f, params, nonlinear_coef);
  DiagnosticsRecord rec;
  rec.t = t;
  rec.mass = mass(f);
  rec.energy = e.energy;
  rec.kinetic = e.kinetic;
  rec.potential = e.potential;
  rec.nonlinear = e.nonlinear;
  rec.h_half = std::sqrt(std::max(0.0, free_sobolev_norm_sq(f, 0.5)));
  rec.sup_norm = f.size() == 0 ? 0.0 : f.samples().cwiseAbs().maxCoeff();
  rec.boundary_mass = boundary_mass(f);
  const double pot = params.a() == 0.0 ? inverse_square_integral(f) : e.potential / params.a();
  rec.hardy_quotient = e.kinetic > 0.0 ? pot / e.kinetic : 0.0;
  return rec;
}

double kinetic_check(const DiagnosticsRecord& record, const ModelParams& params) {
  return kinetic_bound_constant(params) * record.energy - record.kinetic;
}

std::vector<KineticViolation> kinetic_violations(const Trajectory& traj, double tol) {
  std::vector<KineticViolation> out;
  for (std::size_t j = 0; j < traj.records.size(); ++j) {
    const double margin = kinetic_check(traj.records[j], traj.params);
    if (margin < -tol * std::abs(traj.records[j].energy)) out.push_back({j, margin});
  }
  return out;
}

double hardy_quotient(const RadialField& f, double s, double p_exp) {
  const double n = f.dim();
  if (!(p_exp >= 1.0)) throw DomainError("hardy_quotient needs p >= 1, got p = " + fmt(p_exp));
  if (!(s >= 0.0 && s < n / p_exp)) {
    throw DomainError("hardy_quotient needs 0 <= s < n/p = " + fmt(n / p_exp) + ", got s = " + fmt(s));
  }
  const Eigen::VectorXd vw = volume_weights(*f.grid(), f.dim());
  double num;
  double den;
  if (s == 0.0) {
    num = den = sum_abs_pow(vw, f.samples(), p_exp);
  } else if (s == 1.0 && p_exp == 2.0) {
    num = inverse_square_of_mapped(*f.grid(), f.mapped());
    den = quadratic_form(f) / sphere_area(f.dim()) - coupling_of(f) * num;
  } else {
    const Eigen::VectorXd weight = vw.array() * f.grid()->nodes().array().pow(-s * p_exp);
    num = sum_abs_pow(weight, f.samples(), p_exp);
    if (p_exp == 2.0) {
      den = free_sobolev_norm_sq(f, s) / sphere_area(f.dim());
    } else {
      den = sum_abs_pow(vw, free_fractional_power(f, s), p_exp);
    }
  }
  if (!(den > 0.0)) throw NumericsError("hardy_quotient: the Sobolev seminorm vanishes");
  return num / den;
}

double hardy_log_quotient(int n, double eps, double taper) {
  const double lam = 0.5 * (n - 2.0);
  if (n < 3) throw DomainError("hardy_log_quotient needs n >= 3");
  if (!(eps > 0.0)) throw DomainError("hardy_log_quotient needs eps > 0");
  if (!(taper > 0.0)) throw DomainError("hardy_log_quotient needs taper > 0");
  // With x = log r and w = r^{(n-2)/2} u: int |u|^2/|x|^2 = int w^2 dx and
  // int |grad u|^2 = int (w' - lam w)^2 dx (both times the sphere area).
  // On x <= 0, w = e^{eps x} and the integrals are closed form.
  double a_int = 0.5 / eps;
  // int (w' - lam w)^2 on (-inf, 0]; the cross term -2 lam int w w' is -lam w(0)^2.
  double b_int = 0.5 * eps - lam + lam * lam * a_int;
  using rule = boost::math::quadrature::gauss<double, 20>;
  const int panels = 64;
  const double k = M_PI / (2.0 * taper);
  auto w_and_dw = [&](double x) {
    const double c = std::cos(k * x);
    const double e = std::exp(eps * x);
    return std::make_pair(e * c * c, e * (eps * c * c - 2.0 * k * c * std::sin(k * x)));
  };
  double a_tail = 0.0;
  double b_tail = 0.0;
  for (int pnl = 0; pnl < panels; ++pnl) {
    const double lo = taper * pnl / panels;
    const double hi = taper * (pnl + 1) / panels;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const auto& abscissa = rule::abscissa();
    const auto& weights = rule::weights();
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        if (abscissa[i] == 0.0 && sign < 0.0) continue;
        const auto [w, dw] = w_and_dw(mid + sign * half * abscissa[i]);
        a_tail += half * weights[i] * w * w;
        b_tail += half * weights[i] * (dw - lam * w) * (dw - lam * w);
      }
    }
  }
  a_int += a_tail;
  b_int += b_tail;
  return a_int / b_int;
}

double spacetime_norm(const Trajectory& traj, const NormRequest& req) {
  if (!(req.q >= 1.0) || !(req.r >= 1.0)) throw DomainError("space-time norm needs q, r >= 1");
  const auto [i0, i1] = window_indices(traj, req.t0, req.t1);
  std::vector<double> t;
  std::vector<double> g;
  double peak = 0.0;
  for (std::size_t j = i0; j <= i1; ++j) {
    const RadialField& f = traj.snapshots[j];
    double norm;
    switch (req.derivative) {
      case DerivativeKind::None:
        norm = lr_norm(f, req.r);
        break;
      case DerivativeKind::Operator:
        norm = lr_norm(fractional_power(f, req.s), req.r);
        break;
      case DerivativeKind::Free:
        norm = lr_norm(f.grid(), free_fractional_power(f, req.s), f.dim(), req.r);
        break;
      default:
        norm = 0.0;
    }
    peak = std::max(peak, norm);
    t.push_back(traj.times[j]);
    g.push_back(std::isinf(req.q) ? norm : std::pow(norm, req.q));
  }
  if (std::isinf(req.q)) return peak;
  return std::pow(trapezoid(t, g), 1.0 / req.q);
}

WeightedDecay morawetz_weighted_decay(const Trajectory& traj, double t0, double t1) {
  const ModelParams& params = traj.params;
  const double gate = 0.25 - lambda_n(params.n());
  if (!(params.a() > gate)) {
    throw DomainError("weighted Morawetz decay needs a > 1/4 - lambda_n = " + fmt(gate) + ", got a = " +
                      fmt(params.a()) + "; |x|^-3 is not integrable against |u|^2 there");
  }
  const auto [i0, i1] = window_indices(traj, t0, t1);
  std::vector<double> t;
  std::vector<double> g;
  double sup = 0.0;
  for (std::size_t j = i0; j <= i1; ++j) {
    const RadialField& f = traj.snapshots[j];
    const Eigen::MatrixXd& form = f.grid()->moment_form(-2);
    const Eigen::VectorXcd m = f.mapped();
    const double val = m.real().dot(form * m.real()) + m.imag().dot(form * m.imag());
    t.push_back(traj.times[j]);
    g.push_back(sphere_area(f.dim()) * val);
    sup = std::max(sup, free_sobolev_norm_sq(f, 0.5));
  }
  WeightedDecay out{trapezoid(t, g), sup, 0.0};
  out.ratio = sup > 0.0 ? out.integral / sup : 0.0;
  return out;
}

double morawetz_kernel(int n, double r, double rp) {
  if (n < 3) throw DomainError("morawetz_kernel needs n >= 3");
  if (!(r >= 0.0) || !(rp >= 0.0)) throw DomainError("morawetz_kernel needs r, r' >= 0");
  return kernel_with(angular_rule(n), r, rp);
}

double morawetz_action(const RadialField& f) {
  const auto table = kernel_table(f.grid(), f.dim());
  const Eigen::VectorXd vw = volume_weights(*f.grid(), f.dim());
  const Eigen::VectorXd g = vw.array() * f.samples().array().abs2();
  const double omega = sphere_area(f.dim());
  return 0.5 * omega * omega * g.dot(*table * g);
}

MorawetzRate morawetz_action_rate(const Trajectory& traj) {
  MorawetzRate out;
  out.times = traj.times;
  for (const auto& f : traj.snapshots) out.action.push_back(morawetz_action(f));
  for (std::size_t j = 1; j + 1 < traj.size(); ++j) {
    out.rate_times.push_back(traj.times[j]);
    out.rate.push_back(0.25 * (out.action[j + 1] - out.action[j - 1]) / (traj.times[j + 1] - traj.times[j - 1]));
  }
  return out;
}

double sobolev_equivalence_ratio(const RadialField& f, double s, double r, const ModelParams& params) {
  check_params(f, params);
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("sobolev_equivalence_ratio needs s in [0, 1], got " + fmt(s));
  const double upper = s == 0.0 ? std::numeric_limits<double>::infinity() : params.n() / s;
  if (!(r > 1.0 && r < upper)) {
    throw DomainError("sobolev_equivalence_ratio needs r in (1, n/s), got r = " + fmt(r));
  }
  double num;
  double den;
  if (r == 2.0) {
    const SpectralField F = dht_forward(f);
    const auto& grid = *f.grid();
    num = std::sqrt(sphere_area(f.dim()) * (grid.spectral_weights().array() * grid.rho().array().pow(2.0 * s) *
                                            F.coefficients().array().abs2())
                                               .sum());
    // For s = 1 the free seminorm is the quadratic form minus the potential,
    // both exact on the interpolant; other s go through the cross-order series.
    den = s == 1.0 ? std::sqrt(energy_parts(f, params, 0.0).kinetic) : std::sqrt(free_sobolev_norm_sq(f, s));
  } else {
    num = lr_norm(fractional_power(f, s), r);
    den = lr_norm(f.grid(), s == 0.0 ? f.samples() : free_fractional_power(f, s), f.dim(), r);
  }
  if (!(den > 0.0)) throw NumericsError("sobolev_equivalence_ratio: degenerate denominator");
  return num / den;
}

double uniform_sobolev_ratio(const RadialField& f, cplx alpha, const ModelParams& params) {
  check_params(f, params);
  const double n = params.n();
  const double r = 2.0 * n / (n + 2.0);
  const double rp = 2.0 * n / (n - 2.0);
  const double den = lr_norm(f, r);
  const ResolventResult res = resolvent(f, alpha);
  if (den == 0.0) return 0.0;
  return lr_norm(res.field, rp) / den;
}

}  // namespace invsq
