#include "invsq/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require_dim(int n) {
  if (n < 3) throw DomainError("dimension must satisfy n >= 3, got n = " + std::to_string(n));
}

double free_order(const RadialField& f) { return f.sector() + 0.5 * (f.dim() - 2); }

}  // namespace

double lambda_n(int n) {
  require_dim(n);
  return 0.25 * (n - 2.0) * (n - 2.0);
}

ModelParams::ModelParams(int n, double a, double p) : n_(n), a_(a), p_(p) {
  require_dim(n);
  if (!std::isfinite(a) || !(a > -lambda_n(n))) {
    throw DomainError("coupling must satisfy a > -lambda_n = " + fmt(-lambda_n(n)) + ", got a = " + fmt(a));
  }
  if (!std::isfinite(p) || !(p > 1.0)) throw DomainError("exponent must satisfy p > 1, got p = " + fmt(p));
}

bool ModelParams::p_in_range() const noexcept {
  return p_ > 1.0 + 4.0 / n_ && p_ < 1.0 + 4.0 / (n_ - 2);
}

bool ModelParams::scattering_ok() const noexcept {
  if (!p_in_range()) return false;
  if (n_ == 3) return a_ >= 0.0;
  return a_ >= 4.0 / ((p_ + 1.0) * (p_ + 1.0)) - lambda_n(n_);
}

std::string ModelParams::scattering_violation() const {
  if (p_ <= 1.0 + 4.0 / n_) return "p = " + fmt(p_) + " violates p > 1 + 4/n = " + fmt(1.0 + 4.0 / n_);
  if (p_ >= 1.0 + 4.0 / (n_ - 2)) {
    return "p = " + fmt(p_) + " violates p < 1 + 4/(n-2) = " + fmt(1.0 + 4.0 / (n_ - 2));
  }
  if (n_ == 3 && a_ < 0.0) return "a = " + fmt(a_) + " violates a >= 0 (n = 3)";
  if (n_ >= 4) {
    const double bound = 4.0 / ((p_ + 1.0) * (p_ + 1.0)) - lambda_n(n_);
    if (a_ < bound) return "a = " + fmt(a_) + " violates a >= 4/(p+1)^2 - lambda_n = " + fmt(bound);
  }
  return {};
}

SectorSpec sector_spec(const ModelParams& params, int k) {
  if (k < 0) throw DomainError("sector index must be >= 0");
  const double c = k + 0.5 * (params.n() - 2);
  return SectorSpec{k, std::sqrt(c * c + params.a())};
}

double sigma_a(const ModelParams& params) {
  const double n = params.n();
  return 0.5 * (n - 2.0) - 0.5 * std::sqrt((n - 2.0) * (n - 2.0) + 4.0 * params.a());
}

SobolevWindow sobolev_window(const ModelParams& params) {
  const double n = params.n();
  const double root = std::sqrt((n - 2.0) * (n - 2.0) + 4.0 * params.a());
  SobolevWindow w{2.0 * n / std::min(n + 2.0 + root, 2.0 * n), std::nullopt};
  const double lower = std::max(n - root, 0.0);
  if (lower > 0.0) w.r1 = 2.0 * n / lower;
  return w;
}

bool admissible(double q, double r, int n) {
  if (!(q >= 2.0) || !(r >= 2.0) || std::isnan(q)) return false;
  if (q == 2.0 && std::isinf(r) && n == 2) return false;
  const double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  return std::abs(2.0 * inv_q - n * (0.5 - inv_r)) <= 1e-12;
}

const char* to_string(LwpRegime regime) {
  switch (regime) {
    case LwpRegime::NonNegative:
      return "a>=0";
    case LwpRegime::MildNegative:
      return "min{1-lambda_n,0}<=a<0";
    case LwpRegime::StrongNegative:
      return "-4p*lambda_n/(p+1)^2<a<min{1-lambda_n,0}";
  }
  return "?";
}

ExponentPlan lwp_exponents(const ModelParams& params, double margin) {
  const double n = params.n();
  const double p = params.p();
  const double a = params.a();
  if (!params.p_in_range()) {
    throw DomainError("exponent plan needs 1 + 4/n < p < 1 + 4/(n-2); " + params.scattering_violation());
  }
  if (!(margin > 0.0)) throw DomainError("exponent margin must be > 0");

  ExponentPlan plan{};
  plan.window = sobolev_window(params);
  if (a >= 0.0) {
    plan.regime = LwpRegime::NonNegative;
    plan.q = 4.0 * (p + 1.0) / ((n - 2.0) * (p - 1.0));
    plan.r = n * (p + 1.0) / (n + p - 1.0);
  } else {
    const double lam = lambda_n(params.n());
    const double floor = -4.0 * p * lam / ((p + 1.0) * (p + 1.0));
    if (!(a > floor)) {
      throw DomainError("exponent plan for a < 0 needs a > -4 p lambda_n/(p+1)^2 = " + fmt(floor) + ", got a = " +
                        fmt(a));
    }
    double r_tilde_prime;
    if (a >= std::min(1.0 - lam, 0.0)) {
      plan.regime = LwpRegime::MildNegative;
      r_tilde_prime = 2.0 * n / (n + 2.0) + margin;
    } else {
      plan.regime = LwpRegime::StrongNegative;
      const double inv_r1_prime = (n + std::sqrt((n - 2.0) * (n - 2.0) + 4.0 * a)) / (2.0 * n);
      r_tilde_prime = 1.0 / inv_r1_prime + margin;
    }
    const double inv_r = (1.0 / r_tilde_prime + (p - 1.0) / n) / p;
    plan.r = 1.0 / inv_r;
    plan.q = 2.0 / (n * (0.5 - inv_r));
  }
  if (!admissible(plan.q, plan.r, params.n())) {
    throw DomainError("exponent plan (q, r) = (" + fmt(plan.q) + ", " + fmt(plan.r) +
                      ") is not admissible; reduce the margin");
  }
  return plan;
}

double hardy_constant(int n) {
  require_dim(n);
  return 4.0 / ((n - 2.0) * (n - 2.0));
}

double kinetic_bound_constant(const ModelParams& params) {
  const double n = params.n();
  return 2.0 / std::min(1.0, 1.0 + 4.0 * params.a() / ((n - 2.0) * (n - 2.0)));
}

double coupling_of(const RadialField& f) {
  const double c = free_order(f);
  const double nu = f.grid()->nu();
  return nu * nu - c * c;
}

void require_sector(const RadialField& f, const ModelParams& params) {
  if (f.dim() != params.n()) {
    throw DomainError("field dimension " + std::to_string(f.dim()) + " differs from n = " +
                      std::to_string(params.n()));
  }
  const double want = sector_spec(params, f.sector()).nu;
  if (std::abs(f.grid()->nu() - want) > 1e-12 * std::max(1.0, want)) {
    throw DomainError("grid order " + fmt(f.grid()->nu()) + " does not match nu_k = " + fmt(want) +
                      " for a = " + fmt(params.a()));
  }
}

RadialField apply_multiplier(const RadialField& f, const SpectralFunction& phi) {
  SpectralField F = dht_forward(f);
  const auto& rho = f.grid()->rho();
  auto& c = F.mutable_coefficients();
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const cplx m = phi(rho(k) * rho(k));
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) {
      throw NumericsError("multiplier is not finite at lambda = " + fmt(rho(k) * rho(k)));
    }
    c(k) *= m;
  }
  return dht_inverse(F);
}

RadialField fractional_power(const RadialField& f, double s) {
  if (!(s >= -2.0 && s <= 2.0)) throw DomainError("fractional_power: s must lie in [-2, 2], got " + fmt(s));
  if (s == 0.0) return f;
  return apply_multiplier(f, [s](double lambda) { return cplx(std::pow(lambda, 0.5 * s), 0.0); });
}

ResolventResult resolvent(const RadialField& f, cplx alpha, std::optional<double> delta) {
  const auto& rho = f.grid()->rho();
  const double scale = rho(rho.size() - 1) * rho(rho.size() - 1);
  const double standoff_min = delta.value_or(1e-6 * scale);
  const double standoff = alpha.real() >= 0.0 ? std::abs(alpha.imag()) : std::abs(alpha);
  if (!(standoff >= standoff_min)) {
    throw DomainError("resolvent: alpha = (" + fmt(alpha.real()) + ", " + fmt(alpha.imag()) +
                      ") lies within " + fmt(standoff_min) +
                      " of the spectrum [0, inf); add an imaginary offset to alpha");
  }
  auto out = apply_multiplier(f, [alpha](double lambda) { return 1.0 / (lambda - alpha); });
  return ResolventResult{std::move(out), standoff};
}

Eigen::VectorXcd free_fractional_power(const RadialField& f, double s) {
  const BesselOrder order(free_order(f));
  const auto& t = f.grid()->cross_order(order);
  Eigen::VectorXcd coef = cross_forward(f, order);
  coef.array() *= t.rho.array().pow(s).cast<cplx>();
  return cross_inverse(f, order, coef);
}

double free_sobolev_norm_sq(const RadialField& f, double s) {
  const BesselOrder order(free_order(f));
  const auto& t = f.grid()->cross_order(order);
  const Eigen::VectorXcd coef = cross_forward(f, order);
  const double sum = (t.coef_weight.array() * t.rho.array().pow(2.0 * s) * coef.array().abs2()).sum();
  return sphere_area(f.dim()) * sum;
}

}  // namespace invsq
