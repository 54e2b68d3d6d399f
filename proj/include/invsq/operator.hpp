#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>

#include "invsq/hankel.hpp"

namespace invsq {

/// (n-2)^2 / 4.
double lambda_n(int n);

/// Dimension n, coupling a and nonlinearity exponent p of
/// i u_t = (-Laplacian + a/|x|^2) u + |u|^{p-1} u.
class ModelParams {
 public:
  /// Throws DomainError naming the violated inequality (n >= 3, a > -lambda_n, p > 1).
  ModelParams(int n, double a, double p);

  int n() const noexcept { return n_; }
  double a() const noexcept { return a_; }
  double p() const noexcept { return p_; }

  /// 1 + 4/n < p < 1 + 4/(n-2).
  bool p_in_range() const noexcept;
  /// a >= 4/(p+1)^2 - lambda_n for n >= 4; a >= 0 for n = 3.
  bool scattering_ok() const noexcept;
  /// Explanation when p_in_range() or scattering_ok() fails, empty otherwise.
  std::string scattering_violation() const;

 private:
  int n_;
  double a_;
  double p_;
};

struct SectorSpec {
  int k;
  double nu;  // sqrt((k + (n-2)/2)^2 + a), the Friedrichs branch
};

SectorSpec sector_spec(const ModelParams& params, int k);

/// sigma(a) = (n-2)/2 - sqrt((n-2)^2 + 4a)/2.
double sigma_a(const ModelParams& params);

struct SobolevWindow {
  double r0;
  std::optional<double> r1;  // empty when the window is unbounded above
};

SobolevWindow sobolev_window(const ModelParams& params);

/// 2/q = n(1/2 - 1/r), q, r >= 2, excluding (2, inf, 2). r may be +inf.
bool admissible(double q, double r, int n);

enum class LwpRegime { NonNegative, MildNegative, StrongNegative };

const char* to_string(LwpRegime regime);

struct ExponentPlan {
  double q;
  double r;
  LwpRegime regime;
  SobolevWindow window;
};

/// Exponent pair used for the contraction argument. For a < 0 the
/// conjugate exponent r~' is pushed up by `margin` above its limiting value.
/// Requires p in range and, for a < 0, a > -4 p lambda_n / (p+1)^2.
ExponentPlan lwp_exponents(const ModelParams& params, double margin = 0.01);

/// 4/(n-2)^2.
double hardy_constant(int n);

/// c = 2 / min{1, 1 + 4a/(n-2)^2}, so that ||grad u||^2 <= c E(u).
double kinetic_bound_constant(const ModelParams& params);

/// The coupling a that a field's grid order encodes for its sector.
double coupling_of(const RadialField& f);

/// Throws DomainError unless the field's grid order is nu_k(a) for its sector.
void require_sector(const RadialField& f, const ModelParams& params);

using SpectralFunction = std::function<cplx(double lambda)>;

/// dht_inverse(phi(rho^2) dht_forward(f)).
RadialField apply_multiplier(const RadialField& f, const SpectralFunction& phi);

/// P_a^{s/2} f for s in [-2, 2].
RadialField fractional_power(const RadialField& f, double s);

struct ResolventResult {
  RadialField field;
  double standoff;  // distance from alpha to [0, inf)
};

/// (P_a - alpha)^{-1} f. alpha must stay at least delta away from [0, inf);
/// the default delta is 1e-6 rho_max^2.
ResolventResult resolvent(const RadialField& f, cplx alpha, std::optional<double> delta = std::nullopt);

/// |grad|^s f sampled at the field's nodes, through the order-(n-2)/2 series.
Eigen::VectorXcd free_fractional_power(const RadialField& f, double s);

/// ||f||^2 in homogeneous H^s of the free Laplacian (full n-dimensional norm).
double free_sobolev_norm_sq(const RadialField& f, double s);

}  // namespace invsq
