#pragma once

#include <optional>
#include <vector>

#include "invsq/trajectory.hpp"

namespace invsq {

/// omega_{n-1} int |u|^2 r^{n-1} dr.
double mass(const RadialField& f);

/// (omega_{n-1} int |u|^r r^{n-1} dr)^{1/r} by node quadrature; r = inf gives
/// the largest sample modulus.
double lr_norm(const GridPtr& grid, const Eigen::VectorXcd& samples, int dim, double r);
double lr_norm(const RadialField& f, double r);

struct EnergyParts {
  double quadratic;  // ||grad u||^2 + a int |u|^2/|x|^2, computed spectrally
  double potential;  // a int |u|^2/|x|^2
  double kinetic;    // quadratic - potential
  double nonlinear;  // (2/(p+1)) coef int |u|^{p+1}
  double energy;     // (quadratic + nonlinear) / 2
};

/// The operator is read off the field's grid; `params` supplies n, a and p
/// and must match it. `nonlinear_coef` scales the |u|^{p-1}u term.
EnergyParts energy_parts(const RadialField& f, const ModelParams& params, double nonlinear_coef = 1.0);
double energy(const RadialField& f, const ModelParams& params, double nonlinear_coef = 1.0);

/// int |u|^2/|x|^2 over the field's interpolant.
double inverse_square_integral(const RadialField& f);

/// Mass in the shell r > (1 - fraction) R.
double boundary_mass(const RadialField& f, double fraction = 0.1);

DiagnosticsRecord make_record(const RadialField& f, const ModelParams& params, double t,
                              double nonlinear_coef = 1.0);

/// c E - ||grad u||^2 with c = kinetic_bound_constant(params).
double kinetic_check(const DiagnosticsRecord& record, const ModelParams& params);

struct KineticViolation {
  std::size_t index;
  double margin;
};

/// Snapshots whose margin falls below -tol * E.
std::vector<KineticViolation> kinetic_violations(const Trajectory& traj, double tol = 1e-9);

/// int |u|^p |x|^{-s p} / || |grad|^s u ||_p^p. For (s, p) = (1, 2) both
/// sides use exact quadratic forms; otherwise node quadrature.
double hardy_quotient(const RadialField& f, double s, double p_exp);

/// Quotient int |u|^2/|x|^2 / int |grad u|^2 for u = r^{-(n-2)/2 + eps} chi(r),
/// chi = 1 on r <= 1 and a cos^2 taper in log r over `taper` decades of e.
/// Evaluated in the variable x = log r, where the optimizer family is resolved.
double hardy_log_quotient(int n, double eps, double taper = 20.0);

enum class DerivativeKind { None, Operator, Free };

struct NormRequest {
  double q;
  double r;
  double t0;
  double t1;
  double s = 0.0;
  DerivativeKind derivative = DerivativeKind::None;
};

/// Trapezoid-in-time L^q of the L^r_x norms over snapshots in [t0, t1]; the
/// window ends must coincide with snapshot times.
double spacetime_norm(const Trajectory& traj, const NormRequest& req);

struct WeightedDecay {
  double integral;  // int int |u|^2/|x|^3 dx dt
  double sup_h_half_sq;
  double ratio;
};

/// Requires a > 1/4 - lambda_n, where the weight is integrable against the
/// domain of P_a.
WeightedDecay morawetz_weighted_decay(const Trajectory& traj, double t0, double t1);

/// Angular average of |x - y| over the sphere, |x| = r, |y| = rp.
double morawetz_kernel(int n, double r, double rp);

/// J = (1/2) int int |u(x)|^2 |u(y)|^2 |x - y| dx dy.
double morawetz_action(const RadialField& f);

struct MorawetzRate {
  std::vector<double> times;
  std::vector<double> action;
  std::vector<double> rate_times;  // interior snapshot times
  std::vector<double> rate;        // (1/4) dJ/dt by centred differences
};

MorawetzRate morawetz_action_rate(const Trajectory& traj);

/// ||P_a^{s/2} f||_r / || |grad|^s f ||_r.
double sobolev_equivalence_ratio(const RadialField& f, double s, double r, const ModelParams& params);

/// ||(P_a - alpha)^{-1} f||_{r'} / ||f||_r with r = 2n/(n+2).
double uniform_sobolev_ratio(const RadialField& f, cplx alpha, const ModelParams& params);

}  // namespace invsq
