#pragma once

#include <vector>

namespace invsq {

/// Nonnegative, finite order of a Bessel function.
class BesselOrder {
 public:
  explicit BesselOrder(double nu);
  double value() const noexcept { return nu_; }

 private:
  double nu_;
};

/// J_nu(x) for real nu >= 0, x >= 0.
///
/// Three regimes: the ascending series where it has no cancellation
/// (x <= 4 or x^2 <= 4(nu+1)), Hankel's large-argument expansion once
/// x >= max(25, 2 nu^2), and Miller's backward recurrence normalised by
/// (x/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(x) in between.
double bessel_j(BesselOrder nu, double x);

/// exp(-x) I_nu(x) for nu >= 0, x >= 0. Strictly positive unless it
/// underflows.
double bessel_i_scaled(BesselOrder nu, double x);

/// The first `count` positive zeros of J_nu in increasing order.
/// Throws ConvergenceError naming the index that failed.
std::vector<double> bessel_zeros(BesselOrder nu, int count);

/// Gamma(x) for x > 0 (Stirling series after raising the argument).
double gamma_fn(double x);

/// log Gamma(x) for x > 0.
double log_gamma(double x);

/// Surface area of the unit sphere S^{n-1} in R^n.
double sphere_area(int n);

}  // namespace invsq
