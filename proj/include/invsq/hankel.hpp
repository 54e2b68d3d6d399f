#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "invsq/specfun.hpp"

namespace invsq {

using cplx = std::complex<double>;

/// Fourier–Bessel series of order nu_out on [0, R], tied to another grid.
/// Backs the a = 0 calculus on a grid built for a != 0.
///
/// `forward` maps the mapped samples f(r_m) to F'_k = int_0^R f J_{nu_out}(rho'_k r) r dr,
/// where f is the grid's own Bessel interpolant; the integrals of the basis
/// products are done once by graded Gauss-Legendre quadrature.
struct CrossOrderTransform {
  double nu_out = 0.0;
  Eigen::VectorXd rho;          // j_{nu_out,k} / R
  Eigen::VectorXd coef_weight;  // 2 / (R^2 J_{nu_out+1}(j_k)^2)
  Eigen::MatrixXd forward;      // rows k, columns m
  Eigen::MatrixXd synthesis;    // J_{nu_out}(rho'_k r_m), rows m, columns k
};

/// Bessel-zero collocation grid of order nu on [0, R]. Immutable once built.
class RadialGrid {
 public:
  RadialGrid(BesselOrder nu, int n_modes, double radius);

  double nu() const noexcept { return nu_; }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  double radius() const noexcept { return radius_; }
  double j_cut() const noexcept { return j_cut_; }

  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& rho() const noexcept { return rho_; }
  /// w_m, so that sum_m w_m g(r_m) approximates int_0^R g(r) r dr.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  /// W_k, the matching weights on the spectral side.
  const Eigen::VectorXd& spectral_weights() const noexcept { return spectral_weights_; }
  /// Symmetric orthogonal matrix acting on sqrt(w) f and sqrt(W) F.
  const Eigen::MatrixXd& transform() const noexcept { return transform_; }
  /// max |T^T T - I| of the Bessel-sum matrix before it was orthogonalised.
  double raw_orthogonality_defect() const noexcept { return raw_defect_; }

  /// Built on first use and cached; safe to call concurrently.
  const CrossOrderTransform& cross_order(BesselOrder nu_out) const;

  /// Symmetric G with int_0^R |f(r)|^2 r^power dr = f^H G f, where f holds
  /// mapped samples and the integral runs over the grid's Bessel interpolant.
  /// power must exceed -2 nu - 1. Cached like cross_order.
  const Eigen::MatrixXd& moment_form(int power) const;

 private:
  static constexpr int kPanelPoints = 12;
  Eigen::MatrixXd basis_overlap(BesselOrder nu_out, const Eigen::VectorXd& rho_out, int power) const;
  Eigen::MatrixXd to_coefficients() const;

  double nu_;
  double radius_;
  double j_cut_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd rho_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd spectral_weights_;
  Eigen::MatrixXd transform_;
  double raw_defect_ = 0.0;

  mutable std::mutex cache_mutex_;
  mutable std::map<double, std::unique_ptr<const CrossOrderTransform>> cross_cache_;
  mutable std::map<int, std::unique_ptr<const Eigen::MatrixXd>> moment_cache_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Grids are shared: repeated calls with the same (nu, N, R) return the same
/// object while it is alive. Requires N >= 8 and R > 0.
GridPtr make_grid(BesselOrder nu, int n_modes, double radius);

/// Samples u(r_m) of one angular sector of a field on R^n.
class RadialField {
 public:
  RadialField(GridPtr grid, Eigen::VectorXcd samples, int dim, int sector = 0);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXcd& samples() const noexcept { return samples_; }
  Eigen::VectorXcd& mutable_samples() noexcept { return samples_; }
  int dim() const noexcept { return dim_; }
  int sector() const noexcept { return sector_; }
  int size() const noexcept { return static_cast<int>(samples_.size()); }

  /// r^{(n-2)/2} u, the function the order-nu Hankel transform acts on.
  Eigen::VectorXcd mapped() const;

  RadialField with_samples(Eigen::VectorXcd samples) const;

 private:
  GridPtr grid_;
  Eigen::VectorXcd samples_;
  int dim_;
  int sector_;
};

/// Hankel coefficients F(rho_k) of the mapped field.
class SpectralField {
 public:
  SpectralField(GridPtr grid, Eigen::VectorXcd coefficients, int dim, int sector = 0);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXcd& coefficients() const noexcept { return coefficients_; }
  Eigen::VectorXcd& mutable_coefficients() noexcept { return coefficients_; }
  int dim() const noexcept { return dim_; }
  int sector() const noexcept { return sector_; }

 private:
  GridPtr grid_;
  Eigen::VectorXcd coefficients_;
  int dim_;
  int sector_;
};

SpectralField dht_forward(const RadialField& f);
RadialField dht_inverse(const SpectralField& F);

/// sum_m w_m f(r_m) J_{nu_out}(rho r_m) for each target, f the mapped field.
std::vector<cplx> hankel_quadrature(const RadialField& f, BesselOrder nu_out,
                                    const std::vector<double>& rho_targets);

/// Coefficients F'_k of the mapped field on the cross-order grid.
Eigen::VectorXcd cross_forward(const RadialField& f, BesselOrder nu_out);

/// Sum_k coef_weight_k F'_k J_{nu_out}(rho'_k r) at the field's nodes, returned
/// as samples of u (the r^{(n-2)/2} factor is removed).
Eigen::VectorXcd cross_inverse(const RadialField& like, BesselOrder nu_out,
                               const Eigen::VectorXcd& coefficients);

struct DhtSelftest {
  double nu;
  int n_modes;
  double radius;
  double roundtrip_residual;
  double parseval_residual;
  double orthogonality_defect;
};

/// Round trip and Parseval residuals on a smooth field r^nu exp(-r^2/(2 w^2)), w = R/12.
DhtSelftest dht_selftest(BesselOrder nu, int n_modes, double radius);

}  // namespace invsq
