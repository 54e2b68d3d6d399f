#include "invsq/hankel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <string>
#include <tuple>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

void require_finite(const Eigen::VectorXcd& v, const char* what) {
  if (!v.allFinite()) throw NumericsError(std::string(what) + " contains non-finite values");
}

// One Newton-Schulz step X <- X (3I - X^T X) / 2 per pass; X symmetric and
// already orthogonal to ~1e-10, so two passes reach roundoff.
void orthogonalise(Eigen::MatrixXd& t) {
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::MatrixXd gram = t.transpose() * t;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() < 4.0 * std::numeric_limits<double>::epsilon()) break;
    Eigen::MatrixXd corr = -0.5 * gram;
    corr.diagonal().array() += 1.0;
    t = (t * corr).eval();
    t = 0.5 * (t + t.transpose()).eval();
  }
}

}  // namespace

RadialGrid::RadialGrid(BesselOrder nu, int n_modes, double radius)
    : nu_(nu.value()), radius_(radius) {
  if (n_modes < 8) throw DomainError("make_grid: need at least 8 modes, got " + std::to_string(n_modes));
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("make_grid: radius must be positive");

  const auto zeros = bessel_zeros(nu, n_modes + 1);
  const BesselOrder next(nu_ + 1.0);
  j_cut_ = zeros.back();
  const double s = j_cut_;
  const auto n = static_cast<Eigen::Index>(n_modes);

  nodes_.resize(n);
  rho_.resize(n);
  weights_.resize(n);
  spectral_weights_.resize(n);
  Eigen::VectorXd jn1(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const double j = zeros[static_cast<std::size_t>(m)];
    jn1(m) = std::abs(bessel_j(next, j));
    nodes_(m) = j * radius / s;
    rho_(m) = j / radius;
    weights_(m) = 2.0 * radius * radius / (s * s * jn1(m) * jn1(m));
    spectral_weights_(m) = 2.0 / (radius * radius * jn1(m) * jn1(m));
  }

  transform_.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double jk = zeros[static_cast<std::size_t>(k)];
    for (Eigen::Index m = k; m < n; ++m) {
      const double jm = zeros[static_cast<std::size_t>(m)];
      const double v = 2.0 * bessel_j(nu, jk * jm / s) / (s * jn1(k) * jn1(m));
      transform_(k, m) = v;
      transform_(m, k) = v;
    }
  }
  Eigen::MatrixXd gram = transform_.transpose() * transform_;
  gram.diagonal().array() -= 1.0;
  raw_defect_ = gram.cwiseAbs().maxCoeff();
  orthogonalise(transform_);
}

const CrossOrderTransform& RadialGrid::cross_order(BesselOrder nu_out) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = cross_cache_.find(nu_out.value());
  if (it != cross_cache_.end()) return *it->second;

  const auto n = nodes_.size();
  const auto zeros = bessel_zeros(nu_out, static_cast<int>(n));
  const BesselOrder next(nu_out.value() + 1.0);
  auto t = std::make_unique<CrossOrderTransform>();
  t->nu_out = nu_out.value();
  t->rho.resize(n);
  t->coef_weight.resize(n);
  t->synthesis.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double j = zeros[static_cast<std::size_t>(k)];
    const double jn1 = bessel_j(next, j);
    t->rho(k) = j / radius_;
    t->coef_weight(k) = 2.0 / (radius_ * radius_ * jn1 * jn1);
    for (Eigen::Index m = 0; m < n; ++m) t->synthesis(m, k) = bessel_j(nu_out, t->rho(k) * nodes_(m));
  }

  const Eigen::MatrixXd to_coef = to_coefficients();
  if (nu_out.value() == nu_) {
    // Same order: the basis is orthogonal with norms 1/W_k.
    t->forward = spectral_weights_.cwiseInverse().asDiagonal() * to_coef;
  } else {
    t->forward = basis_overlap(nu_out, t->rho, 1) * to_coef;
  }
  auto& slot = cross_cache_[nu_out.value()];
  slot = std::move(t);
  return *slot;
}

const Eigen::MatrixXd& RadialGrid::moment_form(int power) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = moment_cache_.find(power);
  if (it != moment_cache_.end()) return *it->second;
  const Eigen::MatrixXd a = to_coefficients();
  Eigen::MatrixXd g = a.transpose() * basis_overlap(BesselOrder(nu_), rho_, power) * a;
  g = 0.5 * (g + g.transpose()).eval();
  auto& slot = moment_cache_[power];
  slot = std::make_unique<const Eigen::MatrixXd>(std::move(g));
  return *slot;
}

// Interpolant coefficients c = W F = diag(sqrt W) T diag(sqrt w) f.
Eigen::MatrixXd RadialGrid::to_coefficients() const {
  return spectral_weights_.cwiseSqrt().asDiagonal() * transform_ * weights_.cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd RadialGrid::basis_overlap(BesselOrder nu_out, const Eigen::VectorXd& rho_out, int power) const {
  // M_{jk} = int_0^R J_nu(rho_k r) J_{nu_out}(rho'_j r) r^power dr. Panels of
  // one shortest wavelength, plus dyadic panels towards r = 0; the piece
  // below the last dyadic edge uses the leading power of both factors.
  const double head_exp = nu_ + nu_out.value() + power + 1.0;
  if (!(head_exp > 0.0)) {
    throw DomainError("moment integral diverges at r = 0 for power " + std::to_string(power));
  }
  using rule = boost::math::quadrature::gauss<double, kPanelPoints>;
  const auto n = nodes_.size();
  const double h = radius_ / static_cast<double>(n);

  std::vector<double> edges;
  for (int d = 40; d >= 1; --d) edges.push_back(h * std::ldexp(1.0, -d));
  for (Eigen::Index p = 1; p <= n; ++p) edges.push_back(h * static_cast<double>(p));
  edges.back() = radius_;

  std::vector<double> qr;
  std::vector<double> qw;
  const auto& abscissa = rule::abscissa();
  const auto& weight = rule::weights();
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e];
    const double b = edges[e + 1];
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      const double offsets[2] = {abscissa[i], -abscissa[i]};
      const int count = (abscissa[i] == 0.0) ? 1 : 2;
      for (int s = 0; s < count; ++s) {
        const double r = mid + half * offsets[s];
        qr.push_back(r);
        qw.push_back(half * weight[i] * std::pow(r, power));
      }
    }
  }

  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Index total = static_cast<Eigen::Index>(qr.size());
  constexpr Eigen::Index kBlock = 512;
  const BesselOrder nu(nu_);
  Eigen::MatrixXd b_in(kBlock, n);
  Eigen::MatrixXd b_out(kBlock, n);
  for (Eigen::Index start = 0; start < total; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, total - start);
    for (Eigen::Index q = 0; q < rows; ++q) {
      const double r = qr[static_cast<std::size_t>(start + q)];
      const double w = qw[static_cast<std::size_t>(start + q)];
      for (Eigen::Index k = 0; k < n; ++k) {
        b_in(q, k) = w * bessel_j(nu, rho_(k) * r);
        b_out(q, k) = bessel_j(nu_out, rho_out(k) * r);
      }
    }
    overlap.noalias() += b_out.topRows(rows).transpose() * b_in.topRows(rows);
  }

  const double eps = edges.front();
  const double lead = std::pow(eps, head_exp) / head_exp /
                      (std::exp(log_gamma(nu_ + 1.0) + log_gamma(nu_out.value() + 1.0)));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      overlap(j, k) += lead * std::pow(0.5 * rho_(k), nu_) * std::pow(0.5 * rho_out(j), nu_out.value());
    }
  }
  return overlap;
}

GridPtr make_grid(BesselOrder nu, int n_modes, double radius) {
  using Key = std::tuple<double, int, double>;
  static std::mutex mutex;
  static std::map<Key, std::weak_ptr<const RadialGrid>> cache;

  const Key key{nu.value(), n_modes, radius};
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) {
      if (auto alive = it->second.lock()) return alive;
    }
  }
  auto grid = std::make_shared<const RadialGrid>(nu, n_modes, radius);
  std::lock_guard<std::mutex> lock(mutex);
  cache[key] = grid;
  return grid;
}

RadialField::RadialField(GridPtr grid, Eigen::VectorXcd samples, int dim, int sector)
    : grid_(std::move(grid)), samples_(std::move(samples)), dim_(dim), sector_(sector) {
  if (!grid_) throw DomainError("RadialField: null grid");
  if (samples_.size() != grid_->size()) throw DomainError("RadialField: sample count differs from grid size");
  if (dim_ < 3) throw DomainError("RadialField: dimension must be >= 3");
  if (sector_ < 0) throw DomainError("RadialField: sector must be >= 0");
  require_finite(samples_, "RadialField");
}

Eigen::VectorXcd RadialField::mapped() const {
  const double e = 0.5 * (dim_ - 2);
  return (samples_.array() * grid_->nodes().array().pow(e).cast<cplx>()).matrix();
}

RadialField RadialField::with_samples(Eigen::VectorXcd samples) const {
  return RadialField(grid_, std::move(samples), dim_, sector_);
}

SpectralField::SpectralField(GridPtr grid, Eigen::VectorXcd coefficients, int dim, int sector)
    : grid_(std::move(grid)), coefficients_(std::move(coefficients)), dim_(dim), sector_(sector) {
  if (!grid_) throw DomainError("SpectralField: null grid");
  if (coefficients_.size() != grid_->size()) {
    throw DomainError("SpectralField: coefficient count differs from grid size");
  }
  require_finite(coefficients_, "SpectralField");
}

SpectralField dht_forward(const RadialField& f) {
  const auto& g = *f.grid();
  const Eigen::VectorXcd scaled = (f.mapped().array() * g.weights().array().sqrt().cast<cplx>()).matrix();
  Eigen::VectorXcd out = g.transform() * scaled;
  out.array() /= g.spectral_weights().array().sqrt().cast<cplx>();
  return SpectralField(f.grid(), std::move(out), f.dim(), f.sector());
}

RadialField dht_inverse(const SpectralField& F) {
  const auto& g = *F.grid();
  const Eigen::VectorXcd scaled =
      (F.coefficients().array() * g.spectral_weights().array().sqrt().cast<cplx>()).matrix();
  Eigen::VectorXcd f = g.transform() * scaled;
  const double e = 0.5 * (F.dim() - 2);
  f.array() /= (g.weights().array().sqrt() * g.nodes().array().pow(e)).cast<cplx>();
  return RadialField(F.grid(), std::move(f), F.dim(), F.sector());
}

std::vector<cplx> hankel_quadrature(const RadialField& f, BesselOrder nu_out,
                                    const std::vector<double>& rho_targets) {
  const auto& g = *f.grid();
  const Eigen::VectorXcd wf = (f.mapped().array() * g.weights().array().cast<cplx>()).matrix();
  std::vector<cplx> out;
  out.reserve(rho_targets.size());
  for (double rho : rho_targets) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("hankel_quadrature: targets must be >= 0");
    cplx acc = 0.0;
    for (Eigen::Index m = 0; m < wf.size(); ++m) acc += wf(m) * bessel_j(nu_out, rho * g.nodes()(m));
    out.push_back(acc);
  }
  return out;
}

Eigen::VectorXcd cross_forward(const RadialField& f, BesselOrder nu_out) {
  const auto& g = *f.grid();
  return g.cross_order(nu_out).forward * f.mapped();
}

Eigen::VectorXcd cross_inverse(const RadialField& like, BesselOrder nu_out,
                               const Eigen::VectorXcd& coefficients) {
  const auto& g = *like.grid();
  const auto& t = g.cross_order(nu_out);
  if (coefficients.size() != t.rho.size()) throw DomainError("cross_inverse: coefficient count mismatch");
  const Eigen::VectorXcd c = (coefficients.array() * t.coef_weight.array().cast<cplx>()).matrix();
  Eigen::VectorXcd f = t.synthesis * c;
  const double e = 0.5 * (like.dim() - 2);
  f.array() /= g.nodes().array().pow(e).cast<cplx>();
  return f;
}

DhtSelftest dht_selftest(BesselOrder nu, int n_modes, double radius) {
  auto grid = make_grid(nu, n_modes, radius);
  const double w = radius / 12.0;
  const auto& r = grid->nodes();
  // n = 3, so the mapped field is r^{1/2} u = r^nu exp(-r^2/(2w^2)).
  Eigen::VectorXcd u(r.size());
  for (Eigen::Index m = 0; m < r.size(); ++m) {
    u(m) = std::pow(r(m), nu.value() - 0.5) * std::exp(-0.5 * r(m) * r(m) / (w * w));
  }
  const RadialField f(grid, u, 3);
  const SpectralField F = dht_forward(f);
  const RadialField back = dht_inverse(F);

  const Eigen::VectorXd wts = grid->weights();
  const Eigen::VectorXcd fm = f.mapped();
  const Eigen::VectorXcd bm = back.mapped();
  const double norm_f = std::sqrt((wts.array() * fm.array().abs2()).sum());
  const double diff = std::sqrt((wts.array() * (bm - fm).array().abs2()).sum());
  const double norm_F = std::sqrt((grid->spectral_weights().array() * F.coefficients().array().abs2()).sum());

  Eigen::MatrixXd gram = grid->transform().transpose() * grid->transform();
  gram.diagonal().array() -= 1.0;
  return DhtSelftest{nu.value(),
                     n_modes,
                     radius,
                     diff / norm_f,
                     std::abs(norm_f - norm_F) / norm_f,
                     gram.cwiseAbs().maxCoeff()};
}

}  // namespace invsq
