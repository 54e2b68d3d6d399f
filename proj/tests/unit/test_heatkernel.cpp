#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "invsq/errors.hpp"
#include "invsq/heatkernel.hpp"

using invsq::HeatKernelQuery;
using invsq::ModelParams;

namespace {

constexpr double kPi = std::numbers::pi;

double gaussian_kernel(const HeatKernelQuery& q) {
  const double d2 = q.r * q.r + q.rp * q.rp - 2.0 * q.r * q.rp * q.mu;
  return std::pow(4.0 * kPi * q.t, -1.5) * std::exp(-d2 / (4.0 * q.t));
}

// (r r')^{-(n-2)/2} int_0^inf exp(-t rho^2) J_nu(rho r) J_nu(rho r') rho drho
double spectral_oracle(double t, double r, double rp, double nu, int n) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto f = [&](double rho) {
    return std::exp(-t * rho * rho) * boost::math::cyl_bessel_j(nu, rho * r) * boost::math::cyl_bessel_j(nu, rho * rp) *
           rho;
  };
  const double top = std::sqrt(50.0 / t);
  const int panels = 40;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) s += gk::integrate(f, top * i / panels, top * (i + 1) / panels, 10, 1e-14);
  return std::pow(r * rp, -0.5 * (n - 2)) * s;
}

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int m, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.resize(m);
  w.resize(m);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p1 = z, p0 = 1.0;
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    w[i] = (b - a) / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

TEST_CASE("half-integer order reduces to sinh") {
  const ModelParams free(3, 0.0, 3.0);
  for (double t : {0.05, 0.7, 3.0}) {
    for (double r : {0.2, 1.0, 2.5}) {
      const double rp = 1.3;
      const double z = r * rp / (2.0 * t);
      const double expect = 1.0 / (std::sqrt(r * rp) * 2.0 * t) * std::exp(-(r * r + rp * rp) / (4.0 * t)) *
                            std::sqrt(2.0 / (kPi * z)) * std::sinh(z);
      CHECK(invsq::sector_kernel(t, r, rp, 0, free) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(invsq::sector_kernel(t, r, rp, 0, free, false) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("sector kernel against spectral quadrature") {
  struct Case {
    double t, r, rp;
    int k, n;
    double a;
    double frozen;  // spectral_oracle at the same point
  };
  const Case cases[] = {
      {0.3, 1.0, 2.0, 1, 3, -0.1, 0.079874275973301781},
      {0.3, 1.0, 2.0, 0, 3, 0.5, 0.10201339617678803},
      {1.0, 0.4, 1.5, 3, 3, 2.0, 1.601877343001676e-05},
      {0.2, 0.8, 0.9, 2, 4, -0.75, 0.10034780384922838},
      {2.0, 0.1, 3.0, 0, 5, -1.5, 0.030237679244205135},
  };
  for (const auto& c : cases) {
    const ModelParams p(c.n, c.a, 3.0);
    const double nu = invsq::sector_spec(p, c.k).nu;
    CHECK(spectral_oracle(c.t, c.r, c.rp, nu, c.n) == doctest::Approx(c.frozen).epsilon(1e-10));
    CHECK(invsq::sector_kernel(c.t, c.r, c.rp, c.k, p) == doctest::Approx(c.frozen).epsilon(1e-8));
  }
}

TEST_CASE("sector kernel errors") {
  const ModelParams p(3, 0.5, 3.0);
  CHECK_THROWS_AS(invsq::sector_kernel(0.0, 1.0, 1.0, 0, p), invsq::DomainError);
  CHECK_THROWS_AS(invsq::sector_kernel(1.0, -1.0, 1.0, 0, p), invsq::DomainError);
  CHECK_THROWS_AS(invsq::sector_kernel(1e-3, 10.0, 10.0, 0, p, false), invsq::NumericsError);
  CHECK(invsq::sector_kernel(1e-3, 10.0, 10.0, 0, p) > 0.0);
}

TEST_CASE("free kernel is the Gaussian") {
  const ModelParams free(3, 0.0, 3.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lt(std::log(0.01), std::log(5.0));
  std::uniform_real_distribution<double> rad(0.05, 3.0);
  std::uniform_real_distribution<double> cosine(-1.0, 1.0);
  int resolved = 0;
  for (int i = 0; i < 200; ++i) {
    const HeatKernelQuery q{std::exp(lt(rng)), rad(rng), rad(rng), cosine(rng), std::nullopt};
    const auto kv = invsq::full_kernel(q, free);
    if (!kv.resolved) continue;
    ++resolved;
    CHECK(kv.value == doctest::Approx(gaussian_kernel(q)).epsilon(1e-6));
    CHECK(kv.tail <= 1e-9 * kv.value);
  }
  CHECK(resolved > 150);

  // Underflowing values are still resolved through log H.
  const HeatKernelQuery far{1e-3, 0.01, 3.0, 1.0, std::nullopt};
  const auto kv = invsq::full_kernel(far, free);
  CHECK(kv.resolved);
  CHECK(kv.value == 0.0);
  const double d2 = (far.r - far.rp) * (far.r - far.rp);
  CHECK(kv.log_value == doctest::Approx(-1.5 * std::log(4.0 * kPi * far.t) - d2 / (4.0 * far.t)).epsilon(1e-12));
}

TEST_CASE("full kernel cancellation is flagged") {
  const ModelParams p(3, 3.0, 3.0);
  const auto kv = invsq::full_kernel({1e-3, 1.0, 1.0, -1.0, std::nullopt}, p);
  CHECK_FALSE(kv.resolved);
  CHECK(std::isnan(kv.value));
  CHECK(kv.cancellation > 1e100);
  CHECK_THROWS_AS(invsq::full_kernel({1.0, 1.0, 1.0, 0.0, std::nullopt}, ModelParams(4, 0.0, 3.0)),
                  invsq::DomainError);
  CHECK_THROWS_AS(invsq::full_kernel({1.0, 1.0, 1.0, 1.5, std::nullopt}, p), invsq::DomainError);
  CHECK_THROWS_AS(invsq::full_kernel({1.0, 1.0, 1.0, 0.5, -1}, p), invsq::DomainError);
}

TEST_CASE("full kernel is symmetric") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const ModelParams p(3, -0.24 + 4.0 * u(rng), 3.0);
    const double t = 0.01 + 2.0 * u(rng);
    const double r = 0.05 + 2.0 * u(rng);
    const double rp = 0.05 + 2.0 * u(rng);
    const double mu = 2.0 * u(rng) - 1.0;
    const auto a = invsq::full_kernel({t, r, rp, mu, std::nullopt}, p);
    const auto b = invsq::full_kernel({t, rp, r, mu, std::nullopt}, p);
    if (a.resolved) CHECK(a.value == b.value);
  }
}

TEST_CASE("angular terms vanish at small r r'/t") {
  // The gap nu_1 - nu_0 shrinks as a grows, hence the very small radii.
  for (double a : {-0.2, 0.0, 0.5, 3.0}) {
    const ModelParams p(3, a, 3.0);
    const double h0 = invsq::full_kernel({1.0, 1e-8, 1e-8, 0.3, 0}, p).value;
    const double h40 = invsq::full_kernel({1.0, 1e-8, 1e-8, 0.3, 40}, p).value;
    CHECK(std::abs(h0 - h40) <= 1e-6 * std::abs(h40));
  }
}

TEST_CASE("kernel mass") {
  CHECK(invsq::kernel_mass(0.5, 1.0, ModelParams(3, 0.0, 3.0)) == doctest::Approx(1.0).epsilon(1e-10));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const ModelParams p(3, 5.0 * u(rng), 3.0);
    const double m = invsq::kernel_mass(0.01 + 3.0 * u(rng), 0.01 + 3.0 * u(rng), p);
    CHECK(m <= 1.0 + 1e-6);
    CHECK(m > 0.0);
  }
  const double attractive = invsq::kernel_mass(0.5, 1.0, ModelParams(3, -0.2, 3.0));
  MESSAGE("mass at a = -0.2: " << attractive);
}

TEST_CASE("sector kernel is continuous in the coupling") {
  const ModelParams free(3, 0.0, 3.0);
  for (int k : {0, 2}) {
    const double h = invsq::sector_kernel(0.4, 0.7, 1.2, k, free);
    double prev = 0.0;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
      const double diff = std::abs(invsq::sector_kernel(0.4, 0.7, 1.2, k, ModelParams(3, eps, 3.0)) - h);
      if (prev > 0.0) CHECK(prev / diff == doctest::Approx(10.0).epsilon(0.05));
      prev = diff;
    }
    CHECK(prev < 1e-5 * h);
  }
}

TEST_CASE("semigroup") {
  const ModelParams p(3, 0.5, 3.0);
  const double t1 = 0.3;
  const double t2 = 0.5;
  const double r = 0.7;
  const double rp = 1.1;
  std::vector<double> s, ws;
  {
    std::vector<double> x, w;
    for (int panel = 0; panel < 6; ++panel) {
      gauss_legendre(16, panel, panel + 1.0, x, w);
      s.insert(s.end(), x.begin(), x.end());
      ws.insert(ws.end(), w.begin(), w.end());
    }
  }

  // Sector by sector the composition is a single radial integral.
  for (int k : {0, 1, 3}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sum += ws[i] * s[i] * s[i] * invsq::sector_kernel(t1, r, s[i], k, p) * invsq::sector_kernel(t2, s[i], rp, k, p);
    }
    CHECK(sum == doctest::Approx(invsq::sector_kernel(t1 + t2, r, rp, k, p)).epsilon(1e-8));
  }

  // Full kernel: x on the polar axis, y at angle theta in the xz-plane.
  const double mu = 0.3;
  const double st = std::sqrt(1.0 - mu * mu);
  std::vector<double> ca, wa;
  gauss_legendre(20, -1.0, 1.0, ca, wa);
  const int n_beta = 20;
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < ca.size(); ++j) {
      const double h1 = invsq::full_kernel({t1, r, s[i], ca[j], std::nullopt}, p).value;
      const double sa = std::sqrt(1.0 - ca[j] * ca[j]);
      double ring = 0.0;
      for (int b = 0; b < n_beta; ++b) {
        const double cb = std::cos(2.0 * kPi * (b + 0.5) / n_beta);
        const double mz = std::clamp(ca[j] * mu + sa * st * cb, -1.0, 1.0);
        ring += invsq::full_kernel({t2, s[i], rp, mz, std::nullopt}, p).value;
      }
      total += ws[i] * s[i] * s[i] * wa[j] * h1 * ring * 2.0 * kPi / n_beta;
    }
  }
  const double direct = invsq::full_kernel({t1 + t2, r, rp, mu, std::nullopt}, p).value;
  CHECK(total == doctest::Approx(direct).epsilon(1e-4));
}

TEST_CASE("free envelope is exact") {
  const auto rep = invsq::envelope_check(ModelParams(3, 0.0, 3.0), invsq::default_query_grid());
  CHECK(rep.envelope.sigma == 0.0);
  CHECK(rep.envelope.c_fit == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(rep.envelope.c1 == rep.envelope.c2);
  CHECK(rep.envelope.C1 == doctest::Approx(rep.envelope.C2).epsilon(1e-9));
  CHECK(rep.envelope.C1 == doctest::Approx(std::pow(4.0 * kPi, -1.5)).epsilon(1e-9));
  CHECK(rep.violations == 0);
  CHECK(rep.resolved + rep.unresolved == 7 * 7 * 7 * 3);
}

TEST_CASE("weighted envelopes") {
  for (double a : {-3.0 / 16.0, 3.0}) {
    const ModelParams p(3, a, 3.0);
    const auto rep = invsq::envelope_check(p, invsq::default_query_grid());
    CHECK(rep.violations == 0);
    CHECK(rep.envelope.C1 > 0.0);
    CHECK(rep.envelope.C1 <= rep.envelope.C2);
    CHECK(rep.envelope.c1 >= 0.5);
    CHECK(rep.envelope.c2 <= 50.0);
    int sandwiched = 0;
    for (const auto& pt : rep.points) sandwiched += pt.sandwiched ? 1 : 0;
    CHECK(sandwiched == rep.resolved);
    MESSAGE("a = " << a << ": resolved " << rep.resolved << ", unresolved " << rep.unresolved);
  }
  CHECK(invsq::sigma_a(ModelParams(3, -3.0 / 16.0, 3.0)) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("near-origin weight scaling") {
  // Below sqrt(t) the diagonal kernel scales like (r r')^{-sigma}.
  for (double a : {-3.0 / 16.0, 3.0}) {
    const ModelParams p(3, a, 3.0);
    const double sigma = invsq::sigma_a(p);
    const double h3 = invsq::full_kernel({1.0, 1e-3, 1e-3, 1.0, std::nullopt}, p).value;
    const double h4 = invsq::full_kernel({1.0, 1e-4, 1e-4, 1.0, std::nullopt}, p).value;
    CHECK(h4 / h3 == doctest::Approx(std::pow(10.0, 2.0 * sigma)).epsilon(1e-4));
    const double w3 = h3 / std::pow(invsq::heat_weight(sigma, 1e-3, 1.0), 2);
    const double w4 = h4 / std::pow(invsq::heat_weight(sigma, 1e-4, 1.0), 2);
    CHECK(w4 == doctest::Approx(w3).epsilon(1e-4));
  }
  CHECK(invsq::heat_weight(0.25, 4.0, 1.0) == 1.0);
  CHECK(invsq::heat_weight(0.25, 0.01, 1.0) == doctest::Approx(std::pow(100.0, 0.25)));
}

TEST_CASE("envelope errors") {
  std::vector<HeatKernelQuery> one_distance(4, HeatKernelQuery{1.0, 1.0, 1.0, 1.0, std::nullopt});
  CHECK_THROWS_AS(invsq::envelope_check(ModelParams(3, 0.5, 3.0), one_distance), invsq::ConvergenceError);
  CHECK_THROWS_AS(invsq::envelope_check(ModelParams(4, 0.5, 3.0), invsq::default_query_grid()), invsq::DomainError);
  CHECK_THROWS_AS(invsq::default_query_grid(1, 5), invsq::DomainError);
}
