#include "invsq/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// B_{2k} / (2k (2k-1)) for k = 1..10.
constexpr std::array<double, 10> kStirling = {
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
};

constexpr double kStirlingShift = 15.0;

double stirling_log_gamma(double z) {
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  double corr = 0.0;
  double p = inv;
  for (double c : kStirling) {
    corr += c * p;
    p *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi) + corr;
}

void require_argument(double x, const char* who) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(who) + ": argument must be finite and >= 0, got " +
                      std::to_string(x));
  }
}

// Hankel's expansion: terms t_k = a_k(nu) / x^k, stopped at the smallest term.
void hankel_pq(double nu, double x, double& p_sum, double& q_sum) {
  const double mu = 4.0 * nu * nu;
  p_sum = 1.0;
  q_sum = 0.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * x);
    const double mag = std::abs(term);
    if (mag >= prev) break;
    prev = mag;
    // k even -> P with sign (-1)^{k/2}; k odd -> Q with sign (-1)^{(k-1)/2}
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p_sum += sign * term;
    } else {
      q_sum += sign * term;
    }
    if (mag < 1e-3 * kEps) break;
  }
}

bool use_asymptotic(double nu, double x) { return x >= std::max(25.0, 2.0 * nu * nu); }

double j_series(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (k * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-3 * kEps * std::abs(sum)) break;
  }
  return sum * std::exp(nu * std::log(0.5 * x) - log_gamma(nu + 1.0));
}

double j_hankel(double nu, double x) {
  double p = 0.0;
  double q = 0.0;
  hankel_pq(nu, x, p, q);
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

double j_miller(double nu, double x) {
  using ld = long double;
  const int half = static_cast<int>(x + 30.0 + 4.0 * std::sqrt(x)) / 2 + 1;
  const int top = 2 * half;

  // c_0 = 1, c_i = (nu + 2i) Gamma(nu+i) / (Gamma(nu+1) i!)
  std::vector<ld> c(static_cast<std::size_t>(half) + 1);
  c[0] = 1.0L;
  ld g = 1.0L;
  for (int i = 1; i <= half; ++i) {
    if (i > 1) g *= (static_cast<ld>(nu) + i - 1) / i;
    c[static_cast<std::size_t>(i)] = (static_cast<ld>(nu) + 2 * i) * g;
  }

  ld y_next = 0.0L;
  ld y = 1e-30L;
  ld norm = 0.0L;
  const ld big = 1e300L;
  for (int k = top; k >= 1; --k) {
    if (k % 2 == 0) norm += c[static_cast<std::size_t>(k / 2)] * y;
    const ld y_prev = 2.0L * (static_cast<ld>(nu) + k) / static_cast<ld>(x) * y - y_next;
    y_next = y;
    y = y_prev;
    if (std::abs(y) > big) {
      y /= big;
      y_next /= big;
      norm /= big;
    }
  }
  norm += c[0] * y;

  const double ratio = static_cast<double>(y / norm);
  const double log_lhs = nu * std::log(0.5 * x) - log_gamma(nu + 1.0);
  if (ratio == 0.0) return 0.0;
  return std::copysign(std::exp(std::log(std::abs(ratio)) + log_lhs), ratio);
}

double i_scaled_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double sum = 1.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    const double mag = std::abs(term);
    if (mag >= prev) break;
    prev = mag;
    sum += term;
    if (mag < 1e-3 * kEps) break;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

// Ascending series, all terms positive. Summed outwards from the largest
// term so that neither the leading term nor the tail under/overflows.
double i_scaled_series(double nu, double x) {
  const double half = 0.5 * x;
  const double q = half * half;
  const double log_half = std::log(half);
  const int peak = static_cast<int>(std::floor(0.5 * (std::sqrt(nu * nu + x * x) - nu)));
  const double log_peak = (2.0 * peak + nu) * log_half - log_gamma(peak + 1.0) -
                          log_gamma(peak + nu + 1.0) - x;
  const double t_peak = std::exp(log_peak);
  if (t_peak == 0.0) return 0.0;

  double sum = t_peak;
  double t = t_peak;
  for (int k = peak; k < peak + 100000; ++k) {
    t *= q / ((k + 1.0) * (k + 1.0 + nu));
    sum += t;
    if (t < 1e-3 * kEps * sum) break;
  }
  t = t_peak;
  for (int k = peak; k > 0; --k) {
    t *= k * (k + nu) / q;
    sum += t;
    if (t < 1e-3 * kEps * sum) break;
  }
  return sum;
}

double mcmahon(double nu, int m) {
  const double mu = 4.0 * nu * nu;
  const double beta = (m + 0.5 * nu - 0.25) * kPi;
  const double b8 = 8.0 * beta;
  return beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8 * b8 * b8);
}

}  // namespace

BesselOrder::BesselOrder(double nu) : nu_(nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    throw DomainError("Bessel order must be finite and >= 0, got " + std::to_string(nu));
  }
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma: argument must be > 0, got " + std::to_string(x));
  }
  if (x >= kStirlingShift) return stirling_log_gamma(x);
  double prod = 1.0;
  double z = x;
  while (z < kStirlingShift) {
    prod *= z;
    z += 1.0;
  }
  return stirling_log_gamma(z) - std::log(prod);
}

double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("gamma_fn: argument must be > 0, got " + std::to_string(x));
  }
  if (x > 171.6) throw DomainError("gamma_fn: overflow for x = " + std::to_string(x));
  if (x >= kStirlingShift) return std::exp(stirling_log_gamma(x));
  double prod = 1.0;
  double z = x;
  while (z < kStirlingShift) {
    prod *= z;
    z += 1.0;
  }
  return std::exp(stirling_log_gamma(z)) / prod;
}

double sphere_area(int n) {
  if (n < 1) throw DomainError("sphere_area: dimension must be >= 1");
  return 2.0 * std::pow(kPi, 0.5 * n) / gamma_fn(0.5 * n);
}

double bessel_j(BesselOrder order, double x) {
  require_argument(x, "bessel_j");
  const double nu = order.value();
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x <= 4.0 || x * x <= 4.0 * (nu + 1.0)) return j_series(nu, x);
  if (use_asymptotic(nu, x)) return j_hankel(nu, x);
  return j_miller(nu, x);
}

double bessel_i_scaled(BesselOrder order, double x) {
  require_argument(x, "bessel_i_scaled");
  const double nu = order.value();
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (use_asymptotic(nu, x)) return i_scaled_asymptotic(nu, x);
  return i_scaled_series(nu, x);
}

std::vector<double> bessel_zeros(BesselOrder order, int count) {
  if (count < 1) throw DomainError("bessel_zeros: count must be >= 1");
  const double nu = order.value();
  const BesselOrder next(nu + 1.0);
  std::vector<double> zeros;
  zeros.reserve(static_cast<std::size_t>(count));

  constexpr double kScanStep = 0.5;
  for (int m = 1; m <= count; ++m) {
    // Zeros of J_nu exceed nu and are more than 2.4 apart, so scanning from
    // the previous zero + 1 brackets exactly the next one.
    double a = (m == 1) ? nu : zeros.back() + 1.0;
    double fa = bessel_j(order, a);
    double b = a;
    double fb = fa;
    int scans = 0;
    do {
      a = b;
      fa = fb;
      b = a + kScanStep;
      fb = bessel_j(order, b);
      if (++scans > 10000) {
        throw ConvergenceError("bessel_zeros: no sign change found for zero index " +
                               std::to_string(m));
      }
    } while (fb != 0.0 && (fa > 0.0) == (fb > 0.0));
    if (fb == 0.0) {
      zeros.push_back(b);
      continue;
    }

    double x = mcmahon(nu, m);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const double fx = bessel_j(order, x);
      if (fx == 0.0) {
        converged = true;
        break;
      }
      if ((fx > 0.0) == (fa > 0.0)) {
        a = x;
        fa = fx;
      } else {
        b = x;
      }
      const double dfx = nu / x * fx - bessel_j(next, x);
      double xn = x - fx / dfx;
      if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
      const double step = std::abs(xn - x);
      x = xn;
      if (step <= 2.0 * kEps * x || (b - a) <= 2.0 * kEps * x) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("bessel_zeros: Newton iteration failed for zero index " +
                             std::to_string(m));
    }
    zeros.push_back(x);
  }
  return zeros;
}

}  // namespace invsq
