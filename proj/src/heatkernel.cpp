#include "invsq/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "invsq/errors.hpp"

namespace invsq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Below this many significant digits the sum is not reported as a value.
constexpr double kResolution = 1e-8;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require_point(double t, double r, double rp) {
  if (!(t > 0.0) || !(r > 0.0) || !(rp > 0.0) || !std::isfinite(t) || !std::isfinite(r) || !std::isfinite(rp)) {
    throw DomainError("heat kernel needs t, r, r' > 0 and finite (t = " + fmt(t) + ", r = " + fmt(r) +
                      ", r' = " + fmt(rp) + ")");
  }
}

}  // namespace

double sector_kernel(double t, double r, double rp, int k, const ModelParams& params, bool scaled) {
  require_point(t, r, rp);
  const double nu = sector_spec(params, k).nu;
  const double z = r * rp / (2.0 * t);
  const double pref = std::pow(r * rp, -0.5 * (params.n() - 2.0)) / (2.0 * t);
  if (scaled) {
    const double d = r - rp;
    return pref * std::exp(-d * d / (4.0 * t)) * bessel_i_scaled(BesselOrder(nu), z);
  }
  const double i_nu = bessel_i_scaled(BesselOrder(nu), z) * std::exp(z);
  if (!std::isfinite(i_nu)) {
    throw NumericsError("I_nu(z) overflows at z = " + fmt(z) + "; use the scaled kernel");
  }
  return pref * std::exp(-(r * r + rp * rp) / (4.0 * t)) * i_nu;
}

KernelValue full_kernel(const HeatKernelQuery& q, const ModelParams& params) {
  if (params.n() != 3) throw DomainError("full_kernel is synthesised for n = 3 only");
  require_point(q.t, q.r, q.rp);
  if (!(q.mu >= -1.0 && q.mu <= 1.0)) throw DomainError("full_kernel needs mu in [-1, 1]");
  if (q.sectors && *q.sectors < 0) throw DomainError("full_kernel needs K >= 0");

  KernelValue out;
  const double z = q.r * q.rp / (2.0 * q.t);
  // The terms are of size exp(-(r-r')^2/(4t)) while H is of size
  // exp(-|x-y|^2/(4t)); the ratio exp(z (1 - mu)) is the cancellation.
  const double expected_cancellation = std::exp(z * (1.0 - q.mu));
  if (expected_cancellation * kEps > 1e3 * kResolution) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.log_value = out.value;
    out.tail = std::numeric_limits<double>::quiet_NaN();
    out.cancellation = expected_cancellation;
    out.resolved = false;
    return out;
  }

  const bool automatic = !q.sectors.has_value();
  const int limit = automatic ? static_cast<int>(std::ceil(10.0 * std::sqrt(z) + 30.0)) : *q.sectors;
  const double pref = 1.0 / (std::sqrt(q.r * q.rp) * 2.0 * q.t);
  const double d = q.r - q.rp;
  const double log_gauss = -d * d / (4.0 * q.t);
  double p_prev = 1.0;  // P_{k-1}
  double p_cur = 1.0;   // P_k
  double sum = 0.0;
  double abs_sum = 0.0;
  double b_prev = 0.0;
  double b_last = 0.0;
  int k = 0;
  for (; k <= limit; ++k) {
    if (k == 1) {
      p_prev = 1.0;
      p_cur = q.mu;
    } else if (k > 1) {
      const double p_next = ((2.0 * k - 1.0) * q.mu * p_cur - (k - 1.0) * p_prev) / k;
      p_prev = p_cur;
      p_cur = p_next;
    }
    const double nu = sector_spec(params, k).nu;
    const double b = (2.0 * k + 1.0) / (4.0 * kPi) * pref * bessel_i_scaled(BesselOrder(nu), z);
    sum += b * p_cur;
    abs_sum += b * std::abs(p_cur);
    b_prev = b_last;
    b_last = b;
    if (automatic && k > z && b <= 1e-18 * abs_sum) break;
  }
  out.sectors = std::min(k, limit);
  out.value = sum * std::exp(log_gauss);
  out.log_value = sum > 0.0 ? std::log(sum) + log_gauss : std::numeric_limits<double>::quiet_NaN();
  const double ratio = b_prev > 0.0 ? b_last / b_prev : 0.0;
  out.tail = ratio < 1.0 ? b_last * ratio / (1.0 - ratio) * std::exp(log_gauss)
                         : std::numeric_limits<double>::infinity();
  out.cancellation = sum != 0.0 ? abs_sum / std::abs(sum) : std::numeric_limits<double>::infinity();
  out.resolved = sum > 0.0 && out.cancellation * kEps <= kResolution;
  return out;
}

double kernel_mass(double t, double r, const ModelParams& params) {
  require_point(t, r, 1.0);
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  const int n = params.n();
  auto f = [&](double rp) { return rp > 0.0 ? sector_kernel(t, r, rp, 0, params) * std::pow(rp, n - 1) : 0.0; };
  const double spread = 40.0 * std::sqrt(t);
  const double lo = std::max(0.0, r - spread);
  double total = 0.0;
  if (lo > 0.0) total += gk::integrate(f, 0.0, lo, 10, 1e-13);
  total += gk::integrate(f, lo, r, 15, 1e-13);
  total += gk::integrate(f, r, r + spread, 15, 1e-13);
  return total;
}

double heat_weight(double sigma, double r, double t) {
  const double s = std::sqrt(t);
  return r <= s ? std::pow(s / r, sigma) : 1.0;
}

EnvelopeReport envelope_check(const ModelParams& params, const std::vector<HeatKernelQuery>& queries,
                              const EnvelopeOptions& options) {
  if (params.n() != 3) throw DomainError("envelope_check is available for n = 3 only");
  EnvelopeReport report;
  report.envelope.sigma = sigma_a(params);
  const double sigma = report.envelope.sigma;

  struct Sample {
    double d2;
    double scale;  // phi(x) phi(y) t^{-3/2}
    double y;      // log(H / scale)
  };
  std::vector<Sample> samples(queries.size());
  std::vector<KernelValue> values(queries.size());
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    values[i] = full_kernel(q, params);
    const double d2 = std::max(0.0, (q.r * q.r + q.rp * q.rp - 2.0 * q.r * q.rp * q.mu) / q.t);
    const double scale = heat_weight(sigma, q.r, q.t) * heat_weight(sigma, q.rp, q.t) * std::pow(q.t, -1.5);
    samples[i] = {d2, scale, 0.0};
    if (values[i].resolved) {
      samples[i].y = values[i].log_value - std::log(scale);
      good.push_back(i);
    }
  }
  report.resolved = static_cast<int>(good.size());
  report.unresolved = static_cast<int>(queries.size() - good.size());

  double mx = 0.0;
  double my = 0.0;
  for (auto i : good) {
    mx += samples[i].d2;
    my += samples[i].y;
  }
  if (good.size() < 2) throw ConvergenceError("envelope fit needs at least two resolved queries");
  mx /= static_cast<double>(good.size());
  my /= static_cast<double>(good.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (auto i : good) {
    sxx += (samples[i].d2 - mx) * (samples[i].d2 - mx);
    sxy += (samples[i].d2 - mx) * (samples[i].y - my);
  }
  if (!(sxx > 0.0) || !(sxy < 0.0)) {
    throw ConvergenceError("envelope fit failed: the query grid does not resolve a Gaussian decay");
  }
  report.envelope.c_fit = -sxx / sxy;

  // log C for a given c, from the extreme residuals.
  auto log_c = [&](double c, bool upper) {
    double v = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (auto i : good) {
      const double resid = samples[i].y + samples[i].d2 / c;
      v = upper ? std::max(v, resid) : std::min(v, resid);
    }
    return v;
  };
  const double lo_box = std::log(options.big_c_min);
  const double hi_box = std::log(options.big_c_max);
  auto inside = [&](double v) { return v >= lo_box && v <= hi_box; };

  // Mean log gap between the data and one side of the envelope.
  auto gap = [&](double c, bool upper) {
    const double lc = log_c(c, upper);
    double g = 0.0;
    for (auto i : good) g += std::abs(lc - samples[i].d2 / c - samples[i].y);
    return g / static_cast<double>(good.size());
  };
  auto choose = [&](bool upper) {
    const double c0 = std::clamp(report.envelope.c_fit, options.c_min, options.c_max);
    if (inside(log_c(c0, upper))) return c0;
    double best = c0;
    double best_gap = std::numeric_limits<double>::infinity();
    const int steps = 400;
    for (int s = 0; s <= steps; ++s) {
      const double c = options.c_min * std::pow(options.c_max / options.c_min, double(s) / steps);
      if (!inside(log_c(c, upper))) continue;
      const double g = gap(c, upper);
      if (g < best_gap) {
        best_gap = g;
        best = c;
      }
    }
    return best;
  };
  auto& env = report.envelope;
  env.c1 = choose(false);
  env.c2 = choose(true);
  env.C1 = std::exp(std::clamp(log_c(env.c1, false), lo_box, hi_box));
  env.C2 = std::exp(std::clamp(log_c(env.c2, true), lo_box, hi_box));

  constexpr double kSlack = 1e-10;
  const double log_c1 = std::log(env.C1);
  const double log_c2 = std::log(env.C2);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& s = samples[i];
    const double lo = log_c1 - s.d2 / env.c1;
    const double hi = log_c2 - s.d2 / env.c2;
    EnvelopePoint pt{queries[i], values[i].value, s.scale * std::exp(lo), s.scale * std::exp(hi),
                     values[i].resolved, false};
    if (pt.resolved) {
      pt.sandwiched = s.y >= lo - kSlack && s.y <= hi + kSlack;
      if (!pt.sandwiched) ++report.violations;
    }
    report.points.push_back(pt);
  }
  return report;
}

std::vector<HeatKernelQuery> default_query_grid(int t_points, int r_points) {
  if (t_points < 2 || r_points < 2) throw DomainError("query grid needs at least two points per axis");
  auto logspace = [](double a, double b, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = a * std::pow(b / a, double(i) / (count - 1));
    return v;
  };
  std::vector<HeatKernelQuery> out;
  for (double t : logspace(1e-3, 10.0, t_points)) {
    for (double r : logspace(1e-2, 10.0, r_points)) {
      for (double rp : logspace(1e-2, 10.0, r_points)) {
        for (double mu : {-1.0, 0.0, 1.0}) out.push_back({t, r, rp, mu, std::nullopt});
      }
    }
  }
  return out;
}

}  // namespace invsq
