#pragma once

#include <optional>
#include <vector>

#include "invsq/operator.hpp"

namespace invsq {

/// A point (t, x, y) with |x| = r, |y| = rp and cos(angle) = mu. `sectors`
/// is the truncation K; empty means choose K from z = r rp / (2t).
struct HeatKernelQuery {
  double t;
  double r;
  double rp;
  double mu;
  std::optional<int> sectors;
};

/// h_k(t, r, r') = (r r')^{-(n-2)/2} (2t)^{-1} exp(-(r^2 + r'^2)/(4t)) I_{nu_k}(r r'/(2t)),
/// the kernel of e^{-tP_a} on sector k against r'^{n-1} dr'. The default path
/// uses exp(-z) I_nu(z); `scaled = false` multiplies the factors out directly
/// and throws NumericsError once I_nu(z) overflows.
double sector_kernel(double t, double r, double rp, int k, const ModelParams& params, bool scaled = true);

struct KernelValue {
  double value = 0.0;
  double log_value = 0.0;     // log H; finite where value underflows
  double tail = 0.0;          // bound on the omitted sectors
  int sectors = 0;            // K actually summed
  double cancellation = 1.0;  // sum |term| / |sum term|
  bool resolved = true;       // false when cancellation leaves no significant digits
};

/// H(t, x, y) for n = 3: sum_{k <= K} (2k+1)/(4 pi) P_k(mu) h_k. The common
/// factor exp(-(r - r')^2/(4t)) is kept out of the sum. Points where the sum
/// would cancel by more than about 1e8 relative to machine precision, which
/// happens once r r' (1 - mu)/(2t) exceeds roughly 18, come back unresolved
/// with value NaN and the expected cancellation.
KernelValue full_kernel(const HeatKernelQuery& query, const ModelParams& params);

/// int h_0(t, r, r') r'^{n-1} dr' = int H(t, x, y) dy.
double kernel_mass(double t, double r, const ModelParams& params);

/// phi_sigma(x, t) = (sqrt(t)/|x|)^sigma for |x| <= sqrt(t), else 1.
double heat_weight(double sigma, double r, double t);

struct EnvelopeOptions {
  double big_c_min = 1e-3;
  double big_c_max = 1e3;
  double c_min = 0.5;
  double c_max = 50.0;
};

struct BoundEnvelope {
  double C1 = 0.0;
  double C2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double sigma = 0.0;
  double c_fit = 0.0;  // Gaussian rate from the regression
};

struct EnvelopePoint {
  HeatKernelQuery query;
  double value;
  double envelope_lo;
  double envelope_hi;
  bool resolved;
  bool sandwiched;
};

struct EnvelopeReport {
  BoundEnvelope envelope;
  std::vector<EnvelopePoint> points;
  int resolved = 0;
  int unresolved = 0;
  int violations = 0;  // resolved points outside the envelope
};

/// Fits the two-sided bound C phi(x) phi(y) t^{-3/2} exp(-|x-y|^2/(c t)) over
/// the resolved queries: c from a log-linear regression, then C1, C2 from the
/// extreme residuals; when those leave the search box, c1 and c2 are searched
/// separately inside it. Requires n = 3 and at least two resolved points with
/// distinct |x-y|^2/t.
EnvelopeReport envelope_check(const ModelParams& params, const std::vector<HeatKernelQuery>& queries,
                              const EnvelopeOptions& options = {});

/// Log-spaced t in [1e-3, 10], r, r' in [1e-2, 10], mu in {-1, 0, 1}.
std::vector<HeatKernelQuery> default_query_grid(int t_points = 7, int r_points = 7);

}  // namespace invsq
