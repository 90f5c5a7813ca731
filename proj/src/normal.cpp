#include "frontier/normal.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace frontier::normal {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTailCut = -8.0;

// ln Phi(x) for x < -8 from the asymptotic series
//   Phi(x) = phi(x)/t * sum_k (-1)^k (2k-1)!! / t^(2k),  t = -x,
// truncated at the smallest term.
double log_cdf_tail(double x) {
  const double t = -x;
  const double inv_t2 = 1.0 / (t * t);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = -term * (2.0 * k - 1.0) * inv_t2;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return -0.5 * t * t - std::log(t) - kLogSqrt2Pi + std::log(sum);
}

// Acklam's rational approximation to the lower-half quantile; a starting
// point only, refined by Newton steps on ln Phi.
double acklam_lower(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x < kTailCut) return log_cdf_tail(x);
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  return std::log(0.5 * std::erfc(-x * kInvSqrt2));
}

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double inverse_mills(double x) {
  // Deep lower tail: phi/Phi = (r + phi/Phi) - r, no inf - inf.
  if (x < kTailCut) return mills_shift(x) - x;
  return std::exp(log_pdf(x) - log_cdf(x));
}

double mills_shift(double r) {
  if (r > -5.0) return r + inverse_mills(r);
  // r + phi(r)/Phi(r) = 1 / (t + 2/(t + 3/(t + ...))),  t = -r.
  const double t = -r;
  double f = t;
  for (int k = 300; k >= 2; --k) f = t + k / f;
  return 1.0 / f;
}

double quantile_from_log(double log_p) {
  if (!(log_p < 0.0)) {
    return log_p == 0.0 ? std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::quiet_NaN();
  }
  if (log_p > -0.6931471805599453) {
    // Upper half: use the exact complement 1 - p = -expm1(log_p).
    return -quantile_from_log(std::log(-std::expm1(log_p)));
  }
  double x;
  if (log_p > -700.0) {
    x = acklam_lower(std::exp(log_p));
  } else {
    const double s = -2.0 * log_p;
    x = -std::sqrt(s - std::log(s) - 2.0 * kLogSqrt2Pi);
  }
  // Newton on g(x) = ln Phi(x) - log_p; g is increasing and concave.
  for (int it = 0; it < 60; ++it) {
    const double g = log_cdf(x) - log_p;
    const double step = g / inverse_mills(x);
    x -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (p > 0.5) return -quantile_from_log(std::log1p(-p));
  return quantile_from_log(std::log(p));
}

double upper_quantile_from_log(double log_q) { return -quantile_from_log(log_q); }

}  // namespace frontier::normal
