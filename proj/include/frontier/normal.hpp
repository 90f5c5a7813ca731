#pragma once

// Standard normal special functions used by every likelihood and scoring path.
// All routines are total on finite input and never return NaN for finite x.

namespace frontier::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double log_pdf(double x);
double pdf(double x);

/// ln Phi(x). Uses erfc in the body and an asymptotic series below -8, so the
/// result stays finite and relatively accurate far into the lower tail.
double log_cdf(double x);
double cdf(double x);

/// phi(x) / Phi(x), evaluated in log space.
double inverse_mills(double x);

/// r + phi(r)/Phi(r). For r << 0 both terms are large and nearly cancel; a
/// continued fraction gives the difference directly.
double mills_shift(double r);

/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);

/// Phi^{-1}(exp(log_p)) for log_p < 0, valid even when exp(log_p) underflows.
double quantile_from_log(double log_p);

/// Upper-tail quantile: x with Phi(-x) = exp(log_q), i.e. P(Z > x) = q.
double upper_quantile_from_log(double log_q);

}  // namespace frontier::normal
