#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frontier/data.hpp"
#include "frontier/mle.hpp"

namespace frontier {

/// 1% critical value of the mixed chi-square for a single variance parameter
/// on the boundary of its space (Kodde-Palm table, df = 1).
inline constexpr double kBoundaryCritical1pctDf1 = 5.412;

/// Raised when a restricted model fits better than its unrestricted nest by
/// more than optimizer slack; signals a failed unrestricted fit.
class NestingViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LrTest {
  double lr = 0.0;
  int df = 1;
  double critical_1pct = 0.0;
  bool reject = false;
  bool boundary_aware = true;
  std::string warning;
};

/// LR = 2 (loglik_unrestricted - loglik_restricted), clamped to 0 within 1e-6.
/// For df = 1 without an explicit critical value the boundary-corrected 5.412
/// is used; for df > 1 without one, the plain chi-square 1% quantile is used
/// and the result is flagged boundary-unaware.
LrTest lr_test(double loglik_restricted, double loglik_unrestricted, int df,
               std::optional<double> critical = std::nullopt);

/// Plain chi-square upper quantile, e.g. chi2_quantile(df, 0.99).
double chi2_quantile(int df, double probability);
double chi2_upper_tail(double x, int df);

struct WaldTest {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Raised when the sub-covariance of a Wald test cannot be inverted.
class SingularCovariance : public std::runtime_error {
 public:
  SingularCovariance(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

/// chi2 = theta_S' (cov_SS)^-1 theta_S over packed indices S.
WaldTest wald_joint(const FitResult& fr, const std::vector<Eigen::Index>& subset);

/// Packed indices of the frontier slopes (every frontier coefficient except the intercept).
std::vector<Eigen::Index> frontier_slope_indices(const FitResult& fr);

/// Significance stars at 10% / 5% / 1%.
std::string stars(double p_value);

/// sigma^2 and lambda from the two component standard deviations.
Scales scales_from(double sigma_v, double sigma_u);
/// Recomputes the decomposition from raw fitted parameters and asserts its
/// identities; throws InvariantError if they disagree with the stored values.
Scales variance_decomposition(const FitResult& fr, const DesignMatrices& dm);

/// Unconditional half-normal mean efficiency E[exp(-u)] = 2 exp(sigma_u^2/2) Phi(-sigma_u).
double half_normal_mean_efficiency(double sigma_u);

struct LadderRow {
  Family family = Family::OLS;
  std::optional<FitResult> fit;
  std::string error;  // set when the fit failed
  std::vector<std::string> labels_X;
  std::vector<std::string> labels_Z;
  std::optional<WaldTest> wald;
  double mean_te = 0.0;  // mean BC efficiency; 0 for OLS
};

struct LadderLr {
  Family restricted = Family::OLS;
  Family unrestricted = Family::NHN;
  std::optional<LrTest> test;
  std::string error;
};

struct LadderReport {
  std::vector<LadderRow> rows;  // OLS, NHN, NHN_HET, TN
  std::vector<LadderLr> lr_tests;
  Family recommended = Family::OLS;
  std::string recommendation_reason;
};

/// OLS, NHN, NHN_HET and TN variants of one base spec (the base family is ignored).
std::vector<ModelSpec> ladder_specs(const ModelSpec& base);

/// Fits the four-model ladder, the OLS-vs-NHN boundary LR test (df = 1) and
/// the interior LR tests of NHN against its two extensions, then recommends a
/// model: OLS when inefficiency is not detected, otherwise the frontier model
/// with the highest log-likelihood. Fit failures become per-row errors.
LadderReport run_ladder(const Dataset& ds, const std::vector<ModelSpec>& specs);

}  // namespace frontier
