#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontier/likelihood.hpp"
#include "frontier/model.hpp"

namespace frontier {

/// ln sigma_u^2 is never taken below this value (sigma_u ~ 2e-9).
inline constexpr double kThetaUFloor = -40.0;
/// An optimum with lambda = sigma_u / sigma_v below this is tried on the floor,
/// and kept there unless the interior point is better by more than 1e-6.
inline constexpr double kLambdaCollapse = 1e-3;

struct Scales {
  double sigma_v = 0.0;
  double sigma_u = 0.0;
  double lambda = 0.0;  // sigma_u / sigma_v
  double sigma2 = 0.0;  // sigma_u^2 + sigma_v^2
};

/// Recomputes sigma_v, sigma_u, lambda and sigma^2 from raw parameters.
Scales variance_scales(const ParameterVector& pv, const DesignMatrices& dm);

struct Convergence {
  int iterations = 0;
  double gradient_norm = 0.0;
  double loglik_change = 0.0;  // relative change over the final iteration
  int restarts = 0;
  bool wrong_skew_warning = false;
  bool boundary = false;  // sigma_u collapsed onto its floor
  std::vector<std::string> warnings;
};

struct FitResult {
  ModelSpec spec;
  ParameterVector pv_hat;
  double loglik = 0.0;
  Eigen::Index n = 0;
  std::vector<std::string> labels;  // one per packed parameter

  bool cov_available = false;
  Eigen::MatrixXd cov;  // NaN rows/cols for parameters fixed on a boundary
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p_value;

  Scales derived;
  Convergence convergence;
  std::string column_hash;

  ParamLayout layout() const { return pv_hat.layout(); }
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, ParameterVector best, double best_loglik)
      : std::runtime_error(what), best_(std::move(best)), best_loglik_(best_loglik) {}
  const ParameterVector& best() const noexcept { return best_; }
  double best_loglik() const noexcept { return best_loglik_; }

 private:
  ParameterVector best_;
  double best_loglik_;
};

struct FitOptions {
  /// Additional starting points tried alongside the corrected-OLS start.
  std::vector<ParameterVector> extra_starts;
  int max_restarts = 5;
  bool compute_covariance = true;
};

/// Gradient-norm bound used for certification: 1e-5 * (1 + |loglik|).
double gradient_tolerance(double loglik);

/// Packed-parameter labels: frontier labels, ln_sigma_v2, then the ineff block.
std::vector<std::string> parameter_labels(Family family, const DesignMatrices& dm);

/// Maximum-likelihood fit. OLS is delegated to fit_ols. Frontier families run
/// a simplex search from the corrected-OLS start, then BFGS, then Newton
/// polishing on a finite-difference Hessian of the analytic gradient. The
/// covariance is the inverse observed information.
FitResult fit(const ModelSpec& spec, const DesignMatrices& dm, const FitOptions& options = {});

/// Start for a richer family nested at an NHN optimum: delta = 0 for TN,
/// delta = (theta_u, 0, ...) for NHN_HET.
std::optional<ParameterVector> nested_start(const FitResult& nhn, Family family,
                                            const DesignMatrices& dm);

/// Negative Hessian of the log-likelihood by central differences of the
/// analytic gradient, step 1e-4 * (1 + |theta_j|), symmetrized.
Eigen::MatrixXd observed_information(const DesignMatrices& dm, const ParameterVector& pv);

struct CertificationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Certification {
  bool ok = true;
  std::vector<CertificationCheck> checks;
  /// First violated invariant, empty when ok.
  std::string failure() const;
};

/// Re-evaluates the likelihood and gradient at pv_hat and re-derives the
/// variance identities.
Certification certify(const FitResult& fr, const DesignMatrices& dm);

}  // namespace frontier
