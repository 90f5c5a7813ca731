#pragma once

// Composed-error log-likelihoods for consumption frontiers, where observed use
// sits above the frontier: y = X beta + v + u, v ~ N(0, sigma_v^2), u >= 0.
//
//   NHN      u ~ |N(0, sigma_u^2)|
//   NHN_HET  u_i ~ |N(0, sigma_ui^2)|,  ln sigma_ui^2 = Z_i delta
//   TN       u_i ~ N+(mu_i, sigma_u^2), mu_i = Z_i delta
//
// Variances are carried as logs (theta = ln sigma^2) so every finite parameter
// vector is admissible.

#include <Eigen/Dense>

#include "frontier/model.hpp"

namespace frontier {

/// Packing order is [beta | theta_v | ineff block], where the ineff block is
///   OLS: empty;  NHN: theta_u;  NHN_HET: delta (q);  TN: delta (q), theta_u.
struct ParamLayout {
  Family family = Family::NHN;
  Eigen::Index p = 0;
  Eigen::Index q = 0;

  Eigen::Index size() const;
  Eigen::Index theta_v() const { return p; }
  Eigen::Index delta_begin() const { return p + 1; }
  /// Index of theta_u, or -1 for families without a scalar sigma_u.
  Eigen::Index theta_u() const;
};

ParamLayout layout_for(Family family, const DesignMatrices& dm);

struct ParameterVector {
  Family family = Family::NHN;
  Eigen::VectorXd beta;
  double theta_v = 0.0;
  double theta_u = 0.0;   // NHN and TN
  Eigen::VectorXd delta;  // NHN_HET and TN

  ParamLayout layout() const;
  Eigen::VectorXd pack() const;
  static ParameterVector unpack(const ParamLayout& layout, const Eigen::VectorXd& packed);

  double sigma_v() const;
  /// Scalar sigma_u; for NHN_HET this is the sample mean of sigma_ui over Z.
  double sigma_u(const DesignMatrices& dm) const;
  /// Per-observation sigma_ui^2 (constant for NHN and TN).
  Eigen::VectorXd sigma_u2(const DesignMatrices& dm) const;
  /// Pre-truncation means (zero except for TN).
  Eigen::VectorXd mu(const DesignMatrices& dm) const;
};

/// eps = y - X beta.
Eigen::VectorXd composite_error(const DesignMatrices& dm, const Eigen::VectorXd& beta);

double loglik_nhn(const DesignMatrices& dm, const ParameterVector& pv);
double loglik_nhn_het(const DesignMatrices& dm, const ParameterVector& pv);
double loglik_tn(const DesignMatrices& dm, const ParameterVector& pv);
/// Gaussian log-likelihood of the OLS model at (beta, sigma_v^2 = exp(theta_v)).
double loglik_gaussian(const DesignMatrices& dm, const ParameterVector& pv);

/// Dispatches on pv.family.
double loglik(const DesignMatrices& dm, const ParameterVector& pv);
/// Per-observation contributions; their ordered sum is loglik().
Eigen::VectorXd loglik_terms(const DesignMatrices& dm, const ParameterVector& pv);

/// Analytic gradient in packing order.
Eigen::VectorXd grad_loglik(const DesignMatrices& dm, const ParameterVector& pv);

/// Value and (optionally) gradient at a packed vector in one pass.
double loglik_packed(const ParamLayout& layout, const DesignMatrices& dm,
                     const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

}  // namespace frontier
