#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontier/likelihood.hpp"
#include "frontier/model.hpp"

namespace frontier {

struct OlsFit {
  Eigen::VectorXd beta_hat;
  double sigma2_hat = 0.0;  // ML variance, divisor n
  double loglik = 0.0;      // -(n/2)(ln 2 pi + ln sigma2_hat + 1)
  Eigen::VectorXd residuals;
  Eigen::MatrixXd cov_beta;  // sigma2_hat * n/(n-p) * (X'X)^-1
  double skewness = 0.0;     // third standardized moment of the residuals
  double third_moment = 0.0; // third central moment m3
  bool degenerate = false;   // exact fit: sigma2_hat == 0, loglik == +inf
};

/// Least squares by column-pivoting Householder QR. Throws DataError when n <= p.
OlsFit fit_ols(const DesignMatrices& dm);

struct StartValues {
  ParameterVector params;
  bool wrong_skew = false;  // residual skew points the wrong way for a consumption frontier
  std::vector<std::string> warnings;
};

/// Corrected-OLS starting point for a frontier family. sigma_u comes from the
/// third central moment of the residuals,
///   m3 = sqrt(2/pi) (4/pi - 1) sigma_u^3   (u adds to y, so m3 > 0),
/// clamped below at 0.05 * sqrt(sigma2_hat). For OLS the result is
/// (beta_hat, ln sigma2_hat).
StartValues cols_start(const OlsFit& ofit, Family family, const DesignMatrices& dm);

}  // namespace frontier
