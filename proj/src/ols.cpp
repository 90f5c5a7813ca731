#include "frontier/ols.hpp"

#include <cmath>
#include <numbers>

#include "frontier/error.hpp"

namespace frontier {

OlsFit fit_ols(const DesignMatrices& dm) {
  const Eigen::Index n = dm.n();
  const Eigen::Index p = dm.p();
  if (n <= p)
    throw DataError("OLS needs more observations than regressors (n=" + std::to_string(n) +
                    ", p=" + std::to_string(p) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dm.X);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < p) throw CollinearityError("frontier matrix is rank deficient", "");

  OlsFit fit;
  fit.beta_hat = qr.solve(dm.y);
  fit.residuals = dm.y - dm.X * fit.beta_hat;

  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ss += fit.residuals(i) * fit.residuals(i);
  const double nd = static_cast<double>(n);
  fit.sigma2_hat = ss / nd;

  const double scale = 1.0 + dm.y.squaredNorm() / nd;
  if (fit.sigma2_hat <= 1e-24 * scale) {
    fit.degenerate = true;
    fit.sigma2_hat = 0.0;
    fit.loglik = std::numeric_limits<double>::infinity();
  } else {
    fit.loglik = -0.5 * nd * (std::log(2.0 * std::numbers::pi) + std::log(fit.sigma2_hat) + 1.0);
  }

  const double mean = fit.residuals.mean();
  double m2 = 0.0, m3 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = fit.residuals(i) - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= nd;
  m3 /= nd;
  fit.third_moment = fit.degenerate ? 0.0 : m3;
  fit.skewness = (fit.degenerate || m2 <= 0.0) ? 0.0 : m3 / std::pow(m2, 1.5);

  // (X'X)^-1 = P (R'R)^-1 P' from X P = Q R.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * inner * perm.transpose();
  fit.cov_beta = fit.sigma2_hat * (nd / static_cast<double>(n - p)) * xtx_inv;
  return fit;
}

StartValues cols_start(const OlsFit& ofit, Family family, const DesignMatrices& dm) {
  StartValues out;
  ParameterVector& pv = out.params;
  pv.family = family;
  pv.beta = ofit.beta_hat;
  const double sigma2 = std::max(ofit.sigma2_hat, 1e-12);

  if (family == Family::OLS) {
    pv.theta_v = std::log(sigma2);
    return out;
  }

  constexpr double pi = std::numbers::pi;
  const double m3_coef = std::sqrt(2.0 / pi) * (4.0 / pi - 1.0);
  const double floor_u = 0.05 * std::sqrt(sigma2);
  double sigma_u = 0.0;
  if (ofit.third_moment > 0.0) {
    sigma_u = std::cbrt(ofit.third_moment / m3_coef);
  } else if (ofit.third_moment < 0.0) {
    out.wrong_skew = true;
    out.warnings.emplace_back(
        "wrong skew: OLS residuals are negatively skewed, so the data show no one-sided "
        "excess consumption; starting sigma_u at its floor");
  }
  sigma_u = std::max(sigma_u, floor_u);
  const double sigma2_v = std::max(sigma2 - (1.0 - 2.0 / pi) * sigma_u * sigma_u, 0.25 * sigma2);

  // The frontier lies below the OLS line by E[u].
  if (dm.frontier_intercept) pv.beta(0) -= std::sqrt(2.0 / pi) * sigma_u;
  pv.theta_v = std::log(sigma2_v);
  pv.theta_u = std::log(sigma_u * sigma_u);
  if (uses_ineff_vars(family)) {
    pv.delta = Eigen::VectorXd::Zero(dm.q());
    // Heteroskedastic variance: the intercept carries the common ln sigma_u^2.
    if (family == Family::NHN_HET && dm.ineff_intercept) pv.delta(0) = pv.theta_u;
  }
  return out;
}

}  // namespace frontier
