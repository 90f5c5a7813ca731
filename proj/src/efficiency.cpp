#include "frontier/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include "frontier/error.hpp"
#include "frontier/normal.hpp"

namespace frontier {
namespace {

void require_frontier(const FitResult& fr) {
  if (!is_frontier(fr.pv_hat.family))
    throw SpecError("efficiency scores need a frontier model; OLS has no inefficiency term");
}

}  // namespace

std::string_view to_string(TeEstimator e) { return e == TeEstimator::BC ? "bc" : "expjlms"; }

std::optional<TeEstimator> parse_te_estimator(std::string_view s) {
  if (s == "bc" || s == "BC") return TeEstimator::BC;
  if (s == "expjlms" || s == "EXP_JLMS" || s == "exp_jlms") return TeEstimator::EXP_JLMS;
  return std::nullopt;
}

ConditionalU conditional_u(const FitResult& fr, const DesignMatrices& dm) {
  require_frontier(fr);
  const auto& pv = fr.pv_hat;
  const Eigen::VectorXd eps = composite_error(dm, pv.beta);
  const Eigen::VectorXd su = pv.sigma_u2(dm);
  const Eigen::VectorXd mu = pv.mu(dm);
  const double sv = std::exp(pv.theta_v);
  ConditionalU c;
  c.mu_star.resize(dm.n());
  c.sigma_star.resize(dm.n());
  for (Eigen::Index i = 0; i < dm.n(); ++i) {
    const double s = su(i) + sv;
    c.mu_star(i) = (sv * mu(i) + su(i) * eps(i)) / s;
    c.sigma_star(i) = std::sqrt(su(i) * sv / s);
  }
  return c;
}

double jlms_value(double mu_star, double sigma_star) {
  if (sigma_star <= 0.0) return std::max(mu_star, 0.0);
  return std::max(0.0, sigma_star * normal::mills_shift(mu_star / sigma_star));
}

double bc_value(double mu_star, double sigma_star) {
  if (sigma_star <= 0.0) return std::exp(-std::max(mu_star, 0.0));
  const double r = mu_star / sigma_star;
  const double log_te = -mu_star + 0.5 * sigma_star * sigma_star +
                        normal::log_cdf(r - sigma_star) - normal::log_cdf(r);
  return std::min(1.0, std::exp(log_te));
}

Eigen::VectorXd jlms(const FitResult& fr, const DesignMatrices& dm) {
  const auto c = conditional_u(fr, dm);
  Eigen::VectorXd u(dm.n());
  for (Eigen::Index i = 0; i < dm.n(); ++i) u(i) = jlms_value(c.mu_star(i), c.sigma_star(i));
  return u;
}

Eigen::VectorXd efficiency_scores(const FitResult& fr, const DesignMatrices& dm,
                                  TeEstimator estimator) {
  if (estimator == TeEstimator::EXP_JLMS) {
    // std::exp, not Eigen's vectorized exp, so this is bit-identical to the scalar path.
    Eigen::VectorXd te = jlms(fr, dm);
    for (Eigen::Index i = 0; i < te.size(); ++i) te(i) = std::exp(-te(i));
    return te;
  }
  const auto c = conditional_u(fr, dm);
  Eigen::VectorXd te(dm.n());
  for (Eigen::Index i = 0; i < dm.n(); ++i) te(i) = bc_value(c.mu_star(i), c.sigma_star(i));
  return te;
}

Eigen::VectorXd predict_frontier(const FitResult& fr, const DesignMatrices& dm) {
  if (fr.pv_hat.beta.size() != dm.p()) throw ContractError("beta length does not match X");
  const Eigen::VectorXd index = dm.X * fr.pv_hat.beta;
  if (dm.log_dependent) return index.array().exp().matrix();
  return index;
}

ScoreSummary summarize_scores(const Eigen::VectorXd& te) {
  if (te.size() == 0) throw DataError("cannot summarize an empty score vector");
  ScoreSummary s;
  s.n = static_cast<std::size_t>(te.size());
  // Shifted by the first score so a constant vector has an exact mean and zero SD.
  const double x0 = te(0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < te.size(); ++i) sum += te(i) - x0;
  s.mean = x0 + sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < te.size(); ++i) ss += (te(i) - s.mean) * (te(i) - s.mean);
  s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  s.min = te.minCoeff();
  s.max = te.maxCoeff();
  return s;
}

Histogram histogram(const Eigen::VectorXd& te, int bins) {
  if (bins < 1) throw DataError("histogram needs at least one bin");
  if (te.size() == 0) throw DataError("cannot bin an empty score vector");
  Histogram h;
  const auto nb = static_cast<std::size_t>(bins);
  h.edges.resize(nb + 1);
  for (std::size_t k = 0; k <= nb; ++k) h.edges[k] = static_cast<double>(k) / bins;
  h.counts.assign(nb, 0);
  for (Eigen::Index i = 0; i < te.size(); ++i) {
    const double x = std::clamp(te(i), 0.0, 1.0);
    auto k = static_cast<long>(std::ceil(x * bins)) - 1;
    k = std::clamp(k, 0L, static_cast<long>(bins) - 1);
    // Snap to the right-closed edges exactly.
    if (k > 0 && x <= h.edges[static_cast<std::size_t>(k)]) --k;
    if (k + 1 < bins && x > h.edges[static_cast<std::size_t>(k + 1)]) ++k;
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

OveruseBuckets overuse_buckets(const Eigen::VectorXd& ratio) {
  if (ratio.size() == 0) throw DataError("no households to bucket");
  OveruseBuckets b;
  std::size_t ge20 = 0, ge50 = 0;
  for (Eigen::Index i = 0; i < ratio.size(); ++i) {
    ge20 += ratio(i) >= 0.2;
    ge50 += ratio(i) >= 0.5;
  }
  b.share_ge_20 = static_cast<double>(ge20) / static_cast<double>(ratio.size());
  b.share_ge_50 = static_cast<double>(ge50) / static_cast<double>(ratio.size());
  return b;
}

EfficiencyReport score(const FitResult& fr, const DesignMatrices& dm, const Dataset& ds,
                       TeEstimator estimator, int bins) {
  require_frontier(fr);
  if (static_cast<Eigen::Index>(ds.size()) != dm.n())
    throw ContractError("dataset and design matrices differ in row count");
  const Eigen::VectorXd eps = composite_error(dm, fr.pv_hat.beta);
  const Eigen::VectorXd u = jlms(fr, dm);
  const Eigen::VectorXd bc = efficiency_scores(fr, dm, TeEstimator::BC);
  const Eigen::VectorXd expj = efficiency_scores(fr, dm, TeEstimator::EXP_JLMS);
  const Eigen::VectorXd frontier = predict_frontier(fr, dm);

  EfficiencyReport rep;
  rep.family = fr.pv_hat.family;
  rep.estimator = estimator;
  Eigen::VectorXd ratio(dm.n());
  for (Eigen::Index i = 0; i < dm.n(); ++i) {
    HouseholdScore h;
    h.id = ds[static_cast<std::size_t>(i)].id;
    h.eps = eps(i);
    h.u_jlms = u(i);
    h.te_bc = bc(i);
    h.te_exp_jlms = expj(i);
    h.frontier_kwh = frontier(i);
    h.observed_kwh = ds[static_cast<std::size_t>(i)].annual_kwh;
    h.overuse_ratio = h.observed_kwh / h.frontier_kwh - 1.0;
    ratio(i) = h.overuse_ratio;
    const bool ok = h.u_jlms >= 0.0 && std::isfinite(h.u_jlms) && h.te_bc > 0.0 &&
                    h.te_bc <= 1.0 && h.te_exp_jlms > 0.0 && h.te_exp_jlms <= 1.0 &&
                    h.frontier_kwh > 0.0 && std::isfinite(h.frontier_kwh);
    if (!ok)
      throw InvariantError("household '" + h.id +
                           "' violates 0 < te <= 1, u >= 0 or frontier > 0");
    rep.households.push_back(std::move(h));
  }
  const Eigen::VectorXd& selected = estimator == TeEstimator::BC ? bc : expj;
  rep.summary_bc = summarize_scores(bc);
  rep.summary_exp_jlms = summarize_scores(expj);
  rep.summary = estimator == TeEstimator::BC ? rep.summary_bc : rep.summary_exp_jlms;
  rep.hist = histogram(selected, bins);
  rep.overuse = overuse_buckets(ratio);
  return rep;
}

}  // namespace frontier
