#include "frontier/diagnostics.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "frontier/efficiency.hpp"
#include "frontier/error.hpp"
#include "frontier/normal.hpp"

namespace frontier {

double chi2_quantile(int df, double probability) {
  const boost::math::chi_squared_distribution<double> dist(df);
  return boost::math::quantile(dist, probability);
}

double chi2_upper_tail(double x, int df) {
  if (x <= 0.0) return 1.0;
  const boost::math::chi_squared_distribution<double> dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

LrTest lr_test(double loglik_restricted, double loglik_unrestricted, int df,
               std::optional<double> critical) {
  if (!std::isfinite(loglik_restricted) || !std::isfinite(loglik_unrestricted))
    throw DataError("likelihood-ratio test needs finite log-likelihoods");
  if (df < 1) throw DataError("likelihood-ratio test needs df >= 1");
  LrTest t;
  t.df = df;
  double lr = 2.0 * (loglik_unrestricted - loglik_restricted);
  if (lr < -1e-6)
    throw NestingViolation("restricted model fits better than the unrestricted one (LR = " +
                           std::to_string(lr) + "); the unrestricted fit likely failed");
  t.lr = std::max(lr, 0.0);
  if (critical) {
    t.critical_1pct = *critical;
  } else if (df == 1) {
    t.critical_1pct = kBoundaryCritical1pctDf1;
  } else {
    t.critical_1pct = chi2_quantile(df, 0.99);
    t.boundary_aware = false;
    t.warning = "boundary-unaware: plain chi-square critical value used for df > 1";
  }
  t.reject = t.lr > t.critical_1pct;
  return t;
}

std::vector<Eigen::Index> frontier_slope_indices(const FitResult& fr) {
  std::vector<Eigen::Index> out;
  const Eigen::Index first = fr.spec.include_frontier_intercept ? 1 : 0;
  for (Eigen::Index j = first; j < fr.pv_hat.beta.size(); ++j) out.push_back(j);
  return out;
}

WaldTest wald_joint(const FitResult& fr, const std::vector<Eigen::Index>& subset) {
  if (subset.empty()) throw DataError("Wald test needs at least one coefficient");
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  const auto k = static_cast<Eigen::Index>(subset.size());
  Eigen::VectorXd t(k);
  Eigen::MatrixXd c(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ia = subset[static_cast<std::size_t>(a)];
    if (ia < 0 || ia >= theta.size()) throw ContractError("Wald subset index out of range");
    t(a) = theta(ia);
    for (Eigen::Index b = 0; b < k; ++b) c(a, b) = fr.cov(ia, subset[static_cast<std::size_t>(b)]);
  }
  if (!fr.cov_available || !c.allFinite())
    throw SingularCovariance("covariance unavailable for the Wald subset",
                             std::numeric_limits<double>::infinity());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || cond > 1e14)
    throw SingularCovariance("sub-covariance is singular (condition number " +
                                 std::to_string(cond) + ")",
                             cond);
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * t;
  WaldTest w;
  w.chi2 = (proj.array().square() / eig.eigenvalues().array()).sum();
  w.df = static_cast<int>(k);
  w.p_value = chi2_upper_tail(w.chi2, w.df);
  return w;
}

std::string stars(double p) {
  if (!std::isfinite(p)) return "";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

Scales scales_from(double sigma_v, double sigma_u) {
  Scales s;
  s.sigma_v = sigma_v;
  s.sigma_u = sigma_u;
  s.lambda = sigma_u / sigma_v;
  s.sigma2 = sigma_u * sigma_u + sigma_v * sigma_v;
  return s;
}

Scales variance_decomposition(const FitResult& fr, const DesignMatrices& dm) {
  const Scales s = variance_scales(fr.pv_hat, dm);
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
  };
  if (!close(s.sigma2, s.sigma_u * s.sigma_u + s.sigma_v * s.sigma_v) ||
      !close(s.lambda * s.sigma_v, s.sigma_u) || s.lambda < 0.0)
    throw InvariantError("variance decomposition identities do not hold");
  if (!close(s.sigma2, fr.derived.sigma2) || !close(s.lambda, fr.derived.lambda))
    throw InvariantError("stored variance decomposition disagrees with the fitted parameters");
  return s;
}

double half_normal_mean_efficiency(double sigma_u) {
  return 2.0 * std::exp(0.5 * sigma_u * sigma_u) * normal::cdf(-sigma_u);
}

std::vector<ModelSpec> ladder_specs(const ModelSpec& base) {
  std::vector<ModelSpec> out;
  for (Family f : {Family::OLS, Family::NHN, Family::NHN_HET, Family::TN}) {
    ModelSpec s = base;
    s.family = f;
    if (!uses_ineff_vars(f)) s.ineff_vars.clear();
    out.push_back(std::move(s));
  }
  return out;
}

LadderReport run_ladder(const Dataset& ds, const std::vector<ModelSpec>& specs) {
  LadderReport rep;
  const FitResult* nhn = nullptr;
  for (const auto& spec : specs) {
    LadderRow row;
    row.family = spec.family;
    try {
      const DesignMatrices dm = build(spec, ds);
      row.labels_X = dm.labels_X;
      row.labels_Z = dm.labels_Z;
      FitOptions opts;
      if (uses_ineff_vars(spec.family) && nhn != nullptr) {
        if (auto s = nested_start(*nhn, spec.family, dm)) opts.extra_starts.push_back(*s);
      }
      row.fit = fit(spec, dm, opts);
      try {
        if (auto idx = frontier_slope_indices(*row.fit); !idx.empty())
          row.wald = wald_joint(*row.fit, idx);
      } catch (const SingularCovariance&) {
        row.wald.reset();
      }
      if (is_frontier(spec.family)) row.mean_te = summarize_scores(efficiency_scores(*row.fit, dm)).mean;
    } catch (const std::exception& e) {
      row.fit.reset();
      row.error = e.what();
    }
    rep.rows.push_back(std::move(row));
    if (rep.rows.back().family == Family::NHN && rep.rows.back().fit) nhn = &*rep.rows.back().fit;
  }

  auto find = [&](Family f) -> const LadderRow* {
    for (const auto& r : rep.rows)
      if (r.family == f) return &r;
    return nullptr;
  };
  auto add_lr = [&](Family restricted, Family unrestricted, int df, std::optional<double> crit) {
    LadderLr entry;
    entry.restricted = restricted;
    entry.unrestricted = unrestricted;
    const auto* r = find(restricted);
    const auto* u = find(unrestricted);
    if (!r || !u) return;
    if (!r->fit || !u->fit) {
      entry.error = "one of the models failed to fit";
    } else {
      try {
        entry.test = lr_test(r->fit->loglik, u->fit->loglik, df, crit);
      } catch (const std::exception& e) {
        entry.error = e.what();
      }
    }
    rep.lr_tests.push_back(std::move(entry));
  };

  add_lr(Family::OLS, Family::NHN, 1, std::nullopt);
  // Interior restrictions: plain chi-square critical values are exact here.
  if (const auto* het = find(Family::NHN_HET); het && het->fit && het->fit->spec.include_ineff_intercept) {
    const int df = static_cast<int>(het->labels_Z.size()) - 1;
    if (df >= 1) add_lr(Family::NHN, Family::NHN_HET, df, chi2_quantile(df, 0.99));
  }
  if (const auto* tn = find(Family::TN); tn && tn->fit) {
    const int df = static_cast<int>(tn->labels_Z.size());
    add_lr(Family::NHN, Family::TN, df, chi2_quantile(df, 0.99));
  }

  const LadderLr* base_lr = rep.lr_tests.empty() ? nullptr : &rep.lr_tests.front();
  if (!base_lr || !base_lr->test) {
    rep.recommended = Family::OLS;
    rep.recommendation_reason = "inefficiency test unavailable; OLS retained";
  } else if (!base_lr->test->reject) {
    rep.recommended = Family::OLS;
    rep.recommendation_reason = "no significant inefficiency (LR " + std::to_string(base_lr->test->lr) +
                                " <= " + std::to_string(base_lr->test->critical_1pct) + ")";
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) {
      if (!is_frontier(r.family) || !r.fit) continue;
      if (r.fit->loglik > best) {
        best = r.fit->loglik;
        rep.recommended = r.family;
      }
    }
    rep.recommendation_reason = "inefficiency detected; highest log-likelihood frontier model";
  }
  return rep;
}

}  // namespace frontier
