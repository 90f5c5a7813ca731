#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "frontier/efficiency.hpp"
#include "frontier/error.hpp"
#include "oracles.hpp"

using namespace frontier;

namespace {

// sigma_v = sigma_u = s puts the posterior at N+(eps/2, s^2/2).
oracle::Posterior posterior_for(double mu_star, double sigma_star) {
  const double s = sigma_star * std::sqrt(2.0);
  return oracle::Posterior{2.0 * mu_star, s, s, 0.0};
}

struct Scored {
  DesignMatrices dm;
  Dataset ds;
  FitResult fr;
};

Scored fit_and_keep(const DgpSpec& dgp) {
  const ModelSpec spec = model_spec_for(dgp);
  Dataset ds = generate(dgp).dataset;
  DesignMatrices dm = build(spec, ds);
  FitResult fr = fit(spec, dm);
  return {std::move(dm), std::move(ds), std::move(fr)};
}

}  // namespace

TEST_SUITE("efficiency") {

TEST_CASE("JLMS and BC match quadrature of the posterior") {
  for (double ss : {0.05, 0.3, 1.0, 2.0}) {
    for (double r : {-25.0, -5.0, -1.0, 0.0, 1.0, 5.0}) {
      const double ms = r * ss;
      const auto post = posterior_for(ms, ss);
      CAPTURE(ss);
      CAPTURE(r);
      const double eu = post.mean_u();
      const double ete = post.mean_exp_neg_u();
      CHECK(std::abs(jlms_value(ms, ss) - eu) <= 1e-6 * std::max(1e-3, eu));
      CHECK(std::abs(bc_value(ms, ss) - ete) <= 1e-6 * ete);
    }
  }
}

TEST_CASE("conditional moments in the extreme lower tail stay positive") {
  for (double r : {-40.0, -100.0, -1e4}) {
    const double u = jlms_value(r * 0.2, 0.2);
    CHECK(u > 0.0);
    CHECK(u == doctest::Approx(0.2 / std::abs(r)).epsilon(3e-3));
    const double te = bc_value(r * 0.2, 0.2);
    CHECK(te > 0.0);
    CHECK(te <= 1.0);
  }
}

TEST_CASE("conditional distribution follows the consumption sign") {
  const Scored s = fit_and_keep(fixtures::nhn_dgp(400, 61));
  const ConditionalU c = conditional_u(s.fr, s.dm);
  const Eigen::VectorXd eps = composite_error(s.dm, s.fr.pv_hat.beta);
  const double sv = s.fr.derived.sigma_v, su = s.fr.derived.sigma_u;
  const double s2 = sv * sv + su * su;
  for (Eigen::Index i = 0; i < 20; ++i) {
    CHECK(c.mu_star(i) == doctest::Approx(su * su * eps(i) / s2).epsilon(1e-12));
    CHECK(c.sigma_star(i) == doctest::Approx(su * sv / std::sqrt(s2)).epsilon(1e-12));
  }
  // Larger residuals mean more inefficiency.
  const Eigen::VectorXd u = jlms(s.fr, s.dm);
  const Eigen::VectorXd te = efficiency_scores(s.fr, s.dm);
  for (Eigen::Index i = 0; i < s.dm.n(); ++i)
    for (Eigen::Index k = 0; k < 10; ++k)
      if (eps(i) > eps(k)) {
        CHECK(u(i) >= u(k));
        CHECK(te(i) <= te(k));
      }
}

TEST_CASE("score bounds and exact exp(-JLMS)") {
  for (Family f : {Family::NHN, Family::NHN_HET, Family::TN}) {
    const Scored s = fit_and_keep(fixtures::dgp_for(f, 800, 62));
    const EfficiencyReport rep = score(s.fr, s.dm, s.ds, TeEstimator::BC);
    for (const auto& h : rep.households) {
      CHECK(h.te_bc > 0.0);
      CHECK(h.te_bc <= 1.0);
      CHECK(h.te_exp_jlms > 0.0);
      CHECK(h.te_exp_jlms <= 1.0);
      CHECK(h.u_jlms >= 0.0);
      CHECK(h.te_exp_jlms == std::exp(-h.u_jlms));
      // Jensen: E[exp(-u)] >= exp(-E[u]).
      CHECK(h.te_bc >= h.te_exp_jlms * (1.0 - 1e-12));
      CHECK(h.frontier_kwh > 0.0);
    }
  }
}

TEST_CASE("average BC score tracks the unconditional mean efficiency") {
  // E[E(exp(-u)|eps)] = E[exp(-u)] = 2 exp(su^2/2) Phi(-su).
  for (double su : {0.213, 0.443}) {
    DgpSpec dgp = fixtures::nhn_dgp(20000, 63, su, 0.3);
    const Scored s = fit_and_keep(dgp);
    const double want = 2.0 * std::exp(0.5 * su * su) * oracle::cdf(-su);
    const ScoreSummary sum = summarize_scores(efficiency_scores(s.fr, s.dm));
    CAPTURE(su);
    CHECK(sum.mean == doctest::Approx(want).epsilon(0.01));
  }
}

TEST_CASE("histogram partitions the scores with right-closed bins") {
  Eigen::VectorXd te(8);
  te << 0.0, 0.05, 0.0500001, 0.5, 0.95, 0.99, 1.0, 0.3;
  const Histogram h = histogram(te, 20);
  REQUIRE(h.edges.size() == 21);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 8);
  CHECK(h.counts[0] == 2);   // 0 and 0.05
  CHECK(h.counts[1] == 1);   // just above 0.05
  CHECK(h.counts[9] == 1);   // 0.5 closes (0.45, 0.5]
  CHECK(h.counts[5] == 1);   // 0.3
  CHECK(h.counts[18] == 1);  // 0.95
  CHECK(h.counts[19] == 2);  // 0.99 and 1
  CHECK_THROWS_AS(histogram(te, 0), DataError);
}

TEST_CASE("summary of a constant vector") {
  const ScoreSummary s = summarize_scores(Eigen::VectorXd::Constant(7, 0.8));
  CHECK(s.mean == 0.8);
  CHECK(s.sd == 0.0);
  CHECK(s.min == 0.8);
  CHECK(s.max == 0.8);
  CHECK(summarize_scores(Eigen::VectorXd::Constant(1, 0.4)).sd == 0.0);
}

TEST_CASE("overuse buckets count from the frontier") {
  Eigen::VectorXd r(5);
  r << 0.0, 0.19999, 0.2, 0.5, 2.0;
  const OveruseBuckets b = overuse_buckets(r);
  CHECK(b.share_ge_20 == doctest::Approx(0.6));
  CHECK(b.share_ge_50 == doctest::Approx(0.4));

  const Scored s = fit_and_keep(fixtures::nhn_dgp(300, 64));
  const EfficiencyReport rep = score(s.fr, s.dm, s.ds);
  std::size_t ge20 = 0;
  for (const auto& h : rep.households) {
    CHECK(h.overuse_ratio == doctest::Approx(h.observed_kwh / h.frontier_kwh - 1.0).epsilon(1e-14));
    ge20 += h.observed_kwh >= 1.2 * h.frontier_kwh;
  }
  CHECK(rep.overuse.share_ge_20 == doctest::Approx(static_cast<double>(ge20) / 300.0).epsilon(1e-2));
}

TEST_CASE("OLS has no scores") {
  DgpSpec dgp = fixtures::nhn_dgp(200, 65);
  ModelSpec spec = model_spec_for(dgp);
  spec.family = Family::OLS;
  const Dataset ds = generate(dgp).dataset;
  const DesignMatrices dm = build(spec, ds);
  const FitResult fr = fit(spec, dm);
  CHECK_THROWS_AS(jlms(fr, dm), SpecError);
  CHECK_THROWS_AS(score(fr, dm, ds), SpecError);
}

TEST_CASE("estimator names") {
  CHECK(parse_te_estimator("bc") == TeEstimator::BC);
  CHECK(parse_te_estimator("expjlms") == TeEstimator::EXP_JLMS);
  CHECK_FALSE(parse_te_estimator("mode").has_value());
}

}  // TEST_SUITE
