#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "frontier/diagnostics.hpp"
#include "frontier/error.hpp"

using namespace frontier;

namespace {

struct Fitted {
  DesignMatrices dm;
  FitResult fr;
};

Fitted fit_dgp(const DgpSpec& dgp) {
  const ModelSpec spec = model_spec_for(dgp);
  Fitted f{build(spec, generate(dgp).dataset), {}};
  f.fr = fit(spec, f.dm);
  return f;
}

ModelSpec base_for(const DgpSpec& dgp) {
  ModelSpec s = model_spec_for(dgp);
  s.ineff_vars = {"hrs_tv"};
  return s;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("LR statistics from reported log-likelihoods") {
  const LrTest a = lr_test(-178.853, -175.756, 1);
  CHECK(a.lr == doctest::Approx(6.194).epsilon(1e-12));
  CHECK(a.critical_1pct == 5.412);
  CHECK(a.reject);
  CHECK(a.boundary_aware);
  const LrTest b = lr_test(-105.812, -102.739, 1);
  CHECK(b.lr == doctest::Approx(6.146).epsilon(1e-12));
  CHECK(b.reject);
  CHECK_FALSE(lr_test(-10.0, -8.0, 1).reject);  // 4.0 < 5.412
}

TEST_CASE("a restricted model that fits better is a nesting violation") {
  CHECK_THROWS_WITH_AS(lr_test(-175.756, -178.853, 1), doctest::Contains("restricted model fits better"),
                       NestingViolation);
  // Within optimizer slack the statistic clamps to zero.
  const LrTest t = lr_test(-100.0, -100.0000004, 1);
  CHECK(t.lr == 0.0);
  CHECK_FALSE(t.reject);
  CHECK_THROWS_AS(lr_test(-1.0, NAN, 1), DataError);
  CHECK_THROWS_AS(lr_test(-1.0, 0.0, 0), DataError);
}

TEST_CASE("df > 1 falls back to the plain chi-square and says so") {
  const LrTest t = lr_test(-50.0, -40.0, 3);
  CHECK(t.critical_1pct == doctest::Approx(11.344866730144373).epsilon(1e-12));
  CHECK_FALSE(t.boundary_aware);
  CHECK(t.warning.find("boundary-unaware") != std::string::npos);
  CHECK(lr_test(-50.0, -40.0, 3, 9.0).boundary_aware);
  CHECK(chi2_quantile(1, 0.99) == doctest::Approx(6.634896601021214).epsilon(1e-12));
  CHECK(chi2_upper_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("one-dimensional Wald equals z squared") {
  const Fitted f = fit_dgp(fixtures::nhn_dgp(600, 71));
  for (Eigen::Index j : {Eigen::Index(1), Eigen::Index(2)}) {
    const WaldTest w = wald_joint(f.fr, {j});
    CHECK(w.df == 1);
    CHECK(w.chi2 == doctest::Approx(f.fr.z(j) * f.fr.z(j)).epsilon(1e-10));
    CHECK(w.p_value == doctest::Approx(f.fr.p_value(j)).epsilon(1e-8));
  }
}

TEST_CASE("joint Wald is invariant to index order") {
  const Fitted f = fit_dgp(fixtures::nhn_dgp(600, 72));
  const auto idx = frontier_slope_indices(f.fr);
  REQUIRE(idx == std::vector<Eigen::Index>{1, 2});
  const WaldTest a = wald_joint(f.fr, {1, 2});
  const WaldTest b = wald_joint(f.fr, {2, 1});
  CHECK(a.chi2 == doctest::Approx(b.chi2).epsilon(1e-12));
  CHECK(a.df == 2);
  // Against the explicit quadratic form.
  Eigen::Vector2d th(f.fr.pv_hat.beta(1), f.fr.pv_hat.beta(2));
  Eigen::Matrix2d c;
  c << f.fr.cov(1, 1), f.fr.cov(1, 2), f.fr.cov(2, 1), f.fr.cov(2, 2);
  CHECK(a.chi2 == doctest::Approx(th.dot(c.inverse() * th)).epsilon(1e-9));
}

TEST_CASE("singular covariance reports its condition number") {
  Fitted f = fit_dgp(fixtures::nhn_dgp(300, 73));
  f.fr.cov.row(2) = f.fr.cov.row(1);
  f.fr.cov.col(2) = f.fr.cov.col(1);
  try {
    wald_joint(f.fr, {1, 2});
    FAIL("expected SingularCovariance");
  } catch (const SingularCovariance& e) {
    CHECK(e.condition_number() > 1e14);
  }
}

TEST_CASE("Wald size under the null") {
  // True slopes are zero; the 5% test should reject about 5% of the time.
  DgpSpec dgp = fixtures::nhn_dgp(300, 0);
  dgp.beta = {8.0, 0.0, 0.0};
  int rejects = 0, ok = 0;
  for (std::uint64_t r = 0; r < 500; ++r) {
    dgp.seed = splitmix64(7400 + r);
    try {
      const Fitted f = fit_dgp(dgp);
      if (!f.fr.cov_available) continue;
      ++ok;
      rejects += wald_joint(f.fr, frontier_slope_indices(f.fr)).p_value < 0.05;
    } catch (const std::exception&) {
    }
  }
  REQUIRE(ok >= 490);
  const double rate = static_cast<double>(rejects) / ok;
  CAPTURE(rate);
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}

TEST_CASE("variance decomposition from reported scales") {
  const Scales a = scales_from(0.347, 0.213);
  CHECK(a.sigma2 == doctest::Approx(0.165778).epsilon(1e-12));
  CHECK(a.lambda == doctest::Approx(0.213 / 0.347).epsilon(1e-14));
  const Scales b = scales_from(0.291, 0.443);
  CHECK(b.sigma2 == doctest::Approx(0.28093).epsilon(1e-12));
  CHECK(b.lambda == doctest::Approx(1.522336769759450).epsilon(1e-12));
  const Scales z = scales_from(0.3, 0.0);
  CHECK(z.lambda == 0.0);
  CHECK(z.sigma2 == doctest::Approx(0.09));
}

TEST_CASE("variance decomposition of a fit checks its identities") {
  Fitted f = fit_dgp(fixtures::nhn_dgp(500, 74));
  const Scales s = variance_decomposition(f.fr, f.dm);
  CHECK(s.lambda == doctest::Approx(f.fr.derived.lambda));
  f.fr.derived.sigma2 += 0.01;
  CHECK_THROWS_AS(variance_decomposition(f.fr, f.dm), InvariantError);
}

TEST_CASE("half-normal mean efficiency") {
  CHECK(half_normal_mean_efficiency(0.0) == 1.0);
  CHECK(half_normal_mean_efficiency(0.213) == doctest::Approx(0.85).epsilon(0.001 / 0.85));
  // Monotone decreasing.
  double prev = 1.0;
  for (double s = 0.05; s < 3.0; s += 0.05) {
    const double e = half_normal_mean_efficiency(s);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("significance stars") {
  CHECK(stars(0.001) == "***");
  CHECK(stars(0.03) == "**");
  CHECK(stars(0.07) == "*");
  CHECK(stars(0.2) == "");
  CHECK(stars(NAN) == "");
}

TEST_CASE("ladder on data with inefficiency") {
  const DgpSpec dgp = fixtures::het_dgp(2000, 75);
  const LadderReport rep = run_ladder(generate(dgp).dataset, ladder_specs(base_for(dgp)));
  REQUIRE(rep.rows.size() == 4);
  for (const auto& r : rep.rows) REQUIRE(r.fit.has_value());
  CHECK(rep.rows[0].fit->loglik <= rep.rows[1].fit->loglik + 1e-6);
  CHECK(rep.rows[1].fit->loglik <= rep.rows[2].fit->loglik + 1e-6);
  CHECK(rep.rows[1].fit->loglik <= rep.rows[3].fit->loglik + 1e-6);
  REQUIRE(rep.lr_tests.size() == 3);
  REQUIRE(rep.lr_tests[0].test.has_value());
  CHECK(rep.lr_tests[0].test->df == 1);
  CHECK(rep.lr_tests[0].test->reject);
  CHECK(rep.lr_tests[1].test->df == 1);  // NHN vs HET: one slope in Z
  CHECK(rep.lr_tests[2].test->df == 2);  // NHN vs TN: intercept and slope
  CHECK(rep.recommended != Family::OLS);
  CHECK(rep.rows[1].mean_te > 0.0);
  CHECK(rep.rows[1].mean_te < 1.0);
}

TEST_CASE("ladder without inefficiency recommends OLS") {
  DgpSpec dgp = fixtures::nhn_dgp(1500, 76, 0.0);
  const LadderReport rep = run_ladder(generate(dgp).dataset, ladder_specs(base_for(dgp)));
  REQUIRE(rep.lr_tests[0].test.has_value());
  CHECK_FALSE(rep.lr_tests[0].test->reject);
  CHECK(rep.recommended == Family::OLS);
}

TEST_CASE("ladder specs share the frontier") {
  ModelSpec base;
  base.frontier_vars = {"wfpr"};
  base.ineff_vars = {"hrs_tv"};
  const auto specs = ladder_specs(base);
  REQUIRE(specs.size() == 4);
  CHECK(specs[0].family == Family::OLS);
  CHECK(specs[0].ineff_vars.empty());
  CHECK(specs[1].ineff_vars.empty());
  CHECK(specs[2].ineff_vars == base.ineff_vars);
  CHECK(specs[3].family == Family::TN);
  for (const auto& s : specs) CHECK(s.frontier_vars == base.frontier_vars);
}

}  // TEST_SUITE
