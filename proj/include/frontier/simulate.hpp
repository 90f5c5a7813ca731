#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontier/data.hpp"
#include "frontier/model.hpp"

namespace frontier {

/// Uniform on the open interval (0, 1) from the top 53 bits of one engine draw.
double uniform_open01(std::mt19937_64& rng);
/// Standard normal by inverse CDF (exactly one engine draw).
double standard_normal(std::mt19937_64& rng);
/// SplitMix64 finalizer, used to derive independent seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Draw from N(mu, sigma^2) truncated to [0, inf) by inverse CDF on the
/// truncated region, in log space so that deep-tail means stay exact.
double truncated_normal_draw(double mu, double sigma, double uniform);

struct CovariateGenerator {
  enum class Kind { Uniform, Bernoulli, Categorical };
  std::string variable;  // a HouseholdRecord field, e.g. "wfpr" or "own_ac"
  Kind kind = Kind::Uniform;
  double lo = 0.0, hi = 1.0;  // uniform
  double p = 0.5;             // bernoulli
  std::vector<double> values, probs;  // categorical

  static CovariateGenerator uniform(std::string var, double lo, double hi);
  static CovariateGenerator bernoulli(std::string var, double p);
  static CovariateGenerator categorical(std::string var, std::vector<double> values,
                                        std::vector<double> probs);
};

struct DgpSpec {
  Family family = Family::NHN;
  /// Intercept first (when frontier_intercept), then one entry per frontier covariate.
  std::vector<double> beta;
  double sigma_v = 0.3;
  double sigma_u = 0.5;  // NHN and TN
  /// HET: ln sigma_u,i^2 = Z_i delta. TN: mu_i = Z_i delta. Intercept first when ineff_intercept.
  std::vector<double> delta;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::vector<CovariateGenerator> frontier;
  std::vector<CovariateGenerator> ineff;
  bool frontier_intercept = true;
  bool ineff_intercept = true;
  /// Fields not driven by a generator are drawn from this housing type's fixture marginals.
  HousingType background = HousingType::SRH;
};

/// Throws SpecError when the DGP is inconsistent (lengths, negative scales,
/// generators producing values outside the field's valid range).
void validate(const DgpSpec& dgp);

/// The ModelSpec whose design matrices reproduce the DGP's X and Z.
ModelSpec model_spec_for(const DgpSpec& dgp);

struct Truth {
  Eigen::VectorXd v;
  Eigen::VectorXd u;
  Eigen::VectorXd eps;
  Eigen::VectorXd frontier;  // X beta (log scale)
};

struct Simulation {
  Dataset dataset;
  Truth truth;
};

/// ln(annual_kwh) = X beta + v + u. Identical DgpSpec gives identical output.
Simulation generate(const DgpSpec& dgp);

struct CalibrationRow {
  std::string parameter;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mc_se = 0.0;  // sd of estimates / sqrt(successes)
  double rmse = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;  // share of 95% Wald intervals containing truth
};

struct CalibrationTable {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::size_t boundary = 0;  // fits with sigma_u collapsed onto its floor
  std::vector<CalibrationRow> rows;
};

/// Replication r uses seed splitmix64(dgp.seed + r). Fit failures are
/// counted and skipped. Rows cover beta, sigma_v and sigma_u (NHN, TN) or
/// delta (HET, TN); sigma standard errors come from the delta method.
CalibrationTable monte_carlo(const DgpSpec& dgp, std::size_t replications,
                             unsigned threads = 0);

/// Synthetic households with independent marginals matched to the published
/// survey summary for one housing type.
Dataset survey_fixture(HousingType housing, std::size_t n, std::uint64_t seed);

}  // namespace frontier
