#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "frontier/data.hpp"
#include "frontier/mle.hpp"

namespace frontier {

enum class TeEstimator {
  BC,        // E[exp(-u) | eps]
  EXP_JLMS,  // exp(-E[u | eps])
};

std::string_view to_string(TeEstimator e);
std::optional<TeEstimator> parse_te_estimator(std::string_view s);

/// Parameters of the conditional distribution u_i | eps_i ~ N+(mu*_i, sigma*_i^2).
struct ConditionalU {
  Eigen::VectorXd mu_star;
  Eigen::VectorXd sigma_star;
};

ConditionalU conditional_u(const FitResult& fr, const DesignMatrices& dm);

/// E[u | eps] = mu* + sigma* phi(r)/Phi(r), r = mu*/sigma*. Always >= 0.
double jlms_value(double mu_star, double sigma_star);
/// E[exp(-u) | eps] = exp(-mu* + sigma*^2/2) Phi(r - sigma*) / Phi(r), in (0, 1].
double bc_value(double mu_star, double sigma_star);

/// Throws SpecError for OLS fits.
Eigen::VectorXd jlms(const FitResult& fr, const DesignMatrices& dm);
Eigen::VectorXd efficiency_scores(const FitResult& fr, const DesignMatrices& dm,
                                  TeEstimator estimator = TeEstimator::BC);

/// Minimum (frontier) consumption in kWh: exp(X beta) for log-dependent models.
Eigen::VectorXd predict_frontier(const FitResult& fr, const DesignMatrices& dm);

struct ScoreSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // divisor n-1; 0 when n == 1
  double min = 0.0;
  double max = 0.0;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 values from 0 to 1
  std::vector<std::size_t> counts;
};

struct OveruseBuckets {
  double share_ge_20 = 0.0;  // share of households using >= 20% above frontier
  double share_ge_50 = 0.0;
};

ScoreSummary summarize_scores(const Eigen::VectorXd& te);
/// Equal-width, right-closed bins on [0, 1]; the first bin also holds 0.
Histogram histogram(const Eigen::VectorXd& te, int bins = 20);
OveruseBuckets overuse_buckets(const Eigen::VectorXd& overuse_ratio);

struct HouseholdScore {
  std::string id;
  double eps = 0.0;
  double u_jlms = 0.0;
  double te_bc = 0.0;
  double te_exp_jlms = 0.0;
  double frontier_kwh = 0.0;
  double observed_kwh = 0.0;
  double overuse_ratio = 0.0;
};

struct EfficiencyReport {
  Family family = Family::NHN;
  TeEstimator estimator = TeEstimator::BC;
  std::vector<HouseholdScore> households;
  ScoreSummary summary;           // of the selected estimator
  ScoreSummary summary_bc;
  ScoreSummary summary_exp_jlms;
  Histogram hist;
  OveruseBuckets overuse;
};

/// Scores every household and validates 0 < te <= 1, u >= 0, frontier > 0;
/// throws InvariantError on violation.
EfficiencyReport score(const FitResult& fr, const DesignMatrices& dm, const Dataset& ds,
                       TeEstimator estimator = TeEstimator::BC, int bins = 20);

}  // namespace frontier
