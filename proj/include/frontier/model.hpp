#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "frontier/data.hpp"

namespace frontier {

enum class Family { OLS, NHN, NHN_HET, TN };

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view s);
inline bool is_frontier(Family f) { return f != Family::OLS; }
inline bool uses_ineff_vars(Family f) { return f == Family::NHN_HET || f == Family::TN; }

struct ModelSpec {
  Family family = Family::NHN;
  std::vector<std::string> frontier_vars;
  std::vector<std::string> ineff_vars;
  bool log_dependent = true;
  bool include_frontier_intercept = true;
  bool include_ineff_intercept = true;
  // Expands income_quartile into income_q2..income_q4 dummies (quartile 1 is the base).
  bool income_one_hot = false;
};

/// Throws SpecError when a ModelSpec breaks its own invariants (family/ineff
/// consistency, duplicated names, empty frontier without intercept).
void validate(const ModelSpec& spec);

struct DesignMatrices {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;  // n x 0 when unused
  std::vector<std::string> labels_X;
  std::vector<std::string> labels_Z;
  bool log_dependent = true;
  bool frontier_intercept = false;
  bool ineff_intercept = false;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index q() const { return Z.cols(); }
};

inline constexpr double kRankTolerance = 1e-10;

/// y = ln(annual_kwh) (or raw kWh), X and Z in declaration order with the
/// intercept first. Rejects unknown variables and rank-deficient X or Z.
DesignMatrices build(const ModelSpec& spec, const Dataset& ds);

/// Numerical rank of `m` after scaling columns to unit norm.
Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double tol = kRankTolerance);

/// FNV-1a digest of labels and the raw bytes of y, X, Z.
std::uint64_t column_hash(const DesignMatrices& dm);
std::string column_hash_hex(const DesignMatrices& dm);

}  // namespace frontier
