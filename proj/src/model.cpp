#include "frontier/model.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include "frontier/error.hpp"

namespace frontier {
namespace {

std::vector<std::string> expand(const std::vector<std::string>& vars, bool one_hot) {
  std::vector<std::string> out;
  for (const auto& v : vars) {
    if (one_hot && v == "income_quartile") {
      out.insert(out.end(), {"income_q2", "income_q3", "income_q4"});
    } else {
      out.push_back(v);
    }
  }
  return out;
}

void check_unique(const std::vector<std::string>& vars, std::string_view list) {
  std::set<std::string_view> seen;
  for (const auto& v : vars) {
    if (!seen.insert(v).second)
      throw SpecError("variable '" + v + "' appears twice in " + std::string(list));
  }
}

Eigen::MatrixXd fill(const Dataset& ds, const std::vector<std::string>& vars, bool intercept) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index offset = intercept ? 1 : 0;
  Eigen::MatrixXd m(n, offset + static_cast<Eigen::Index>(vars.size()));
  if (intercept) m.col(0).setOnes();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (!is_known_variable(vars[j])) throw SpecError("unknown variable '" + vars[j] + "'");
    for (Eigen::Index i = 0; i < n; ++i)
      m(i, offset + static_cast<Eigen::Index>(j)) =
          *variable_value(ds[static_cast<std::size_t>(i)], vars[j]);
  }
  return m;
}

void require_full_rank(const Eigen::MatrixXd& m, const std::vector<std::string>& labels,
                       bool intercept, std::string_view which) {
  if (m.cols() == 0) return;
  if (numerical_rank(m) == m.cols()) return;
  // Locate the first column that adds no rank.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (numerical_rank(m.leftCols(j + 1)) == j + 1) continue;
    const auto& name = labels[static_cast<std::size_t>(j)];
    const double spread = m.col(j).maxCoeff() - m.col(j).minCoeff();
    if (intercept && j > 0 && spread == 0.0) {
      throw CollinearityError("zero-variance column '" + name + "' in " + std::string(which) +
                                  " matrix is collinear with the intercept",
                              name);
    }
    throw CollinearityError("column '" + name + "' in " + std::string(which) +
                                " matrix is linearly dependent on earlier columns",
                            name);
  }
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::OLS: return "OLS";
    case Family::NHN: return "NHN";
    case Family::NHN_HET: return "NHN_HET";
    case Family::TN: return "TN";
  }
  return "";
}

std::optional<Family> parse_family(std::string_view s) {
  if (s == "OLS") return Family::OLS;
  if (s == "NHN") return Family::NHN;
  if (s == "NHN_HET") return Family::NHN_HET;
  if (s == "TN") return Family::TN;
  return std::nullopt;
}

void validate(const ModelSpec& spec) {
  if (!uses_ineff_vars(spec.family) && !spec.ineff_vars.empty())
    throw SpecError("family " + std::string(to_string(spec.family)) +
                    " takes no inefficiency variables");
  if (spec.frontier_vars.empty() && !spec.include_frontier_intercept)
    throw SpecError("frontier needs at least one variable or an intercept");
  if (uses_ineff_vars(spec.family) && spec.ineff_vars.empty() && !spec.include_ineff_intercept)
    throw SpecError("inefficiency function needs at least one variable or an intercept");
  check_unique(expand(spec.frontier_vars, spec.income_one_hot), "frontier_vars");
  check_unique(expand(spec.ineff_vars, spec.income_one_hot), "ineff_vars");
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.cols() == 0) return 0;
  Eigen::MatrixXd scaled = m;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(tol);
  return qr.rank();
}

DesignMatrices build(const ModelSpec& spec, const Dataset& ds) {
  validate(spec);
  const auto fvars = expand(spec.frontier_vars, spec.income_one_hot);
  const auto zvars = expand(spec.ineff_vars, spec.income_one_hot);

  DesignMatrices dm;
  dm.log_dependent = spec.log_dependent;
  dm.frontier_intercept = spec.include_frontier_intercept;
  dm.ineff_intercept = uses_ineff_vars(spec.family) && spec.include_ineff_intercept;
  const auto n = static_cast<Eigen::Index>(ds.size());
  dm.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double kwh = ds[static_cast<std::size_t>(i)].annual_kwh;
    dm.y(i) = spec.log_dependent ? std::log(kwh) : kwh;
  }

  dm.X = fill(ds, fvars, spec.include_frontier_intercept);
  if (spec.include_frontier_intercept) dm.labels_X.emplace_back("Constant");
  dm.labels_X.insert(dm.labels_X.end(), fvars.begin(), fvars.end());

  if (uses_ineff_vars(spec.family)) {
    dm.Z = fill(ds, zvars, spec.include_ineff_intercept);
    if (spec.include_ineff_intercept) dm.labels_Z.emplace_back("Constant");
    dm.labels_Z.insert(dm.labels_Z.end(), zvars.begin(), zvars.end());
  } else {
    dm.Z.resize(n, 0);
  }

  if (!dm.y.allFinite() || !dm.X.allFinite() || !dm.Z.allFinite())
    throw DataError("design matrices contain non-finite values");
  require_full_rank(dm.X, dm.labels_X, spec.include_frontier_intercept, "frontier");
  require_full_rank(dm.Z, dm.labels_Z, spec.include_ineff_intercept, "inefficiency");
  return dm;
}

std::uint64_t column_hash(const DesignMatrices& dm) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix_matrix = [&](const Eigen::MatrixXd& m) {
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    fnv_mix(h, dims, sizeof dims);
    fnv_mix(h, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  };
  for (const auto& l : dm.labels_X) fnv_mix(h, l.data(), l.size() + 1);
  for (const auto& l : dm.labels_Z) fnv_mix(h, l.data(), l.size() + 1);
  const std::uint8_t flags[3] = {dm.log_dependent, dm.frontier_intercept, dm.ineff_intercept};
  fnv_mix(h, flags, sizeof flags);
  mix_matrix(dm.y);
  mix_matrix(dm.X);
  mix_matrix(dm.Z);
  return h;
}

std::string column_hash_hex(const DesignMatrices& dm) {
  static constexpr char digits[] = "0123456789abcdef";
  std::uint64_t h = column_hash(dm);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return out;
}

}  // namespace frontier
