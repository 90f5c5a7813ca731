#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frontier {

enum class HousingType { SRH, Slum };

std::string_view to_string(HousingType h);
std::optional<HousingType> parse_housing_type(std::string_view s);

enum class Appliance {
  Refrigerator,
  AC,
  Iron,
  WashingMachine,
  ExhaustFan,
  TV,
  Laptop,
  CeilingFan,
  TableFan,
  Mixer,
  CFL,
  LED,
  Bulb,
};

inline constexpr std::size_t kApplianceCount = 13;

std::string_view appliance_key(Appliance a);
const std::array<Appliance, kApplianceCount>& all_appliances();

/// Appliances with a usage-hours column. The mixer has ownership only.
bool has_usage_column(Appliance a);

struct HouseholdRecord {
  std::string id;
  HousingType housing_type = HousingType::SRH;
  double annual_kwh = 0.0;
  double wfpr = 0.0;
  int hh_size = 1;
  double avg_hh_age = 0.0;
  int income_quartile = 1;
  std::array<int, kApplianceCount> ownership{};
  std::array<double, kApplianceCount> usage_hours{};

  int owns(Appliance a) const { return ownership[static_cast<std::size_t>(a)]; }
  double hours(Appliance a) const { return usage_hours[static_cast<std::size_t>(a)]; }
};

/// Hard invariant violations (empty when the record is acceptable).
std::vector<std::string> hard_violations(const HouseholdRecord& r);
/// Soft violations: usage recorded for an appliance the household does not own.
std::vector<std::string> soft_violations(const HouseholdRecord& r);

/// Immutable, validated collection of households. n >= 1, ids unique.
class Dataset {
 public:
  Dataset(std::string name, std::vector<HouseholdRecord> records);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return records_.size(); }
  const std::vector<HouseholdRecord>& records() const noexcept { return records_; }
  const HouseholdRecord& operator[](std::size_t i) const { return records_[i]; }

  /// Column of a numeric variable (see variable_names()); throws SpecError if unknown.
  std::vector<double> column(std::string_view variable) const;

 private:
  std::string name_;
  std::vector<HouseholdRecord> records_;
};

/// Canonical numeric variable names, in schema order:
/// annual_kwh, wfpr, hh_size, avg_hh_age, income_quartile, own_<k>..., hrs_<k>...
const std::vector<std::string>& numeric_variable_names();

/// Value of a model variable for one record. Accepts every numeric variable
/// plus the derived dummies `slum` and `income_q1`..`income_q4`.
std::optional<double> variable_value(const HouseholdRecord& r, std::string_view name);
bool is_known_variable(std::string_view name);

/// Canonical CSV header, in write order.
std::vector<std::string> canonical_columns();

struct RowRejection {
  std::size_t row = 0;  // 1-based data row index (header excluded)
  std::string id;
  std::string column;   // offending column, empty for whole-record invariants
  std::string reason;
};

struct RowWarning {
  std::size_t row = 0;
  std::string id;
  std::string reason;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RowRejection> rejections;
  std::vector<RowWarning> warnings;
  std::size_t raw_rows = 0;
};

/// Maps header names in a file onto canonical column names. Headers absent
/// from the map are taken as already canonical.
using ColumnMap = std::map<std::string, std::string>;

/// Reads a JSON sidecar of the form {"columns": {"<header>": "<canonical>", ...}}.
ColumnMap load_column_map(const std::filesystem::path& path);

/// Throws DataError naming the column when a required column is missing, or
/// when no row survives validation. Bad rows are rejected listwise.
LoadResult load_csv(const std::filesystem::path& path, const ColumnMap& schema = {});
LoadResult parse_csv(std::string_view text, std::string name, const ColumnMap& schema = {});

/// Writes the canonical schema with 17 significant digits.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
std::string to_csv(const Dataset& ds);

struct VariableSummary {
  std::string variable;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // sample SD (divisor n-1); absent when n == 1
  double min = 0.0;
  double max = 0.0;
};

std::vector<VariableSummary> summarize(const Dataset& ds);

}  // namespace frontier
