#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "frontier/diagnostics.hpp"
#include "frontier/efficiency.hpp"
#include "frontier/mle.hpp"
#include "frontier/model.hpp"
#include "frontier/simulate.hpp"

namespace frontier {

using Json = nlohmann::ordered_json;

/// Deterministic text: two-space indent, key order as inserted, every
/// floating-point number at 17 significant digits, non-finite numbers as null.
std::string dump(const Json& j);

/// "%.17g", or "nan"/"inf"/"-inf".
std::string format_g17(double x);
/// Fixed 6 decimals, for tables.
std::string format_fixed6(double x);

Json to_json(const ModelSpec& spec);
/// Throws SpecError on missing or mistyped fields.
ModelSpec spec_from_json(const Json& j);
/// Throws DataError naming the path when it cannot be read or parsed.
ModelSpec load_spec(const std::filesystem::path& path);

Json to_json(const FitResult& fr, const Certification* cert = nullptr);
FitResult fit_from_json(const Json& j);
FitResult load_fit(const std::filesystem::path& path);

Json to_json(const EfficiencyReport& rep);
Json to_json(const LadderReport& rep);

Json to_json(const DgpSpec& dgp);
DgpSpec dgp_from_json(const Json& j);
Json to_json(const Truth& truth, const Dataset& ds);
Json to_json(const CalibrationTable& table);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace frontier
