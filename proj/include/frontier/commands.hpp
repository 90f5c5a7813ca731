#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "frontier/data.hpp"
#include "frontier/diagnostics.hpp"
#include "frontier/efficiency.hpp"

namespace frontier {

enum class Command { Fit, Ladder, Score, Simulate, Summarize };
enum class OutputFormat { Json, Csv, Table };

std::optional<Command> parse_command(std::string_view s);
std::optional<OutputFormat> parse_format(std::string_view s);

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitConvergence = 3,
  kExitInvariant = 4,
};

struct RunConfig {
  Command command = Command::Fit;
  std::filesystem::path input;                     // CSV (fit, ladder, score, summarize)
  std::optional<std::filesystem::path> spec;       // ModelSpec, or DgpSpec for simulate
  std::optional<std::filesystem::path> column_map; // CSV header renames
  std::optional<std::filesystem::path> fit;        // score: prior fit.json (default <out>/fit.json)
  std::filesystem::path out = ".";
  OutputFormat format = OutputFormat::Table;
  int bins = 20;
  TeEstimator te = TeEstimator::BC;
  std::optional<std::uint64_t> seed;               // simulate only
  // simulate without a DGP spec: survey-shaped fixture
  HousingType housing = HousingType::SRH;
  std::size_t n = 412;
};

/// Runs one command and maps failures onto exit codes: 2 for input errors,
/// 3 for convergence failures, 4 for invariant violations. Messages go to `err`,
/// the report selected by `format` to `out`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ladder(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_summarize(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Aligned text table: frontier block, inefficiency block, footer rows
/// (log-likelihood, Wald, sigma_v, sigma_u, sigma^2, lambda, mean efficiency),
/// then the LR tests and the recommendation.
std::string ladder_table(const LadderReport& rep);

/// Footer row labels of ladder_table, in print order.
const std::vector<std::string>& ladder_footer_labels();

}  // namespace frontier
