#include <doctest.h>

#include <sstream>

#include "frontier/data.hpp"
#include "frontier/error.hpp"
#include "frontier/simulate.hpp"

using namespace frontier;

namespace {

std::vector<std::vector<std::string>> split(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string join(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
    out += "\n";
  }
  return out;
}

std::size_t col(const std::vector<std::vector<std::string>>& rows, const std::string& name) {
  for (std::size_t c = 0; c < rows[0].size(); ++c)
    if (rows[0][c] == name) return c;
  FAIL("no column " << name);
  return 0;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("CSV round trip is byte-identical") {
  const Dataset ds = survey_fixture(HousingType::Slum, 25, 11);
  const std::string csv = to_csv(ds);
  const LoadResult lr = parse_csv(csv, "rt");
  CHECK(lr.rejections.empty());
  CHECK(lr.raw_rows == 25);
  CHECK(to_csv(lr.dataset) == csv);
}

TEST_CASE("missing required column names the column") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 3, 1)));
  const std::size_t c = col(rows, "own_ac");
  for (auto& r : rows) r.erase(r.begin() + static_cast<long>(c));
  try {
    parse_csv(join(rows), "x");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("own_ac") != std::string::npos);
  }
}

TEST_CASE("bad rows are rejected listwise with row and column") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 6, 2)));
  rows[2][col(rows, "annual_kwh")] = "0";
  rows[3][col(rows, "wfpr")] = "abc";
  rows[4][col(rows, "hh_size")] = "";
  rows[5][col(rows, "id")] = rows[1][col(rows, "id")];
  const LoadResult lr = parse_csv(join(rows), "bad");
  REQUIRE(lr.rejections.size() == 4);
  CHECK(lr.dataset.size() == 2);
  CHECK(lr.rejections[0].row == 2);
  CHECK(lr.rejections[0].reason == "annual_kwh > 0");
  CHECK(lr.rejections[1].column == "wfpr");
  CHECK(lr.rejections[2].column == "hh_size");
  CHECK(lr.rejections[3].column == "id");
}

TEST_CASE("a file with no valid rows is an error") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 2, 3)));
  for (std::size_t r = 1; r < rows.size(); ++r) rows[r][col(rows, "wfpr")] = "1.5";
  CHECK_THROWS_AS(parse_csv(join(rows), "none"), DataError);
}

TEST_CASE("usage without ownership is a warning, not a rejection") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 2, 4)));
  rows[1][col(rows, "own_laptop")] = "0";
  rows[1][col(rows, "hrs_laptop")] = "1.5";
  const LoadResult lr = parse_csv(join(rows), "soft");
  CHECK(lr.rejections.empty());
  REQUIRE(lr.warnings.size() >= 1);
  CHECK(lr.warnings[0].reason == "hrs_laptop > 0 but own_laptop = 0");
}

TEST_CASE("column map renames headers") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 2, 5)));
  rows[0][col(rows, "annual_kwh")] = "Annual kWh";
  CHECK_THROWS_AS(parse_csv(join(rows), "m"), DataError);
  const LoadResult lr = parse_csv(join(rows), "m", ColumnMap{{"Annual kWh", "annual_kwh"}});
  CHECK(lr.dataset.size() == 2);
}

TEST_CASE("quoted fields follow RFC 4180") {
  auto rows = split(to_csv(survey_fixture(HousingType::SRH, 1, 6)));
  rows[1][col(rows, "id")] = "\"house, \"\"A\"\"\"";
  const LoadResult lr = parse_csv(join(rows), "q");
  CHECK(lr.dataset[0].id == "house, \"A\"");
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset("empty", {}), DataError);
  HouseholdRecord r;
  r.id = "a";
  r.annual_kwh = 100;
  r.avg_hh_age = 30;
  CHECK_NOTHROW(Dataset("one", {r}));
  CHECK_THROWS_AS(Dataset("dup", {r, r}), DataError);
  HouseholdRecord bad = r;
  bad.id = "b";
  bad.income_quartile = 5;
  CHECK_THROWS_AS(Dataset("bad", {r, bad}), DataError);
}

TEST_CASE("summarize: moments, constant columns and n = 1") {
  const Dataset ds = survey_fixture(HousingType::SRH, 200, 7);
  const auto rows = summarize(ds);
  REQUIRE(rows.size() == numeric_variable_names().size());
  const auto kwh = ds.column("annual_kwh");
  double mean = 0.0;
  for (double x : kwh) mean += x;
  mean /= static_cast<double>(kwh.size());
  CHECK(rows[0].variable == "annual_kwh");
  CHECK(rows[0].mean == doctest::Approx(mean).epsilon(1e-13));
  for (const auto& r : rows) {
    if (r.variable == "own_ceiling_fan") {
      CHECK(r.mean == 1.0);
      REQUIRE(r.sd.has_value());
      CHECK(*r.sd == 0.0);
    }
  }
  const auto one = summarize(survey_fixture(HousingType::SRH, 1, 7));
  CHECK_FALSE(one[0].sd.has_value());
  CHECK(one[0].min == one[0].max);
}

TEST_CASE("derived dummies") {
  HouseholdRecord r;
  r.housing_type = HousingType::Slum;
  r.income_quartile = 3;
  CHECK(*variable_value(r, "slum") == 1.0);
  CHECK(*variable_value(r, "income_q3") == 1.0);
  CHECK(*variable_value(r, "income_q2") == 0.0);
  CHECK_FALSE(variable_value(r, "own_mixer_hours").has_value());
  CHECK_FALSE(is_known_variable("hrs_mixer"));
}

}  // TEST_SUITE
