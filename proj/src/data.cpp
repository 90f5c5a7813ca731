#include "frontier/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "frontier/error.hpp"

namespace frontier {
namespace {

constexpr std::array<Appliance, kApplianceCount> kAppliances{
    Appliance::Refrigerator, Appliance::AC,       Appliance::Iron,       Appliance::WashingMachine,
    Appliance::ExhaustFan,   Appliance::TV,       Appliance::Laptop,     Appliance::CeilingFan,
    Appliance::TableFan,     Appliance::Mixer,    Appliance::CFL,        Appliance::LED,
    Appliance::Bulb};

// Usage columns follow the survey's ordering, which differs from ownership order.
constexpr std::array<Appliance, 12> kUsageOrder{
    Appliance::Refrigerator, Appliance::AC,     Appliance::Iron,       Appliance::CeilingFan,
    Appliance::TableFan,     Appliance::WashingMachine, Appliance::ExhaustFan, Appliance::TV,
    Appliance::Laptop,       Appliance::CFL,    Appliance::LED,        Appliance::Bulb};

std::size_t idx(Appliance a) { return static_cast<std::size_t>(a); }

std::string own_col(Appliance a) { return "own_" + std::string(appliance_key(a)); }
std::string hrs_col(Appliance a) { return "hrs_" + std::string(appliance_key(a)); }

std::optional<Appliance> appliance_from_key(std::string_view key) {
  for (auto a : kAppliances)
    if (appliance_key(a) == key) return a;
  return std::nullopt;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

// RFC 4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && trim(row[0]).empty();
    if (!blank) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || trim(field).empty()) {
          field.clear();
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of CSV input");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::optional<double> parse_real(const std::string& cell) {
  const std::string s = trim(cell);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(HousingType h) { return h == HousingType::SRH ? "SRH" : "SLUM"; }

std::optional<HousingType> parse_housing_type(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "SRH") return HousingType::SRH;
  if (up == "SLUM") return HousingType::Slum;
  return std::nullopt;
}

std::string_view appliance_key(Appliance a) {
  switch (a) {
    case Appliance::Refrigerator: return "refrigerator";
    case Appliance::AC: return "ac";
    case Appliance::Iron: return "iron";
    case Appliance::WashingMachine: return "washing_machine";
    case Appliance::ExhaustFan: return "exhaust_fan";
    case Appliance::TV: return "tv";
    case Appliance::Laptop: return "laptop";
    case Appliance::CeilingFan: return "ceiling_fan";
    case Appliance::TableFan: return "table_fan";
    case Appliance::Mixer: return "mixer";
    case Appliance::CFL: return "cfl";
    case Appliance::LED: return "led";
    case Appliance::Bulb: return "bulb";
  }
  return "";
}

const std::array<Appliance, kApplianceCount>& all_appliances() { return kAppliances; }

bool has_usage_column(Appliance a) { return a != Appliance::Mixer; }

std::vector<std::string> hard_violations(const HouseholdRecord& r) {
  std::vector<std::string> out;
  if (!(std::isfinite(r.annual_kwh) && r.annual_kwh > 0.0)) out.emplace_back("annual_kwh > 0");
  if (!(r.wfpr >= 0.0 && r.wfpr <= 1.0)) out.emplace_back("0 <= wfpr <= 1");
  if (r.hh_size < 1) out.emplace_back("hh_size >= 1");
  if (!(std::isfinite(r.avg_hh_age) && r.avg_hh_age > 0.0)) out.emplace_back("avg_hh_age > 0");
  if (r.income_quartile < 1 || r.income_quartile > 4) out.emplace_back("1 <= income_quartile <= 4");
  for (auto a : kAppliances) {
    if (r.owns(a) != 0 && r.owns(a) != 1) out.push_back(own_col(a) + " in {0,1}");
    if (has_usage_column(a) && !(std::isfinite(r.hours(a)) && r.hours(a) >= 0.0))
      out.push_back(hrs_col(a) + " >= 0");
  }
  return out;
}

std::vector<std::string> soft_violations(const HouseholdRecord& r) {
  std::vector<std::string> out;
  for (auto a : kUsageOrder) {
    if (r.hours(a) > 0.0 && r.owns(a) == 0)
      out.push_back(hrs_col(a) + " > 0 but " + own_col(a) + " = 0");
  }
  return out;
}

Dataset::Dataset(std::string name, std::vector<HouseholdRecord> records)
    : name_(std::move(name)), records_(std::move(records)) {
  if (records_.empty()) throw DataError("dataset '" + name_ + "' is empty");
  std::set<std::string_view> ids;
  for (const auto& r : records_) {
    if (!ids.insert(r.id).second) throw DataError("duplicate record id '" + r.id + "'");
    if (auto v = hard_violations(r); !v.empty())
      throw DataError("record '" + r.id + "' violates " + v.front());
  }
}

std::vector<double> Dataset::column(std::string_view variable) const {
  if (!is_known_variable(variable))
    throw SpecError("unknown variable '" + std::string(variable) + "'");
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(*variable_value(r, variable));
  return out;
}

const std::vector<std::string>& numeric_variable_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"annual_kwh", "wfpr", "hh_size", "avg_hh_age", "income_quartile"};
    for (auto a : kAppliances) v.push_back(own_col(a));
    for (auto a : kUsageOrder) v.push_back(hrs_col(a));
    return v;
  }();
  return names;
}

std::optional<double> variable_value(const HouseholdRecord& r, std::string_view name) {
  if (name == "annual_kwh") return r.annual_kwh;
  if (name == "wfpr") return r.wfpr;
  if (name == "hh_size") return static_cast<double>(r.hh_size);
  if (name == "avg_hh_age") return r.avg_hh_age;
  if (name == "income_quartile") return static_cast<double>(r.income_quartile);
  if (name == "slum") return r.housing_type == HousingType::Slum ? 1.0 : 0.0;
  if (name.size() == 9 && name.substr(0, 8) == "income_q") {
    const int q = name[8] - '0';
    if (q >= 1 && q <= 4) return r.income_quartile == q ? 1.0 : 0.0;
    return std::nullopt;
  }
  if (name.size() > 4 && name.substr(0, 4) == "own_") {
    if (auto a = appliance_from_key(name.substr(4))) return static_cast<double>(r.owns(*a));
    return std::nullopt;
  }
  if (name.size() > 4 && name.substr(0, 4) == "hrs_") {
    if (auto a = appliance_from_key(name.substr(4)); a && has_usage_column(*a)) return r.hours(*a);
    return std::nullopt;
  }
  return std::nullopt;
}

bool is_known_variable(std::string_view name) {
  static const HouseholdRecord probe{};
  return variable_value(probe, name).has_value();
}

std::vector<std::string> canonical_columns() {
  std::vector<std::string> cols{"id", "housing_type"};
  for (const auto& v : numeric_variable_names()) cols.push_back(v);
  return cols;
}

ColumnMap load_column_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open column map '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("column map '" + path.string() + "' is not valid JSON: " + e.what());
  }
  const auto& cols = j.contains("columns") ? j.at("columns") : j;
  if (!cols.is_object()) throw DataError("column map must be a JSON object of header -> column");
  ColumnMap out;
  for (const auto& [k, v] : cols.items()) {
    if (!v.is_string()) throw DataError("column map entry '" + k + "' must map to a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

LoadResult parse_csv(std::string_view text, std::string name, const ColumnMap& schema) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw DataError("CSV '" + name + "' has no header row");

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    std::string header = trim(rows[0][c]);
    if (auto it = schema.find(header); it != schema.end()) header = it->second;
    position.emplace(header, c);
  }
  for (const auto& col : canonical_columns()) {
    if (!position.count(col))
      throw DataError("CSV '" + name + "' is missing required column '" + col + "'");
  }

  std::vector<HouseholdRecord> accepted;
  std::vector<RowRejection> rejections;
  std::vector<RowWarning> warnings;
  std::set<std::string> seen_ids;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    HouseholdRecord rec;
    std::optional<RowRejection> reject;
    auto cell = [&](const std::string& col) -> std::string {
      const std::size_t c = position.at(col);
      return c < cells.size() ? cells[c] : std::string{};
    };
    auto fail = [&](const std::string& col, std::string why) {
      if (!reject) reject = RowRejection{r, rec.id, col, std::move(why)};
    };
    auto real = [&](const std::string& col) -> double {
      const std::string raw = cell(col);
      if (trim(raw).empty()) {
        fail(col, "missing value in column '" + col + "'");
        return 0.0;
      }
      auto v = parse_real(raw);
      if (!v) {
        fail(col, "unparseable value '" + trim(raw) + "' in column '" + col + "'");
        return 0.0;
      }
      return *v;
    };
    auto integer = [&](const std::string& col) -> int {
      const double v = real(col);
      if (v != std::floor(v) || std::abs(v) > 1e9) {
        fail(col, "non-integer value in column '" + col + "'");
        return 0;
      }
      return static_cast<int>(v);
    };

    rec.id = trim(cell("id"));
    if (rec.id.empty()) fail("id", "missing value in column 'id'");
    const std::string ht = trim(cell("housing_type"));
    if (auto h = parse_housing_type(ht)) {
      rec.housing_type = *h;
    } else {
      fail("housing_type", "unparseable value '" + ht + "' in column 'housing_type'");
    }
    rec.annual_kwh = real("annual_kwh");
    rec.wfpr = real("wfpr");
    rec.hh_size = integer("hh_size");
    rec.avg_hh_age = real("avg_hh_age");
    rec.income_quartile = integer("income_quartile");
    for (auto a : kAppliances) {
      rec.ownership[idx(a)] = integer(own_col(a));
      if (has_usage_column(a)) rec.usage_hours[idx(a)] = real(hrs_col(a));
    }

    if (!reject) {
      if (auto v = hard_violations(rec); !v.empty()) reject = RowRejection{r, rec.id, "", v.front()};
    }
    if (!reject && !seen_ids.insert(rec.id).second)
      reject = RowRejection{r, rec.id, "id", "duplicate id '" + rec.id + "'"};
    if (reject) {
      rejections.push_back(std::move(*reject));
      continue;
    }
    for (auto& w : soft_violations(rec)) warnings.push_back(RowWarning{r, rec.id, std::move(w)});
    accepted.push_back(std::move(rec));
  }

  if (accepted.empty())
    throw DataError("CSV '" + name + "' has no valid rows (" + std::to_string(rejections.size()) +
                    " rejected)");
  const std::size_t raw = rows.size() - 1;
  return LoadResult{Dataset(std::move(name), std::move(accepted)), std::move(rejections),
                    std::move(warnings), raw};
}

LoadResult load_csv(const std::filesystem::path& path, const ColumnMap& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input CSV '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.stem().string(), schema);
}

std::string to_csv(const Dataset& ds) {
  std::ostringstream os;
  const auto cols = canonical_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& r : ds.records()) {
    os << csv_escape(r.id) << ',' << to_string(r.housing_type);
    for (const auto& v : numeric_variable_names()) os << ',' << format_real(*variable_value(r, v));
    os << '\n';
  }
  return os.str();
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV '" + path.string() + "'");
  out << to_csv(ds);
}

std::vector<VariableSummary> summarize(const Dataset& ds) {
  std::vector<VariableSummary> out;
  for (const auto& name : numeric_variable_names()) {
    VariableSummary s;
    s.variable = name;
    // Welford's single-pass update.
    double mean = 0.0, m2 = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t k = 0;
    for (const auto& r : ds.records()) {
      const double x = *variable_value(r, name);
      ++k;
      const double delta = x - mean;
      mean += delta / static_cast<double>(k);
      m2 += delta * (x - mean);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    s.n = k;
    s.mean = mean;
    s.min = lo;
    s.max = hi;
    if (k >= 2) s.sd = std::sqrt(std::max(0.0, m2) / static_cast<double>(k - 1));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace frontier
