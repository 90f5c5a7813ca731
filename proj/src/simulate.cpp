#include "frontier/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <optional>
#include <set>
#include <thread>

#include <boost/math/special_functions/beta.hpp>

#include "frontier/error.hpp"
#include "frontier/mle.hpp"
#include "frontier/normal.hpp"

namespace frontier {
namespace {

struct Marginal {
  double mean, sd, min, max;
};

struct SurveyMarginals {
  Marginal kwh, wfpr, hh_size, age, income;
  // Appliance enum order.
  std::array<double, kApplianceCount> own;
  std::array<Marginal, kApplianceCount> hours;
};

// Published survey summary by housing type. Mixer hours are unused.
const SurveyMarginals& marginals(HousingType h) {
  static const SurveyMarginals srh{
      {1583.800, 556.881, 351.0, 3107.0},
      {0.348, 0.154, 0.0, 1.0},
      {4.192, 1.325, 2.0, 10.0},
      {31.574, 8.544, 13.0, 65.0},
      {2.939, 0.737, 1.0, 4.0},
      {0.9, 0.022, 0.536, 0.15, 0.243, 0.939, 0.005, 1.0, 0.036, 0.863, 0.375, 0.957, 0.081},
      {{{21.612, 7.193, 0, 24},
        {0.056, 0.4, 0, 4},
        {0.731, 0.766, 0, 2},
        {0.117, 0.39, 0, 2},
        {0.34, 0.67, 0, 4},
        {4.964, 2.334, 0, 10},
        {0.01, 0.139, 0, 2},
        {26.454, 10.637, 7, 46},
        {0.357, 1.935, 0, 15},
        {0, 0, 0, 0},
        {1.690, 2.602, 0, 15},
        {17.378, 11.967, 0, 40},
        {0.254, 0.592, 0, 4}}}};
  static const SurveyMarginals slum{
      {1612.908, 593.892, 351.0, 3328.0},
      {0.365, 0.169, 0.0, 1.0},
      {4.014, 1.131, 2.0, 8.0},
      {33.627, 8.886, 14.25, 62.5},
      {2.878, 0.815, 1.0, 4.0},
      {0.817, 0.028, 0.362, 0.155, 0.315, 0.962, 0.038, 0.981, 0.056, 0.716, 0.505, 0.971, 0.059},
      {{{19.606, 9.304, 0, 24},
        {0.08, 0.539, 0, 5},
        {0.502, 0.731, 0, 2},
        {0.141, 0.433, 0, 2},
        {0.446, 0.754, 0, 4},
        {4.211, 1.673, 0, 10},
        {0.042, 0.263, 0, 2},
        {22.033, 11.609, 0, 48},
        {0.512, 2.523, 0, 18},
        {0, 0, 0, 0},
        {3.441, 3.964, 0, 15},
        {13.574, 7.752, 0, 32},
        {0.127, 0.777, 0, 10}}}};
  return h == HousingType::SRH ? srh : slum;
}

// N(m, s^2) restricted to [lo, hi] by inverse CDF.
double interval_normal(double m, double s, double lo, double hi, double uniform) {
  if (s <= 0.0) return std::clamp(m, lo, hi);
  const double pa = normal::cdf((lo - m) / s);
  const double pb = normal::cdf((hi - m) / s);
  if (!(pb > pa)) return std::clamp(m, lo, hi);
  const double x = m + s * normal::quantile(pa + uniform * (pb - pa));
  return std::clamp(x, lo, hi);
}

HouseholdRecord draw_household(const SurveyMarginals& t, HousingType housing, std::string id,
                               std::mt19937_64& rng) {
  HouseholdRecord r;
  r.id = std::move(id);
  r.housing_type = housing;

  const double s2 = std::log1p((t.kwh.sd * t.kwh.sd) / (t.kwh.mean * t.kwh.mean));
  r.annual_kwh = std::exp(std::log(t.kwh.mean) - 0.5 * s2 + std::sqrt(s2) * standard_normal(rng));

  const double m = t.wfpr.mean, v = t.wfpr.sd * t.wfpr.sd;
  const double common = m * (1.0 - m) / v - 1.0;
  r.wfpr = boost::math::ibeta_inv(m * common, (1.0 - m) * common, uniform_open01(rng));

  r.hh_size = static_cast<int>(std::clamp(
      std::round(t.hh_size.mean + t.hh_size.sd * standard_normal(rng)), t.hh_size.min, t.hh_size.max));
  r.avg_hh_age = interval_normal(t.age.mean, t.age.sd, t.age.min, t.age.max, uniform_open01(rng));
  r.income_quartile = static_cast<int>(std::clamp(
      std::round(t.income.mean + t.income.sd * standard_normal(rng)), t.income.min, t.income.max));

  for (auto a : all_appliances()) {
    const auto k = static_cast<std::size_t>(a);
    r.ownership[k] = uniform_open01(rng) < t.own[k] ? 1 : 0;
  }
  // One draw per usage column regardless of ownership keeps the stream aligned.
  for (auto a : all_appliances()) {
    if (!has_usage_column(a)) continue;
    const auto k = static_cast<std::size_t>(a);
    const double u = uniform_open01(rng);
    const double p = t.own[k];
    if (r.ownership[k] == 0 || p <= 0.0) continue;
    const Marginal& h = t.hours[k];
    const double cond_mean = h.mean / p;
    const double floor_sd = 0.05 * (h.max - h.min);
    const double cond_var = (h.sd * h.sd + h.mean * h.mean) / p - cond_mean * cond_mean;
    const double cond_sd = std::max(std::sqrt(std::max(cond_var, 0.0)), floor_sd);
    r.usage_hours[k] = interval_normal(cond_mean, cond_sd, h.min, h.max, u);
  }
  return r;
}

std::string padded_id(std::string_view prefix, std::size_t i) {
  std::string digits = std::to_string(i + 1);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(prefix) + "-" + digits;
}

enum class FieldKind { Real, Unit, Integer, Binary, Hours };

std::optional<FieldKind> field_kind(const std::string& name) {
  if (name == "wfpr") return FieldKind::Unit;
  if (name == "avg_hh_age") return FieldKind::Real;
  if (name == "hh_size" || name == "income_quartile") return FieldKind::Integer;
  for (auto a : all_appliances()) {
    if (name == "own_" + std::string(appliance_key(a))) return FieldKind::Binary;
    if (has_usage_column(a) && name == "hrs_" + std::string(appliance_key(a))) return FieldKind::Hours;
  }
  return std::nullopt;
}

void set_field(HouseholdRecord& r, const std::string& name, double x) {
  if (name == "wfpr") r.wfpr = x;
  else if (name == "avg_hh_age") r.avg_hh_age = x;
  else if (name == "hh_size") r.hh_size = static_cast<int>(std::lround(x));
  else if (name == "income_quartile") r.income_quartile = static_cast<int>(std::lround(x));
  else {
    for (auto a : all_appliances()) {
      const auto k = static_cast<std::size_t>(a);
      if (name == "own_" + std::string(appliance_key(a))) {
        r.ownership[k] = static_cast<int>(std::lround(x));
        // Background usage for an appliance the household no longer owns.
        if (r.ownership[k] == 0) r.usage_hours[k] = 0.0;
        return;
      }
      if (name == "hrs_" + std::string(appliance_key(a))) {
        r.usage_hours[k] = x;
        return;
      }
    }
    throw SpecError("'" + name + "' is not a generated household field");
  }
}

void check_value(const std::string& var, FieldKind kind, double x) {
  bool ok = std::isfinite(x);
  switch (kind) {
    case FieldKind::Unit: ok = ok && x >= 0.0 && x <= 1.0; break;
    case FieldKind::Real: ok = ok && x > 0.0; break;
    case FieldKind::Hours: ok = ok && x >= 0.0; break;
    case FieldKind::Integer:
      ok = ok && x == std::round(x) && x >= 1.0 && (var != "income_quartile" || x <= 4.0);
      break;
    case FieldKind::Binary: ok = ok && (x == 0.0 || x == 1.0); break;
  }
  if (!ok) throw SpecError("generator for '" + var + "' can produce the invalid value " + std::to_string(x));
}

void check_generator(const CovariateGenerator& g) {
  const auto kind = field_kind(g.variable);
  if (!kind) throw SpecError("'" + g.variable + "' is not a generated household field");
  using K = CovariateGenerator::Kind;
  switch (g.kind) {
    case K::Uniform:
      if (!(g.lo < g.hi)) throw SpecError("uniform generator for '" + g.variable + "' needs lo < hi");
      if (*kind == FieldKind::Integer || *kind == FieldKind::Binary)
        throw SpecError("'" + g.variable + "' is discrete; use a bernoulli or categorical generator");
      check_value(g.variable, *kind, g.lo == 0.0 && *kind == FieldKind::Real ? 1e-300 : g.lo);
      check_value(g.variable, *kind, g.hi);
      break;
    case K::Bernoulli:
      if (!(g.p >= 0.0 && g.p <= 1.0)) throw SpecError("bernoulli p for '" + g.variable + "' outside [0,1]");
      if (*kind == FieldKind::Integer)
        throw SpecError("'" + g.variable + "' takes values >= 1; use a categorical generator");
      check_value(g.variable, *kind, 0.0);
      check_value(g.variable, *kind, 1.0);
      break;
    case K::Categorical: {
      if (g.values.empty() || g.values.size() != g.probs.size())
        throw SpecError("categorical generator for '" + g.variable + "' needs matching values and probs");
      double total = 0.0;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (!(g.probs[i] >= 0.0)) throw SpecError("negative probability for '" + g.variable + "'");
        total += g.probs[i];
        check_value(g.variable, *kind, g.values[i]);
      }
      if (std::abs(total - 1.0) > 1e-9) throw SpecError("probabilities for '" + g.variable + "' do not sum to 1");
      break;
    }
  }
}

double draw(const CovariateGenerator& g, std::mt19937_64& rng) {
  const double u = uniform_open01(rng);
  using K = CovariateGenerator::Kind;
  switch (g.kind) {
    case K::Uniform: return g.lo + (g.hi - g.lo) * u;
    case K::Bernoulli: return u < g.p ? 1.0 : 0.0;
    case K::Categorical: {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        acc += g.probs[i];
        if (u < acc) return g.values[i];
      }
      return g.values.back();
    }
  }
  return 0.0;
}

}  // namespace

double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) { return normal::quantile(uniform_open01(rng)); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double truncated_normal_draw(double mu, double sigma, double uniform) {
  if (sigma <= 0.0) return std::max(mu, 0.0);
  // P(X > x) = uniform * P(X > 0), solved on the standardized upper tail.
  const double log_tail = std::log(uniform) + normal::log_cdf(mu / sigma);
  const double x = normal::upper_quantile_from_log(log_tail);
  return std::max(0.0, mu + sigma * x);
}

CovariateGenerator CovariateGenerator::uniform(std::string var, double lo, double hi) {
  CovariateGenerator g;
  g.variable = std::move(var);
  g.kind = Kind::Uniform;
  g.lo = lo;
  g.hi = hi;
  return g;
}

CovariateGenerator CovariateGenerator::bernoulli(std::string var, double p) {
  CovariateGenerator g;
  g.variable = std::move(var);
  g.kind = Kind::Bernoulli;
  g.p = p;
  return g;
}

CovariateGenerator CovariateGenerator::categorical(std::string var, std::vector<double> values,
                                                   std::vector<double> probs) {
  CovariateGenerator g;
  g.variable = std::move(var);
  g.kind = Kind::Categorical;
  g.values = std::move(values);
  g.probs = std::move(probs);
  return g;
}

void validate(const DgpSpec& dgp) {
  if (dgp.n < 1) throw SpecError("DGP needs n >= 1");
  if (!(dgp.sigma_v >= 0.0) || !std::isfinite(dgp.sigma_v)) throw SpecError("sigma_v must be finite and >= 0");
  if (!(dgp.sigma_u >= 0.0) || !std::isfinite(dgp.sigma_u)) throw SpecError("sigma_u must be finite and >= 0");
  const std::size_t p = dgp.frontier.size() + (dgp.frontier_intercept ? 1 : 0);
  if (dgp.beta.size() != p)
    throw SpecError("beta has " + std::to_string(dgp.beta.size()) + " entries, expected " + std::to_string(p));
  if (uses_ineff_vars(dgp.family)) {
    const std::size_t q = dgp.ineff.size() + (dgp.ineff_intercept ? 1 : 0);
    if (q == 0) throw SpecError("family " + std::string(to_string(dgp.family)) + " needs inefficiency variables");
    if (dgp.delta.size() != q)
      throw SpecError("delta has " + std::to_string(dgp.delta.size()) + " entries, expected " + std::to_string(q));
  } else if (!dgp.ineff.empty() || !dgp.delta.empty()) {
    throw SpecError("family " + std::string(to_string(dgp.family)) + " takes no inefficiency variables");
  }
  std::set<std::string> seen;
  for (const auto& g : dgp.frontier) {
    check_generator(g);
    if (!seen.insert(g.variable).second) throw SpecError("duplicate frontier variable '" + g.variable + "'");
  }
  std::set<std::string> seen_z;
  for (const auto& g : dgp.ineff) {
    check_generator(g);
    if (!seen_z.insert(g.variable).second) throw SpecError("duplicate inefficiency variable '" + g.variable + "'");
  }
  for (double b : dgp.beta)
    if (!std::isfinite(b)) throw SpecError("beta must be finite");
  for (double d : dgp.delta)
    if (!std::isfinite(d)) throw SpecError("delta must be finite");
}

ModelSpec model_spec_for(const DgpSpec& dgp) {
  ModelSpec s;
  s.family = dgp.family;
  for (const auto& g : dgp.frontier) s.frontier_vars.push_back(g.variable);
  for (const auto& g : dgp.ineff) s.ineff_vars.push_back(g.variable);
  s.include_frontier_intercept = dgp.frontier_intercept;
  s.include_ineff_intercept = dgp.ineff_intercept;
  s.log_dependent = true;
  return s;
}

Simulation generate(const DgpSpec& dgp) {
  validate(dgp);
  std::mt19937_64 rng(dgp.seed);
  std::mt19937_64 background(splitmix64(dgp.seed ^ 0x6a09e667f3bcc909ULL));
  const SurveyMarginals& table = marginals(dgp.background);
  const auto n = static_cast<Eigen::Index>(dgp.n);

  Truth truth;
  truth.v.resize(n);
  truth.u.resize(n);
  truth.eps.resize(n);
  truth.frontier.resize(n);
  std::vector<HouseholdRecord> records;
  records.reserve(dgp.n);

  for (Eigen::Index i = 0; i < n; ++i) {
    HouseholdRecord r = draw_household(table, dgp.background, padded_id("sim", static_cast<std::size_t>(i)), background);
    double xb = dgp.frontier_intercept ? dgp.beta[0] : 0.0;
    std::size_t j = dgp.frontier_intercept ? 1 : 0;
    for (const auto& g : dgp.frontier) {
      const double x = draw(g, rng);
      set_field(r, g.variable, x);
      xb += dgp.beta[j++] * x;
    }
    double zd = 0.0;
    if (uses_ineff_vars(dgp.family)) {
      zd = dgp.ineff_intercept ? dgp.delta[0] : 0.0;
      std::size_t k = dgp.ineff_intercept ? 1 : 0;
      for (const auto& g : dgp.ineff) {
        const bool shared = std::any_of(dgp.frontier.begin(), dgp.frontier.end(),
                                        [&](const CovariateGenerator& f) { return f.variable == g.variable; });
        const double z = shared ? *variable_value(r, g.variable) : draw(g, rng);
        if (!shared) set_field(r, g.variable, z);
        zd += dgp.delta[k++] * z;
      }
    }
    const double v = dgp.sigma_v * standard_normal(rng);
    const double uu = uniform_open01(rng);
    double u = 0.0;
    switch (dgp.family) {
      case Family::OLS: u = 0.0; break;
      case Family::NHN: u = truncated_normal_draw(0.0, dgp.sigma_u, uu); break;
      case Family::NHN_HET: u = truncated_normal_draw(0.0, std::exp(0.5 * zd), uu); break;
      case Family::TN: u = truncated_normal_draw(zd, dgp.sigma_u, uu); break;
    }
    truth.v(i) = v;
    truth.u(i) = u;
    truth.eps(i) = v + u;
    truth.frontier(i) = xb;
    r.annual_kwh = std::exp(xb + v + u);
    records.push_back(std::move(r));
  }
  return Simulation{Dataset("simulated", std::move(records)), std::move(truth)};
}

namespace {

struct Estimate {
  std::vector<double> value;
  std::vector<double> se;
  bool boundary = false;
};

}  // namespace

CalibrationTable monte_carlo(const DgpSpec& dgp, std::size_t replications, unsigned threads) {
  if (replications < 2) throw SpecError("monte_carlo needs at least 2 replications");
  validate(dgp);
  const ModelSpec spec = model_spec_for(dgp);

  std::vector<std::string> names;
  std::vector<double> truth;
  {
    std::size_t j = 0;
    if (dgp.frontier_intercept) {
      names.emplace_back("Constant");
      truth.push_back(dgp.beta[j++]);
    }
    for (const auto& g : dgp.frontier) {
      names.push_back(g.variable);
      truth.push_back(dgp.beta[j++]);
    }
    names.emplace_back("sigma_v");
    truth.push_back(dgp.sigma_v);
    if (dgp.family == Family::NHN || dgp.family == Family::TN) {
      names.emplace_back("sigma_u");
      truth.push_back(dgp.sigma_u);
    }
    if (uses_ineff_vars(dgp.family)) {
      const std::string prefix = dgp.family == Family::TN ? "mu:" : "ln_sigma_u2:";
      std::size_t k = 0;
      if (dgp.ineff_intercept) {
        names.push_back(prefix + "Constant");
        truth.push_back(dgp.delta[k++]);
      }
      for (const auto& g : dgp.ineff) {
        names.push_back(prefix + g.variable);
        truth.push_back(dgp.delta[k++]);
      }
    }
  }

  auto run_one = [&](std::size_t r) -> std::optional<Estimate> {
    DgpSpec d = dgp;
    d.seed = splitmix64(dgp.seed + r);
    try {
      const Simulation sim = generate(d);
      const DesignMatrices dm = build(spec, sim.dataset);
      const FitResult fr = fit(spec, dm);
      const auto layout = fr.layout();
      Estimate e;
      e.boundary = fr.convergence.boundary;
      for (Eigen::Index j = 0; j < dm.p(); ++j) {
        e.value.push_back(fr.pv_hat.beta(j));
        e.se.push_back(fr.se(j));
      }
      const double sv = std::exp(0.5 * fr.pv_hat.theta_v);
      e.value.push_back(sv);
      e.se.push_back(0.5 * sv * fr.se(layout.theta_v()));
      if (dgp.family == Family::NHN || dgp.family == Family::TN) {
        const double su = std::exp(0.5 * fr.pv_hat.theta_u);
        e.value.push_back(su);
        e.se.push_back(0.5 * su * fr.se(layout.theta_u()));
      }
      if (uses_ineff_vars(dgp.family)) {
        for (Eigen::Index k = 0; k < dm.q(); ++k) {
          e.value.push_back(fr.pv_hat.delta(k));
          e.se.push_back(fr.se(layout.delta_begin() + k));
        }
      }
      return e;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };

  std::vector<std::optional<Estimate>> results(replications);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, replications));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < replications; r = next++) results[r] = run_one(r);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CalibrationTable table;
  table.replications = replications;
  std::vector<const Estimate*> ok;
  for (const auto& r : results) {
    if (!r) {
      ++table.failures;
      continue;
    }
    table.boundary += r->boundary ? 1 : 0;
    ok.push_back(&*r);
  }
  constexpr double z975 = 1.959963984540054;
  for (std::size_t j = 0; j < names.size(); ++j) {
    CalibrationRow row;
    row.parameter = names[j];
    row.truth = truth[j];
    const double m = static_cast<double>(ok.size());
    if (ok.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean_estimate = row.bias = row.mc_se = row.rmse = row.mean_se = row.coverage = nan;
      table.rows.push_back(row);
      continue;
    }
    double sum = 0.0, sum_se = 0.0, sq_err = 0.0;
    std::size_t covered = 0, se_count = 0;
    for (const auto* e : ok) {
      const double x = e->value[j], s = e->se[j];
      sum += x;
      sq_err += (x - truth[j]) * (x - truth[j]);
      if (std::isfinite(s)) {
        sum_se += s;
        ++se_count;
        covered += std::abs(x - truth[j]) <= z975 * s ? 1 : 0;
      }
    }
    row.mean_estimate = sum / m;
    row.bias = row.mean_estimate - truth[j];
    double ss = 0.0;
    for (const auto* e : ok) ss += (e->value[j] - row.mean_estimate) * (e->value[j] - row.mean_estimate);
    row.mc_se = ok.size() > 1 ? std::sqrt(ss / (m - 1.0)) / std::sqrt(m) : 0.0;
    row.rmse = std::sqrt(sq_err / m);
    row.mean_se = se_count > 0 ? sum_se / static_cast<double>(se_count)
                               : std::numeric_limits<double>::quiet_NaN();
    // Replications without a finite SE count as misses.
    row.coverage = static_cast<double>(covered) / m;
    table.rows.push_back(row);
  }
  return table;
}

Dataset survey_fixture(HousingType housing, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw SpecError("fixture needs n >= 1");
  std::mt19937_64 rng(seed);
  const SurveyMarginals& t = marginals(housing);
  std::vector<HouseholdRecord> records;
  records.reserve(n);
  const std::string prefix(to_string(housing));
  for (std::size_t i = 0; i < n; ++i) records.push_back(draw_household(t, housing, padded_id(prefix, i), rng));
  return Dataset(prefix + " fixture", std::move(records));
}

}  // namespace frontier
