#include "frontier/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "frontier/error.hpp"

namespace frontier {
namespace {

void write_string(std::string& out, const std::string& s) {
  // nlohmann escapes strings correctly; reuse it for the quoting.
  out += Json(s).dump();
}

void write(std::string& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write_string(out, it.key());
        out += ": ";
        write(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (flat) {
        out += "[";
        bool first = true;
        for (const auto& e : j) {
          if (!first) out += ", ";
          first = false;
          write(out, e, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write(out, e, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_g17(x) : "null";
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

double number_or_nan(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_or_nan(j[i]);
  return v;
}

Json summary_json(const ScoreSummary& s) {
  Json j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

Json scales_json(const Scales& s) {
  Json j;
  j["sigma_v"] = s.sigma_v;
  j["sigma_u"] = s.sigma_u;
  j["sigma2"] = s.sigma2;
  j["lambda"] = s.lambda;
  return j;
}

Json generator_json(const CovariateGenerator& g) {
  Json j;
  j["variable"] = g.variable;
  using K = CovariateGenerator::Kind;
  switch (g.kind) {
    case K::Uniform:
      j["kind"] = "uniform";
      j["lo"] = g.lo;
      j["hi"] = g.hi;
      break;
    case K::Bernoulli:
      j["kind"] = "bernoulli";
      j["p"] = g.p;
      break;
    case K::Categorical:
      j["kind"] = "categorical";
      j["values"] = g.values;
      j["probs"] = g.probs;
      break;
  }
  return j;
}

CovariateGenerator generator_from(const Json& j) {
  const std::string var = j.at("variable").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") return CovariateGenerator::uniform(var, j.at("lo").get<double>(), j.at("hi").get<double>());
  if (kind == "bernoulli") return CovariateGenerator::bernoulli(var, j.at("p").get<double>());
  if (kind == "categorical")
    return CovariateGenerator::categorical(var, j.at("values").get<std::vector<double>>(),
                                           j.at("probs").get<std::vector<double>>());
  throw SpecError("unknown generator kind '" + kind + "' for '" + var + "'");
}

}  // namespace

std::string format_g17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep floats recognizable as floats when read back.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string format_fixed6(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string dump(const Json& j) {
  std::string out;
  write(out, j, 0);
  out += "\n";
  return out;
}

Json to_json(const ModelSpec& spec) {
  Json j;
  j["family"] = std::string(to_string(spec.family));
  j["frontier_vars"] = spec.frontier_vars;
  j["ineff_vars"] = spec.ineff_vars;
  j["log_dependent"] = spec.log_dependent;
  j["include_frontier_intercept"] = spec.include_frontier_intercept;
  j["include_ineff_intercept"] = spec.include_ineff_intercept;
  j["income_one_hot"] = spec.income_one_hot;
  return j;
}

ModelSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw SpecError("model spec must be a JSON object");
  static const std::vector<std::string> known{"family", "frontier_vars", "ineff_vars", "log_dependent",
                                              "include_frontier_intercept", "include_ineff_intercept",
                                              "income_one_hot"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw SpecError("unknown model spec field '" + it.key() + "'");
  ModelSpec s;
  try {
    if (j.contains("family")) {
      const auto name = j.at("family").get<std::string>();
      const auto f = parse_family(name);
      if (!f) throw SpecError("unknown family '" + name + "'");
      s.family = *f;
    }
    if (!j.contains("frontier_vars")) throw SpecError("model spec needs 'frontier_vars'");
    s.frontier_vars = j.at("frontier_vars").get<std::vector<std::string>>();
    if (j.contains("ineff_vars")) s.ineff_vars = j.at("ineff_vars").get<std::vector<std::string>>();
    if (j.contains("log_dependent")) s.log_dependent = j.at("log_dependent").get<bool>();
    if (j.contains("include_frontier_intercept"))
      s.include_frontier_intercept = j.at("include_frontier_intercept").get<bool>();
    if (j.contains("include_ineff_intercept"))
      s.include_ineff_intercept = j.at("include_ineff_intercept").get<bool>();
    if (j.contains("income_one_hot")) s.income_one_hot = j.at("income_one_hot").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed model spec: ") + e.what());
  }
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse '" + path.string() + "': " + e.what());
  }
}

ModelSpec load_spec(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    return spec_from_json(j);
  } catch (const SpecError& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("error while writing '" + path.string() + "'");
}

Json to_json(const FitResult& fr, const Certification* cert) {
  const auto layout = fr.layout();
  Json j;
  j["family"] = std::string(to_string(fr.pv_hat.family));
  j["spec"] = to_json(fr.spec);
  j["n"] = fr.n;
  j["p"] = layout.p;
  j["q"] = layout.q;
  j["loglik"] = fr.loglik;
  j["column_hash"] = fr.column_hash;
  Json params = Json::array();
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Json p;
    p["label"] = fr.labels[static_cast<std::size_t>(k)];
    p["estimate"] = theta(k);
    p["se"] = fr.se(k);
    p["z"] = fr.z(k);
    p["p_value"] = fr.p_value(k);
    params.push_back(p);
  }
  j["parameters"] = params;
  j["derived"] = scales_json(fr.derived);
  j["cov_available"] = fr.cov_available;
  Json cov = Json::array();
  for (Eigen::Index r = 0; r < fr.cov.rows(); ++r) cov.push_back(vec_json(fr.cov.row(r).transpose()));
  j["covariance"] = cov;
  Json c;
  c["iterations"] = fr.convergence.iterations;
  c["gradient_norm"] = fr.convergence.gradient_norm;
  c["loglik_change"] = fr.convergence.loglik_change;
  c["restarts"] = fr.convergence.restarts;
  c["wrong_skew_warning"] = fr.convergence.wrong_skew_warning;
  c["boundary"] = fr.convergence.boundary;
  c["warnings"] = fr.convergence.warnings;
  j["convergence"] = c;
  j["no_detectable_inefficiency"] = fr.convergence.boundary;
  if (cert) {
    Json cj;
    cj["ok"] = cert->ok;
    Json checks = Json::array();
    for (const auto& ch : cert->checks) {
      Json x;
      x["name"] = ch.name;
      x["passed"] = ch.passed;
      if (!ch.detail.empty()) x["detail"] = ch.detail;
      checks.push_back(x);
    }
    cj["checks"] = checks;
    j["certification"] = cj;
  }
  return j;
}

FitResult fit_from_json(const Json& j) {
  try {
    FitResult fr;
    fr.spec = spec_from_json(j.at("spec"));
    const auto family = parse_family(j.at("family").get<std::string>());
    if (!family) throw DataError("fit file names an unknown family");
    ParamLayout layout;
    layout.family = *family;
    layout.p = j.at("p").get<Eigen::Index>();
    layout.q = j.at("q").get<Eigen::Index>();
    const Json& params = j.at("parameters");
    if (static_cast<Eigen::Index>(params.size()) != layout.size())
      throw DataError("fit file has " + std::to_string(params.size()) + " parameters, expected " +
                      std::to_string(layout.size()));
    const auto k = layout.size();
    Eigen::VectorXd theta(k);
    fr.se.resize(k);
    fr.z.resize(k);
    fr.p_value.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Json& p = params[static_cast<std::size_t>(i)];
      fr.labels.push_back(p.at("label").get<std::string>());
      theta(i) = p.at("estimate").get<double>();
      fr.se(i) = number_or_nan(p.at("se"));
      fr.z(i) = number_or_nan(p.at("z"));
      fr.p_value(i) = number_or_nan(p.at("p_value"));
    }
    fr.pv_hat = ParameterVector::unpack(layout, theta);
    fr.n = j.at("n").get<Eigen::Index>();
    fr.loglik = j.at("loglik").get<double>();
    fr.column_hash = j.at("column_hash").get<std::string>();
    const Json& d = j.at("derived");
    fr.derived.sigma_v = d.at("sigma_v").get<double>();
    fr.derived.sigma_u = d.at("sigma_u").get<double>();
    fr.derived.sigma2 = d.at("sigma2").get<double>();
    fr.derived.lambda = d.at("lambda").get<double>();
    fr.cov_available = j.at("cov_available").get<bool>();
    const Json& cov = j.at("covariance");
    fr.cov.resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r) fr.cov.row(r) = vec_from(cov.at(static_cast<std::size_t>(r))).transpose();
    const Json& c = j.at("convergence");
    fr.convergence.iterations = c.at("iterations").get<int>();
    fr.convergence.gradient_norm = c.at("gradient_norm").get<double>();
    fr.convergence.loglik_change = c.at("loglik_change").get<double>();
    fr.convergence.restarts = c.at("restarts").get<int>();
    fr.convergence.wrong_skew_warning = c.at("wrong_skew_warning").get<bool>();
    fr.convergence.boundary = c.at("boundary").get<bool>();
    fr.convergence.warnings = c.at("warnings").get<std::vector<std::string>>();
    return fr;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
}

FitResult load_fit(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    return fit_from_json(j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Json to_json(const EfficiencyReport& rep) {
  Json j;
  j["family"] = std::string(to_string(rep.family));
  j["estimator"] = std::string(to_string(rep.estimator));
  j["n"] = rep.households.size();
  j["summary"] = summary_json(rep.summary);
  j["summary_bc"] = summary_json(rep.summary_bc);
  j["summary_exp_jlms"] = summary_json(rep.summary_exp_jlms);
  Json o;
  o["share_ge_20"] = rep.overuse.share_ge_20;
  o["share_ge_50"] = rep.overuse.share_ge_50;
  j["overuse"] = o;
  Json h;
  h["edges"] = rep.hist.edges;
  h["counts"] = rep.hist.counts;
  j["histogram"] = h;
  return j;
}

Json to_json(const LadderReport& rep) {
  Json j;
  Json models = Json::array();
  for (const auto& row : rep.rows) {
    Json m;
    m["family"] = std::string(to_string(row.family));
    if (!row.fit) {
      m["status"] = "failed";
      m["error"] = row.error;
      models.push_back(m);
      continue;
    }
    const FitResult& fr = *row.fit;
    m["status"] = "ok";
    m["loglik"] = fr.loglik;
    if (row.wald) {
      Json w;
      w["chi2"] = row.wald->chi2;
      w["df"] = row.wald->df;
      w["p_value"] = row.wald->p_value;
      w["stars"] = stars(row.wald->p_value);
      m["wald"] = w;
    } else {
      m["wald"] = nullptr;
    }
    m["scales"] = scales_json(fr.derived);
    if (is_frontier(row.family)) m["mean_efficiency"] = row.mean_te;
    else m["mean_efficiency"] = nullptr;
    m["no_detectable_inefficiency"] = fr.convergence.boundary;
    Json coefs = Json::array();
    const Eigen::VectorXd theta = fr.pv_hat.pack();
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Json c;
      c["label"] = fr.labels[static_cast<std::size_t>(k)];
      c["estimate"] = theta(k);
      c["se"] = fr.se(k);
      c["p_value"] = fr.p_value(k);
      c["stars"] = stars(fr.p_value(k));
      coefs.push_back(c);
    }
    m["coefficients"] = coefs;
    m["warnings"] = fr.convergence.warnings;
    models.push_back(m);
  }
  j["models"] = models;
  Json lrs = Json::array();
  for (const auto& lr : rep.lr_tests) {
    Json l;
    l["restricted"] = std::string(to_string(lr.restricted));
    l["unrestricted"] = std::string(to_string(lr.unrestricted));
    if (lr.test) {
      l["lr"] = lr.test->lr;
      l["df"] = lr.test->df;
      l["critical_1pct"] = lr.test->critical_1pct;
      l["reject"] = lr.test->reject;
      l["boundary_aware"] = lr.test->boundary_aware;
      if (!lr.test->warning.empty()) l["warning"] = lr.test->warning;
    } else {
      l["error"] = lr.error;
    }
    lrs.push_back(l);
  }
  j["lr_tests"] = lrs;
  j["lr_convention"] = "LR = 2 (loglik_unrestricted - loglik_restricted); positive when the richer model fits better";
  j["recommended"] = std::string(to_string(rep.recommended));
  j["recommendation_reason"] = rep.recommendation_reason;
  return j;
}

Json to_json(const DgpSpec& dgp) {
  Json j;
  j["family"] = std::string(to_string(dgp.family));
  j["n"] = dgp.n;
  j["seed"] = dgp.seed;
  j["beta"] = dgp.beta;
  j["sigma_v"] = dgp.sigma_v;
  j["sigma_u"] = dgp.sigma_u;
  j["delta"] = dgp.delta;
  j["frontier_intercept"] = dgp.frontier_intercept;
  j["ineff_intercept"] = dgp.ineff_intercept;
  j["background"] = std::string(to_string(dgp.background));
  Json f = Json::array(), z = Json::array();
  for (const auto& g : dgp.frontier) f.push_back(generator_json(g));
  for (const auto& g : dgp.ineff) z.push_back(generator_json(g));
  j["frontier"] = f;
  j["ineff"] = z;
  return j;
}

DgpSpec dgp_from_json(const Json& j) {
  try {
    DgpSpec d;
    const auto family = parse_family(j.at("family").get<std::string>());
    if (!family) throw SpecError("unknown family in DGP");
    d.family = *family;
    d.n = j.at("n").get<std::size_t>();
    if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
    d.beta = j.at("beta").get<std::vector<double>>();
    d.sigma_v = j.at("sigma_v").get<double>();
    if (j.contains("sigma_u")) d.sigma_u = j.at("sigma_u").get<double>();
    if (j.contains("delta")) d.delta = j.at("delta").get<std::vector<double>>();
    if (j.contains("frontier_intercept")) d.frontier_intercept = j.at("frontier_intercept").get<bool>();
    if (j.contains("ineff_intercept")) d.ineff_intercept = j.at("ineff_intercept").get<bool>();
    if (j.contains("background")) {
      const auto h = parse_housing_type(j.at("background").get<std::string>());
      if (!h) throw SpecError("unknown background housing type");
      d.background = *h;
    }
    if (j.contains("frontier"))
      for (const auto& g : j.at("frontier")) d.frontier.push_back(generator_from(g));
    if (j.contains("ineff"))
      for (const auto& g : j.at("ineff")) d.ineff.push_back(generator_from(g));
    validate(d);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed DGP spec: ") + e.what());
  }
}

Json to_json(const Truth& truth, const Dataset& ds) {
  Json j;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < truth.v.size(); ++i) {
    Json r;
    r["id"] = ds[static_cast<std::size_t>(i)].id;
    r["v"] = truth.v(i);
    r["u"] = truth.u(i);
    r["eps"] = truth.eps(i);
    r["frontier"] = truth.frontier(i);
    rows.push_back(r);
  }
  j["households"] = rows;
  return j;
}

Json to_json(const CalibrationTable& table) {
  Json j;
  j["replications"] = table.replications;
  j["failures"] = table.failures;
  j["boundary"] = table.boundary;
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json x;
    x["parameter"] = r.parameter;
    x["truth"] = r.truth;
    x["mean_estimate"] = r.mean_estimate;
    x["bias"] = r.bias;
    x["mc_se"] = r.mc_se;
    x["rmse"] = r.rmse;
    x["mean_se"] = r.mean_se;
    x["coverage"] = r.coverage;
    rows.push_back(x);
  }
  j["rows"] = rows;
  return j;
}

}  // namespace frontier
