#include "frontier/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "frontier/error.hpp"
#include "frontier/json_io.hpp"
#include "frontier/simulate.hpp"

namespace frontier {
namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& p, std::string_view what) {
  if (p.empty()) throw DataError(std::string(what) + " path is required");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw DataError(std::string(what) + " '" + p.string() + "' does not exist");
}

void ensure_out_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw DataError("cannot create output directory '" + p.string() + "'");
}

LoadResult load_input(const RunConfig& cfg, std::ostream& err) {
  ColumnMap map;
  if (cfg.column_map) map = load_column_map(*cfg.column_map);
  LoadResult lr = load_csv(cfg.input, map);
  if (!lr.rejections.empty())
    err << "note: rejected " << lr.rejections.size() << " of " << lr.raw_rows << " rows\n";
  constexpr std::size_t kShown = 5;
  for (std::size_t i = 0; i < lr.rejections.size() && i < kShown; ++i) {
    const auto& r = lr.rejections[i];
    err << "  row " << r.row << " (" << r.id << ")" << (r.column.empty() ? "" : " column " + r.column) << ": "
        << r.reason << "\n";
  }
  if (lr.rejections.size() > kShown) err << "  ... and " << lr.rejections.size() - kShown << " more\n";
  for (std::size_t i = 0; i < lr.warnings.size() && i < kShown; ++i) {
    const auto& w = lr.warnings[i];
    err << "warning: row " << w.row << " (" << w.id << "): " << w.reason << "\n";
  }
  if (lr.warnings.size() > kShown) err << "warning: ... and " << lr.warnings.size() - kShown << " more\n";
  return lr;
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

std::string coefficients_csv(const FitResult& fr) {
  std::string s = "label,estimate,se,z,p,stars\n";
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    s += fr.labels[static_cast<std::size_t>(k)] + "," + format_g17(theta(k)) + "," + format_g17(fr.se(k)) + "," +
         format_g17(fr.z(k)) + "," + format_g17(fr.p_value(k)) + "," + stars(fr.p_value(k)) + "\n";
  }
  return s;
}

std::string coefficients_table(const FitResult& fr) {
  std::ostringstream o;
  o << "Family: " << to_string(fr.pv_hat.family) << "   n = " << fr.n << "\n";
  o << pad_right("Parameter", 28) << pad_left("Estimate", 16) << pad_left("Std.Err", 14) << pad_left("z", 14)
    << pad_left("p", 12) << "\n";
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    o << pad_right(fr.labels[static_cast<std::size_t>(k)], 28)
      << pad_left(format_fixed6(theta(k)) + pad_right(stars(fr.p_value(k)), 3), 16)
      << pad_left(format_fixed6(fr.se(k)), 14) << pad_left(format_fixed6(fr.z(k)), 14)
      << pad_left(format_fixed6(fr.p_value(k)), 12) << "\n";
  }
  o << pad_right("Log-likelihood value", 28) << pad_left(format_fixed6(fr.loglik), 16) << "\n";
  o << pad_right("sigma_v", 28) << pad_left(format_fixed6(fr.derived.sigma_v), 16) << "\n";
  o << pad_right("sigma_u", 28) << pad_left(format_fixed6(fr.derived.sigma_u), 16) << "\n";
  o << pad_right("sigma^2", 28) << pad_left(format_fixed6(fr.derived.sigma2), 16) << "\n";
  o << pad_right("lambda", 28) << pad_left(format_fixed6(fr.derived.lambda), 16) << "\n";
  for (const auto& w : fr.convergence.warnings) o << "warning: " << w << "\n";
  return o.str();
}

// A fit that cannot be re-derived from its own numbers is an internal failure.
void require_certified(const Certification& cert) {
  if (!cert.ok) throw InvariantError("fit failed certification: " + cert.failure());
}

}  // namespace

std::optional<Command> parse_command(std::string_view s) {
  if (s == "fit") return Command::Fit;
  if (s == "ladder") return Command::Ladder;
  if (s == "score") return Command::Score;
  if (s == "simulate") return Command::Simulate;
  if (s == "summarize") return Command::Summarize;
  return std::nullopt;
}

std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "table") return OutputFormat::Table;
  return std::nullopt;
}

const std::vector<std::string>& ladder_footer_labels() {
  static const std::vector<std::string> labels{"Log-likelihood value", "Wald chi-square", "sigma_v", "sigma_u",
                                               "sigma^2", "lambda", "Mean efficiency"};
  return labels;
}

std::string ladder_table(const LadderReport& rep) {
  constexpr std::size_t kLabel = 26, kCoef = 16, kP = 11;
  std::ostringstream o;

  std::vector<std::string> x_rows, z_rows;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  bool has_constant = false;
  for (const auto& r : rep.rows) {
    for (const auto& l : r.labels_X) {
      if (l == "Constant") has_constant = true;
      else add_unique(x_rows, l);
    }
    for (const auto& l : r.labels_Z) add_unique(z_rows, l);
  }
  if (has_constant) x_rows.emplace_back("Constant");

  o << pad_right("", kLabel);
  for (std::size_t m = 0; m < rep.rows.size(); ++m)
    o << pad_left("Model " + std::to_string(m + 1) + " (" + std::string(to_string(rep.rows[m].family)) + ")",
                  kCoef + kP);
  o << "\n" << pad_right("Variable", kLabel);
  for (std::size_t m = 0; m < rep.rows.size(); ++m) o << pad_left("Coef.", kCoef) << pad_left("p-value", kP);
  o << "\n";
  const std::string rule(kLabel + rep.rows.size() * (kCoef + kP), '-');
  o << rule << "\n";

  auto cell = [&](const LadderRow& r, const std::string& label) {
    if (!r.fit) return pad_left("", kCoef) + pad_left("", kP);
    const auto& labels = r.fit->labels;
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) return pad_left("", kCoef) + pad_left("", kP);
    const auto k = static_cast<Eigen::Index>(it - labels.begin());
    const double est = r.fit->pv_hat.pack()(k);
    const double p = r.fit->p_value(k);
    return pad_left(format_fixed6(est) + pad_right(stars(p), 3), kCoef) + pad_left(format_fixed6(p), kP);
  };

  o << "Frontier\n";
  for (const auto& l : x_rows) {
    o << pad_right("  " + l, kLabel);
    for (const auto& r : rep.rows) o << cell(r, l);
    o << "\n";
  }
  if (!z_rows.empty()) {
    o << "Inefficiency (NHN_HET: ln sigma_u^2; TN: mu)\n";
    for (const auto& l : z_rows) {
      o << pad_right("  " + l, kLabel);
      for (const auto& r : rep.rows) {
        const std::string prefix = r.family == Family::TN ? "mu:" : "ln_sigma_u2:";
        o << cell(r, prefix + l);
      }
      o << "\n";
    }
  }
  o << rule << "\n";

  const auto& footer = ladder_footer_labels();
  for (std::size_t f = 0; f < footer.size(); ++f) {
    o << pad_right(footer[f], kLabel);
    for (const auto& r : rep.rows) {
      std::string v;
      if (!r.fit) {
        v = "failed";
      } else {
        const Scales& s = r.fit->derived;
        switch (f) {
          case 0: v = format_fixed6(r.fit->loglik); break;
          case 1: v = r.wald ? format_fixed6(r.wald->chi2) + pad_right(stars(r.wald->p_value), 3) : "n/a"; break;
          case 2: v = format_fixed6(s.sigma_v); break;
          case 3: v = is_frontier(r.family) ? format_fixed6(s.sigma_u) : "-"; break;
          case 4: v = format_fixed6(s.sigma2); break;
          case 5: v = is_frontier(r.family) ? format_fixed6(s.lambda) : "-"; break;
          case 6: v = is_frontier(r.family) ? format_fixed6(r.mean_te) : "-"; break;
        }
      }
      o << pad_left(v, kCoef) << pad_left("", kP);
    }
    o << "\n";
  }
  o << rule << "\n";
  o << "Significance: *** p<0.01, ** p<0.05, * p<0.1\n";
  for (const auto& r : rep.rows)
    if (!r.fit) o << to_string(r.family) << " failed: " << r.error << "\n";

  o << "\nLikelihood-ratio tests (1% level)\n";
  for (const auto& lr : rep.lr_tests) {
    o << "  " << to_string(lr.restricted) << " vs " << to_string(lr.unrestricted) << ": ";
    if (!lr.test) {
      o << "unavailable (" << lr.error << ")\n";
      continue;
    }
    o << "LR = " << format_fixed6(lr.test->lr) << ", df = " << lr.test->df
      << ", critical = " << format_fixed6(lr.test->critical_1pct) << ", "
      << (lr.test->reject ? "reject" : "do not reject");
    if (!lr.test->warning.empty()) o << " [" << lr.test->warning << "]";
    o << "\n";
  }
  o << "Recommended model: " << to_string(rep.recommended) << " (" << rep.recommendation_reason << ")\n";
  return o.str();
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.input, "input CSV");
  if (!cfg.spec) throw DataError("fit needs --spec");
  require_file(*cfg.spec, "spec file");
  ensure_out_dir(cfg.out);
  const ModelSpec spec = load_spec(*cfg.spec);
  const LoadResult lr = load_input(cfg, err);
  const DesignMatrices dm = build(spec, lr.dataset);
  const FitResult fr = fit(spec, dm);
  const Certification cert = certify(fr, dm);
  require_certified(cert);
  const std::string json = dump(to_json(fr, &cert));
  const std::string csv = coefficients_csv(fr);
  write_text_file(cfg.out / "fit.json", json);
  write_text_file(cfg.out / "coefficients.csv", csv);
  for (const auto& w : fr.convergence.warnings) err << "warning: " << w << "\n";
  switch (cfg.format) {
    case OutputFormat::Json: out << json; break;
    case OutputFormat::Csv: out << csv; break;
    case OutputFormat::Table: out << coefficients_table(fr); break;
  }
  return kExitOk;
}

int cmd_ladder(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.input, "input CSV");
  if (!cfg.spec) throw DataError("ladder needs --spec");
  require_file(*cfg.spec, "spec file");
  ensure_out_dir(cfg.out);
  const ModelSpec base = load_spec(*cfg.spec);
  const LoadResult lr = load_input(cfg, err);
  const LadderReport rep = run_ladder(lr.dataset, ladder_specs(base));
  const std::string json = dump(to_json(rep));
  const std::string table = ladder_table(rep);
  write_text_file(cfg.out / "ladder.json", json);
  write_text_file(cfg.out / "ladder.txt", table);
  switch (cfg.format) {
    case OutputFormat::Json: out << json; break;
    case OutputFormat::Csv:
    case OutputFormat::Table: out << table; break;
  }
  bool any_ok = false;
  for (const auto& r : rep.rows) {
    if (r.fit) any_ok = true;
    else err << "warning: " << to_string(r.family) << " failed: " << r.error << "\n";
  }
  for (const auto& t : rep.lr_tests) {
    if (!t.test && t.error.find("restricted model fits better") != std::string::npos) {
      err << "error: nesting violation in " << to_string(t.restricted) << " vs " << to_string(t.unrestricted)
          << ": " << t.error << "\n";
      return kExitInvariant;
    }
  }
  if (!any_ok) {
    err << "error: every model in the ladder failed\n";
    return kExitConvergence;
  }
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.input, "input CSV");
  const fs::path fit_path = cfg.fit ? *cfg.fit : cfg.out / "fit.json";
  require_file(fit_path, "fit file");
  if (cfg.bins < 1) throw DataError("--bins must be at least 1");
  ensure_out_dir(cfg.out);
  const FitResult fr = load_fit(fit_path);
  if (!is_frontier(fr.pv_hat.family))
    throw SpecError("fit file holds an OLS model; scoring needs a frontier family");
  const LoadResult lr = load_input(cfg, err);
  const DesignMatrices dm = build(fr.spec, lr.dataset);
  const std::string hash = column_hash_hex(dm);
  if (hash != fr.column_hash)
    throw DataError("input data does not match the fit (column hash " + hash + ", fit has " + fr.column_hash + ")");
  const EfficiencyReport rep = score(fr, dm, lr.dataset, cfg.te, cfg.bins);

  std::string scores = "id,eps,u_jlms,te_bc,te_exp_jlms,frontier_kwh,observed_kwh,overuse_ratio\n";
  std::string frontier = "id,observed_kwh,frontier_kwh\n";
  for (const auto& h : rep.households) {
    scores += h.id + "," + format_g17(h.eps) + "," + format_g17(h.u_jlms) + "," + format_g17(h.te_bc) + "," +
              format_g17(h.te_exp_jlms) + "," + format_g17(h.frontier_kwh) + "," + format_g17(h.observed_kwh) +
              "," + format_g17(h.overuse_ratio) + "\n";
    frontier += h.id + "," + format_g17(h.observed_kwh) + "," + format_g17(h.frontier_kwh) + "\n";
  }
  std::string hist = "bin_lower,bin_upper,count\n";
  for (std::size_t k = 0; k < rep.hist.counts.size(); ++k)
    hist += format_fixed6(rep.hist.edges[k]) + "," + format_fixed6(rep.hist.edges[k + 1]) + "," +
            std::to_string(rep.hist.counts[k]) + "\n";

  std::ostringstream txt;
  txt << "Efficiency scores (" << to_string(rep.family) << ", estimator " << to_string(rep.estimator)
      << ", n = " << rep.households.size() << ")\n";
  txt << pad_right("", 12) << pad_left("Mean", 12) << pad_left("SD", 12) << pad_left("Min.", 12)
      << pad_left("Max.", 12) << "\n";
  auto line = [&](const std::string& name, const ScoreSummary& s) {
    txt << pad_right(name, 12) << pad_left(format_fixed6(s.mean), 12) << pad_left(format_fixed6(s.sd), 12)
        << pad_left(format_fixed6(s.min), 12) << pad_left(format_fixed6(s.max), 12) << "\n";
  };
  line("bc", rep.summary_bc);
  line("expjlms", rep.summary_exp_jlms);
  char buf[160];
  std::snprintf(buf, sizeof buf, "share \xe2\x89\xa5 20%%: %.1f%% of households consume 20%% or more above the frontier\n",
                100.0 * rep.overuse.share_ge_20);
  txt << buf;
  std::snprintf(buf, sizeof buf, "share \xe2\x89\xa5 50%%: %.1f%% of households consume 50%% or more above the frontier\n",
                100.0 * rep.overuse.share_ge_50);
  txt << buf;

  const std::string json = dump(to_json(rep));
  write_text_file(cfg.out / "scores.csv", scores);
  write_text_file(cfg.out / "summary.json", json);
  write_text_file(cfg.out / "histogram.csv", hist);
  write_text_file(cfg.out / "frontier.csv", frontier);
  write_text_file(cfg.out / "summary.txt", txt.str());
  switch (cfg.format) {
    case OutputFormat::Json: out << json; break;
    case OutputFormat::Csv: out << scores; break;
    case OutputFormat::Table: out << txt.str(); break;
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.seed) throw DataError("simulate needs --seed");
  if (cfg.spec) require_file(*cfg.spec, "DGP spec file");
  ensure_out_dir(cfg.out);
  std::string csv;
  std::string truth;
  if (cfg.spec) {
    DgpSpec dgp = dgp_from_json(read_json_file(*cfg.spec));
    dgp.seed = *cfg.seed;
    const Simulation sim = generate(dgp);
    csv = to_csv(sim.dataset);
    Json j;
    j["dgp"] = to_json(dgp);
    j["model_spec"] = to_json(model_spec_for(dgp));
    j["truth"] = to_json(sim.truth, sim.dataset);
    truth = dump(j);
  } else {
    const Dataset ds = survey_fixture(cfg.housing, cfg.n, *cfg.seed);
    csv = to_csv(ds);
    Json j;
    j["fixture"] = std::string(to_string(cfg.housing));
    j["n"] = cfg.n;
    j["seed"] = *cfg.seed;
    truth = dump(j);
  }
  write_text_file(cfg.out / "data.csv", csv);
  write_text_file(cfg.out / "truth.json", truth);
  if (cfg.format == OutputFormat::Csv) out << csv;
  else err << "wrote " << (cfg.out / "data.csv").string() << " and " << (cfg.out / "truth.json").string() << "\n";
  return kExitOk;
}

int cmd_summarize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.input, "input CSV");
  ensure_out_dir(cfg.out);
  const LoadResult lr = load_input(cfg, err);
  const auto rows = summarize(lr.dataset);
  std::string csv = "variable,n,mean,sd,min,max\n";
  std::ostringstream txt;
  txt << pad_right("Variable", 24) << pad_left("n", 8) << pad_left("Mean", 14) << pad_left("SD", 14)
      << pad_left("Min.", 14) << pad_left("Max.", 14) << "\n";
  Json j = Json::array();
  for (const auto& r : rows) {
    const double sd = r.sd ? *r.sd : std::numeric_limits<double>::quiet_NaN();
    csv += r.variable + "," + std::to_string(r.n) + "," + format_g17(r.mean) + "," + (r.sd ? format_g17(sd) : "") +
           "," + format_g17(r.min) + "," + format_g17(r.max) + "\n";
    txt << pad_right(r.variable, 24) << pad_left(std::to_string(r.n), 8) << pad_left(format_fixed6(r.mean), 14)
        << pad_left(r.sd ? format_fixed6(sd) : "-", 14) << pad_left(format_fixed6(r.min), 14)
        << pad_left(format_fixed6(r.max), 14) << "\n";
    Json x;
    x["variable"] = r.variable;
    x["n"] = r.n;
    x["mean"] = r.mean;
    if (r.sd) x["sd"] = *r.sd;
    else x["sd"] = nullptr;
    x["min"] = r.min;
    x["max"] = r.max;
    j.push_back(x);
  }
  write_text_file(cfg.out / "summary.csv", csv);
  switch (cfg.format) {
    case OutputFormat::Json: out << dump(j); break;
    case OutputFormat::Csv: out << csv; break;
    case OutputFormat::Table: out << txt.str(); break;
  }
  return kExitOk;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Command::Fit: return cmd_fit(cfg, out, err);
      case Command::Ladder: return cmd_ladder(cfg, out, err);
      case Command::Score: return cmd_score(cfg, out, err);
      case Command::Simulate: return cmd_simulate(cfg, out, err);
      case Command::Summarize: return cmd_summarize(cfg, out, err);
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitInvariant;
}

}  // namespace frontier
