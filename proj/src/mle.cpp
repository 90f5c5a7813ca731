#include "frontier/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "frontier/error.hpp"
#include "frontier/normal.hpp"
#include "frontier/ols.hpp"
#include "frontier/optimize.hpp"

namespace frontier {
namespace {

constexpr double kRelChangeTolerance = 1e-10;
constexpr int kMaxNewtonSteps = 50;

// Evaluates loglik with theta_u held at or above its floor.
class FloorObjective {
 public:
  FloorObjective(const ParamLayout& layout, const DesignMatrices& dm) : layout_(layout), dm_(dm) {}

  double loglik(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const Eigen::Index iu = layout_.theta_u();
    if (iu >= 0 && theta(iu) < kThetaUFloor) {
      Eigen::VectorXd clamped = theta;
      clamped(iu) = kThetaUFloor;
      const double v = loglik_packed(layout_, dm_, clamped, grad);
      if (grad) (*grad)(iu) = 0.0;
      return v;
    }
    return loglik_packed(layout_, dm_, theta, grad);
  }

  // Scaled negative log-likelihood for the minimizers.
  optim::Objective minimizer() const {
    const double inv_n = 1.0 / static_cast<double>(dm_.n());
    return [this, inv_n](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const double v = loglik(x, g);
      if (g) *g *= -inv_n;
      return -v * inv_n;
    };
  }

 private:
  ParamLayout layout_;
  const DesignMatrices& dm_;
};

struct Candidate {
  Eigen::VectorXd theta;
  double loglik = -std::numeric_limits<double>::infinity();
  double gradient_norm = std::numeric_limits<double>::infinity();
  double change = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool boundary = false;
  bool converged = false;
};

std::vector<Eigen::Index> free_indices(const ParamLayout& layout, bool boundary) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < layout.size(); ++j)
    if (!(boundary && j == layout.theta_u())) out.push_back(j);
  return out;
}

double free_norm(const Eigen::VectorXd& g, const std::vector<Eigen::Index>& free) {
  double s = 0.0;
  for (auto j : free) s += g(j) * g(j);
  return std::sqrt(s);
}

// Hessian of loglik over `free` coordinates by central differences of the gradient.
Eigen::MatrixXd fd_hessian(const FloorObjective& obj, const Eigen::VectorXd& theta,
                           const std::vector<Eigen::Index>& free) {
  const auto k = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd h(k, k);
  Eigen::VectorXd gp, gm;
  for (Eigen::Index a = 0; a < k; ++a) {
    const Eigen::Index j = free[static_cast<std::size_t>(a)];
    const double step = 1e-4 * (1.0 + std::abs(theta(j)));
    Eigen::VectorXd tp = theta, tm = theta;
    tp(j) += step;
    tm(j) -= step;
    obj.loglik(tp, &gp);
    obj.loglik(tm, &gm);
    for (Eigen::Index b = 0; b < k; ++b) {
      const Eigen::Index i = free[static_cast<std::size_t>(b)];
      h(b, a) = (gp(i) - gm(i)) / (2.0 * step);
    }
  }
  return 0.5 * (h + h.transpose());
}

// Newton iterations on the free coordinates; stops at machine precision.
void newton_polish(const FloorObjective& obj, Candidate& c, const std::vector<Eigen::Index>& free) {
  Eigen::VectorXd g;
  c.loglik = obj.loglik(c.theta, &g);
  for (int it = 0; it < kMaxNewtonSteps; ++it) {
    const Eigen::MatrixXd info = -fd_hessian(obj, c.theta, free);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd g_free(static_cast<Eigen::Index>(free.size()));
    for (std::size_t a = 0; a < free.size(); ++a) g_free(static_cast<Eigen::Index>(a)) = g(free[a]);
    const Eigen::VectorXd step = ldlt.solve(g_free);
    if (!step.allFinite()) break;

    double t = 1.0;
    bool improved = false;
    Eigen::VectorXd trial;
    Eigen::VectorXd g_trial;
    double ll_trial = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      trial = c.theta;
      for (std::size_t a = 0; a < free.size(); ++a)
        trial(free[a]) += t * step(static_cast<Eigen::Index>(a));
      ll_trial = obj.loglik(trial, &g_trial);
      if (std::isfinite(ll_trial) && ll_trial >= c.loglik) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    ++c.iterations;
    c.change = (ll_trial - c.loglik) / (1.0 + std::abs(ll_trial));
    const double moved = t * step.lpNorm<Eigen::Infinity>();
    c.theta = trial;
    c.loglik = ll_trial;
    g = g_trial;
    if (moved <= 1e-12 * (1.0 + c.theta.lpNorm<Eigen::Infinity>())) break;
  }
  c.gradient_norm = free_norm(g, free);
}

Candidate optimize_from(const ParamLayout& layout, const DesignMatrices& dm,
                        const Eigen::VectorXd& start) {
  const FloorObjective obj(layout, dm);
  const auto f = obj.minimizer();
  Candidate c;

  optim::NelderMeadOptions nm;
  nm.max_evaluations = 60 * static_cast<int>(layout.size()) + 100;
  nm.initial_step = 0.05;
  nm.f_tolerance = 1e-9;
  const auto simplex = optim::nelder_mead(f, start, nm);

  optim::BfgsOptions qn;
  qn.gradient_tolerance = 1e-10;
  const auto polished = optim::bfgs(f, simplex.x, qn);
  c.theta = polished.value <= simplex.value ? polished.x : simplex.x;
  c.iterations = simplex.iterations + polished.iterations;

  const auto finish = [&](Candidate& cand) {
    // A polish that cannot improve leaves the final change at zero.
    cand.change = 0.0;
    newton_polish(obj, cand, free_indices(layout, cand.boundary));
    cand.converged = std::isfinite(cand.loglik) && cand.gradient_norm <= gradient_tolerance(cand.loglik) &&
                     std::abs(cand.change) <= kRelChangeTolerance;
  };

  const Eigen::Index iu = layout.theta_u();
  const bool near_zero =
      iu >= 0 && c.theta(iu) - c.theta(layout.theta_v()) < 2.0 * std::log(kLambdaCollapse);
  if (!near_zero) {
    finish(c);
    return c;
  }
  // The likelihood is flat in sigma_u near zero and quasi-Newton stalls there.
  // Compare the stalled point against sigma_u pinned to its floor.
  Candidate floor = c;
  floor.boundary = true;
  floor.theta(iu) = kThetaUFloor;
  finish(floor);
  finish(c);
  if (!c.converged || floor.loglik >= c.loglik - 1e-6) return floor;
  return c;
}

void fill_inference(FitResult& fr, const DesignMatrices& dm, bool boundary) {
  const auto layout = fr.layout();
  const Eigen::Index k = layout.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  fr.cov = Eigen::MatrixXd::Constant(k, k, nan);
  fr.cov_available = false;

  const FloorObjective obj(layout, dm);
  const auto free = free_indices(layout, boundary);
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  const Eigen::MatrixXd info = -fd_hessian(obj, theta, free);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 1e-12 * top) {
    const Eigen::MatrixXd inv =
        eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
        eig.eigenvectors().transpose();
    for (std::size_t a = 0; a < free.size(); ++a)
      for (std::size_t b = 0; b < free.size(); ++b)
        fr.cov(free[a], free[b]) = inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    fr.cov_available = true;
  } else {
    fr.convergence.warnings.emplace_back(
        "observed information is not positive definite; covariance unavailable");
  }
}

void finish_inference(FitResult& fr) {
  const Eigen::VectorXd theta = fr.pv_hat.pack();
  const Eigen::Index k = theta.size();
  fr.se.resize(k);
  fr.z.resize(k);
  fr.p_value.resize(k);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double v = fr.cov(j, j);
    fr.se(j) = std::isfinite(v) && v >= 0.0 ? std::sqrt(v) : nan;
    fr.z(j) = theta(j) / fr.se(j);
    fr.p_value(j) = std::isfinite(fr.z(j)) ? std::erfc(std::abs(fr.z(j)) / std::sqrt(2.0)) : nan;
  }
}

FitResult fit_ols_result(const ModelSpec& spec, const DesignMatrices& dm) {
  const OlsFit ols = fit_ols(dm);
  if (ols.degenerate)
    throw DataError("exact fit: OLS residual variance is zero, likelihood is unbounded");
  FitResult fr;
  fr.spec = spec;
  fr.n = dm.n();
  fr.pv_hat.family = Family::OLS;
  fr.pv_hat.beta = ols.beta_hat;
  fr.pv_hat.theta_v = std::log(ols.sigma2_hat);
  fr.loglik = ols.loglik;
  fr.labels = parameter_labels(Family::OLS, dm);
  const Eigen::Index p = dm.p();
  fr.cov = Eigen::MatrixXd::Zero(p + 1, p + 1);
  fr.cov.topLeftCorner(p, p) = ols.cov_beta;
  fr.cov(p, p) = 2.0 / static_cast<double>(dm.n());
  fr.cov_available = true;
  finish_inference(fr);
  fr.derived = variance_scales(fr.pv_hat, dm);
  fr.convergence.gradient_norm = grad_loglik(dm, fr.pv_hat).norm();
  fr.column_hash = column_hash_hex(dm);
  return fr;
}

}  // namespace

Scales variance_scales(const ParameterVector& pv, const DesignMatrices& dm) {
  Scales s;
  s.sigma_v = pv.sigma_v();
  s.sigma_u = pv.sigma_u(dm);
  s.lambda = s.sigma_u / s.sigma_v;
  s.sigma2 = s.sigma_u * s.sigma_u + s.sigma_v * s.sigma_v;
  return s;
}

double gradient_tolerance(double loglik) { return 1e-5 * (1.0 + std::abs(loglik)); }

std::vector<std::string> parameter_labels(Family family, const DesignMatrices& dm) {
  std::vector<std::string> out = dm.labels_X;
  out.emplace_back("ln_sigma_v2");
  switch (family) {
    case Family::OLS: break;
    case Family::NHN: out.emplace_back("ln_sigma_u2"); break;
    case Family::NHN_HET:
      for (const auto& l : dm.labels_Z) out.push_back("ln_sigma_u2:" + l);
      break;
    case Family::TN:
      for (const auto& l : dm.labels_Z) out.push_back("mu:" + l);
      out.emplace_back("ln_sigma_u2");
      break;
  }
  return out;
}

std::optional<ParameterVector> nested_start(const FitResult& nhn, Family family,
                                            const DesignMatrices& dm) {
  if (nhn.pv_hat.family != Family::NHN || !uses_ineff_vars(family)) return std::nullopt;
  if (nhn.pv_hat.beta.size() != dm.p()) return std::nullopt;
  ParameterVector pv;
  pv.family = family;
  pv.beta = nhn.pv_hat.beta;
  pv.theta_v = nhn.pv_hat.theta_v;
  pv.delta = Eigen::VectorXd::Zero(dm.q());
  if (family == Family::TN) {
    pv.theta_u = nhn.pv_hat.theta_u;
    return pv;
  }
  if (!dm.ineff_intercept) return std::nullopt;
  pv.delta(0) = nhn.pv_hat.theta_u;
  return pv;
}

Eigen::MatrixXd observed_information(const DesignMatrices& dm, const ParameterVector& pv) {
  const auto layout = pv.layout();
  const FloorObjective obj(layout, dm);
  return -fd_hessian(obj, pv.pack(), free_indices(layout, false));
}

FitResult fit(const ModelSpec& spec, const DesignMatrices& dm, const FitOptions& options) {
  if (dm.p() != static_cast<Eigen::Index>(dm.labels_X.size()))
    throw ContractError("design matrices do not carry labels for every column");
  if (spec.family == Family::OLS) return fit_ols_result(spec, dm);

  const ParamLayout layout = layout_for(spec.family, dm);
  if (uses_ineff_vars(spec.family) && dm.q() == 0)
    throw SpecError("family " + std::string(to_string(spec.family)) +
                    " needs an inefficiency matrix; rebuild the design for this spec");
  if (dm.n() <= layout.size())
    throw DataError("need more observations than parameters (n=" + std::to_string(dm.n()) +
                    ", k=" + std::to_string(layout.size()) + ")");

  const OlsFit ols = fit_ols(dm);
  if (ols.degenerate)
    throw DataError("exact fit: OLS residual variance is zero, frontier is not identified");
  const StartValues cols = cols_start(ols, spec.family, dm);

  std::vector<Eigen::VectorXd> starts{cols.params.pack()};
  for (const auto& s : options.extra_starts) {
    if (s.family != spec.family || s.layout().size() != layout.size())
      throw ContractError("extra start does not match the model family or dimensions");
    starts.push_back(s.pack());
  }
  if (uses_ineff_vars(spec.family) && options.extra_starts.empty()) {
    // Nest at the NHN optimum so the richer model can never fit worse.
    ModelSpec nhn_spec = spec;
    nhn_spec.family = Family::NHN;
    nhn_spec.ineff_vars.clear();
    FitOptions nhn_opts;
    nhn_opts.compute_covariance = false;
    try {
      const FitResult nhn = fit(nhn_spec, dm, nhn_opts);
      if (auto s = nested_start(nhn, spec.family, dm)) starts.push_back(s->pack());
    } catch (const ConvergenceError&) {
      // The corrected-OLS start still stands.
    }
  }

  Candidate best;
  bool have_best = false;
  auto consider = [&](Candidate c) {
    const bool better = !have_best || (c.converged && !best.converged) ||
                        (c.converged == best.converged && c.loglik > best.loglik);
    if (better) {
      best = std::move(c);
      have_best = true;
    }
  };
  for (const auto& s : starts) consider(optimize_from(layout, dm, s));

  int restarts = 0;
  if (!best.converged) {
    std::mt19937_64 jitter(0x5eedf00dULL);
    const Eigen::VectorXd anchor = best.theta;
    for (; restarts < options.max_restarts && !best.converged; ++restarts) {
      Eigen::VectorXd s = anchor;
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        const double u = (static_cast<double>(jitter() >> 11) + 0.5) * 0x1.0p-53;
        s(j) += 0.1 * (1.0 + restarts) * (1.0 + std::abs(s(j))) * normal::quantile(u);
      }
      consider(optimize_from(layout, dm, s));
    }
  }

  const ParameterVector best_pv = ParameterVector::unpack(layout, best.theta);
  if (!best.converged)
    throw ConvergenceError("maximum likelihood did not converge for family " +
                               std::string(to_string(spec.family)) + " after " +
                               std::to_string(restarts) + " restarts (gradient norm " +
                               std::to_string(best.gradient_norm) + ")",
                           best_pv, best.loglik);

  FitResult fr;
  fr.spec = spec;
  fr.n = dm.n();
  fr.pv_hat = best_pv;
  fr.loglik = best.loglik;
  fr.labels = parameter_labels(spec.family, dm);
  fr.convergence.iterations = best.iterations;
  fr.convergence.gradient_norm = best.gradient_norm;
  fr.convergence.loglik_change = best.change;
  fr.convergence.restarts = restarts;
  fr.convergence.wrong_skew_warning = cols.wrong_skew;
  fr.convergence.boundary = best.boundary;
  fr.convergence.warnings = cols.warnings;
  if (best.boundary)
    fr.convergence.warnings.emplace_back(
        "no detectable inefficiency: sigma_u collapsed onto its lower bound");
  fr.derived = variance_scales(fr.pv_hat, dm);
  fr.column_hash = column_hash_hex(dm);

  if (options.compute_covariance) {
    fill_inference(fr, dm, best.boundary);
  } else {
    const Eigen::Index k = layout.size();
    fr.cov = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  }
  finish_inference(fr);
  return fr;
}

std::string Certification::failure() const {
  for (const auto& c : checks)
    if (!c.passed) return c.name + ": " + c.detail;
  return {};
}

Certification certify(const FitResult& fr, const DesignMatrices& dm) {
  Certification cert;
  auto check = [&](std::string name, bool passed, std::string detail) {
    cert.checks.push_back(CertificationCheck{std::move(name), passed, std::move(detail)});
    cert.ok = cert.ok && passed;
  };
  const auto layout = fr.layout();
  const FloorObjective obj(layout, dm);
  Eigen::VectorXd g;
  const double ll = obj.loglik(fr.pv_hat.pack(), &g);

  const auto free = free_indices(layout, fr.convergence.boundary);
  const double gnorm = free_norm(g, free);
  const double gtol = gradient_tolerance(ll);
  check("gradient norm", gnorm <= gtol,
        "|grad| = " + std::to_string(gnorm) + ", bound " + std::to_string(gtol));

  const double ll_diff = std::abs(ll - fr.loglik);
  check("loglik reproducible", ll_diff <= 1e-9 * (1.0 + std::abs(ll)),
        "stored " + std::to_string(fr.loglik) + ", recomputed " + std::to_string(ll));

  const Scales s = variance_scales(fr.pv_hat, dm);
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  check("lambda >= 0", fr.derived.lambda >= 0.0, "lambda = " + std::to_string(fr.derived.lambda));
  check("lambda = sigma_u / sigma_v",
        close(fr.derived.lambda, s.lambda) && close(s.lambda, s.sigma_u / s.sigma_v),
        "stored " + std::to_string(fr.derived.lambda) + ", recomputed " + std::to_string(s.lambda));
  check("sigma2 = sigma_u^2 + sigma_v^2",
        close(fr.derived.sigma2, s.sigma2) &&
            close(fr.derived.sigma2, fr.derived.sigma_u * fr.derived.sigma_u +
                                         fr.derived.sigma_v * fr.derived.sigma_v),
        "stored " + std::to_string(fr.derived.sigma2) + ", recomputed " + std::to_string(s.sigma2));
  check("sigma_v, sigma_u consistent",
        close(fr.derived.sigma_v, s.sigma_v) && close(fr.derived.sigma_u, s.sigma_u), "");

  if (fr.cov_available) {
    std::vector<Eigen::Index> avail;
    for (Eigen::Index j = 0; j < fr.cov.rows(); ++j)
      if (std::isfinite(fr.cov(j, j))) avail.push_back(j);
    const auto k = static_cast<Eigen::Index>(avail.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        sub(a, b) = fr.cov(avail[static_cast<std::size_t>(a)], avail[static_cast<std::size_t>(b)]);
    const double scale = std::max(sub.cwiseAbs().maxCoeff(), 1e-300);
    const bool symmetric = (sub - sub.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sub + sub.transpose()));
    const bool psd = eig.eigenvalues().minCoeff() >= -1e-10 * scale;
    check("covariance symmetric PSD", symmetric && psd, "");
    bool se_ok = true;
    for (auto j : avail) se_ok = se_ok && close(fr.se(j), std::sqrt(fr.cov(j, j)));
    check("se = sqrt(diag cov)", se_ok, "");
  }
  return cert;
}

}  // namespace frontier
