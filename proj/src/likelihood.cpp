#include "frontier/likelihood.hpp"

#include <cmath>

#include "frontier/error.hpp"
#include "frontier/normal.hpp"

namespace frontier {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

// One observation of the half-normal composed error with variances su, sv.
struct HalfNormalTerm {
  double value;
  double d_eps;      // d l / d eps
  double d_theta_u;  // d l / d ln su
  double d_theta_v;  // d l / d ln sv
};

HalfNormalTerm half_normal_term(double eps, double su, double sv, bool want_grad) {
  const double s = su + sv;
  const double k = std::sqrt(su / (sv * s));  // lambda / sigma
  const double a = eps * k;
  const double log_cdf_a = normal::log_cdf(a);
  HalfNormalTerm t{};
  t.value = kLn2 - 0.5 * std::log(s) - 0.5 * eps * eps / s - normal::kLogSqrt2Pi + log_cdf_a;
  if (!want_grad) return t;
  const double m = std::exp(normal::log_pdf(a) - log_cdf_a);
  const double common = -0.5 / s + 0.5 * eps * eps / (s * s);
  t.d_eps = -eps / s + m * k;
  t.d_theta_u = su * common + m * a * (0.5 - 0.5 * su / s);
  t.d_theta_v = sv * common + m * a * (-0.5 - 0.5 * sv / s);
  return t;
}

struct TruncatedTerm {
  double value;
  double d_eps;
  double d_mu;
  double d_theta_u;
  double d_theta_v;
};

TruncatedTerm truncated_term(double eps, double mu, double su, double sv, bool want_grad) {
  const double s = su + sv;
  const double d = std::sqrt(su * sv * s);  // sigma_u sigma_v sigma
  const double b = (sv * mu + su * eps) / d;  // mu* / sigma*
  const double sig_u = std::sqrt(su);
  const double c = mu / sig_u;
  const double r = eps - mu;
  const double log_cdf_b = normal::log_cdf(b);
  const double log_cdf_c = normal::log_cdf(c);
  TruncatedTerm t{};
  t.value = -0.5 * std::log(s) - normal::kLogSqrt2Pi - 0.5 * r * r / s + log_cdf_b - log_cdf_c;
  if (!want_grad) return t;
  const double mb = std::exp(normal::log_pdf(b) - log_cdf_b);
  const double mc = std::exp(normal::log_pdf(c) - log_cdf_c);
  const double common = -0.5 / s + 0.5 * r * r / (s * s);
  t.d_eps = -r / s + mb * su / d;
  t.d_mu = r / s + mb * sv / d - mc / sig_u;
  t.d_theta_u = su * common + mb * (su * eps / d - b * (0.5 + 0.5 * su / s)) + 0.5 * mc * c;
  t.d_theta_v = sv * common + mb * (sv * mu / d - b * (0.5 + 0.5 * sv / s));
  return t;
}

void check_dims(const ParamLayout& layout, const DesignMatrices& dm, const Eigen::VectorXd& theta) {
  if (dm.X.rows() != dm.y.size() || dm.Z.rows() != dm.y.size())
    throw ContractError("design matrices have inconsistent row counts");
  if (layout.p != dm.p() || (uses_ineff_vars(layout.family) && layout.q != dm.q()))
    throw ContractError("parameter layout does not match design matrices");
  if (theta.size() != layout.size())
    throw ContractError("parameter vector has wrong length");
  if (uses_ineff_vars(layout.family) && dm.q() == 0)
    throw ContractError("family requires a nonempty inefficiency matrix");
}

// Shared evaluation: fills per-observation terms when `terms` is given,
// accumulates the gradient when `grad` is given. Summation is sequential in
// row order so results are reproducible bit for bit.
double evaluate(const ParamLayout& layout, const DesignMatrices& dm, const Eigen::VectorXd& theta,
                Eigen::VectorXd* grad, Eigen::VectorXd* terms) {
  check_dims(layout, dm, theta);
  const Eigen::Index n = dm.n();
  const Eigen::Index p = layout.p;
  const auto beta = theta.head(p);
  const double theta_v = theta(layout.theta_v());
  const double sv = std::exp(theta_v);
  const Eigen::VectorXd eps = dm.y - dm.X * beta;
  const bool want_grad = grad != nullptr;
  if (terms) terms->resize(n);

  Eigen::VectorXd d_eps;
  Eigen::VectorXd d_ineff;  // per-observation derivative w.r.t. the linear index Z_i delta
  double d_theta_u = 0.0;
  double d_theta_v = 0.0;
  if (want_grad) {
    d_eps.resize(n);
    if (uses_ineff_vars(layout.family)) d_ineff.resize(n);
  }

  double total = 0.0;
  switch (layout.family) {
    case Family::OLS: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double e = eps(i);
        const double l = -normal::kLogSqrt2Pi - 0.5 * theta_v - 0.5 * e * e / sv;
        total += l;
        if (terms) (*terms)(i) = l;
        if (want_grad) {
          d_eps(i) = -e / sv;
          d_theta_v += -0.5 + 0.5 * e * e / sv;
        }
      }
      break;
    }
    case Family::NHN: {
      const double su = std::exp(theta(layout.theta_u()));
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = half_normal_term(eps(i), su, sv, want_grad);
        total += t.value;
        if (terms) (*terms)(i) = t.value;
        if (want_grad) {
          d_eps(i) = t.d_eps;
          d_theta_u += t.d_theta_u;
          d_theta_v += t.d_theta_v;
        }
      }
      break;
    }
    case Family::NHN_HET: {
      const Eigen::VectorXd index = dm.Z * theta.segment(layout.delta_begin(), layout.q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = half_normal_term(eps(i), std::exp(index(i)), sv, want_grad);
        total += t.value;
        if (terms) (*terms)(i) = t.value;
        if (want_grad) {
          d_eps(i) = t.d_eps;
          d_ineff(i) = t.d_theta_u;
          d_theta_v += t.d_theta_v;
        }
      }
      break;
    }
    case Family::TN: {
      const double su = std::exp(theta(layout.theta_u()));
      const Eigen::VectorXd mu = dm.Z * theta.segment(layout.delta_begin(), layout.q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = truncated_term(eps(i), mu(i), su, sv, want_grad);
        total += t.value;
        if (terms) (*terms)(i) = t.value;
        if (want_grad) {
          d_eps(i) = t.d_eps;
          d_ineff(i) = t.d_mu;
          d_theta_u += t.d_theta_u;
          d_theta_v += t.d_theta_v;
        }
      }
      break;
    }
  }

  if (want_grad) {
    grad->resize(layout.size());
    grad->head(p) = -(dm.X.transpose() * d_eps);
    (*grad)(layout.theta_v()) = d_theta_v;
    if (uses_ineff_vars(layout.family))
      grad->segment(layout.delta_begin(), layout.q) = dm.Z.transpose() * d_ineff;
    if (layout.theta_u() >= 0) (*grad)(layout.theta_u()) = d_theta_u;
  }
  return total;
}

double loglik_checked(Family expected, const DesignMatrices& dm, const ParameterVector& pv) {
  if (pv.family != expected)
    throw ContractError("parameter vector family " + std::string(to_string(pv.family)) +
                        " passed to " + std::string(to_string(expected)) + " likelihood");
  return evaluate(pv.layout(), dm, pv.pack(), nullptr, nullptr);
}

}  // namespace

Eigen::Index ParamLayout::size() const {
  switch (family) {
    case Family::OLS: return p + 1;
    case Family::NHN: return p + 2;
    case Family::NHN_HET: return p + 1 + q;
    case Family::TN: return p + 2 + q;
  }
  return 0;
}

Eigen::Index ParamLayout::theta_u() const {
  switch (family) {
    case Family::NHN: return p + 1;
    case Family::TN: return p + 1 + q;
    default: return -1;
  }
}

ParamLayout layout_for(Family family, const DesignMatrices& dm) {
  return ParamLayout{family, dm.p(), uses_ineff_vars(family) ? dm.q() : 0};
}

ParamLayout ParameterVector::layout() const {
  return ParamLayout{family, beta.size(), uses_ineff_vars(family) ? delta.size() : 0};
}

Eigen::VectorXd ParameterVector::pack() const {
  const auto l = layout();
  Eigen::VectorXd out(l.size());
  out.head(l.p) = beta;
  out(l.theta_v()) = theta_v;
  if (uses_ineff_vars(family)) out.segment(l.delta_begin(), l.q) = delta;
  if (l.theta_u() >= 0) out(l.theta_u()) = theta_u;
  return out;
}

ParameterVector ParameterVector::unpack(const ParamLayout& l, const Eigen::VectorXd& packed) {
  if (packed.size() != l.size()) throw ContractError("packed vector has wrong length");
  ParameterVector pv;
  pv.family = l.family;
  pv.beta = packed.head(l.p);
  pv.theta_v = packed(l.theta_v());
  if (uses_ineff_vars(l.family)) pv.delta = packed.segment(l.delta_begin(), l.q);
  if (l.theta_u() >= 0) pv.theta_u = packed(l.theta_u());
  return pv;
}

double ParameterVector::sigma_v() const { return std::exp(0.5 * theta_v); }

Eigen::VectorXd ParameterVector::sigma_u2(const DesignMatrices& dm) const {
  switch (family) {
    case Family::OLS: return Eigen::VectorXd::Zero(dm.n());
    case Family::NHN_HET: return (dm.Z * delta).array().exp().matrix();
    default: return Eigen::VectorXd::Constant(dm.n(), std::exp(theta_u));
  }
}

double ParameterVector::sigma_u(const DesignMatrices& dm) const {
  switch (family) {
    case Family::OLS: return 0.0;
    case Family::NHN_HET: {
      const Eigen::VectorXd s = (0.5 * (dm.Z * delta)).array().exp().matrix();
      double sum = 0.0;
      for (Eigen::Index i = 0; i < s.size(); ++i) sum += s(i);
      return sum / static_cast<double>(s.size());
    }
    default: return std::exp(0.5 * theta_u);
  }
}

Eigen::VectorXd ParameterVector::mu(const DesignMatrices& dm) const {
  if (family == Family::TN) return dm.Z * delta;
  return Eigen::VectorXd::Zero(dm.n());
}

Eigen::VectorXd composite_error(const DesignMatrices& dm, const Eigen::VectorXd& beta) {
  if (beta.size() != dm.p()) throw ContractError("beta length does not match X");
  return dm.y - dm.X * beta;
}

double loglik_nhn(const DesignMatrices& dm, const ParameterVector& pv) {
  return loglik_checked(Family::NHN, dm, pv);
}
double loglik_nhn_het(const DesignMatrices& dm, const ParameterVector& pv) {
  return loglik_checked(Family::NHN_HET, dm, pv);
}
double loglik_tn(const DesignMatrices& dm, const ParameterVector& pv) {
  return loglik_checked(Family::TN, dm, pv);
}
double loglik_gaussian(const DesignMatrices& dm, const ParameterVector& pv) {
  return loglik_checked(Family::OLS, dm, pv);
}

double loglik(const DesignMatrices& dm, const ParameterVector& pv) {
  return evaluate(pv.layout(), dm, pv.pack(), nullptr, nullptr);
}

Eigen::VectorXd loglik_terms(const DesignMatrices& dm, const ParameterVector& pv) {
  Eigen::VectorXd terms;
  evaluate(pv.layout(), dm, pv.pack(), nullptr, &terms);
  return terms;
}

Eigen::VectorXd grad_loglik(const DesignMatrices& dm, const ParameterVector& pv) {
  Eigen::VectorXd g;
  evaluate(pv.layout(), dm, pv.pack(), &g, nullptr);
  return g;
}

double loglik_packed(const ParamLayout& layout, const DesignMatrices& dm,
                     const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  return evaluate(layout, dm, theta, grad, nullptr);
}

}  // namespace frontier
