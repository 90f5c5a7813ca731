#pragma once

#include <functional>

#include <Eigen/Dense>

namespace frontier::optim {

/// Objective to minimize. Fills `grad` when non-null. Non-finite values are
/// treated as +infinity by the minimizers.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double initial_step = 0.1;  // relative to max(1, |x_j|)
  double f_tolerance = 1e-10;
};

/// Derivative-free simplex search (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {});

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-9;  // infinity norm
  double f_tolerance = 1e-15;        // relative change that counts as stalled
};

/// Quasi-Newton descent on the inverse-Hessian BFGS update with Armijo backtracking.
Result bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opt = {});

}  // namespace frontier::optim
