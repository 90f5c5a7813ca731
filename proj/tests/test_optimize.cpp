#include <doctest.h>

#include <cmath>

#include "frontier/optimize.hpp"

using namespace frontier;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
  if (g) {
    g->resize(2);
    (*g)(0) = -2.0 * a - 400.0 * x(0) * b;
    (*g)(1) = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
}

// Badly scaled convex quadratic with minimum at (1, -2, 3).
double quadratic(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const Eigen::Vector3d c(1.0, -2.0, 3.0);
  const Eigen::Vector3d w(1.0, 100.0, 1e4);
  const Eigen::VectorXd d = x - c;
  if (g) *g = (2.0 * w.array() * d.array()).matrix();
  return (w.array() * d.array().square()).sum();
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("BFGS solves Rosenbrock") {
  const auto r = optim::bfgs(rosenbrock, Eigen::Vector2d(-1.2, 1.0));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.value < 1e-12);
}

TEST_CASE("BFGS on an ill-conditioned quadratic") {
  const auto r = optim::bfgs(quadratic, Eigen::Vector3d::Zero());
  CHECK(r.converged);
  CHECK((r.x - Eigen::Vector3d(1.0, -2.0, 3.0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Nelder-Mead gets close without gradients") {
  optim::NelderMeadOptions opt;
  opt.max_evaluations = 5000;
  opt.f_tolerance = 1e-14;
  const auto r = optim::nelder_mead(rosenbrock, Eigen::Vector2d(-1.2, 1.0), opt);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.evaluations <= opt.max_evaluations + 3);
}

TEST_CASE("non-finite objective values are treated as walls") {
  // log barrier at x <= 0; minimum at x = 1.
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) {
      g->resize(1);
      (*g)(0) = 1.0 - 1.0 / x(0);
    }
    return x(0) - std::log(x(0));
  };
  const auto r = optim::bfgs(f, Eigen::VectorXd::Constant(1, 5.0));
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-8));
  const auto s = optim::nelder_mead(f, Eigen::VectorXd::Constant(1, 0.05));
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("a start at the optimum returns immediately") {
  const auto r = optim::bfgs(quadratic, Eigen::Vector3d(1.0, -2.0, 3.0));
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
}

}  // TEST_SUITE
