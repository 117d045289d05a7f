#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

// Damped Newton with Armijo backtracking for smooth (strongly) convex
// objectives; falls back to gradient descent when the Newton system is
// not usable. Hessians are supplied analytically where available and
// otherwise differenced from the gradient.

namespace dinsys {

struct Functional {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;  // optional
};

struct MinimizeOptions {
  double tol = 1e-10;          // relative gradient norm target
  int max_iters = 200;
  double unbounded_norm = 1e8; // iterate escaping past this => unbounded
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;      // relative to 1 + initial gradient norm
  int iterations = 0;
  bool converged = false;
  bool unbounded = false;
};

MinimizeResult minimize(const Functional& f, const Eigen::VectorXd& x0,
                        const MinimizeOptions& opts = {});

// Hessian by central differences of the gradient.
Eigen::MatrixXd fd_hessian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double eps = 1e-6);

}  // namespace dinsys
