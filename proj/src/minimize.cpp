#include "dinsys/minimize.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace dinsys {

Eigen::MatrixXd fd_hessian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, double eps) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < n; ++i) {
    const double step = eps * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + step;
    xm[i] = x[i] - step;
    h.col(i) = (grad(xp) - grad(xm)) / (2.0 * step);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return 0.5 * (h + h.transpose());
}

MinimizeResult minimize(const Functional& f, const Eigen::VectorXd& x0,
                        const MinimizeOptions& opts) {
  MinimizeResult res;
  res.x = x0;
  res.value = f.value(res.x);
  Eigen::VectorXd g = f.grad(res.x);
  const double scale = 1.0 + g.norm();
  const int n = static_cast<int>(x0.size());

  for (int it = 0; it < opts.max_iters; ++it) {
    const double gn = g.norm();
    res.grad_norm = gn / scale;
    res.iterations = it;
    if (res.grad_norm <= opts.tol) {
      res.converged = true;
      return res;
    }
    if (res.x.norm() > opts.unbounded_norm) {
      res.unbounded = true;
      return res;
    }

    Eigen::VectorXd dir;
    Eigen::MatrixXd h = f.hess ? f.hess(res.x) : fd_hessian(f.grad, res.x);
    // Levenberg-style damping until the factorization goes through.
    double damp = 0.0;
    const double hmax = h.cwiseAbs().maxCoeff();
    for (int k = 0; k < 30; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(
          h + damp * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        dir = -llt.solve(g);
        break;
      }
      damp = (damp == 0.0) ? 1e-10 * (1.0 + hmax) : 10.0 * damp;
    }
    if (dir.size() == 0 || !dir.allFinite() || g.dot(dir) >= 0.0)
      dir = -g;  // gradient fallback

    const double slope = g.dot(dir);

    // Once the predicted decrease is below the evaluation noise of the
    // objective, value comparisons are meaningless; polish on the gradient
    // norm instead, which Newton still contracts.
    if (-slope <= 1e-12 * (1.0 + std::abs(res.value))) {
      Eigen::VectorXd xt = res.x + dir;
      Eigen::VectorXd gt = f.grad(xt);
      if (gt.allFinite() && gt.norm() < gn) {
        res.x = xt;
        res.value = f.value(res.x);
        g = std::move(gt);
        continue;
      }
      res.grad_norm = gn / scale;
      res.converged = res.grad_norm <= opts.tol;
      return res;
    }

    // Armijo backtracking
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd xt = res.x + t * dir;
      const double vt = f.value(xt);
      // The floor term keeps progress possible once the predicted decrease
      // drops below the ulp of the objective value.
      const double floor = 1e-14 * (1.0 + std::abs(res.value));
      if (std::isfinite(vt) && vt <= res.value + 1e-4 * t * slope + floor) {
        res.x = xt;
        res.value = vt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent left at machine resolution.
      res.grad_norm = g.norm() / scale;
      return res;
    }
    g = f.grad(res.x);
  }
  res.grad_norm = g.norm() / scale;
  res.iterations = opts.max_iters;
  res.converged = res.grad_norm <= opts.tol;
  return res;
}

}  // namespace dinsys
