#include "dinsys/spaces.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dinsys/kernels.hpp"

namespace dinsys {

GridSpec GridSpec::line(int n_nodes, double length) {
  GridSpec g;
  g.dimension = 1;
  g.nodes = {n_nodes, 0};
  g.extent = {length, 0.0};
  g.validate();
  return g;
}

GridSpec GridSpec::square(int n_nodes, double length) {
  GridSpec g;
  g.dimension = 2;
  g.nodes = {n_nodes, n_nodes};
  g.extent = {length, length};
  g.validate();
  return g;
}

int GridSpec::interior_count() const {
  int c = 1;
  for (int d = 0; d < dimension; ++d) c *= interior_per_axis(d);
  return c;
}

void GridSpec::validate() const {
  if (dimension != 1 && dimension != 2)
    throw ContractViolation("GridSpec: dimension must be 1 or 2");
  for (int d = 0; d < dimension; ++d) {
    if (nodes[d] < 3)
      throw ContractViolation("GridSpec: need at least 3 nodes per axis");
    if (!(spacing(d) > 0.0))
      throw ContractViolation("GridSpec: spacing must be positive");
  }
}

double pair(const DualVec& xi, const StateVec& x) {
  if (xi.size() != x.size())
    throw ContractViolation("pair: dimension mismatch");
  return kernels::dot(xi.values.data(), x.values.data(), xi.size());
}

Eigen::VectorXd lumped_mass_weights(const GridSpec& grid) {
  grid.validate();
  const int m = grid.interior_count();
  double cell = 1.0;
  for (int d = 0; d < grid.dimension; ++d) cell *= grid.spacing(d);
  return Eigen::VectorXd::Constant(m, cell);
}

Eigen::MatrixXd stiffness_matrix(const GridSpec& grid) {
  grid.validate();
  if (grid.dimension == 1) {
    const int m = grid.interior_per_axis(0);
    const double h = grid.spacing(0);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      k(i, i) = 2.0 / h;
      if (i > 0) k(i, i - 1) = -1.0 / h;
      if (i + 1 < m) k(i, i + 1) = -1.0 / h;
    }
    return k;
  }
  const int mx = grid.interior_per_axis(0);
  const int my = grid.interior_per_axis(1);
  const double hx = grid.spacing(0);
  const double hy = grid.spacing(1);
  const int m = mx * my;
  auto idx = [mx](int i, int j) { return j * mx + i; };
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
  const double cx = hy / hx;
  const double cy = hx / hy;
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const int a = idx(i, j);
      k(a, a) = 2.0 * cx + 2.0 * cy;
      if (i > 0) k(a, idx(i - 1, j)) = -cx;
      if (i + 1 < mx) k(a, idx(i + 1, j)) = -cx;
      if (j > 0) k(a, idx(i, j - 1)) = -cy;
      if (j + 1 < my) k(a, idx(i, j + 1)) = -cy;
    }
  }
  return k;
}

NormFamily NormFamily::for_grid(const GridSpec& grid, double w_exponent,
                                EmbeddingOrder order) {
  Eigen::VectorXd w = lumped_mass_weights(grid);
  Eigen::MatrixXd gh = w.asDiagonal();
  return NormFamily(std::move(gh), stiffness_matrix(grid), w_exponent,
                    std::move(w), order);
}

NormFamily NormFamily::euclidean(int n) {
  return NormFamily(Eigen::MatrixXd::Identity(n, n),
                    Eigen::MatrixXd::Identity(n, n), 2.0,
                    Eigen::VectorXd::Ones(n));
}

NormFamily::NormFamily(Eigen::MatrixXd gram_H, Eigen::MatrixXd gram_V,
                       double w_exponent, Eigen::VectorXd w_weights,
                       EmbeddingOrder order)
    : gram_H_(std::move(gram_H)),
      gram_V_(std::move(gram_V)),
      w_exponent_(w_exponent),
      w_weights_(std::move(w_weights)),
      order_(order) {
  const int n = static_cast<int>(gram_H_.rows());
  if (gram_V_.rows() != n || gram_V_.cols() != n || gram_H_.cols() != n)
    throw ContractViolation("NormFamily: Gram matrices must be square, same size");
  if (w_weights_.size() != n)
    throw ContractViolation("NormFamily: weight vector size mismatch");
  if (!(w_exponent_ > 1.0))
    throw ContractViolation("NormFamily: W exponent must exceed 1");
  const double tol_h = 1e-12 * (1.0 + gram_H_.cwiseAbs().maxCoeff());
  const double tol_v = 1e-12 * (1.0 + gram_V_.cwiseAbs().maxCoeff());
  if (((gram_H_ - gram_H_.transpose()).cwiseAbs().maxCoeff() > tol_h) ||
      ((gram_V_ - gram_V_.transpose()).cwiseAbs().maxCoeff() > tol_v))
    throw ContractViolation("NormFamily: Gram matrices must be symmetric");
  llt_H_.compute(gram_H_);
  llt_V_.compute(gram_V_);
  if (llt_H_.info() != Eigen::Success || llt_V_.info() != Eigen::Success)
    throw ContractViolation("NormFamily: Gram matrices must be positive definite");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(gram_H_,
                                                                gram_V_);
  c_vh_ = std::sqrt(ges.eigenvalues().maxCoeff());
}

void NormFamily::check_dim(int n, const char* what) const {
  if (n != dim()) throw ContractViolation(std::string(what) + ": dimension mismatch");
}

double NormFamily::inner_H(const StateVec& a, const StateVec& b) const {
  check_dim(a.size(), "inner_H");
  check_dim(b.size(), "inner_H");
  return a.values.dot(gram_H_ * b.values);
}

double NormFamily::inner_V(const StateVec& a, const StateVec& b) const {
  check_dim(a.size(), "inner_V");
  check_dim(b.size(), "inner_V");
  return a.values.dot(gram_V_ * b.values);
}

double NormFamily::norm(Space which, const StateVec& x) const {
  check_dim(x.size(), "norm");
  switch (which) {
    case Space::H:
      return std::sqrt(std::max(0.0, x.values.dot(gram_H_ * x.values)));
    case Space::V:
      return std::sqrt(std::max(0.0, x.values.dot(gram_V_ * x.values)));
    case Space::W: {
      const double s = kernels::weighted_abs_pow_sum(
          w_weights_.data(), x.values.data(), w_exponent_, x.values.size());
      return std::pow(s, 1.0 / w_exponent_);
    }
    case Space::U:
      if (u_norm_) return u_norm_(x.values);
      return norm(Space::V, x);
  }
  return 0.0;
}

double NormFamily::dual_norm(DualSpace which, const DualVec& xi) const {
  check_dim(xi.size(), "dual_norm");
  switch (which) {
    case DualSpace::Vstar: {
      Eigen::VectorXd y = llt_V_.solve(xi.values);
      return std::sqrt(std::max(0.0, xi.values.dot(y)));
    }
    case DualSpace::H: {
      Eigen::VectorXd y = llt_H_.solve(xi.values);
      return std::sqrt(std::max(0.0, xi.values.dot(y)));
    }
    case DualSpace::Wstar: {
      const double r = w_exponent_;
      const double rc = r / (r - 1.0);
      Eigen::VectorXd z = xi.values.cwiseQuotient(w_weights_);
      const double s = kernels::weighted_abs_pow_sum(w_weights_.data(),
                                                     z.data(), rc, z.size());
      return std::pow(s, 1.0 / rc);
    }
  }
  return 0.0;
}

DualVec NormFamily::h_riesz(const StateVec& f) const {
  check_dim(f.size(), "h_riesz");
  return DualVec{gram_H_ * f.values};
}

StateVec NormFamily::v_riesz_inverse(const DualVec& xi) const {
  check_dim(xi.size(), "v_riesz_inverse");
  return StateVec{llt_V_.solve(xi.values)};
}

double NormFamily::sum_dual_norm(const DualVec& xi, double tol) const {
  check_dim(xi.size(), "sum_dual_norm");
  if (!(tol > 0.0)) throw ContractViolation("sum_dual_norm: tol must be positive");
  const int n = dim();
  if (xi.values.norm() == 0.0) return 0.0;

  auto vstar = [&](const Eigen::VectorXd& a) {
    Eigen::VectorXd y = llt_V_.solve(a);
    return std::sqrt(std::max(0.0, a.dot(y)));
  };
  auto wstar = [&](const Eigen::VectorXd& a) {
    return dual_norm(DualSpace::Wstar, DualVec{a});
  };
  const double rc = w_exponent_ / (w_exponent_ - 1.0);
  auto grad_vstar = [&](const Eigen::VectorXd& a, double na) {
    if (na < 1e-14) return Eigen::VectorXd::Zero(n).eval();
    return (llt_V_.solve(a) / na).eval();
  };
  auto grad_wstar = [&](const Eigen::VectorXd& a, double na) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    if (na < 1e-14) return g;
    for (int i = 0; i < n; ++i) {
      const double z = a[i] / w_weights_[i];
      g[i] = std::pow(na, 1.0 - rc) * std::pow(std::abs(z), rc - 1.0) *
             (z >= 0.0 ? 1.0 : -1.0);
    }
    return g;
  };

  // Smoothed max with continuation: minimizing directly at the target
  // softness crawls along the max kink, so anneal mu down and warm-start
  // each stage. Softness mu keeps the smoothing error below tol/2.
  auto fval = [&](const Eigen::VectorXd& x1, double mu) {
    const double a = vstar(x1);
    const double b = wstar(xi.values - x1);
    const double m = std::max(a, b);
    return m + mu * std::log(std::exp((a - m) / mu) + std::exp((b - m) / mu));
  };
  auto fgrad = [&](const Eigen::VectorXd& x1, double mu) {
    const double a = vstar(x1);
    const double b = wstar(xi.values - x1);
    const double m = std::max(a, b);
    const double ea = std::exp((a - m) / mu);
    const double eb = std::exp((b - m) / mu);
    const double wa = ea / (ea + eb);
    const double wb = eb / (ea + eb);
    return (wa * grad_vstar(x1, a) - wb * grad_wstar(xi.values - x1, b)).eval();
  };

  const double mu_target = 0.5 * tol / std::log(2.0);

  // Coarse 1D search over proportional splits seeds the first stage.
  Eigen::VectorXd x = 0.5 * xi.values;
  {
    double fbest = fval(x, mu_target);
    for (int k = 0; k <= 20; ++k) {
      Eigen::VectorXd cand = (k / 20.0) * xi.values;
      const double fc = fval(cand, mu_target);
      if (fc < fbest) {
        fbest = fc;
        x = cand;
      }
    }
  }

  double mu = std::max(mu_target, 1e-3 * std::max(1.0, fval(x, mu_target)));
  for (;;) {
    double f = fval(x, mu);
    double step = std::max(1.0, xi.values.norm());
    int stalled = 0;
    for (int it = 0; it < 2000; ++it) {
      Eigen::VectorXd g = fgrad(x, mu);
      const double gn = g.norm();
      if (gn * std::max(1.0, x.norm()) < 0.1 * mu) break;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd xt = x - step * g;
        const double ft = fval(xt, mu);
        if (ft < f - 1e-4 * step * gn * gn) {
          // Near the kink the gradient never gets small; stop on value
          // stagnation relative to the current smoothing level.
          stalled = (f - ft < 0.01 * mu) ? stalled + 1 : 0;
          x = xt;
          f = ft;
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved || stalled >= 3) break;
    }
    if (mu <= mu_target) break;
    mu = std::max(mu_target, 0.05 * mu);
  }
  const double f = fval(x, mu_target);
  if (!std::isfinite(f))
    throw NumericalError("sum_dual_norm: split minimization did not converge");
  return std::min(f, std::min(vstar(xi.values), wstar(xi.values)));
}

double NormFamily::dual_norm_Ustar(const DualVec& xi, int probes,
                                   unsigned seed) const {
  check_dim(xi.size(), "dual_norm_Ustar");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = 0.0;
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd w(dim());
    for (int i = 0; i < dim(); ++i) w[i] = gauss(rng);
    const double nu = norm(Space::U, StateVec{w});
    if (nu < 1e-14) continue;
    best = std::max(best, std::abs(xi.values.dot(w)) / nu);
  }
  return best;
}

}  // namespace dinsys
