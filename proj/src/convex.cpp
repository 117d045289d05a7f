#include "dinsys/convex.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace dinsys {

namespace {

void check_spd(const Eigen::MatrixXd& A, const char* what) {
  const double tol = 1e-12 * (1.0 + A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol)
    throw ContractViolation(std::string(what) + ": matrix must be symmetric");
}

}  // namespace

DissipationSpec DissipationSpec::quadratic(Eigen::MatrixXd A) {
  check_spd(A, "DissipationSpec");
  DissipationSpec s;
  s.mode_ = Mode::a;
  s.A_ = std::move(A);
  s.llt_A_.compute(s.A_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.A_,
                                                    Eigen::EigenvaluesOnly);
  s.mu_ = es.eigenvalues().minCoeff();
  if (!(s.mu_ > 0.0) || s.llt_A_.info() != Eigen::Success)
    throw ContractViolation("DissipationSpec: A must be positive definite");
  s.w_weights_ = Eigen::VectorXd::Ones(s.dim());
  return s;
}

DissipationSpec DissipationSpec::with_power_part(Eigen::MatrixXd A, double r,
                                                 Eigen::VectorXd w_weights) {
  DissipationSpec s = quadratic(std::move(A));
  if (!(r > 1.0))
    throw ContractViolation("DissipationSpec: power exponent must exceed 1");
  if (w_weights.size() != s.dim())
    throw ContractViolation("DissipationSpec: weight size mismatch");
  s.mode_ = Mode::b;
  s.r_ = r;
  s.w_weights_ = std::move(w_weights);
  return s;
}

void DissipationSpec::record_growth(const Eigen::MatrixXd& gram_V) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A_, gram_V);
  c_growth_ = 0.5 * ges.eigenvalues().minCoeff();
  C_growth_ = 0.5 * ges.eigenvalues().maxCoeff();
}

double psi_eval(const DissipationSpec& spec, const StateVec& v) {
  if (v.size() != spec.dim())
    throw ContractViolation("psi_eval: dimension mismatch");
  double val = 0.5 * v.values.dot(spec.A() * v.values);
  if (spec.mode() == DissipationSpec::Mode::b) {
    const double r = spec.r();
    for (int i = 0; i < v.size(); ++i)
      val += spec.w_weights()[i] / r * std::pow(std::abs(v.values[i]), r);
  }
  return val;
}

DualVec psi_grad(const DissipationSpec& spec, const StateVec& v) {
  if (v.size() != spec.dim())
    throw ContractViolation("psi_grad: dimension mismatch");
  Eigen::VectorXd g = spec.A() * v.values;
  if (spec.mode() == DissipationSpec::Mode::b) {
    const double r = spec.r();
    for (int i = 0; i < v.size(); ++i) {
      const double x = v.values[i];
      g[i] += spec.w_weights()[i] * std::pow(std::abs(x), r - 2.0) * x;
    }
  }
  return DualVec{g};
}

Eigen::MatrixXd psi_hess(const DissipationSpec& spec, const StateVec& v) {
  Eigen::MatrixXd h = spec.A();
  if (spec.mode() == DissipationSpec::Mode::b) {
    const double r = spec.r();
    for (int i = 0; i < v.size(); ++i) {
      const double a = std::max(std::abs(v.values[i]), r < 2.0 ? 1e-12 : 0.0);
      h(i, i) += spec.w_weights()[i] * (r - 1.0) * std::pow(a, r - 2.0);
    }
  }
  return h;
}

ConjugateResult psi1_conjugate(const DissipationSpec& spec,
                               const DualVec& xi) {
  if (xi.size() != spec.dim())
    throw ContractViolation("psi1_conjugate: dimension mismatch");
  Eigen::VectorXd u = spec.llt_A().solve(xi.values);
  if (!u.allFinite())
    throw NumericalError("psi1_conjugate: SPD solve failed");
  ConjugateResult res;
  res.value = 0.5 * xi.values.dot(u);
  res.witness = u;
  return res;
}

ConjugateResult conjugate_numeric(const Functional& F, const DualVec& xi,
                                  double tol) {
  if (!(tol > 0.0))
    throw ContractViolation("conjugate_numeric: tol must be positive");
  Functional g;
  g.value = [&](const Eigen::VectorXd& u) {
    return F.value(u) - xi.values.dot(u);
  };
  g.grad = [&](const Eigen::VectorXd& u) {
    return (F.grad(u) - xi.values).eval();
  };
  if (F.hess) g.hess = F.hess;
  MinimizeOptions opts;
  opts.tol = tol;
  opts.max_iters = 500;
  MinimizeResult m = minimize(g, Eigen::VectorXd::Zero(xi.size()), opts);
  ConjugateResult res;
  res.iterations = m.iterations;
  if (m.unbounded) {
    res.unbounded = true;
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }
  if (!m.converged)
    throw NumericalError("conjugate_numeric: ascent did not converge");
  res.value = -m.value;
  res.witness = m.x;
  res.gap_estimate = m.grad_norm;
  return res;
}

ConjugateResult psi_conjugate(const DissipationSpec& spec, const DualVec& xi,
                              double tol) {
  if (spec.mode() == DissipationSpec::Mode::a)
    return psi1_conjugate(spec, xi);
  Functional F;
  F.value = [&](const Eigen::VectorXd& u) {
    return psi_eval(spec, StateVec{u});
  };
  F.grad = [&](const Eigen::VectorXd& u) {
    return psi_grad(spec, StateVec{u}).values;
  };
  F.hess = [&](const Eigen::VectorXd& u) {
    return psi_hess(spec, StateVec{u});
  };
  return conjugate_numeric(F, xi, tol);
}

ConjugateResult infimal_convolution_conjugate(const Functional& F1_star,
                                              const Functional& F2_star,
                                              const DualVec& xi, double tol) {
  if (!(tol > 0.0))
    throw ContractViolation(
        "infimal_convolution_conjugate: tol must be positive");
  Functional g;
  g.value = [&](const Eigen::VectorXd& eta) {
    return F1_star.value(xi.values - eta) + F2_star.value(eta);
  };
  g.grad = [&](const Eigen::VectorXd& eta) {
    return (-F1_star.grad(xi.values - eta) + F2_star.grad(eta)).eval();
  };
  if (F1_star.hess && F2_star.hess) {
    g.hess = [&](const Eigen::VectorXd& eta) {
      return (F1_star.hess(xi.values - eta) + F2_star.hess(eta)).eval();
    };
  }
  MinimizeOptions opts;
  opts.tol = tol;
  opts.max_iters = 500;
  MinimizeResult m = minimize(g, Eigen::VectorXd::Zero(xi.size()), opts);
  if (!m.converged && !m.unbounded)
    throw NumericalError(
        "infimal_convolution_conjugate: split minimization failed");
  ConjugateResult res;
  res.value = m.value;
  res.witness = m.x;
  res.iterations = m.iterations;
  res.gap_estimate = m.grad_norm;
  res.unbounded = m.unbounded;
  return res;
}

FenchelYoungGap fenchel_young_gap(
    const std::function<double(const Eigen::VectorXd&)>& F,
    const std::function<double(const Eigen::VectorXd&)>& F_star,
    const StateVec& v, const DualVec& xi) {
  if (v.size() != xi.size())
    throw ContractViolation("fenchel_young_gap: dimension mismatch");
  FenchelYoungGap g;
  g.raw = F(v.values) + F_star(xi.values) - xi.values.dot(v.values);
  g.clipped = std::max(g.raw, 0.0);
  return g;
}

SubgradientCheck lambda_subgradient_check(
    const std::function<double(const Eigen::VectorXd&)>& E,
    const StateVec& u, const DualVec& xi, double lambda, int samples,
    const std::function<double(const Eigen::VectorXd&)>& norm_sq,
    unsigned seed, double tol) {
  if (samples < 1)
    throw ContractViolation("lambda_subgradient_check: samples >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = u.size();
  const double eu = E(u.values);
  SubgradientCheck out;
  out.worst_slack = std::numeric_limits<double>::infinity();
  const double scales[] = {1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0};
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = gauss(rng);
    const double s = scales[k % 6];
    Eigen::VectorXd v = u.values + s * d;
    const double slack = E(v) + xi.values.dot(u.values - v) +
                         lambda * norm_sq(u.values - v) - eu;
    if (slack < out.worst_slack) {
      out.worst_slack = slack;
      out.worst_probe = v;
    }
  }
  out.pass = out.worst_slack >= -tol * (1.0 + std::abs(eu));
  return out;
}

}  // namespace dinsys
