#include "dinsys/stepper.hpp"

#include <cmath>
#include <limits>

namespace dinsys {

void SolverConfig::validate() const {
  if (!(tau > 0.0) || !(tau <= T))
    throw ContractViolation("SolverConfig: need 0 < tau <= T");
  if (!(inner_tol > 0.0))
    throw ContractViolation("SolverConfig: inner_tol must be positive");
  if (inner_max_iters < 1)
    throw ContractViolation("SolverConfig: inner_max_iters must be >= 1");
}

double incremental_value(const SystemSpec& system, double r, double t,
                         const StateVec& v, const StateVec& w,
                         const DualVec& eta, const StateVec& u) {
  if (!(r > 0.0)) throw ContractViolation("incremental_value: r must be > 0");
  const Eigen::VectorXd acc = u.values - 2.0 * v.values + w.values;
  const StateVec vel{(u.values - v.values) / r};
  const double inertia =
      0.5 / (r * r) * acc.dot(system.norms().gram_H() * acc);
  return inertia + r * psi_eval(system.dissipation(), vel) +
         system.E(t + r, u) - eta.values.dot(u.values);
}

DualVec incremental_gradient(const SystemSpec& system, double r, double t,
                             const StateVec& v, const StateVec& w,
                             const DualVec& eta, const StateVec& u) {
  if (!(r > 0.0))
    throw ContractViolation("incremental_gradient: r must be > 0");
  const Eigen::VectorXd acc = u.values - 2.0 * v.values + w.values;
  const StateVec vel{(u.values - v.values) / r};
  Eigen::VectorXd g = system.norms().gram_H() * acc / (r * r);
  g += psi_grad(system.dissipation(), vel).values;
  g += system.dE(t + r, u).values;
  g -= eta.values;
  return DualVec{g};
}

IncrementMin minimize_increment(const SystemSpec& system, double r, double t,
                                const StateVec& v, const StateVec& w,
                                const DualVec& eta, const StateVec& warm_start,
                                const SolverConfig& config) {
  if (!warm_start.finite())
    throw ContractViolation("minimize_increment: warm start not finite");
  Functional phi;
  phi.value = [&](const Eigen::VectorXd& u) {
    return incremental_value(system, r, t, v, w, eta, StateVec{u});
  };
  phi.grad = [&](const Eigen::VectorXd& u) {
    return incremental_gradient(system, r, t, v, w, eta, StateVec{u}).values;
  };
  phi.hess = [&](const Eigen::VectorXd& u) {
    Eigen::MatrixXd h = system.norms().gram_H() / (r * r);
    h += psi_hess(system.dissipation(), StateVec{(u - v.values) / r}) / r;
    if (system.energy_hess) {
      h += system.energy_hess(t + r, u);
    } else {
      h += fd_hessian(
          [&](const Eigen::VectorXd& x) {
            return system.energy_grad(t + r, x);
          },
          u);
    }
    return h;
  };

  MinimizeOptions opts;
  opts.tol = config.inner_tol;
  opts.max_iters = config.inner_max_iters;
  MinimizeResult m = minimize(phi, warm_start.values, opts);
  if (!m.x.allFinite())
    throw StepFailure("minimize_increment: non-finite iterate", m.x);
  if (!m.converged)
    throw StepFailure("minimize_increment: iteration cap exceeded", m.x);
  return IncrementMin{StateVec{m.x}, m.value, m.grad_norm, m.iterations};
}

double moreau_yosida_value(const SystemSpec& system, double r, double t,
                           const StateVec& v, const StateVec& w,
                           const DualVec& eta, const StateVec& warm_start,
                           const SolverConfig& config) {
  return minimize_increment(system, r, t, v, w, eta, warm_start, config)
      .value;
}

StateVec average_force(const SystemSpec& system, int n, double tau) {
  if (n < 1) throw ContractViolation("average_force: n >= 1 required");
  const double a = (n - 1) * tau;
  const double b = n * tau;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double x = std::sqrt(3.0 / 5.0);
  Eigen::VectorXd s = (5.0 / 9.0) * system.f(mid - half * x).values +
                      (8.0 / 9.0) * system.f(mid).values +
                      (5.0 / 9.0) * system.f(mid + half * x).values;
  return StateVec{0.5 * s};  // weights already sum to 2
}

DualVec recover_subgradient(const StepRecord& rec_n,
                            const StepRecord& rec_prev,
                            const SystemSpec& system, double tau) {
  const Eigen::VectorXd dv = (rec_n.V.values - rec_prev.V.values) / tau;
  Eigen::VectorXd xi = system.norms().gram_H() * (rec_n.f_n.values - dv);
  xi -= rec_n.B_n.values;
  xi -= psi_grad(system.dissipation(), rec_n.V).values;
  return DualVec{xi};
}

double estimate_tau_star(const SystemSpec& system) {
  if (system.lambda == 0.0) return std::numeric_limits<double>::infinity();
  const double mu = system.dissipation().mu();
  const double c = system.growth.c;
  const double ct = system.growth.c_tilde;
  return std::min(2.0 * mu * (1.0 - c - ct) / std::abs(system.lambda), 1.0);
}

Trajectory run(const SystemSpec& system, const StateVec& u0,
               const StateVec& v0, const SolverConfig& config) {
  config.validate();
  if (!u0.finite() || !v0.finite())
    throw ContractViolation("run: initial data must be finite");
  if (!std::isfinite(system.E(0.0, u0)))
    throw ContractViolation("run: u0 outside the effective energy domain");

  Trajectory traj;
  traj.requested_tau = config.tau;
  const int N = std::max(1, static_cast<int>(std::lround(config.T / config.tau)));
  traj.tau = config.T / N;
  traj.T = config.T;
  traj.config = config;
  traj.system = &system;
  traj.u0 = u0;
  traj.v0 = v0;
  const double tau = traj.tau;

  if (config.tau_star_guard) {
    const double ts = estimate_tau_star(system);
    if (tau >= ts) {
      traj.warnings.push_back("tau=" + std::to_string(tau) +
                              " >= estimated tau*=" + std::to_string(ts));
    }
  }

  StepRecord rec0;
  rec0.index = 0;
  rec0.t = 0.0;
  rec0.U = u0;
  rec0.V = v0;
  rec0.xi = system.dE(0.0, u0);
  rec0.f_n = StateVec{Eigen::VectorXd::Zero(u0.size())};
  rec0.B_n = DualVec{Eigen::VectorXd::Zero(u0.size())};
  rec0.psi_value = psi_eval(system.dissipation(), v0);
  rec0.energy_value = system.E(0.0, u0);
  traj.records.push_back(std::move(rec0));

  // U^{-1} seed makes V^0 = v0 by construction.
  StateVec u_prev2{u0.values - tau * v0.values};

  for (int n = 1; n <= N; ++n) {
    const StepRecord& prev = traj.records.back();
    const double tn = n * tau;
    StepRecord rec;
    rec.index = n;
    rec.t = tn;
    rec.f_n = average_force(system, n, tau);
    rec.B_n = system.B(tn, prev.U, prev.V);  // explicit, previous step only
    DualVec eta{system.norms().gram_H() * rec.f_n.values - rec.B_n.values};

    IncrementMin im;
    try {
      im = minimize_increment(system, tau, tn - tau, prev.U,
                              StateVec{u_prev2}, eta, prev.U, config);
    } catch (const StepFailure& sf) {
      throw RunFailure("step " + std::to_string(n) + " failed: " + sf.what(),
                       std::move(traj));
    }
    rec.U = im.u_min;
    rec.V = StateVec{(rec.U.values - prev.U.values) / tau};
    rec.inner_iterations = im.iterations;
    rec.optimality_residual = im.residual;
    rec.xi = recover_subgradient(rec, prev, system, tau);
    rec.xi_cross_residual = system.norms().dual_norm(
        DualSpace::Vstar,
        DualVec{rec.xi.values - system.dE(tn, rec.U).values});
    rec.psi_value = psi_eval(system.dissipation(), rec.V);
    // Psi* argument equals DPsi(V^n) bitwise through the recovery identity.
    const Eigen::VectorXd psi_star_arg =
        system.norms().gram_H() *
            (rec.f_n.values - (rec.V.values - prev.V.values) / tau) -
        rec.B_n.values - rec.xi.values;
    rec.psi_star_value =
        psi_conjugate(system.dissipation(), DualVec{psi_star_arg},
                      config.inner_tol)
            .value;
    rec.energy_value = system.E(tn, rec.U);

    u_prev2 = prev.U;
    traj.records.push_back(std::move(rec));
  }
  return traj;
}

}  // namespace dinsys
