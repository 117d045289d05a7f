#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dinsys/convex.hpp"
#include "dinsys/spaces.hpp"

// The semi-implicit variational scheme: each step minimizes the
// incremental functional
//   Phi(r,t,v,w,eta;u) = |u-2v+w|_H^2/(2r^2) + r Psi((u-v)/r)
//                        + E_{t+r}(u) - <eta,u>
// with eta = f^n - B(t_n, U^{n-1}, V^{n-1}); the perturbation B is always
// evaluated at the previous step.

namespace dinsys {

struct GrowthConstants {
  double beta = 1.0;     // perturbation growth
  double c = 0.25;       // Psi* absorption constant, in (0,1)
  double c_tilde = 0.25; // Young companion of c, c + c_tilde < 1
  double nu = 0.5;       // Psi power in the B growth bound, in (0,1)
  double C1 = 0.0;       // |d/dt E| <= C1 E
  double sigma = 1.0;    // subgradient control exponent
  double C_hat = 0.0;    // subgradient control constant (0 = unset)
};

class SystemSpec {
 public:
  using EnergyFn = std::function<double(double, const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
  using HessFn = std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>;
  using PerturbationFn = std::function<Eigen::VectorXd(
      double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
  using ForcingFn = std::function<Eigen::VectorXd(double)>;

  SystemSpec(NormFamily norms, DissipationSpec dissipation)
      : norms_(std::move(norms)), dissipation_(std::move(dissipation)) {}

  EnergyFn energy;
  GradFn energy_grad;
  HessFn energy_hess;   // optional; differenced from the gradient if absent
  EnergyFn energy_dt;   // optional; zero if absent
  double lambda = 0.0;  // <= 0; |lambda| is the semiconvexity modulus
  PerturbationFn perturbation;  // optional; returns dual coefficients
  ForcingFn forcing;            // optional; returns an H element
  GrowthConstants growth;

  const NormFamily& norms() const { return norms_; }
  const DissipationSpec& dissipation() const { return dissipation_; }

  double E(double t, const StateVec& u) const { return energy(t, u.values); }
  DualVec dE(double t, const StateVec& u) const {
    return DualVec{energy_grad(t, u.values)};
  }
  double dtE(double t, const StateVec& u) const {
    return energy_dt ? energy_dt(t, u.values) : 0.0;
  }
  DualVec B(double t, const StateVec& u, const StateVec& v) const {
    if (!perturbation) return DualVec{Eigen::VectorXd::Zero(u.size())};
    return DualVec{perturbation(t, u.values, v.values)};
  }
  StateVec f(double t) const {
    if (!forcing) return StateVec{Eigen::VectorXd::Zero(norms_.dim())};
    return StateVec{forcing(t)};
  }

 private:
  NormFamily norms_;
  DissipationSpec dissipation_;
};

struct SolverConfig {
  double tau = 1e-3;
  double T = 1.0;
  double inner_tol = 1e-10;
  int inner_max_iters = 100;
  bool tau_star_guard = true;

  void validate() const;
};

struct StepRecord {
  int index = 0;
  double t = 0.0;
  StateVec U;
  StateVec V;
  DualVec xi;
  StateVec f_n;       // interval-averaged force (H element)
  DualVec B_n;        // perturbation value used for this step
  double psi_value = 0.0;
  double psi_star_value = 0.0;
  double energy_value = 0.0;
  int inner_iterations = 0;
  double optimality_residual = 0.0;
  double xi_cross_residual = 0.0;  // |xi^n - dE(t_n,U^n)|_{V*}
};

struct Trajectory {
  std::vector<StepRecord> records;
  StateVec u0, v0;
  double tau = 0.0;            // effective step after snapping to T/N
  double requested_tau = 0.0;
  double T = 0.0;
  SolverConfig config;
  const SystemSpec* system = nullptr;
  std::vector<std::string> warnings;

  int steps() const { return static_cast<int>(records.size()) - 1; }
};

struct StepFailure : NumericalError {
  StepFailure(const std::string& msg, Eigen::VectorXd best)
      : NumericalError(msg), best_iterate(std::move(best)) {}
  Eigen::VectorXd best_iterate;
};

struct RunFailure : NumericalError {
  RunFailure(const std::string& msg, Trajectory partial)
      : NumericalError(msg), partial(std::move(partial)) {}
  Trajectory partial;
};

double incremental_value(const SystemSpec& system, double r, double t,
                         const StateVec& v, const StateVec& w,
                         const DualVec& eta, const StateVec& u);

DualVec incremental_gradient(const SystemSpec& system, double r, double t,
                             const StateVec& v, const StateVec& w,
                             const DualVec& eta, const StateVec& u);

struct IncrementMin {
  StateVec u_min;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

IncrementMin minimize_increment(const SystemSpec& system, double r, double t,
                                const StateVec& v, const StateVec& w,
                                const DualVec& eta, const StateVec& warm_start,
                                const SolverConfig& config);

// Moreau-Yosida value: the minimum of the incremental functional.
double moreau_yosida_value(const SystemSpec& system, double r, double t,
                           const StateVec& v, const StateVec& w,
                           const DualVec& eta, const StateVec& warm_start,
                           const SolverConfig& config);

// Interval average of the force over (t_{n-1}, t_n] by 3-point Gauss.
StateVec average_force(const SystemSpec& system, int n, double tau);

// xi^n from the rearranged stationarity identity; the discrete inclusion
// holds with zero residual by construction.
DualVec recover_subgradient(const StepRecord& rec_n,
                            const StepRecord& rec_prev,
                            const SystemSpec& system, double tau);

Trajectory run(const SystemSpec& system, const StateVec& u0,
               const StateVec& v0, const SolverConfig& config);

// min{ 2 mu (1 - c - c_tilde)/|lambda|, 1 }; +infinity for lambda == 0.
double estimate_tau_star(const SystemSpec& system);

}  // namespace dinsys
