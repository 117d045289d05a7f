#pragma once

#include <optional>
#include <vector>

#include "dinsys/stepper.hpp"

// Interpolants of a discrete trajectory, the discrete energy-dissipation
// inequality audit, a-priori bound reports, time-shift gaps, and
// tau-refinement convergence studies.

namespace dinsys {

enum class InterpTag {
  U_bar,    // piecewise constant, right value
  U_under,  // piecewise constant, left value
  U_hat,    // piecewise linear
  V_bar,
  V_under,
  V_hat,
  Xi,       // piecewise constant subgradient (dual)
  F_tau     // piecewise constant averaged force (H element)
};

class Interpolants {
 public:
  explicit Interpolants(const Trajectory& traj);

  Eigen::VectorXd eval(InterpTag which, double t) const;
  double t_bar(double t) const;    // right node of the covering interval
  double t_under(double t) const;  // left node convention

  const Trajectory& trajectory() const { return *traj_; }

 private:
  int right_index(double t) const;  // n with t in (t_{n-1}, t_n], n>=1
  const Trajectory* traj_;
};

struct EdiRow {
  double s = 0.0, t = 0.0;   // snapped to nodes
  double lhs = 0.0, rhs = 0.0;
  double slack = 0.0;             // rhs - lhs, full-lambda variant
  double slack_half_lambda = 0.0; // lambda/2 variant of the closing term
  double quad_error = 0.0;        // estimate for the d/dt E quadrature
};

struct EdiReport {
  std::vector<EdiRow> rows;
  bool pass = true;
  double tol = 0.0;
  std::string violation;  // names the first violated interval
};

EdiReport edi_check(const Trajectory& traj,
                    const std::vector<std::pair<double, double>>& pairs,
                    double tol_scale = 1e-8);

struct AprioriReport {
  double M_velocity = 0.0;            // sup_t |V_bar|_H
  double M_energy = 0.0;              // sup_t E_t(U_bar)
  double M_power = 0.0;               // sup_t |d/dt E|
  double dissipation_integral = 0.0;  // int (Psi + Psi*)
  double gap_U_under_bar = 0.0;       // sup |U_under - U_bar|_V
  double gap_U_hat_bar = 0.0;         // sup |U_hat - U_bar|_V
  double gap_V_bar_hat = 0.0;         // sup |V_bar - V_hat|_{V*}
  double gap_V_under_bar = 0.0;       // sup |V_under - V_bar|_{V*}
};

AprioriReport apriori_report(const Trajectory& traj);

// |sigma_h U_bar - U_bar| in L^2(0,T-h; V) (tag V) or the L^r-in-time
// W-norm variant (tag W); exact piecewise quadrature.
double shift_gap(const Trajectory& traj, double h, Space norm_tag);

struct ConvergenceRow {
  double tau = 0.0;
  double err_CH = 0.0;    // U_hat vs reference in C([0,T];H)
  double err_L2V = 0.0;   // U_hat vs reference in L^2(0,T;V)
  double err_V_CH = 0.0;  // V_hat vs reference in C([0,T];H)
  std::optional<double> order_estimate;  // Richardson ratio on err_CH
};

// Closed-form reference (u(t), u'(t)); when absent the study runs the
// scheme itself at reference_tau.
using ClosedFormRef =
    std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(double)>;

std::vector<ConvergenceRow> convergence_study(
    const SystemSpec& system, const StateVec& u0, const StateVec& v0,
    const std::vector<double>& taus, double reference_tau,
    const SolverConfig& base_config, const ClosedFormRef& closed_form = {},
    int jobs = 1);

}  // namespace dinsys
