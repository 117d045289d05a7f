#pragma once

#include <memory>
#include <string>

#include "dinsys/diagnostics.hpp"
#include "dinsys/stepper.hpp"

// Concrete damped inertial systems on 1D grids (P1-P4) plus a
// finite-dimensional oscillator used as a convergence oracle.

namespace dinsys {

// Arithmetic expression of (x, t): numbers, + - * / ^, parentheses,
// sin cos exp sqrt abs tanh, constant pi.
using ExprFn = std::function<double(double x, double t)>;
ExprFn parse_expression(const std::string& text);

struct ProblemConfig {
  std::string id = "oscillator";  // P1, P2, P3, P4, oscillator
  GridSpec grid = GridSpec::line(33);
  double p = 2.0, q = 2.0, r = 2.0;
  int s_u = 1, s_v = 1;            // signs of the |u|^{q-1}, |v|^{r-1} terms
  double mu = 1.0, nu = 1.0, rho = 1.0;
  bool double_well = true;         // P1/P2 well term
  std::string b_kind = "linear";   // P3: linear | cubic | zero
  std::string stress = "linear";   // P4: linear | double_well
  std::string sigma_route = "perturbation";  // P4: perturbation | energy
  std::string forcing_expr;        // empty = no forcing
  std::string u0_expr = "sin(pi*x)";
  std::string v0_expr = "0";
  int oscillator_dim = 1;
  double oscillator_k = 1.0, oscillator_c = 1.0;

  void validate() const;
};

struct BuiltProblem {
  std::shared_ptr<SystemSpec> system;
  StateVec u0, v0;
  ClosedFormRef closed_form;  // set when a closed-form solution exists
};

BuiltProblem build_p1(const ProblemConfig& config);
BuiltProblem build_p2(const ProblemConfig& config);
BuiltProblem build_p3(const ProblemConfig& config);
BuiltProblem build_p4(const ProblemConfig& config);

SystemSpec build_oscillator(int dim, const Eigen::MatrixXd& K,
                            const Eigen::MatrixXd& C_damp);

// Dispatch on config.id; fills initial data from the expressions.
BuiltProblem build_problem(const ProblemConfig& config);

struct AuditEntry {
  std::string name;
  double measured = 0.0;  // worst constant over the samples
  double bound = 0.0;     // configured constant (0 = report only)
  bool pass = true;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool pass = true;
};

// Samples random (t, u, v) and reports the worst constant in each of the
// standing growth/convexity inequalities; pass/fail against the
// constants configured in SystemSpec::growth.
AuditReport assumption_audit(const SystemSpec& system, int samples,
                             unsigned seed = 2024);

}  // namespace dinsys
