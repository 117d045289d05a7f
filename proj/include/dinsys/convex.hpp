#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>

#include "dinsys/minimize.hpp"
#include "dinsys/spaces.hpp"

// Dissipation potentials, convex conjugates (closed-form and numerical),
// infimal convolution, Fenchel-Young gaps and lambda-convexity probes.

namespace dinsys {

// Psi = Psi1 (+ Psi2): Psi1(v) = (1/2)<Av,v>, Psi2(v) = (1/r) sum w_i |v_i|^r.
class DissipationSpec {
 public:
  enum class Mode { a, b };

  static DissipationSpec quadratic(Eigen::MatrixXd A);
  static DissipationSpec with_power_part(Eigen::MatrixXd A, double r,
                                         Eigen::VectorXd w_weights);

  Mode mode() const { return mode_; }
  int dim() const { return static_cast<int>(A_.rows()); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt_A() const { return llt_A_; }
  double mu() const { return mu_; }  // smallest eigenvalue of A
  double r() const { return r_; }
  const Eigen::VectorXd& w_weights() const { return w_weights_; }

  // Two-sided growth constants c|v|_V^2 <= Psi1(v) <= C|v|_V^2 against a
  // given V Gram; recorded for the assumption audit.
  void record_growth(const Eigen::MatrixXd& gram_V);
  double growth_lower() const { return c_growth_; }
  double growth_upper() const { return C_growth_; }

 private:
  DissipationSpec() = default;
  Mode mode_ = Mode::a;
  Eigen::MatrixXd A_;
  Eigen::LLT<Eigen::MatrixXd> llt_A_;
  double mu_ = 0.0;
  double r_ = 2.0;
  Eigen::VectorXd w_weights_;
  double c_growth_ = 0.0, C_growth_ = 0.0;
};

double psi_eval(const DissipationSpec& spec, const StateVec& v);
DualVec psi_grad(const DissipationSpec& spec, const StateVec& v);
Eigen::MatrixXd psi_hess(const DissipationSpec& spec, const StateVec& v);

struct ConjugateResult {
  double value = 0.0;
  std::optional<Eigen::VectorXd> witness;  // maximizer u, or optimal eta
  int iterations = 0;
  double gap_estimate = 0.0;
  bool unbounded = false;
};

// Psi1*(xi) = (1/2)<xi, A^{-1} xi> by SPD solve.
ConjugateResult psi1_conjugate(const DissipationSpec& spec, const DualVec& xi);

// F*(xi) = sup_u (<xi,u> - F(u)) by numerical ascent; F convex.
ConjugateResult conjugate_numeric(const Functional& F, const DualVec& xi,
                                  double tol);

// Full conjugate of a dissipation spec: closed form in mode (a), numeric
// ascent on Psi1 + Psi2 in mode (b).
ConjugateResult psi_conjugate(const DissipationSpec& spec, const DualVec& xi,
                              double tol = 1e-10);

// (F1+F2)*(xi) = min_eta ( F1*(xi - eta) + F2*(eta) ).
ConjugateResult infimal_convolution_conjugate(const Functional& F1_star,
                                              const Functional& F2_star,
                                              const DualVec& xi, double tol);

struct FenchelYoungGap {
  double clipped = 0.0;  // max(raw, 0)
  double raw = 0.0;      // F(v) + F*(xi) - <xi,v>
};

FenchelYoungGap fenchel_young_gap(
    const std::function<double(const Eigen::VectorXd&)>& F,
    const std::function<double(const Eigen::VectorXd&)>& F_star,
    const StateVec& v, const DualVec& xi);

struct SubgradientCheck {
  bool pass = true;
  double worst_slack = 0.0;
  Eigen::VectorXd worst_probe;
};

// Probes F(u) <= F(v) + <xi, u-v> + lambda |u-v|^2 at random v; lambda is
// the modulus from the subdifferential characterization (positive values
// relax convexity, zero is plain convexity).
SubgradientCheck lambda_subgradient_check(
    const std::function<double(const Eigen::VectorXd&)>& E,
    const StateVec& u, const DualVec& xi, double lambda, int samples,
    const std::function<double(const Eigen::VectorXd&)>& norm_sq,
    unsigned seed = 1234, double tol = 1e-9);

}  // namespace dinsys
