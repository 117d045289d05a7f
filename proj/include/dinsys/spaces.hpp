#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

// Finite-dimensional realization of the four-space scale U, V, W, H:
// one nodal vector space carrying four norms assembled from quadrature
// on a uniform grid (or plain Euclidean structure for ODE systems).

namespace dinsys {

struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform grid with homogeneous Dirichlet boundary. Unknowns live on
// interior nodes only.
struct GridSpec {
  int dimension = 1;                 // 1 or 2
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> nodes{3, 3};    // nodes per axis, boundary included

  static GridSpec line(int n_nodes, double length = 1.0);
  static GridSpec square(int n_nodes, double length = 1.0);

  double spacing(int axis) const { return extent[axis] / (nodes[axis] - 1); }
  int interior_per_axis(int axis) const { return nodes[axis] - 2; }
  int interior_count() const;
  void validate() const;
};

struct StateVec {
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(values.size()); }
  bool finite() const { return values.allFinite(); }
};

// Functional coefficients against the nodal basis; the pairing with a
// StateVec is the plain coefficient dot product.
struct DualVec {
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(values.size()); }
};

double pair(const DualVec& xi, const StateVec& x);

enum class Space { U, V, W, H };
enum class DualSpace { Vstar, Wstar, H };

// Which embedding chain is being modelled; at the discrete level the two
// orderings differ only in which constants get recorded.
enum class EmbeddingOrder { u_v_w_h, u_w_v_h };

class NormFamily {
 public:
  // Grid-backed construction: H = L2 (midpoint quadrature), V = H1_0
  // stiffness form, W = L^r quadrature norm, U defaults to the V norm
  // unless a callable is supplied.
  static NormFamily for_grid(const GridSpec& grid, double w_exponent = 2.0,
                             EmbeddingOrder order = EmbeddingOrder::u_v_w_h);

  // Euclidean model space of dimension n: all four norms coincide.
  static NormFamily euclidean(int n);

  // Fully custom Gram/quadrature data.
  NormFamily(Eigen::MatrixXd gram_H, Eigen::MatrixXd gram_V,
             double w_exponent, Eigen::VectorXd w_weights,
             EmbeddingOrder order = EmbeddingOrder::u_v_w_h);

  int dim() const { return static_cast<int>(gram_H_.rows()); }

  double norm(Space which, const StateVec& x) const;
  double dual_norm(DualSpace which, const DualVec& xi) const;

  // inf over splits xi = xi1 + xi2 of max{|xi1|_V*, |xi2|_W*}.
  double sum_dual_norm(const DualVec& xi, double tol) const;

  double inner_H(const StateVec& a, const StateVec& b) const;
  double inner_V(const StateVec& a, const StateVec& b) const;

  const Eigen::MatrixXd& gram_H() const { return gram_H_; }
  const Eigen::MatrixXd& gram_V() const { return gram_V_; }
  double w_exponent() const { return w_exponent_; }
  const Eigen::VectorXd& w_weights() const { return w_weights_; }
  EmbeddingOrder order() const { return order_; }

  // Riesz map of an H element into dual coefficients: xi = G_H f.
  DualVec h_riesz(const StateVec& f) const;

  // G_V x = xi solve.
  StateVec v_riesz_inverse(const DualVec& xi) const;

  // Measured constant with |v|_H <= C |v|_V on this grid.
  double embedding_constant_VH() const { return c_vh_; }

  // Override the U norm (e.g. W^{1,p} or H^2 quadrature).
  void set_u_norm(std::function<double(const Eigen::VectorXd&)> fn) {
    u_norm_ = std::move(fn);
  }
  // Approximate U* norm via normalized probe directions.
  double dual_norm_Ustar(const DualVec& xi, int probes, unsigned seed) const;

 private:
  void check_dim(int n, const char* what) const;

  Eigen::MatrixXd gram_H_, gram_V_;
  Eigen::LLT<Eigen::MatrixXd> llt_H_, llt_V_;
  double w_exponent_ = 2.0;
  Eigen::VectorXd w_weights_;
  std::function<double(const Eigen::VectorXd&)> u_norm_;
  EmbeddingOrder order_ = EmbeddingOrder::u_v_w_h;
  double c_vh_ = 0.0;
};

// Dirichlet stiffness matrix (the discrete -Laplacian in weak form) for
// the grid; exposed for problem builders.
Eigen::MatrixXd stiffness_matrix(const GridSpec& grid);

// Diagonal of the lumped L2 mass (midpoint quadrature weights).
Eigen::VectorXd lumped_mass_weights(const GridSpec& grid);

}  // namespace dinsys
