#include "dinsys/problems.hpp"

#include <Eigen/Eigenvalues>
#include <cctype>
#include <cmath>
#include <map>
#include <random>

namespace dinsys {

// ---------------------------------------------------------------------------
// Expression parser (recursive descent)

namespace {

struct ExprParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit ExprParser(const std::string& text) : s(text) {}

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw ContractViolation("expression error at position " +
                            std::to_string(pos) + ": " + what + " in '" + s +
                            "'");
  }

  ExprFn sum() {
    ExprFn lhs = term();
    for (;;) {
      if (eat('+')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](double x, double t) { return lhs(x, t) + rhs(x, t); };
      } else if (eat('-')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](double x, double t) { return lhs(x, t) - rhs(x, t); };
      } else {
        return lhs;
      }
    }
  }
  ExprFn term() {
    ExprFn lhs = unary();
    for (;;) {
      if (eat('*')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](double x, double t) { return lhs(x, t) * rhs(x, t); };
      } else if (eat('/')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](double x, double t) { return lhs(x, t) / rhs(x, t); };
      } else {
        return lhs;
      }
    }
  }
  // Unary minus binds looser than '^', so -x^2 is -(x^2).
  ExprFn unary() {
    if (eat('-')) {
      ExprFn inner = unary();
      return [inner](double x, double t) { return -inner(x, t); };
    }
    eat('+');
    return power();
  }
  ExprFn power() {
    ExprFn base = atom();
    if (eat('^')) {
      ExprFn expo = unary();  // right associative
      return [base, expo](double x, double t) {
        return std::pow(base(x, t), expo(x, t));
      };
    }
    return base;
  }
  ExprFn atom() {
    skip();
    if (pos >= s.size()) fail("unexpected end");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s.substr(pos), &used);
      pos += used;
      return [v](double, double) { return v; };
    }
    if (c == '(') {
      ++pos;
      ExprFn inner = sum();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos;
      while (pos < s.size() &&
             std::isalnum(static_cast<unsigned char>(s[pos])))
        ++pos;
      std::string name = s.substr(start, pos - start);
      if (name == "x") return [](double x, double) { return x; };
      if (name == "t") return [](double, double t) { return t; };
      if (name == "pi") return [](double, double) { return M_PI; };
      static const std::map<std::string, double (*)(double)> fns = {
          {"sin", std::sin}, {"cos", std::cos},   {"exp", std::exp},
          {"sqrt", std::sqrt}, {"abs", std::fabs}, {"tanh", std::tanh}};
      auto it = fns.find(name);
      if (it == fns.end()) fail("unknown symbol '" + name + "'");
      if (!eat('(')) fail("expected '(' after function name");
      ExprFn arg = sum();
      if (!eat(')')) fail("expected ')'");
      auto fn = it->second;
      return [fn, arg](double x, double t) { return fn(arg(x, t)); };
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

ExprFn parse_expression(const std::string& text) {
  ExprParser parser(text);
  ExprFn fn = parser.sum();
  parser.skip();
  if (parser.pos != text.size()) parser.fail("trailing input");
  return fn;
}

// ---------------------------------------------------------------------------
// Shared 1D discretization pieces. Unknowns at interior nodes i=0..n-1,
// positions x_i = (i+1)h, homogeneous Dirichlet values at both ends.

namespace {

double safe_pow(double base, double expo) {
  if (base == 0.0 && expo == 0.0) return 1.0;
  return std::pow(base, expo);
}

// Cell gradients d_j = (u_j - u_{j-1})/h, j = 0..n, with u_{-1}=u_n=0.
Eigen::VectorXd cell_gradients(const Eigen::VectorXd& u, double h) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd d(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double up = (j < n) ? u[j] : 0.0;
    const double um = (j > 0) ? u[j - 1] : 0.0;
    d[j] = (up - um) / h;
  }
  return d;
}

// Energy sum_j h phi(d_j) with sigma = phi'; the gradient is exactly the
// adjoint difference sigma(d_i) - sigma(d_{i+1}).
struct CellEnergy {
  std::function<double(double)> phi;
  std::function<double(double)> sigma;
  std::function<double(double)> sigma_prime;

  double value(const Eigen::VectorXd& u, double h) const {
    const Eigen::VectorXd d = cell_gradients(u, h);
    double acc = 0.0;
    for (int j = 0; j < d.size(); ++j) acc += h * phi(d[j]);
    return acc;
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& u, double h) const {
    const Eigen::VectorXd d = cell_gradients(u, h);
    const int n = static_cast<int>(u.size());
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = sigma(d[i]) - sigma(d[i + 1]);
    return g;
  }
  Eigen::MatrixXd hess(const Eigen::VectorXd& u, double h) const {
    const Eigen::VectorXd d = cell_gradients(u, h);
    const int n = static_cast<int>(u.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      H(i, i) = (sigma_prime(d[i]) + sigma_prime(d[i + 1])) / h;
      if (i + 1 < n) {
        H(i, i + 1) = -sigma_prime(d[i + 1]) / h;
        H(i + 1, i) = H(i, i + 1);
      }
    }
    return H;
  }
};

CellEnergy p_laplacian_cells(double p) {
  return CellEnergy{
      [p](double d) { return safe_pow(std::abs(d), p) / p; },
      [p](double d) { return safe_pow(std::abs(d), p - 2.0) * d; },
      [p](double d) { return (p - 1.0) * safe_pow(std::abs(d), p - 2.0); }};
}

// Regularized |v|^{e} used inside explicit perturbations only.
double abs_power_reg(double v, double e) {
  constexpr double eps2 = 1e-24;
  return std::pow(v * v + eps2, 0.5 * e);
}

StateVec eval_nodes(const ExprFn& fn, const GridSpec& grid, double t) {
  const int n = grid.interior_count();
  const double h = grid.spacing(0);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = fn((i + 1) * h, t);
  return StateVec{out};
}

void attach_forcing(SystemSpec& sys, const ProblemConfig& config) {
  if (config.forcing_expr.empty()) return;
  ExprFn fn = parse_expression(config.forcing_expr);
  GridSpec grid = config.grid;
  sys.forcing = [fn, grid](double t) {
    return eval_nodes(fn, grid, t).values;
  };
}

BuiltProblem finish(const ProblemConfig& config,
                    std::shared_ptr<SystemSpec> sys) {
  attach_forcing(*sys, config);
  BuiltProblem built;
  built.u0 = eval_nodes(parse_expression(config.u0_expr), config.grid, 0.0);
  built.v0 = eval_nodes(parse_expression(config.v0_expr), config.grid, 0.0);
  built.system = std::move(sys);
  return built;
}

// s_u |u|^{q-1} + s_v |v|^{r-1} as dual (L2-weighted) coefficients.
Eigen::VectorXd power_perturbation(const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v, double h,
                                   double q, double r, int s_u, int s_v) {
  Eigen::VectorXd out(u.size());
  for (int i = 0; i < u.size(); ++i) {
    double val = s_u * abs_power_reg(u[i], q - 1.0);
    if (s_v != 0) val += s_v * abs_power_reg(v[i], r - 1.0);
    out[i] = h * val;
  }
  return out;
}

}  // namespace

void ProblemConfig::validate() const {
  if (id != "P1" && id != "P2" && id != "P3" && id != "P4" &&
      id != "oscillator")
    throw ContractViolation("unknown problem id '" + id + "'");
  if (id != "oscillator") {
    grid.validate();
    if (grid.dimension != 1)
      throw ContractViolation("problems are built on 1D grids");
  }
  if (p < 2.0) throw ContractViolation("problem.p must be >= 2");
  if (q <= 1.0) throw ContractViolation("problem.q must be > 1");
  if (r <= 1.0) throw ContractViolation("problem.r must be > 1");
  if (std::abs(s_u) != 1 || std::abs(s_v) != 1)
    throw ContractViolation("problem signs must be +1 or -1");
  if (mu <= 0.0 || nu <= 0.0 || rho <= 0.0)
    throw ContractViolation("problem coefficients mu, nu, rho must be positive");
  if (id == "P4" && grid.nodes[0] < 7)
    throw ContractViolation("P4 needs a grid with at least 7 nodes");
  if (id == "oscillator" &&
      (oscillator_dim < 1 || oscillator_k <= 0.0 || oscillator_c <= 0.0))
    throw ContractViolation("oscillator needs dim >= 1 and positive k, c");
}

// ---------------------------------------------------------------------------
// P1 / P2: p-Laplacian with double well; dissipation is the H1 form,
// plus an L^r power part for P2.

namespace {

BuiltProblem build_p1_p2(const ProblemConfig& config, bool mode_b) {
  config.validate();
  const GridSpec& grid = config.grid;
  const double h = grid.spacing(0);
  const int n = grid.interior_count();
  NormFamily norms = NormFamily::for_grid(grid, mode_b ? config.r : 2.0);
  const Eigen::MatrixXd K = stiffness_matrix(grid);

  DissipationSpec dissipation =
      mode_b ? DissipationSpec::with_power_part(
                   K, config.r, Eigen::VectorXd::Constant(n, h))
             : DissipationSpec::quadratic(K);
  dissipation.record_growth(norms.gram_V());

  const double c_vh = norms.embedding_constant_VH();
  auto sys = std::make_shared<SystemSpec>(std::move(norms),
                                          std::move(dissipation));

  const CellEnergy cells = p_laplacian_cells(config.p);
  const bool well = config.double_well;
  sys->energy = [cells, h, well](double, const Eigen::VectorXd& u) {
    double e = cells.value(u, h);
    if (well)
      for (int i = 0; i < u.size(); ++i) {
        const double w = u[i] * u[i] - 1.0;
        e += h * 0.25 * w * w;
      }
    return e;
  };
  sys->energy_grad = [cells, h, well](double, const Eigen::VectorXd& u) {
    Eigen::VectorXd g = cells.grad(u, h);
    if (well)
      for (int i = 0; i < u.size(); ++i)
        g[i] += h * (u[i] * u[i] - 1.0) * u[i];
    return g;
  };
  sys->energy_hess = [cells, h, well](double, const Eigen::VectorXd& u) {
    Eigen::MatrixXd H = cells.hess(u, h);
    if (well)
      for (int i = 0; i < u.size(); ++i)
        H(i, i) += h * (3.0 * u[i] * u[i] - 1.0);
    return H;
  };
  // The well splits into convex u^4/4 + 1/4 and concave -u^2/2; the
  // concave part is controlled by the measured V->H embedding constant.
  sys->lambda = well ? -0.5 * c_vh * c_vh : 0.0;

  const double q = config.q, r = config.r;
  const int s_u = config.s_u, s_v = mode_b ? 0 : config.s_v;
  sys->perturbation = [h, q, r, s_u, s_v](double, const Eigen::VectorXd& u,
                                          const Eigen::VectorXd& v) {
    return power_perturbation(u, v, h, q, r, s_u, s_v);
  };
  sys->growth.beta = 64.0;
  // |dE|_{U*} / (1 + E^+ + |u|_U) stays below ~0.9 over the audit's sampled
  // states for p,q in the shipped range; 8 leaves a comfortable margin.
  sys->growth.C_hat = 8.0;
  return finish(config, std::move(sys));
}

}  // namespace

BuiltProblem build_p1(const ProblemConfig& config) {
  return build_p1_p2(config, /*mode_b=*/false);
}

BuiltProblem build_p2(const ProblemConfig& config) {
  return build_p1_p2(config, /*mode_b=*/true);
}

// ---------------------------------------------------------------------------
// P3: viscous Klein-Gordon, E = 1/2 int |grad u|^2, Psi = mu/2 int
// |grad v|^2, B(u) = b(u).

BuiltProblem build_p3(const ProblemConfig& config) {
  config.validate();
  const GridSpec& grid = config.grid;
  const double h = grid.spacing(0);
  NormFamily norms = NormFamily::for_grid(grid);
  const Eigen::MatrixXd K = stiffness_matrix(grid);
  DissipationSpec dissipation = DissipationSpec::quadratic(config.mu * K);
  dissipation.record_growth(norms.gram_V());
  auto sys = std::make_shared<SystemSpec>(std::move(norms),
                                          std::move(dissipation));
  sys->energy = [K](double, const Eigen::VectorXd& u) {
    return 0.5 * u.dot(K * u);
  };
  sys->energy_grad = [K](double, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(K * u);
  };
  sys->energy_hess = [K](double, const Eigen::VectorXd&) { return K; };
  sys->lambda = 0.0;

  std::function<double(double)> b;
  if (config.b_kind == "linear") {
    b = [](double u) { return u; };
  } else if (config.b_kind == "cubic") {
    // u^3 near zero, |u|^{q-1} growth at infinity.
    const double q = config.q;
    b = [q](double u) { return u * u * u / (1.0 + abs_power_reg(u, 4.0 - q)); };
  } else if (config.b_kind == "zero") {
    b = nullptr;
  } else {
    throw ContractViolation("P3 b must be linear, cubic, or zero");
  }
  if (b) {
    sys->perturbation = [h, b](double, const Eigen::VectorXd& u,
                               const Eigen::VectorXd&) {
      Eigen::VectorXd out(u.size());
      for (int i = 0; i < u.size(); ++i) out[i] = h * b(u[i]);
      return out;
    };
    sys->growth.beta = 64.0;
  }
  return finish(config, std::move(sys));
}

// ---------------------------------------------------------------------------
// P4: viscoelastic bar with capillarity, clamped ends u = u' = 0.

namespace {

// Map interior values to node Laplacians Delta_h u at nodes 0..n+1 with
// the clamped ghost reflection u_{-1} = u_1, u_{n+2} = u_n (boundary
// values are zero). Rows scaled by sqrt(h) so M = D^T D is the weighted
// quadratic form h * sum_i (Delta_h u_i)^2.
Eigen::MatrixXd clamped_laplacian_rows(int n, double h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 2, n);
  const double s = std::sqrt(h) / (h * h);
  D(0, 0) = 2.0 * s;  // node 0: (u1 + ghost u_{-1}) = 2 u1
  for (int i = 1; i <= n; ++i) {
    if (i - 2 >= 0) D(i, i - 2) += s;
    D(i, i - 1) += -2.0 * s;
    if (i < n) D(i, i) += s;
  }
  D(n + 1, n - 1) = 2.0 * s;
  return D;
}

}  // namespace

BuiltProblem build_p4(const ProblemConfig& config) {
  config.validate();
  const GridSpec& grid = config.grid;
  const double h = grid.spacing(0);
  const int n = grid.interior_count();
  const Eigen::MatrixXd K = stiffness_matrix(grid);
  const Eigen::MatrixXd D = clamped_laplacian_rows(n, h);
  const Eigen::MatrixXd M = D.transpose() * D;  // h * sum (Delta_h u)^2

  NormFamily norms(config.rho * h * Eigen::MatrixXd::Identity(n, n), K, 2.0,
                   Eigen::VectorXd::Constant(n, h));
  const double mu = config.mu;
  norms.set_u_norm([M, mu](const Eigen::VectorXd& u) {
    return std::sqrt(mu * u.dot(M * u));
  });
  DissipationSpec dissipation = DissipationSpec::quadratic(config.nu * K);
  dissipation.record_growth(norms.gram_V());
  auto sys = std::make_shared<SystemSpec>(std::move(norms),
                                          std::move(dissipation));

  CellEnergy stress;
  double lambda_ab = 0.0;  // Andrews-Ball semi-monotonicity constant
  if (config.stress == "linear") {
    stress = CellEnergy{[](double d) { return 0.5 * d * d; },
                        [](double d) { return d; },
                        [](double) { return 1.0; }};
  } else if (config.stress == "double_well") {
    stress = CellEnergy{
        [](double d) { double w = d * d - 1.0; return 0.25 * w * w; },
        [](double d) { return (d * d - 1.0) * d; },
        [](double d) { return 3.0 * d * d - 1.0; }};
    for (double F = -2.0; F <= 2.0; F += 0.01)
      lambda_ab = std::max(lambda_ab, -stress.sigma_prime(F));
  } else {
    throw ContractViolation("P4 stress must be linear or double_well");
  }

  const bool energy_route = config.sigma_route == "energy";
  if (!energy_route && config.sigma_route != "perturbation")
    throw ContractViolation("P4 sigma_route must be perturbation or energy");

  if (energy_route) {
    // int |Delta u|^2 >= c_min int |grad u|^2 measured on this grid; the
    // capillarity term must dominate the Andrews-Ball constant.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(M, K);
    const double c_min = ges.eigenvalues().minCoeff();
    if (lambda_ab >= mu * c_min)
      throw ContractViolation(
          "P4 energy route loses convexity: Andrews-Ball constant " +
          std::to_string(lambda_ab) + " >= mu * C_{H2,H1} = " +
          std::to_string(mu * c_min));
    sys->energy = [M, mu, stress, h](double, const Eigen::VectorXd& u) {
      return 0.5 * mu * u.dot(M * u) + stress.value(u, h);
    };
    sys->energy_grad = [M, mu, stress, h](double, const Eigen::VectorXd& u) {
      return Eigen::VectorXd(mu * (M * u) + stress.grad(u, h));
    };
    sys->energy_hess = [M, mu, stress, h](double, const Eigen::VectorXd& u) {
      return Eigen::MatrixXd(mu * M + stress.hess(u, h));
    };
  } else {
    sys->energy = [M, mu](double, const Eigen::VectorXd& u) {
      return 0.5 * mu * u.dot(M * u);
    };
    sys->energy_grad = [M, mu](double, const Eigen::VectorXd& u) {
      return Eigen::VectorXd(mu * (M * u));
    };
    sys->energy_hess = [M, mu](double, const Eigen::VectorXd&) {
      return Eigen::MatrixXd(mu * M);
    };
    sys->perturbation = [stress, h](double, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd&) {
      return Eigen::VectorXd(stress.grad(u, h));  // -div sigma(grad u), weak
    };
    sys->growth.beta = 64.0;
  }
  sys->lambda = 0.0;
  return finish(config, std::move(sys));
}

// ---------------------------------------------------------------------------
// Oscillator

SystemSpec build_oscillator(int dim, const Eigen::MatrixXd& K,
                            const Eigen::MatrixXd& C_damp) {
  if (dim < 1 || K.rows() != dim || K.cols() != dim || C_damp.rows() != dim ||
      C_damp.cols() != dim)
    throw ContractViolation("oscillator: matrix sizes must match dim");
  auto check_spd = [](const Eigen::MatrixXd& A, const char* name) {
    if ((A - A.transpose()).norm() > 1e-12 * (1.0 + A.norm()))
      throw ContractViolation(std::string("oscillator: ") + name +
                              " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ContractViolation(std::string("oscillator: ") + name +
                              " must be positive definite");
  };
  check_spd(K, "K");
  check_spd(C_damp, "C_damp");

  DissipationSpec dissipation = DissipationSpec::quadratic(C_damp);
  dissipation.record_growth(Eigen::MatrixXd::Identity(dim, dim));
  SystemSpec sys(NormFamily::euclidean(dim), std::move(dissipation));
  sys.energy = [K](double, const Eigen::VectorXd& u) {
    return 0.5 * u.dot(K * u);
  };
  sys.energy_grad = [K](double, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(K * u);
  };
  sys.energy_hess = [K](double, const Eigen::VectorXd&) { return K; };
  sys.lambda = 0.0;
  return sys;
}

BuiltProblem build_problem(const ProblemConfig& config) {
  config.validate();
  if (config.id == "P1") return build_p1(config);
  if (config.id == "P2") return build_p2(config);
  if (config.id == "P3") return build_p3(config);
  if (config.id == "P4") return build_p4(config);

  const int dim = config.oscillator_dim;
  const double k = config.oscillator_k, c = config.oscillator_c;
  auto sys = std::make_shared<SystemSpec>(build_oscillator(
      dim, k * Eigen::MatrixXd::Identity(dim, dim),
      c * Eigen::MatrixXd::Identity(dim, dim)));
  if (!config.forcing_expr.empty()) {
    ExprFn fn = parse_expression(config.forcing_expr);
    sys->forcing = [fn, dim](double t) {
      return Eigen::VectorXd::Constant(dim, fn(0.5, t)).eval();
    };
  }
  BuiltProblem built;
  // Scalar initial data: the expressions are sampled at the domain
  // midpoint so the grid-problem default sin(pi*x) gives amplitude 1.
  ExprFn u0fn = parse_expression(config.u0_expr);
  ExprFn v0fn = parse_expression(config.v0_expr);
  built.u0 = StateVec{Eigen::VectorXd::Constant(dim, u0fn(0.5, 0.0))};
  built.v0 = StateVec{Eigen::VectorXd::Constant(dim, v0fn(0.5, 0.0))};
  built.system = std::move(sys);

  // Underdamped scalar case has a closed form, kept as the convergence
  // oracle: u = e^{-ct/2}(A cos wt + B sin wt), w = sqrt(k - c^2/4).
  if (dim == 1 && c * c < 4.0 * k && config.forcing_expr.empty()) {
    const double u0 = built.u0.values[0], v0 = built.v0.values[0];
    const double w = std::sqrt(k - 0.25 * c * c);
    const double A = u0, B = (v0 + 0.5 * c * u0) / w;
    built.closed_form = [c, w, A, B](double t) {
      const double e = std::exp(-0.5 * c * t);
      const double cw = std::cos(w * t), sw = std::sin(w * t);
      Eigen::VectorXd u(1), v(1);
      u[0] = e * (A * cw + B * sw);
      v[0] = e * ((-0.5 * c * A + w * B) * cw + (-0.5 * c * B - w * A) * sw);
      return std::make_pair(u, v);
    };
  }
  return built;
}

// ---------------------------------------------------------------------------
// Assumption audit

AuditReport assumption_audit(const SystemSpec& system, int samples,
                             unsigned seed) {
  if (samples < 1) throw ContractViolation("assumption_audit: samples >= 1");
  const NormFamily& nf = system.norms();
  const int dim = nf.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  const double scales[] = {0.1, 1.0, 3.0};

  AuditReport report;
  double min_E = std::numeric_limits<double>::infinity();
  double worst_C1 = 0.0, worst_Chat = 0.0, worst_beta = 0.0;
  double worst_psi_low = std::numeric_limits<double>::infinity();
  double worst_psi_high = 0.0;
  double worst_eg_slack = 0.0;
  const GrowthConstants& g = system.growth;

  for (int k = 0; k < samples; ++k) {
    const double scale = scales[k % 3];
    const double t = unif(rng);
    Eigen::VectorXd uv(dim), vv(dim);
    for (int i = 0; i < dim; ++i) {
      uv[i] = scale * gauss(rng);
      vv[i] = scale * gauss(rng);
    }
    const StateVec u{uv}, v{vv};
    const double E = system.E(t, u);
    min_E = std::min(min_E, E);
    const double Epos = std::max(E, 0.0);
    worst_C1 = std::max(worst_C1, std::abs(system.dtE(t, u)) / (1.0 + Epos));

    const DualVec xi = system.dE(t, u);
    const double xin = nf.dual_norm_Ustar(xi, 64, seed + 7 * k);
    worst_Chat = std::max(worst_Chat,
                          std::pow(xin, g.sigma) /
                              (1.0 + Epos + nf.norm(Space::U, u)));

    if (system.perturbation) {
      const DualVec B = system.B(t, u, v);
      DualVec arg{(-1.0 / g.c) * B.values};
      const double lhs = g.c * psi_conjugate(system.dissipation(), arg).value;
      const double psi_v = psi_eval(system.dissipation(), v);
      const double rhs_den = 1.0 + Epos + nf.inner_H(v, v) +
                             std::pow(std::max(psi_v, 0.0), g.nu);
      worst_beta = std::max(worst_beta, lhs / rhs_den);
    }

    const double nv2 = nf.inner_V(v, v);
    if (nv2 > 1e-16) {
      const double psi_v = psi_eval(system.dissipation(), v);
      worst_psi_low = std::min(worst_psi_low, psi_v / nv2);
      worst_psi_high = std::max(worst_psi_high, psi_v / nv2);
    }

    if (k < 8) {  // convexity probes are the expensive part
      auto Efn = [&](const Eigen::VectorXd& w) { return system.energy(t, w); };
      auto nsq = [&](const Eigen::VectorXd& w) {
        return nf.inner_V(StateVec{w}, StateVec{w});
      };
      SubgradientCheck chk = lambda_subgradient_check(
          Efn, u, xi, std::abs(system.lambda), 16, nsq, seed + 13 * k, 1e-7);
      worst_eg_slack = std::min(worst_eg_slack, chk.worst_slack);
    }
  }

  auto add = [&](std::string name, double measured, double bound, bool pass,
                 std::string detail) {
    report.entries.push_back(
        {std::move(name), measured, bound, pass, std::move(detail)});
    report.pass = report.pass && pass;
  };
  add("energy lower bound", min_E, 0.0, min_E >= -1e-9,
      "min sampled E_t(u); must be nonnegative");
  add("power control", worst_C1, g.C1,
      g.C1 > 0.0 ? worst_C1 <= g.C1 : worst_C1 <= 1e-12,
      "worst |d/dt E| / (1 + E)");
  add("lambda convexity", worst_eg_slack, 0.0, worst_eg_slack >= -1e-6,
      "worst subgradient-inequality slack (>= 0 passes)");
  add("subgradient control", worst_Chat, g.C_hat,
      g.C_hat > 0.0 ? worst_Chat <= g.C_hat : true,
      "worst |dE|_{U*}^sigma / (1 + E + |u|_U); report-only when unset");
  if (system.perturbation)
    add("perturbation growth", worst_beta, g.beta, worst_beta <= g.beta,
        "worst c Psi*(-B/c) / (1 + E + |v|_H^2 + Psi^nu)");
  add("dissipation growth", worst_psi_low,
      system.dissipation().growth_lower(),
      worst_psi_low >=
          system.dissipation().growth_lower() * (1.0 - 1e-9) - 1e-12,
      "min sampled Psi(v)/|v|_V^2 vs recorded lower constant (upper " +
          std::to_string(worst_psi_high) + ")");
  return report;
}

}  // namespace dinsys
