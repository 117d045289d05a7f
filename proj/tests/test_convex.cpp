#include <doctest.h>

#include <random>

#include "dinsys/convex.hpp"

using namespace dinsys;

namespace {

Eigen::VectorXd randn(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

Eigen::MatrixXd random_spd(int n, unsigned seed) {
  Eigen::MatrixXd B(n, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  return B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
}

DissipationSpec scalar_quadratic(double a) {
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = a;
  return DissipationSpec::quadratic(A);
}

}  // namespace

TEST_CASE("convex: psi evaluation formulas") {
  DissipationSpec s = scalar_quadratic(2.0);
  CHECK(psi_eval(s, StateVec{Eigen::VectorXd::Zero(1)}) == 0.0);
  Eigen::VectorXd v3 = Eigen::VectorXd::Constant(1, 3.0);
  CHECK(psi_eval(s, StateVec{v3}) == doctest::Approx(9.0));
  CHECK(psi_grad(s, StateVec{v3}).values[0] == doctest::Approx(6.0));
  CHECK(psi_grad(s, StateVec{Eigen::VectorXd::Zero(1)}).values.norm() == 0.0);

  // Mode b, r=4, unit weight: power part of Psi(2) is 2^4/4 = 4.
  DissipationSpec b = DissipationSpec::with_power_part(
      Eigen::MatrixXd::Identity(1, 1), 4.0, Eigen::VectorXd::Ones(1));
  Eigen::VectorXd v2 = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(psi_eval(b, StateVec{v2}) == doctest::Approx(2.0 + 4.0));
}

TEST_CASE("convex: psi_grad matches finite differences") {
  DissipationSpec b = DissipationSpec::with_power_part(
      random_spd(5, 1), 2.6, Eigen::VectorXd::Constant(5, 0.3));
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd v = randn(5, 50 + k);
    Eigen::VectorXd g = psi_grad(b, StateVec{v}).values;
    for (int i = 0; i < 5; ++i) {
      const double eps = 1e-5;
      Eigen::VectorXd vp = v, vm = v;
      vp[i] += eps;
      vm[i] -= eps;
      const double fd =
          (psi_eval(b, StateVec{vp}) - psi_eval(b, StateVec{vm})) / (2 * eps);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("convex: psi1_conjugate closed form") {
  DissipationSpec s = scalar_quadratic(2.0);
  CHECK(psi1_conjugate(s, DualVec{Eigen::VectorXd::Zero(1)}).value == 0.0);
  Eigen::VectorXd xi4 = Eigen::VectorXd::Constant(1, 4.0);
  ConjugateResult r = psi1_conjugate(s, DualVec{xi4});
  CHECK(r.value == doctest::Approx(4.0));
  CHECK(r.witness.value()[0] == doctest::Approx(2.0));
}

TEST_CASE("convex: conjugate_numeric agrees with the closed form") {
  DissipationSpec s = DissipationSpec::quadratic(random_spd(4, 2));
  for (int k = 0; k < 100; ++k) {
    DualVec xi{randn(4, 300 + k)};
    const double closed = psi1_conjugate(s, xi).value;
    Functional F;
    F.value = [&](const Eigen::VectorXd& v) { return psi_eval(s, StateVec{v}); };
    F.grad = [&](const Eigen::VectorXd& v) {
      return psi_grad(s, StateVec{v}).values;
    };
    CHECK(conjugate_numeric(F, xi, 1e-12).value ==
          doctest::Approx(closed).epsilon(1e-8));
  }
}

TEST_CASE("convex: conjugate_numeric scalar oracle and unboundedness") {
  Functional F;
  F.value = [](const Eigen::VectorXd& v) { return 0.5 * v[0] * v[0]; };
  F.grad = [](const Eigen::VectorXd& v) { return v; };
  CHECK(conjugate_numeric(F, DualVec{Eigen::VectorXd::Constant(1, 3.0)}, 1e-12)
            .value == doctest::Approx(4.5));
  CHECK(conjugate_numeric(F, DualVec{Eigen::VectorXd::Zero(1)}, 1e-12).value ==
        doctest::Approx(0.0));

  Functional lin;  // F(v) = v, sup_v (xi*v - v) = +inf for xi != 1
  lin.value = [](const Eigen::VectorXd& v) { return v[0]; };
  lin.grad = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Ones(1).eval();
  };
  ConjugateResult r =
      conjugate_numeric(lin, DualVec{Eigen::VectorXd::Constant(1, 3.0)}, 1e-10);
  CHECK(r.unbounded);
}

TEST_CASE("convex: growth transfer to the conjugate") {
  DissipationSpec s = DissipationSpec::quadratic(random_spd(4, 3));
  s.record_growth(Eigen::MatrixXd::Identity(4, 4));
  const double c = s.growth_lower(), C = s.growth_upper();
  REQUIRE(c > 0.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd xi = randn(4, 70 + k);
    const double star = psi1_conjugate(s, DualVec{xi}).value;
    const double n2 = xi.squaredNorm();
    CHECK(star >= n2 / (4.0 * C) * (1 - 1e-10));
    CHECK(star <= n2 / (4.0 * c) * (1 + 1e-10));
  }
}

TEST_CASE("convex: infimal convolution formula") {
  auto half_sq = [](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); };
  Functional F1s, F2s;
  F1s.value = half_sq;
  F1s.grad = [](const Eigen::VectorXd& v) { return v; };
  F2s = F1s;

  // F1 = F2 = v^2/2, (F1+F2)* (2) = 2^2/4 = 1, optimal split eta = 1.
  ConjugateResult r = infimal_convolution_conjugate(
      F1s, F2s, DualVec{Eigen::VectorXd::Constant(1, 2.0)}, 1e-10);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.witness.value()[0] == doctest::Approx(1.0).epsilon(1e-6));

  // Feasible split eta = 0 bounds from above.
  Eigen::VectorXd xi = randn(4, 11);
  ConjugateResult r4 = infimal_convolution_conjugate(F1s, F2s, DualVec{xi},
                                                     1e-10);
  CHECK(r4.value <= half_sq(xi) + 1e-10);
  CHECK(r4.value == doctest::Approx(0.25 * xi.squaredNorm()).epsilon(1e-8));
}

TEST_CASE("convex: Fenchel-Young gap") {
  DissipationSpec s = DissipationSpec::quadratic(random_spd(3, 5));
  auto F = [&](const Eigen::VectorXd& v) { return psi_eval(s, StateVec{v}); };
  auto Fs = [&](const Eigen::VectorXd& xi) {
    return psi1_conjugate(s, DualVec{xi}).value;
  };
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd v = randn(3, 500 + k);
    // Exact subgradient: gap 0.
    FenchelYoungGap g0 =
        fenchel_young_gap(F, Fs, StateVec{v}, psi_grad(s, StateVec{v}));
    CHECK(g0.clipped <= 1e-8 * (1.0 + std::abs(F(v))));
    // Random pair: nonnegative.
    FenchelYoungGap g =
        fenchel_young_gap(F, Fs, StateVec{v}, DualVec{randn(3, 600 + k)});
    CHECK(g.raw >= -1e-12);
  }
  // Scalar A=2, v=1, xi=0: Psi(1) + Psi*(0) - 0 = 1.
  DissipationSpec sc = scalar_quadratic(2.0);
  FenchelYoungGap g1 = fenchel_young_gap(
      [&](const Eigen::VectorXd& v) { return psi_eval(sc, StateVec{v}); },
      [&](const Eigen::VectorXd& xi) {
        return psi1_conjugate(sc, DualVec{xi}).value;
      },
      StateVec{Eigen::VectorXd::Ones(1)}, DualVec{Eigen::VectorXd::Zero(1)});
  CHECK(g1.raw == doctest::Approx(1.0));
}

TEST_CASE("convex: lambda subgradient check") {
  auto Equad = [](const Eigen::VectorXd& u) { return 0.5 * u.squaredNorm(); };
  auto nsq = [](const Eigen::VectorXd& d) { return d.squaredNorm(); };
  StateVec u{Eigen::VectorXd::Constant(1, 0.7)};
  SubgradientCheck ok = lambda_subgradient_check(
      Equad, u, DualVec{u.values}, 0.0, 64, nsq);
  CHECK(ok.pass);
  // xi = u + 1 is not a subgradient of the quadratic at u.
  SubgradientCheck bad = lambda_subgradient_check(
      Equad, u, DualVec{u.values + Eigen::VectorXd::Ones(1)}, 0.0, 64, nsq);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_slack < -1e-3);
}

TEST_CASE("convex: order reversal of conjugation") {
  // F <= G pointwise implies F* >= G*.
  Functional F, G;
  F.value = [](const Eigen::VectorXd& v) { return 0.5 * v.squaredNorm(); };
  F.grad = [](const Eigen::VectorXd& v) { return v; };
  G.value = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  G.grad = [](const Eigen::VectorXd& v) { return (2.0 * v).eval(); };
  for (int k = 0; k < 10; ++k) {
    DualVec xi{randn(3, 40 + k)};
    CHECK(conjugate_numeric(F, xi, 1e-10).value + 1e-8 >=
          conjugate_numeric(G, xi, 1e-10).value);
  }
}

TEST_CASE("convex: dissipation spec invariants") {
  CHECK_THROWS_AS(DissipationSpec::quadratic(-Eigen::MatrixXd::Identity(2, 2)),
                  ContractViolation);
  CHECK_THROWS_AS(
      DissipationSpec::with_power_part(Eigen::MatrixXd::Identity(2, 2), 0.5,
                                       Eigen::VectorXd::Ones(2)),
      ContractViolation);
  DissipationSpec s = DissipationSpec::quadratic(random_spd(3, 9));
  CHECK(s.mu() > 0.0);
  for (int k = 0; k < 10; ++k)
    CHECK(psi_eval(s, StateVec{randn(3, k)}) >= 0.0);
}
