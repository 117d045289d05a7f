#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dinsys/kernels.hpp"

using namespace dinsys::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

struct IsaGuard {
  ~IsaGuard() { force_isa(cpu_has_avx2() ? Isa::avx2 : Isa::scalar); }
};

}  // namespace

TEST_CASE("kernels: scalar reference values") {
  IsaGuard guard;
  force_isa(Isa::scalar);
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, 5.0, 6.0};
  CHECK(dot(a, b, 3) == doctest::Approx(32.0).epsilon(1e-15));
  const double w[] = {0.5, 0.5, 2.0};
  CHECK(weighted_sq_sum(w, a, 3) == doctest::Approx(0.5 + 2.0 + 18.0));
  CHECK(weighted_abs_pow_sum(w, a, 3.0, 3) ==
        doctest::Approx(0.5 + 4.0 + 54.0));
  double y[] = {1.0, 1.0, 1.0};
  axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);
}

TEST_CASE("kernels: scalar and avx2 variants agree") {
  if (!cpu_has_avx2()) return;
  IsaGuard guard;
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 31u, 128u, 1001u}) {
    auto a = random_vec(n, 10 + static_cast<unsigned>(n));
    auto b = random_vec(n, 20 + static_cast<unsigned>(n));
    auto w = random_vec(n, 30 + static_cast<unsigned>(n));
    for (double& x : w) x = std::abs(x);

    force_isa(Isa::scalar);
    REQUIRE(active_isa() == Isa::scalar);
    const double d_s = dot(a.data(), b.data(), n);
    const double q_s = weighted_sq_sum(w.data(), a.data(), n);
    const double p_s = weighted_abs_pow_sum(w.data(), a.data(), 2.0, n);
    auto y_s = b;
    axpy(0.7, a.data(), y_s.data(), n);

    force_isa(Isa::avx2);
    REQUIRE(active_isa() == Isa::avx2);
    const double d_v = dot(a.data(), b.data(), n);
    const double q_v = weighted_sq_sum(w.data(), a.data(), n);
    const double p_v = weighted_abs_pow_sum(w.data(), a.data(), 2.0, n);
    auto y_v = b;
    axpy(0.7, a.data(), y_v.data(), n);

    CHECK(d_v == doctest::Approx(d_s).epsilon(1e-13));
    CHECK(q_v == doctest::Approx(q_s).epsilon(1e-13));
    CHECK(p_v == doctest::Approx(p_s).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i) CHECK(y_v[i] == y_s[i]);
  }
}

TEST_CASE("kernels: weighted_abs_pow_sum fractional exponent") {
  const double w[] = {1.0, 2.0};
  const double x[] = {-2.0, 3.0};
  const double expect = std::pow(2.0, 1.5) + 2.0 * std::pow(3.0, 1.5);
  CHECK(weighted_abs_pow_sum(w, x, 1.5, 2) == doctest::Approx(expect));
}
