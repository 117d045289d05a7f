#pragma once

#include <cstddef>

// Low-level arithmetic kernels used by the norm and quadrature code.
// Each kernel has a scalar reference implementation and, on x86-64 with
// AVX2, a vectorized variant selected once at startup. force_isa() pins
// the implementation for equivalence testing.

namespace dinsys::kernels {

enum class Isa { scalar, avx2 };

// ISA the dispatcher resolved to (or was pinned to).
Isa active_isa();

// Pin the kernel set; Isa::avx2 is ignored when the CPU lacks it.
void force_isa(Isa isa);

bool cpu_has_avx2();

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y += alpha*x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// sum_i w[i]*x[i]^2
double weighted_sq_sum(const double* w, const double* x, std::size_t n);

// sum_i w[i]*|x[i]|^p, p > 0. Vectorized for p == 2, scalar otherwise.
double weighted_abs_pow_sum(const double* w, const double* x, double p,
                            std::size_t n);

}  // namespace dinsys::kernels
