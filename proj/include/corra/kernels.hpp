#pragma once

#include <cstddef>
#include <string_view>

namespace corra::kernels {

// Double-precision kernels behind the training and analysis inner loops.
// Each operation has a scalar reference implementation and, where the build
// and CPU allow, an AVX2+FMA variant. The active variant is chosen once at
// startup from cpuid; set_backend() can force a specific one (tests compare
// scalar vs SIMD results through this switch).

enum class Backend {
    automatic, // pick best supported at runtime
    scalar,
    avx2,
};

// Returns false if the requested backend is not supported on this machine.
bool set_backend(Backend b);
Backend active_backend();
std::string_view active_backend_name();
bool avx2_supported();

// C(m x n) = A(m x k) * B(k x n); accumulate adds into C instead of overwriting.
void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

// C(m x n) = A(m x k) * B^T, with B stored as (n x k).
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

// C(m x n) = A^T * B, with A stored as (k x m) and B as (k x n).
void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate = false);

double dot(const double* x, const double* y, int n);

// y += a * x
void axpy(double a, const double* x, double* y, int n);

void scale(double a, double* x, int n);
double sum(const double* x, int n);

// Squared Euclidean distance between two n-vectors.
double sqdist(const double* x, const double* y, int n);

} // namespace corra::kernels
