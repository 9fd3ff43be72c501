#pragma once

// Internal: per-backend kernel entry points. The public dispatch lives in
// kernels_dispatch.cpp; tests use corra::kernels::set_backend to pit these
// against each other on identical inputs.

namespace corra::kernels::scalar {
void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
double dot(const double* x, const double* y, int n);
void axpy(double a, const double* x, double* y, int n);
void scale(double a, double* x, int n);
double sum(const double* x, int n);
double sqdist(const double* x, const double* y, int n);
} // namespace corra::kernels::scalar

#if defined(CORRAUDIT_HAVE_AVX2)
namespace corra::kernels::avx2 {
void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n, bool accumulate);
double dot(const double* x, const double* y, int n);
void axpy(double a, const double* x, double* y, int n);
void scale(double a, double* x, int n);
double sum(const double* x, int n);
double sqdist(const double* x, const double* y, int n);
} // namespace corra::kernels::avx2
#endif
