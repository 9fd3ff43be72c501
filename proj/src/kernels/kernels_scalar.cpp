#include "kernels_impl.hpp"

#include <cstring>

namespace corra::kernels::scalar {

void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
    for (int i = 0; i < m; ++i) {
        const double* arow = A + size_t(i) * k;
        double* crow = C + size_t(i) * n;
        for (int l = 0; l < k; ++l) {
            const double a = arow[l];
            const double* brow = B + size_t(l) * n;
            for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* arow = A + size_t(i) * k;
        double* crow = C + size_t(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = B + size_t(j) * k;
            double s = 0.0;
            for (int l = 0; l < k; ++l) s += arow[l] * brow[l];
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
    for (int l = 0; l < k; ++l) {
        const double* arow = A + size_t(l) * m;
        const double* brow = B + size_t(l) * n;
        for (int i = 0; i < m; ++i) {
            const double a = arow[i];
            double* crow = C + size_t(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, int n) {
    for (int i = 0; i < n; ++i) x[i] *= a;
}

double sum(const double* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i];
    return s;
}

double sqdist(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

} // namespace corra::kernels::scalar
