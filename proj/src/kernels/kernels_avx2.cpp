// AVX2+FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; it must not be entered unless cpuid reports support.

#include "kernels_impl.hpp"

#if defined(CORRAUDIT_HAVE_AVX2)

#include <immintrin.h>

#include <cstring>

namespace corra::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

} // namespace

void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
    const int n4 = n & ~3;
    for (int i = 0; i < m; ++i) {
        const double* arow = A + size_t(i) * k;
        double* crow = C + size_t(i) * n;
        for (int l = 0; l < k; ++l) {
            const __m256d a = _mm256_set1_pd(arow[l]);
            const double* brow = B + size_t(l) * n;
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d c = _mm256_loadu_pd(crow + j);
                c = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j), c);
                _mm256_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += arow[l] * brow[j];
        }
    }
}

void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* arow = A + size_t(i) * k;
        double* crow = C + size_t(i) * n;
        for (int j = 0; j < n; ++j) {
            crow[j] = accumulate ? crow[j] + dot(arow, B + size_t(j) * k, k)
                                 : dot(arow, B + size_t(j) * k, k);
        }
    }
}

void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(double) * size_t(m) * size_t(n));
    const int n4 = n & ~3;
    for (int l = 0; l < k; ++l) {
        const double* arow = A + size_t(l) * m;
        const double* brow = B + size_t(l) * n;
        for (int i = 0; i < m; ++i) {
            const __m256d a = _mm256_set1_pd(arow[i]);
            double* crow = C + size_t(i) * n;
            int j = 0;
            for (; j < n4; j += 4) {
                __m256d c = _mm256_loadu_pd(crow + j);
                c = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j), c);
                _mm256_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

double dot(const double* x, const double* y, int n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int i = 0;
    const int n8 = n & ~7;
    for (; i < n8; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, int n) {
    const __m256d av = _mm256_set1_pd(a);
    int i = 0;
    const int n4 = n & ~3;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, int n) {
    const __m256d av = _mm256_set1_pd(a);
    int i = 0;
    const int n4 = n & ~3;
    for (; i < n4; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double sum(const double* x, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    const int n4 = n & ~3;
    for (; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sqdist(const double* x, const double* y, int n) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    const int n4 = n & ~3;
    for (; i < n4; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

} // namespace corra::kernels::avx2

#endif // CORRAUDIT_HAVE_AVX2
