#include "corra/kernels.hpp"

#include "kernels_impl.hpp"

namespace corra::kernels {

namespace {

struct Vtable {
    void (*matmul_nn)(const double*, const double*, double*, int, int, int, bool);
    void (*matmul_nt)(const double*, const double*, double*, int, int, int, bool);
    void (*matmul_tn)(const double*, const double*, double*, int, int, int, bool);
    double (*dot)(const double*, const double*, int);
    void (*axpy)(double, const double*, double*, int);
    void (*scale)(double, double*, int);
    double (*sum)(const double*, int);
    double (*sqdist)(const double*, const double*, int);
};

constexpr Vtable kScalar = {
    scalar::matmul_nn, scalar::matmul_nt, scalar::matmul_tn,
    scalar::dot, scalar::axpy, scalar::scale, scalar::sum, scalar::sqdist,
};

#if defined(CORRAUDIT_HAVE_AVX2)
constexpr Vtable kAvx2 = {
    avx2::matmul_nn, avx2::matmul_nt, avx2::matmul_tn,
    avx2::dot, avx2::axpy, avx2::scale, avx2::sum, avx2::sqdist,
};
#endif

bool detect_avx2() {
#if defined(CORRAUDIT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    bool has_avx2 = detect_avx2();
    Backend current = Backend::scalar;
    const Vtable* vt = &kScalar;

    State() { select(Backend::automatic); }

    bool select(Backend b) {
        switch (b) {
        case Backend::automatic:
#if defined(CORRAUDIT_HAVE_AVX2)
            if (has_avx2) {
                current = Backend::avx2;
                vt = &kAvx2;
                return true;
            }
#endif
            current = Backend::scalar;
            vt = &kScalar;
            return true;
        case Backend::scalar:
            current = Backend::scalar;
            vt = &kScalar;
            return true;
        case Backend::avx2:
#if defined(CORRAUDIT_HAVE_AVX2)
            if (has_avx2) {
                current = Backend::avx2;
                vt = &kAvx2;
                return true;
            }
#endif
            return false;
        }
        return false;
    }
};

State& state() {
    static State s;
    return s;
}

} // namespace

bool set_backend(Backend b) { return state().select(b); }
Backend active_backend() { return state().current; }

std::string_view active_backend_name() {
    switch (state().current) {
    case Backend::avx2: return "avx2";
    default: return "scalar";
    }
}

bool avx2_supported() { return state().has_avx2; }

void matmul_nn(const double* A, const double* B, double* C, int m, int k, int n, bool acc) {
    state().vt->matmul_nn(A, B, C, m, k, n, acc);
}
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n, bool acc) {
    state().vt->matmul_nt(A, B, C, m, k, n, acc);
}
void matmul_tn(const double* A, const double* B, double* C, int m, int k, int n, bool acc) {
    state().vt->matmul_tn(A, B, C, m, k, n, acc);
}
double dot(const double* x, const double* y, int n) { return state().vt->dot(x, y, n); }
void axpy(double a, const double* x, double* y, int n) { state().vt->axpy(a, x, y, n); }
void scale(double a, double* x, int n) { state().vt->scale(a, x, n); }
double sum(const double* x, int n) { return state().vt->sum(x, n); }
double sqdist(const double* x, const double* y, int n) { return state().vt->sqdist(x, y, n); }

} // namespace corra::kernels
