#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "corra/kernels.hpp"
#include "corra/rng.hpp"

using namespace corra;

namespace {

std::vector<double> random_vec(Rng& rng, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = rng.normal();
    return v;
}

// Plain triple loop, no blocking, no FMA: the answer both backends must agree with.
void naive_nn(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += a[size_t(i) * k + l] * b[size_t(l) * n + j];
            c[size_t(i) * n + j] = acc;
        }
}

double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double m = 0.0;
    for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

struct BackendGuard {
    kernels::Backend prev;
    BackendGuard() : prev(kernels::active_backend()) {}
    ~BackendGuard() { kernels::set_backend(prev); }
};

} // namespace

TEST_CASE("backend dispatch") {
    BackendGuard guard;
    CHECK(kernels::set_backend(kernels::Backend::scalar));
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    CHECK(kernels::active_backend_name() == "scalar");
    if (kernels::avx2_supported()) {
        CHECK(kernels::set_backend(kernels::Backend::avx2));
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
        CHECK(kernels::active_backend_name() == "avx2");
    } else {
        CHECK_FALSE(kernels::set_backend(kernels::Backend::avx2));
    }
    CHECK(kernels::set_backend(kernels::Backend::automatic));
}

TEST_CASE("matmul_nn matches naive reference on both backends") {
    BackendGuard guard;
    Rng rng(11);
    // Odd shapes on purpose: remainders off the 4-wide SIMD lanes.
    const int shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 17, 9}, {5, 1, 3}};
    for (auto& s : shapes) {
        int m = s[0], k = s[1], n = s[2];
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        std::vector<double> want(size_t(m) * n);
        naive_nn(a, b, want, m, k, n);

        for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
            if (backend == kernels::Backend::avx2 && !kernels::avx2_supported()) continue;
            REQUIRE(kernels::set_backend(backend));
            std::vector<double> got(size_t(m) * n, -1.0);
            kernels::matmul_nn(a.data(), b.data(), got.data(), m, k, n);
            CHECK(max_abs_diff(got, want) < 1e-12);

            // accumulate adds on top of existing contents
            std::vector<double> acc(size_t(m) * n, 1.0);
            kernels::matmul_nn(a.data(), b.data(), acc.data(), m, k, n, true);
            for (size_t i = 0; i < acc.size(); ++i)
                CHECK(acc[i] == doctest::Approx(want[i] + 1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("matmul_nt and matmul_tn match transposed naive products") {
    BackendGuard guard;
    Rng rng(12);
    int m = 7, k = 9, n = 5;
    auto a = random_vec(rng, m * k);  // m x k
    auto bt = random_vec(rng, n * k); // B stored n x k
    auto at = random_vec(rng, k * m); // A stored k x m
    auto b = random_vec(rng, k * n);  // k x n

    // Reference: materialize the transposes, then naive_nn.
    std::vector<double> b_mat(size_t(k) * n);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j) b_mat[size_t(i) * n + j] = bt[size_t(j) * k + i];
    std::vector<double> want_nt(size_t(m) * n);
    naive_nn(a, b_mat, want_nt, m, k, n);

    std::vector<double> a_mat(size_t(m) * k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) a_mat[size_t(i) * k + j] = at[size_t(j) * m + i];
    std::vector<double> want_tn(size_t(m) * n);
    naive_nn(a_mat, b, want_tn, m, k, n);

    for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
        if (backend == kernels::Backend::avx2 && !kernels::avx2_supported()) continue;
        REQUIRE(kernels::set_backend(backend));
        std::vector<double> got(size_t(m) * n);
        kernels::matmul_nt(a.data(), bt.data(), got.data(), m, k, n);
        CHECK(max_abs_diff(got, want_nt) < 1e-12);
        kernels::matmul_tn(at.data(), b.data(), got.data(), m, k, n);
        CHECK(max_abs_diff(got, want_tn) < 1e-12);
    }
}

TEST_CASE("vector kernels agree across backends and sizes") {
    BackendGuard guard;
    Rng rng(13);
    for (int n : {1, 2, 3, 4, 7, 8, 33, 250}) {
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);

        double dot_ref = 0.0, sum_ref = 0.0, sq_ref = 0.0;
        for (int i = 0; i < n; ++i) {
            dot_ref += x[size_t(i)] * y[size_t(i)];
            sum_ref += x[size_t(i)];
            double d = x[size_t(i)] - y[size_t(i)];
            sq_ref += d * d;
        }
        std::vector<double> axpy_ref = y;
        for (int i = 0; i < n; ++i) axpy_ref[size_t(i)] += 0.7 * x[size_t(i)];
        std::vector<double> scale_ref = x;
        for (auto& v : scale_ref) v *= -1.3;

        for (auto backend : {kernels::Backend::scalar, kernels::Backend::avx2}) {
            if (backend == kernels::Backend::avx2 && !kernels::avx2_supported()) continue;
            REQUIRE(kernels::set_backend(backend));
            CHECK(kernels::dot(x.data(), y.data(), n) == doctest::Approx(dot_ref).epsilon(1e-12));
            CHECK(kernels::sum(x.data(), n) == doctest::Approx(sum_ref).epsilon(1e-12));
            CHECK(kernels::sqdist(x.data(), y.data(), n) ==
                  doctest::Approx(sq_ref).epsilon(1e-12));
            auto y2 = y;
            kernels::axpy(0.7, x.data(), y2.data(), n);
            CHECK(max_abs_diff(y2, axpy_ref) < 1e-12);
            auto x2 = x;
            kernels::scale(-1.3, x2.data(), n);
            CHECK(max_abs_diff(x2, scale_ref) < 1e-12);
        }
    }
}

TEST_CASE("scalar and avx2 give closely matching results on a large product") {
    if (!kernels::avx2_supported()) return;
    BackendGuard guard;
    Rng rng(14);
    int m = 31, k = 64, n = 29;
    auto a = random_vec(rng, m * k);
    auto b = random_vec(rng, k * n);

    REQUIRE(kernels::set_backend(kernels::Backend::scalar));
    std::vector<double> c_scalar(size_t(m) * n);
    kernels::matmul_nn(a.data(), b.data(), c_scalar.data(), m, k, n);

    REQUIRE(kernels::set_backend(kernels::Backend::avx2));
    std::vector<double> c_avx(size_t(m) * n);
    kernels::matmul_nn(a.data(), b.data(), c_avx.data(), m, k, n);

    // FMA reassociation allows tiny drift, nothing more.
    CHECK(max_abs_diff(c_scalar, c_avx) < 1e-10);
}
