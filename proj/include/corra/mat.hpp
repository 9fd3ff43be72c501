#pragma once

#include <cassert>
#include <vector>

namespace corra {

// Dense row-major matrix of doubles. Small helper shared by every module;
// heavy arithmetic goes through the kernels API, this is just storage.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * size_t(c), fill) {}

    double* row(int r) { return a.data() + size_t(r) * cols; }
    const double* row(int r) const { return a.data() + size_t(r) * cols; }

    double& at(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[size_t(r) * cols + c];
    }
    double at(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[size_t(r) * cols + c];
    }

    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

} // namespace corra
