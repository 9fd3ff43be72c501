#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "corra/error.hpp"

namespace corra {

// Deterministic RNG with hand-rolled distributions. std::*_distribution is
// implementation-defined, so every draw here goes through our own code to keep
// frozen test values and serialized artifacts stable across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed + 0x9E3779B97F4A7C15ull)) {}

    uint64_t next_u64() {
        // xorshift64* on a splitmix-initialized state
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t uniform(uint64_t n) {
        if (n == 0) fail(ErrorCode::invalid_argument, "Rng::uniform: n must be > 0");
        // rejection sampling to avoid modulo bias
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 bits.
    double uniform_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal, Box-Muller with cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform_real(); // (0, 1]
        double u2 = uniform_real();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(uniform(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Random permutation of [0, n).
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

    // Random derangement of [0, n) by rejection. n must be >= 2.
    std::vector<int> derangement(int n) {
        if (n < 2) fail(ErrorCode::invalid_argument, "derangement needs n >= 2");
        for (;;) {
            std::vector<int> p = permutation(n);
            bool ok = true;
            for (int i = 0; i < n; ++i)
                if (p[i] == i) { ok = false; break; }
            if (ok) return p;
        }
    }

    // Child generator derived from this one's seed and a label. Used to give
    // every pipeline component an independent, reproducible stream.
    Rng child(std::string_view label) const {
        uint64_t h = 0xcbf29ce484222325ull ^ state_;
        for (char c : label) {
            h ^= uint64_t(uint8_t(c));
            h *= 0x100000001b3ull;
        }
        return Rng(h);
    }

private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        x = x ^ (x >> 31);
        return x ? x : 0x9E3779B97F4A7C15ull; // xorshift state must be nonzero
    }

    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace corra
