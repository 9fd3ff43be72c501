#pragma once

// Shared fixtures: small worlds/corpora that generate in milliseconds, plus
// stub models with hand-controlled residuals for degenerate-case contracts.

#include <cmath>
#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/model.hpp"
#include "corra/world.hpp"

namespace testing {

inline corra::world::WorldConfig tiny_world_config() {
    corra::world::WorldConfig c;
    c.n_countries = 6;
    c.n_cities = 8;
    c.n_colors = 5;
    c.n_landmarks = 6;
    c.grid_n = 6;
    return c;
}

inline corra::world::WorldStructure tiny_world(uint64_t seed = 1) {
    return corra::world::generate_world(seed, tiny_world_config());
}

inline corra::corpus::CorpusConfig tiny_corpus_config(double delta = 0.25, int n_tokens = 6000,
                                                      uint64_t seed = 2) {
    corra::corpus::CorpusConfig c;
    c.delta = delta;
    c.n_tokens = n_tokens;
    c.seed = seed;
    return c;
}

inline corra::corpus::Corpus tiny_corpus(const corra::world::WorldStructure& w,
                                         double delta = 0.25, int n_tokens = 6000,
                                         uint64_t seed = 2) {
    return corra::corpus::generate_corpus(w, tiny_corpus_config(delta, n_tokens, seed));
}

// Residual streams are one constant vector at every site and position; logits
// always favor token 4. Exercises contracts that only need the interface.
struct ConstantModel : corra::model::LanguageModel {
    int width = 8;
    int n_vocab = 16;
    std::vector<double> fill;

    ConstantModel() : fill(8, 1.0) {}

    int d_model() const override { return width; }
    int n_sites() const override { return 2; }
    int vocab_size() const override { return n_vocab; }
    std::string regime() const override { return "pretrained"; }

    corra::model::Trace forward_with_trace(
        const std::vector<int>& tokens,
        const std::vector<corra::model::Hook>& hooks = {}) const override {
        corra::model::Trace t;
        int n = int(tokens.size());
        for (int s = 0; s < 2; ++s) {
            corra::Mat r(n, width);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < width; ++j) r.at(i, j) = fill[size_t(j)];
            corra::model::apply_hooks_at_site(r, s, hooks);
            t.resid.push_back(std::move(r));
        }
        t.logits.assign(size_t(n_vocab), 0.0);
        t.logits[4] = 1.0;
        t.probs.assign(size_t(n_vocab), 0.0);
        double z = 0.0;
        for (double l : t.logits) z += std::exp(l);
        for (size_t i = 0; i < t.probs.size(); ++i) t.probs[i] = std::exp(t.logits[i]) / z;
        return t;
    }
};

// Uniform next-token distribution regardless of input.
struct UniformModel : corra::model::LanguageModel {
    int n_vocab = 16;

    int d_model() const override { return 4; }
    int n_sites() const override { return 2; }
    int vocab_size() const override { return n_vocab; }
    std::string regime() const override { return "pretrained"; }

    corra::model::Trace forward_with_trace(
        const std::vector<int>& tokens,
        const std::vector<corra::model::Hook>& hooks = {}) const override {
        (void)hooks;
        corra::model::Trace t;
        t.resid.assign(2, corra::Mat(int(tokens.size()), 4));
        t.logits.assign(size_t(n_vocab), 0.0);
        t.probs.assign(size_t(n_vocab), 1.0 / n_vocab);
        return t;
    }
};

} // namespace testing
