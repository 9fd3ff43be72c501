#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "corra/checkpoint.hpp"
#include "corra/error.hpp"
#include "corra/train.hpp"
#include "helpers.hpp"

using namespace corra;

namespace {

// Independent forward pass: plain loops, no shared kernel code. Implements the
// same definition (learned pos emb, pre-norm LN eps 1e-5 with biased variance,
// causal softmax attention scaled by 1/sqrt(d_head), ReLU FFN, final LN,
// untied unembedding with bias).
struct RefOut {
    std::vector<Mat> resid;
    Mat logits;
};

Mat ref_ln(const Mat& x, const Mat& g, const Mat& b) {
    Mat y(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        double mu = 0.0;
        for (int c = 0; c < x.cols; ++c) mu += x.at(r, c);
        mu /= x.cols;
        double var = 0.0;
        for (int c = 0; c < x.cols; ++c) var += (x.at(r, c) - mu) * (x.at(r, c) - mu);
        var /= x.cols;
        double rs = 1.0 / std::sqrt(var + 1e-5);
        for (int c = 0; c < x.cols; ++c)
            y.at(r, c) = (x.at(r, c) - mu) * rs * g.at(0, c) + b.at(0, c);
    }
    return y;
}

void ref_hooks(Mat& x, int site, const std::vector<model::Hook>& hooks) {
    for (const auto& h : hooks) {
        if (h.site != site) continue;
        for (int i = 0; i < x.rows; ++i) {
            if (h.pos != -1 && h.pos != i) continue;
            for (int c = 0; c < x.cols; ++c) x.at(i, c) += h.delta[size_t(c)];
        }
    }
}

RefOut ref_forward(const model::Transformer& m, const std::vector<int>& tokens,
                   const std::vector<model::Hook>& hooks = {}) {
    const auto& cfg = m.config;
    const auto& p = m.params;
    int T = int(tokens.size()), d = cfg.d_model, dh = cfg.d_head();
    RefOut out;

    Mat x(T, d);
    for (int i = 0; i < T; ++i)
        for (int c = 0; c < d; ++c)
            x.at(i, c) = p.tok_emb.at(tokens[size_t(i)], c) + p.pos_emb.at(i, c);
    ref_hooks(x, 0, hooks);
    out.resid.push_back(x);

    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& blk = p.blocks[size_t(l)];
        Mat a = ref_ln(x, blk.ln1_g, blk.ln1_b);

        auto proj = [&](const Mat& w, const Mat& bias) {
            Mat r(T, d);
            for (int i = 0; i < T; ++i)
                for (int c = 0; c < d; ++c) {
                    double acc = bias.at(0, c);
                    for (int k = 0; k < d; ++k) acc += a.at(i, k) * w.at(k, c);
                    r.at(i, c) = acc;
                }
            return r;
        };
        Mat q = proj(blk.wq, blk.bq), k = proj(blk.wk, blk.bk), v = proj(blk.wv, blk.bv);

        Mat z(T, d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            int off = h * dh;
            for (int i = 0; i < T; ++i) {
                std::vector<double> w(size_t(i) + 1);
                double total = 0.0;
                for (int j = 0; j <= i; ++j) {
                    double s = 0.0;
                    for (int c = 0; c < dh; ++c) s += q.at(i, off + c) * k.at(j, off + c);
                    w[size_t(j)] = std::exp(s / std::sqrt(double(dh)));
                    total += w[size_t(j)];
                }
                for (int j = 0; j <= i; ++j)
                    for (int c = 0; c < dh; ++c)
                        z.at(i, off + c) += w[size_t(j)] / total * v.at(j, off + c);
            }
        }

        for (int i = 0; i < T; ++i)
            for (int c = 0; c < d; ++c) {
                double acc = blk.bo.at(0, c);
                for (int k2 = 0; k2 < d; ++k2) acc += z.at(i, k2) * blk.wo.at(k2, c);
                x.at(i, c) += acc;
            }

        Mat b = ref_ln(x, blk.ln2_g, blk.ln2_b);
        for (int i = 0; i < T; ++i) {
            std::vector<double> hidden(size_t(cfg.d_ff));
            for (int f = 0; f < cfg.d_ff; ++f) {
                double acc = blk.b1.at(0, f);
                for (int c = 0; c < d; ++c) acc += b.at(i, c) * blk.w1.at(c, f);
                hidden[size_t(f)] = acc > 0.0 ? acc : 0.0;
            }
            for (int c = 0; c < d; ++c) {
                double acc = blk.b2.at(0, c);
                for (int f = 0; f < cfg.d_ff; ++f) acc += hidden[size_t(f)] * blk.w2.at(f, c);
                x.at(i, c) += acc;
            }
        }
        ref_hooks(x, l + 1, hooks);
        out.resid.push_back(x);
    }

    Mat y = ref_ln(x, p.lnf_g, p.lnf_b);
    out.logits = Mat(T, cfg.n_vocab);
    for (int i = 0; i < T; ++i)
        for (int t = 0; t < cfg.n_vocab; ++t) {
            double acc = p.unemb_b.at(0, t);
            for (int c = 0; c < d; ++c) acc += y.at(i, c) * p.unemb.at(c, t);
            out.logits.at(i, t) = acc;
        }
    return out;
}

double max_diff(const Mat& a, const Mat& b) {
    REQUIRE(a.rows == b.rows);
    REQUIRE(a.cols == b.cols);
    double m = 0.0;
    for (size_t i = 0; i < a.a.size(); ++i) m = std::max(m, std::abs(a.a[i] - b.a[i]));
    return m;
}

model::ModelConfig small_config(int layers, int heads, int d, int ff, int vocab) {
    model::ModelConfig c;
    c.n_layers = layers;
    c.n_heads = heads;
    c.d_model = d;
    c.d_ff = ff;
    c.n_ctx = 12;
    c.n_vocab = vocab;
    c.seed = 77;
    return c;
}

// Ten fixed sentences with pairwise distinct first words, so the only
// irreducible uncertainty is the sentence choice at position 1. Held-out
// entries duplicate two training sentences (corpora repeat sentences).
corpus::Corpus micro_corpus() {
    auto w = testing::tiny_world();
    auto full = testing::tiny_corpus(w, 0.0, 4000, 31);
    corpus::Corpus c;
    c.config = full.config;
    c.vocab = full.vocab;
    std::set<int> first_seen;
    for (const auto& seq : full.sequences) {
        if (c.sequences.size() == 10) break;
        if (!first_seen.insert(seq[1]).second) continue;
        c.sequences.push_back(seq);
        c.heldout.push_back(0);
    }
    c.sequences.push_back(c.sequences[0]);
    c.heldout.push_back(1);
    c.sequences.push_back(c.sequences[1]);
    c.heldout.push_back(1);
    return c;
}

// Nine copies of one location sentence plus one other: the only uncertainty is
// the 9:1 sentence pick, an entropy floor of about 0.04 nats/token.
corpus::Corpus memorize_corpus() {
    auto w = testing::tiny_world();
    corpus::Corpus c;
    c.config = testing::tiny_corpus_config();
    c.vocab = corpus::build_vocab(w);
    auto land = w.ids_of_kind(world::Kind::landmark);
    auto sentence = [&](int lm) {
        auto p = w.position.at(lm);
        std::vector<int> s{corpus::Vocab::bos};
        for (const auto& word :
             {w.entity(lm).name, std::string("is"), std::string("at"), std::string("row"),
              std::to_string(p.y), std::string("col"), std::to_string(p.x)})
            s.push_back(c.vocab.id(word));
        s.push_back(corpus::Vocab::eos);
        return s;
    };
    for (int i = 0; i < 9; ++i) {
        c.sequences.push_back(sentence(land[0]));
        c.heldout.push_back(0);
    }
    c.sequences.push_back(sentence(land[1]));
    c.heldout.push_back(0);
    for (int i = 0; i < 2; ++i) {
        c.sequences.push_back(sentence(land[0]));
        c.heldout.push_back(1);
    }
    return c;
}

// Exact-prefix continuation entropy: the cross-entropy floor any model faces
// on this corpus, computed by counting.
double irreducible_mean_loss(const std::vector<std::vector<int>>& seqs) {
    double total = 0.0;
    long n = 0;
    for (const auto& seq : seqs)
        for (size_t i = 0; i + 1 < seq.size(); ++i) {
            std::map<int, long> cont;
            long denom = 0;
            for (const auto& other : seqs) {
                if (other.size() <= i + 1) continue;
                if (!std::equal(seq.begin(), seq.begin() + long(i) + 1, other.begin())) continue;
                cont[other[i + 1]]++;
                denom++;
            }
            total += -std::log(double(cont.at(seq[i + 1])) / double(denom));
            n++;
        }
    return total / double(n);
}

} // namespace

TEST_CASE("forward pass matches the independent reference implementation") {
    for (auto cfg : {small_config(1, 1, 4, 8, 9), small_config(2, 4, 8, 16, 11)}) {
        auto m = model::init_model(cfg);
        std::vector<int> tokens{0, 5, 7, 3, 8, 2};
        auto trace = m.forward_with_trace(tokens);
        auto ref = ref_forward(m, tokens);

        REQUIRE(trace.resid.size() == size_t(cfg.n_layers + 1));
        for (size_t s = 0; s < trace.resid.size(); ++s)
            CHECK(max_diff(trace.resid[s], ref.resid[s]) < 1e-10);
        for (int t = 0; t < cfg.n_vocab; ++t)
            CHECK(trace.logits[size_t(t)] ==
                  doctest::Approx(ref.logits.at(int(tokens.size()) - 1, t)).epsilon(1e-10));

        double total = 0.0;
        for (double p : trace.probs) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("hooks steer the reference implementation identically") {
    auto cfg = small_config(2, 2, 6, 12, 10);
    auto m = model::init_model(cfg);
    std::vector<int> tokens{1, 4, 9, 6};
    std::vector<model::Hook> hooks{
        {0, 2, {0.5, -1.0, 0.0, 2.0, 0.25, -0.75}},
        {1, -1, {1.0, 1.0, -2.0, 0.5, 0.0, 3.0}},
        {1, 1, {-0.5, 0.0, 0.0, 0.0, 1.5, 0.0}},
    };
    auto trace = m.forward_with_trace(tokens, hooks);
    auto ref = ref_forward(m, tokens, hooks);
    for (size_t s = 0; s < trace.resid.size(); ++s)
        CHECK(max_diff(trace.resid[s], ref.resid[s]) < 1e-10);
}

TEST_CASE("zero or cancelling hooks are bit-exact no-ops") {
    auto cfg = small_config(2, 2, 6, 12, 10);
    auto m = model::init_model(cfg);
    std::vector<int> tokens{1, 4, 9, 6};
    auto base = m.forward_with_trace(tokens);

    std::vector<double> delta{0.3, -0.2, 1.0, 0.0, -4.0, 2.5};
    std::vector<double> neg = delta;
    for (auto& v : neg) v = -v;
    auto cancelled = m.forward_with_trace(tokens, {{1, 2, delta}, {1, 2, neg}});
    auto zero = m.forward_with_trace(tokens, {{0, -1, std::vector<double>(6, 0.0)}});
    for (size_t s = 0; s < base.resid.size(); ++s) {
        CHECK(base.resid[s].a == cancelled.resid[s].a);
        CHECK(base.resid[s].a == zero.resid[s].a);
    }
    CHECK(base.logits == cancelled.logits);
    CHECK(base.probs == zero.probs);
}

TEST_CASE("hook additivity: two hooks at one site equal their sum") {
    auto cfg = small_config(1, 2, 6, 12, 10);
    auto m = model::init_model(cfg);
    std::vector<int> tokens{2, 7, 5};
    std::vector<double> h1{1.0, 0.0, -2.0, 0.5, 0.0, 0.0};
    std::vector<double> h2{0.0, 3.0, 1.0, -0.5, 2.0, -1.0};
    std::vector<double> sum(6);
    for (int i = 0; i < 6; ++i) sum[size_t(i)] = h1[size_t(i)] + h2[size_t(i)];
    auto split = m.forward_with_trace(tokens, {{1, 0, h1}, {1, 0, h2}});
    auto joint = m.forward_with_trace(tokens, {{1, 0, sum}});
    for (size_t s = 0; s < split.resid.size(); ++s)
        CHECK(max_diff(split.resid[s], joint.resid[s]) < 1e-12);
}

TEST_CASE("causal masking: the future never reaches earlier positions") {
    auto cfg = small_config(2, 2, 8, 16, 12);
    auto m = model::init_model(cfg);
    auto a = m.forward_with_trace({3, 6, 9, 11});
    auto b = m.forward_with_trace({3, 6, 9, 4}); // only the last token differs
    for (size_t s = 0; s < a.resid.size(); ++s)
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < cfg.d_model; ++c)
                CHECK(a.resid[s].at(i, c) == b.resid[s].at(i, c));
}

TEST_CASE("token and hook validation") {
    auto cfg = small_config(1, 1, 4, 8, 9);
    auto m = model::init_model(cfg);
    CHECK_THROWS_AS(m.forward_with_trace({}), Error);
    CHECK_THROWS_AS(m.forward_with_trace({0, 9}), Error);  // token out of range
    CHECK_THROWS_AS(m.forward_with_trace({0, -1}), Error);
    CHECK_THROWS_AS(m.forward_with_trace(std::vector<int>(13, 1)), Error); // beyond n_ctx
    CHECK_THROWS_AS(m.forward_with_trace({0, 1}, {{5, 0, std::vector<double>(4, 0.0)}}), Error);
    CHECK_THROWS_AS(m.forward_with_trace({0, 1}, {{0, 7, std::vector<double>(4, 0.0)}}), Error);
    CHECK_THROWS_AS(m.forward_with_trace({0, 1}, {{0, 0, std::vector<double>(3, 0.0)}}), Error);
}

TEST_CASE("analytic gradient matches central finite differences") {
    auto cfg = small_config(2, 2, 8, 12, 10);
    auto m = model::init_model(cfg);
    std::vector<int> tokens{1, 7, 3, 9, 0, 5};

    auto grad = model::Params::zeros_like(m.params);
    auto [loss, n_pred] = m.loss_and_grad(tokens, &grad);
    CHECK(n_pred == 5);
    CHECK(loss > 0.0);

    Rng rng(123);
    double h = 1e-5;
    int checked = 0;
    auto probe = [&](const std::string&, Mat& mat, Mat& gmat) {
        for (int rep = 0; rep < 3; ++rep) {
            int idx = rng.uniform(int(mat.a.size()));
            double keep = mat.a[size_t(idx)];
            mat.a[size_t(idx)] = keep + h;
            double up = m.loss_and_grad(tokens, nullptr).first;
            mat.a[size_t(idx)] = keep - h;
            double down = m.loss_and_grad(tokens, nullptr).first;
            mat.a[size_t(idx)] = keep;
            double fd = (up - down) / (2.0 * h);
            double ana = gmat.a[size_t(idx)];
            CHECK(std::abs(fd - ana) < 1e-6 + 1e-4 * std::max(std::abs(fd), std::abs(ana)));
            ++checked;
        }
    };
    // Walk params and grad in lockstep (same visit order).
    std::vector<Mat*> pmats, gmats;
    m.params.visit([&](const std::string&, Mat& mm) { pmats.push_back(&mm); });
    grad.visit([&](const std::string&, Mat& mm) { gmats.push_back(&mm); });
    REQUIRE(pmats.size() == gmats.size());
    for (size_t i = 0; i < pmats.size(); ++i) probe("", *pmats[i], *gmats[i]);
    CHECK(checked == int(pmats.size()) * 3);
}

TEST_CASE("loss excludes positions before first_pred") {
    auto cfg = small_config(1, 2, 8, 12, 10);
    auto m = model::init_model(cfg);
    std::vector<int> tokens{2, 8, 1, 6, 4};
    auto ref = ref_forward(m, tokens);

    auto ce_at = [&](int i) {
        double mx = -1e300;
        for (int t = 0; t < cfg.n_vocab; ++t) mx = std::max(mx, ref.logits.at(i, t));
        double z = 0.0;
        for (int t = 0; t < cfg.n_vocab; ++t) z += std::exp(ref.logits.at(i, t) - mx);
        return -(ref.logits.at(i, tokens[size_t(i) + 1]) - mx - std::log(z));
    };

    for (int fp = 0; fp < 4; ++fp) {
        auto [loss, n] = m.loss_and_grad(tokens, nullptr, fp);
        CHECK(n == 4 - fp);
        double want = 0.0;
        for (int i = fp; i < 4; ++i) want += ce_at(i);
        CHECK(loss == doctest::Approx(want).epsilon(1e-8));
    }
    auto [l4, n4] = m.loss_and_grad(tokens, nullptr, 4);
    CHECK(l4 == 0.0);
    CHECK(n4 == 0);
    CHECK_THROWS_AS(m.loss_and_grad(tokens, nullptr, 5), Error);
    CHECK_THROWS_AS(m.loss_and_grad(tokens, nullptr, -1), Error);

    // Gradients accumulate across calls instead of overwriting.
    auto g1 = model::Params::zeros_like(m.params);
    m.loss_and_grad(tokens, &g1);
    auto g2 = model::Params::zeros_like(m.params);
    m.loss_and_grad(tokens, &g2);
    m.loss_and_grad(tokens, &g2);
    CHECK(g2.tok_emb.at(tokens[0], 0) == doctest::Approx(2.0 * g1.tok_emb.at(tokens[0], 0)));
    CHECK(g2.unemb_b.at(0, 3) == doctest::Approx(2.0 * g1.unemb_b.at(0, 3)));
}

TEST_CASE("reciprocal rank and argmax tie rules") {
    std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    CHECK(model::reciprocal_rank(p, 3) == 1.0);
    CHECK(model::reciprocal_rank(p, 0) == doctest::Approx(0.25));
    CHECK(model::reciprocal_rank(p, 2) == doctest::Approx(0.5));
    std::vector<double> uniform(4, 0.25);
    CHECK(model::reciprocal_rank(uniform, 0) == 1.0); // ties rank by token id
    CHECK(model::reciprocal_rank(uniform, 3) == doctest::Approx(0.25));
    CHECK_THROWS_AS(model::reciprocal_rank(p, 4), Error);

    CHECK(model::argmax_token({0.4, 0.4, 0.2}) == 0); // tie to the smaller id
    CHECK(model::argmax_token({0.1, 0.0, 0.9}) == 2);
    CHECK_THROWS_AS(model::argmax_token({}), Error);

    Rng r1(5), r2(5);
    std::vector<double> dist{0.5, 0.25, 0.25};
    for (int i = 0; i < 20; ++i) {
        int a = model::sample_token(dist, r1);
        int b = model::sample_token(dist, r2);
        CHECK(a == b);
        CHECK(a >= 0);
        CHECK(a < 3);
    }
    Rng r3(6);
    CHECK_THROWS_AS(model::sample_token({0.0, 0.0}, r3), Error);
}

TEST_CASE("pretraining memorizes a ten-sentence corpus") {
    auto c = memorize_corpus();
    model::ModelConfig mcfg;
    mcfg.n_layers = 1;
    mcfg.n_heads = 4;
    mcfg.d_model = 32;
    mcfg.d_ff = 64;
    mcfg.n_ctx = 16;
    mcfg.n_vocab = c.vocab.size();
    mcfg.seed = 3;

    train::TrainConfig tcfg;
    tcfg.steps = 1500;
    tcfg.batch = 4;
    tcfg.lr = 3e-3;
    tcfg.seed = 4;
    tcfg.log_every = 100;

    auto m = train::pretrain(mcfg, c, tcfg, "whash");
    std::vector<std::vector<int>> train_seqs;
    for (size_t i = 0; i < c.sequences.size(); ++i)
        if (!c.heldout[i]) train_seqs.push_back(c.sequences[i]);
    double train_loss = m.mean_loss(train_seqs);
    double floor = irreducible_mean_loss(train_seqs);
    CHECK(floor < 0.045);
    CHECK(train_loss < 0.05);
    CHECK(train_loss < floor + 0.008); // fit to within a hair of the counting floor

    // Held-out copies of the majority sentence score far below uniform ln(V).
    std::vector<std::vector<int>> held;
    for (size_t i = 0; i < c.sequences.size(); ++i)
        if (c.heldout[i]) held.push_back(c.sequences[i]);
    REQUIRE(!held.empty());
    CHECK(m.mean_loss(held) < std::log(double(c.vocab.size())) - 0.5);

    // Provenance records the run.
    CHECK(m.provenance.regime == "pretrained");
    CHECK(m.provenance.world_hash == "whash");
    CHECK(!m.provenance.loss_curve.empty());
    CHECK(m.provenance.loss_curve.front()[1] > m.provenance.loss_curve.back()[1]);
    CHECK(m.provenance.model_seed == 3);
    CHECK(m.provenance.train_seed == 4);
}

TEST_CASE("pretraining is bit-deterministic in its seeds") {
    auto c = micro_corpus();
    model::ModelConfig mcfg = small_config(1, 2, 16, 32, c.vocab.size());
    mcfg.n_ctx = 16;
    train::TrainConfig tcfg;
    tcfg.steps = 40;
    tcfg.batch = 4;
    tcfg.seed = 9;

    auto a = train::pretrain(mcfg, c, tcfg);
    auto b = train::pretrain(mcfg, c, tcfg);
    CHECK(a.provenance.loss_curve == b.provenance.loss_curve);
    bool same = true;
    std::vector<const Mat*> am, bm;
    a.params.visit([&](const std::string&, const Mat& mm) { am.push_back(&mm); });
    b.params.visit([&](const std::string&, const Mat& mm) { bm.push_back(&mm); });
    for (size_t i = 0; i < am.size(); ++i)
        if (am[i]->a != bm[i]->a) same = false;
    CHECK(same);

    tcfg.seed = 10;
    auto d = train::pretrain(mcfg, c, tcfg);
    CHECK(a.provenance.loss_curve != d.provenance.loss_curve);
}

TEST_CASE("checkpoint round-trips the model exactly") {
    auto c = micro_corpus();
    model::ModelConfig mcfg = small_config(1, 2, 16, 32, c.vocab.size());
    mcfg.n_ctx = 16;
    train::TrainConfig tcfg;
    tcfg.steps = 20;
    tcfg.batch = 4;
    auto m = train::pretrain(mcfg, c, tcfg);

    auto dir = std::filesystem::temp_directory_path() / "corraudit-test-ckpt";
    std::filesystem::create_directories(dir);
    auto path = (dir / "m.ckpt").string();
    ckpt::save_checkpoint(path, m);
    auto loaded = ckpt::load_checkpoint(path);

    CHECK(loaded.config.to_json() == m.config.to_json());
    CHECK(loaded.provenance.to_json() == m.provenance.to_json());
    // Arrays are stored as float32, so loading gives exactly the rounded value.
    std::vector<const Mat*> am, bm;
    m.params.visit([&](const std::string&, const Mat& mm) { am.push_back(&mm); });
    loaded.params.visit([&](const std::string&, const Mat& mm) { bm.push_back(&mm); });
    REQUIRE(am.size() == bm.size());
    bool rounded_ok = true;
    for (size_t i = 0; i < am.size(); ++i) {
        REQUIRE(am[i]->a.size() == bm[i]->a.size());
        for (size_t j = 0; j < am[i]->a.size(); ++j)
            if (bm[i]->a[j] != double(float(am[i]->a[j]))) rounded_ok = false;
    }
    CHECK(rounded_ok);

    // Saving the loaded model reproduces the file byte for byte.
    auto path2 = (dir / "m2.ckpt").string();
    ckpt::save_checkpoint(path2, loaded);
    CHECK(io::read_file(path) == io::read_file(path2));

    // Corruption is caught.
    auto blob = io::read_file(path);
    blob[0] = 'X';
    auto bad = (dir / "bad.ckpt").string();
    io::write_file(bad, blob);
    CHECK_THROWS_AS(ckpt::load_checkpoint(bad), Error);
    io::write_file(bad, blob.substr(0, blob.size() / 2));
    CHECK_THROWS_AS(ckpt::load_checkpoint(bad), Error);
    CHECK_THROWS_AS(ckpt::load_checkpoint((dir / "absent.ckpt").string()), Error);
}

TEST_CASE("reward model starts at ln 2 and learns separable preferences") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0, 2000);
    auto countries = w.ids_of_kind(world::Kind::country);
    auto cities = w.ids_of_kind(world::Kind::city);

    std::vector<train::PreferencePair> pairs;
    for (int country : countries) {
        train::PreferencePair pp;
        pp.prompt = corpus::capital_prompt(c.vocab, w.entity(country).name);
        pp.response_a = c.vocab.id(w.entity(w.capital_of.at(country)).name);
        int other = cities[0] == w.capital_of.at(country) ? cities[1] : cities[0];
        pp.response_b = c.vocab.id(w.entity(other).name);
        pp.preferred = 0;
        pairs.push_back(pp);
    }

    train::RewardModel zero;
    zero.n_vocab = c.vocab.size();
    zero.pair_w = Mat(c.vocab.size(), c.vocab.size());
    zero.resp_b = Mat(1, c.vocab.size());
    CHECK(train::reward_pair_loss(zero, pairs) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    auto rm = train::train_reward_model(pairs, c.vocab.size());
    CHECK(train::reward_pair_accuracy(rm, pairs) >= 0.95);
    CHECK(train::reward_pair_loss(rm, pairs) < std::log(2.0));

    // Swapping the responses and the preference label leaves the loss alone.
    auto swapped = pairs;
    for (auto& pp : swapped) {
        std::swap(pp.response_a, pp.response_b);
        pp.preferred = 1 - pp.preferred;
    }
    CHECK(train::reward_pair_loss(rm, swapped) ==
          doctest::Approx(train::reward_pair_loss(rm, pairs)).epsilon(1e-12));
}

TEST_CASE("finetune flips the regime and respects its preconditions") {
    auto c = micro_corpus();
    model::ModelConfig mcfg = small_config(1, 2, 16, 32, c.vocab.size());
    mcfg.n_ctx = 16;
    train::TrainConfig tcfg;
    tcfg.steps = 60;
    tcfg.batch = 4;
    auto m = train::pretrain(mcfg, c, tcfg);

    // Reward: prefer token 5 after any prompt.
    std::vector<train::PreferencePair> pairs;
    for (auto& seq : c.sequences) {
        train::PreferencePair pp;
        pp.prompt = {seq[0], seq[1]};
        pp.response_a = 5;
        pp.response_b = 6;
        pp.preferred = 0;
        pairs.push_back(pp);
    }
    auto rm = train::train_reward_model(pairs, c.vocab.size());

    std::vector<std::vector<int>> prompts;
    for (int i = 0; i < 4; ++i) prompts.push_back({c.sequences[size_t(i)][0], c.sequences[size_t(i)][1]});

    train::FinetuneConfig fcfg;
    fcfg.rounds = 3;
    fcfg.k = 4;
    fcfg.lr = 1e-3;
    fcfg.seed = 21;
    auto res = train::finetune(m, rm, prompts, fcfg);
    CHECK(res.model.provenance.regime == "finetuned");
    CHECK(res.model.provenance.finetune.is_object());
    CHECK(res.reward_curve.size() == 3);
    CHECK(res.model.params.tok_emb.a != m.params.tok_emb.a);

    // Determinism.
    auto res2 = train::finetune(m, rm, prompts, fcfg);
    CHECK(res2.model.params.unemb.a == res.model.params.unemb.a);

    // rounds = 0 refused; finetuned input refused.
    train::FinetuneConfig bad = fcfg;
    bad.rounds = 0;
    CHECK_THROWS_WITH_AS(train::finetune(m, rm, prompts, bad), doctest::Contains("rounds"),
                         Error);
    CHECK_THROWS_AS(train::finetune(res.model, rm, prompts, fcfg), Error);

    // A flat reward signal (all-zero reward model) is reported in warnings.
    train::RewardModel flat;
    flat.n_vocab = c.vocab.size();
    flat.pair_w = Mat(c.vocab.size(), c.vocab.size());
    flat.resp_b = Mat(1, c.vocab.size());
    train::FinetuneConfig one = fcfg;
    one.rounds = 1;
    auto flat_res = train::finetune(m, flat, prompts, one);
    REQUIRE(!flat_res.warnings.empty());
    CHECK(flat_res.warnings[0].find("flat") != std::string::npos);
}

TEST_CASE("provenance json round-trips") {
    model::Provenance p;
    p.regime = "finetuned";
    p.task = "capital-city on synthetic-world-v1";
    p.world_hash = "abc";
    p.corpus_hash = "def";
    p.model_seed = 11;
    p.train_seed = 12;
    p.optimizer = {{"name", "adam"}, {"lr", 3e-4}};
    p.loss_curve = {{0.0, 5.0}, {50.0, 2.5}};
    p.finetune = {{"rounds", 3}};
    auto back = model::Provenance::from_json(p.to_json());
    CHECK(back.to_json() == p.to_json());
    CHECK(back.regime == "finetuned");
    CHECK(back.loss_curve.size() == 2);
}
