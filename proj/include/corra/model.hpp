#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "corra/io.hpp"
#include "corra/mat.hpp"
#include "corra/rng.hpp"

namespace corra::model {

struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 64;
    int d_ff = 256;
    int n_ctx = 32;
    int n_vocab = 0;
    uint64_t seed = 0;

    int d_head() const { return d_model / n_heads; }
    void validate() const;
    io::json to_json() const;
    static ModelConfig from_json(const io::json& doc);
};

// Additive residual-stream patch. Site 0 is the post-embedding stream; site
// l is the stream after block l. pos = -1 applies at every position.
struct Hook {
    int site = 0;
    int pos = -1;
    std::vector<double> delta;
};

struct Trace {
    std::vector<Mat> resid;      // one (T x d_model) matrix per site 0..n_layers
    std::vector<double> logits;  // final position, width n_vocab
    std::vector<double> probs;   // softmax of logits
};

// Sum hooks per (site, pos) and add them into the stream. A site whose summed
// delta is entirely zero is skipped so empty or cancelling hooks are bit-exact
// no-ops. Shared by the trained model and the hand-wired reference models.
void apply_hooks_at_site(Mat& resid, int site, const std::vector<Hook>& hooks);
void validate_hooks(const std::vector<Hook>& hooks, int n_sites, int n_pos, int d_model);

struct LanguageModel {
    virtual ~LanguageModel() = default;
    virtual int d_model() const = 0;
    virtual int n_sites() const = 0; // residual sites = layers + 1
    virtual int vocab_size() const = 0;
    virtual Trace forward_with_trace(const std::vector<int>& tokens,
                                     const std::vector<Hook>& hooks = {}) const = 0;
    virtual std::string regime() const = 0;
};

struct Block {
    Mat ln1_g, ln1_b;
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ln2_g, ln2_b;
    Mat w1, b1, w2, b2;
};

struct Params {
    Mat tok_emb; // n_vocab x d_model
    Mat pos_emb; // n_ctx x d_model
    std::vector<Block> blocks;
    Mat lnf_g, lnf_b;
    Mat unemb;   // d_model x n_vocab
    Mat unemb_b; // 1 x n_vocab

    static Params init(const ModelConfig& config, Rng& rng);
    static Params zeros_like(const Params& p);

    template <class P, class F> static void visit_impl(P& p, F&& f);
    template <class F> void visit(F&& f) { visit_impl(*this, f); }
    template <class F> void visit(F&& f) const { visit_impl(*this, f); }

    long n_scalars() const;
    void check_finite() const; // throws ErrorCode::numerical on NaN/Inf
};

template <class P, class F>
void Params::visit_impl(P& p, F&& f) {
    f("tok_emb", p.tok_emb);
    f("pos_emb", p.pos_emb);
    for (size_t l = 0; l < p.blocks.size(); ++l) {
        auto& b = p.blocks[l];
        std::string k = "blocks." + std::to_string(l) + ".";
        f(k + "ln1_g", b.ln1_g);
        f(k + "ln1_b", b.ln1_b);
        f(k + "wq", b.wq);
        f(k + "bq", b.bq);
        f(k + "wk", b.wk);
        f(k + "bk", b.bk);
        f(k + "wv", b.wv);
        f(k + "bv", b.bv);
        f(k + "wo", b.wo);
        f(k + "bo", b.bo);
        f(k + "ln2_g", b.ln2_g);
        f(k + "ln2_b", b.ln2_b);
        f(k + "w1", b.w1);
        f(k + "b1", b.b1);
        f(k + "w2", b.w2);
        f(k + "b2", b.b2);
    }
    f("lnf_g", p.lnf_g);
    f("lnf_b", p.lnf_b);
    f("unemb", p.unemb);
    f("unemb_b", p.unemb_b);
}

// Training history. Immutable once attached to a model; fine-tuning copies it
// forward with the regime flipped and the fine-tune record appended.
struct Provenance {
    std::string regime = "pretrained"; // "pretrained" | "finetuned"
    std::string task;
    std::string world_hash;
    std::string corpus_hash;
    uint64_t model_seed = 0;
    uint64_t train_seed = 0;
    io::json optimizer = io::json::object();
    std::vector<std::array<double, 2>> loss_curve; // (step, loss)
    io::json finetune = nullptr;

    io::json to_json() const;
    static Provenance from_json(const io::json& doc);
};

class Transformer : public LanguageModel {
public:
    ModelConfig config;
    Params params;
    Provenance provenance;

    Transformer() = default;
    Transformer(ModelConfig cfg, Params p, Provenance prov);

    int d_model() const override { return config.d_model; }
    int n_sites() const override { return config.n_layers + 1; }
    int vocab_size() const override { return config.n_vocab; }
    std::string regime() const override { return provenance.regime; }

    Trace forward_with_trace(const std::vector<int>& tokens,
                             const std::vector<Hook>& hooks = {}) const override;

    // Summed next-token cross-entropy over one sequence; the unnormalized
    // gradient accumulates into `grad` so batch-mean scaling happens once at
    // the caller. Positions before first_pred are excluded (fine-tuning trains
    // on the answer position alone). Returns (summed loss, n_predicted).
    std::pair<double, int> loss_and_grad(const std::vector<int>& tokens, Params* grad,
                                         int first_pred = 0) const;
    double sequence_loss(const std::vector<int>& tokens) const;
    double mean_loss(const std::vector<std::vector<int>>& sequences) const;

    void validate_tokens(const std::vector<int>& tokens) const;
};

Transformer init_model(const ModelConfig& config);

// 1/rank of target under the distribution; equal probabilities rank by token id.
double reciprocal_rank(const std::vector<double>& probs, int target);

int argmax_token(const std::vector<double>& probs); // ties to the smaller id
int sample_token(const std::vector<double>& probs, Rng& rng);

} // namespace corra::model
