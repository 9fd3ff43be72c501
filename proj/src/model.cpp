#include "corra/model.hpp"

#include <algorithm>
#include <cmath>

#include "corra/error.hpp"
#include "corra/kernels.hpp"

namespace corra::model {

namespace {

constexpr double kLnEps = 1e-5;

void add_bias_rows(Mat& x, const Mat& bias) {
    for (int r = 0; r < x.rows; ++r) kernels::axpy(1.0, bias.row(0), x.row(r), x.cols);
}

void add_col_sums(const Mat& x, Mat& out) {
    for (int r = 0; r < x.rows; ++r) kernels::axpy(1.0, x.row(r), out.row(0), x.cols);
}

void ln_forward(const Mat& x, const Mat& g, const Mat& b, Mat& y, std::vector<double>& mu,
                std::vector<double>& rstd) {
    int n = x.cols;
    y = Mat(x.rows, n);
    mu.assign(x.rows, 0.0);
    rstd.assign(x.rows, 0.0);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double m = kernels::sum(xr, n) / n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) var += (xr[c] - m) * (xr[c] - m);
        var /= n;
        double rs = 1.0 / std::sqrt(var + kLnEps);
        mu[r] = m;
        rstd[r] = rs;
        double* yr = y.row(r);
        for (int c = 0; c < n; ++c) yr[c] = g.at(0, c) * ((xr[c] - m) * rs) + b.at(0, c);
    }
}

// Adds dL/dx into dx and accumulates parameter gradients.
void ln_backward(const Mat& x, const Mat& g, const std::vector<double>& mu,
                 const std::vector<double>& rstd, const Mat& dy, Mat& dx, Mat& dg, Mat& db) {
    int n = x.cols;
    std::vector<double> xhat(n), dxhat(n);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        const double* dyr = dy.row(r);
        double m1 = 0.0, m2 = 0.0;
        for (int c = 0; c < n; ++c) {
            xhat[c] = (xr[c] - mu[r]) * rstd[r];
            dxhat[c] = dyr[c] * g.at(0, c);
            dg.at(0, c) += dyr[c] * xhat[c];
            db.at(0, c) += dyr[c];
            m1 += dxhat[c];
            m2 += dxhat[c] * xhat[c];
        }
        m1 /= n;
        m2 /= n;
        double* dxr = dx.row(r);
        for (int c = 0; c < n; ++c) dxr[c] += rstd[r] * (dxhat[c] - m1 - xhat[c] * m2);
    }
}

void copy_head(const Mat& src, Mat& dst, int head, int d_head) {
    for (int r = 0; r < src.rows; ++r) {
        const double* s = src.row(r) + head * d_head;
        std::copy(s, s + d_head, dst.row(r));
    }
}

void add_head(const Mat& src, Mat& dst, int head, int d_head) {
    for (int r = 0; r < src.rows; ++r) {
        const double* s = src.row(r);
        double* d = dst.row(r) + head * d_head;
        for (int c = 0; c < d_head; ++c) d[c] += s[c];
    }
}

struct BlockCache {
    Mat x_in, a;
    std::vector<double> mu1, rstd1;
    Mat q, k, v;
    std::vector<Mat> attn; // per-head T x T row-softmax probabilities
    Mat z, x_mid, b;
    std::vector<double> mu2, rstd2;
    Mat h_pre, h_act;
};

struct Cache {
    Mat x0;
    std::vector<BlockCache> blocks;
    Mat x_final, y;
    std::vector<double> muf, rstdf;
    Mat logits; // T x n_vocab
};

std::vector<double> softmax_row(const double* logits, int n) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    std::vector<double> p(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        p[i] = std::exp(logits[i] - mx);
        total += p[i];
    }
    for (int i = 0; i < n; ++i) p[i] /= total;
    return p;
}

} // namespace

void ModelConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || n_ctx < 2)
        fail(ErrorCode::invalid_argument, "model dimensions must be positive and context at least 2");
    if (d_model % n_heads != 0) fail(ErrorCode::invalid_argument, "d_model must be divisible by n_heads");
    if (n_vocab < 5) fail(ErrorCode::invalid_argument, "vocab size must cover reserved tokens");
}

io::json ModelConfig::to_json() const {
    io::json doc;
    doc["n_layers"] = n_layers;
    doc["n_heads"] = n_heads;
    doc["d_model"] = d_model;
    doc["d_ff"] = d_ff;
    doc["n_ctx"] = n_ctx;
    doc["n_vocab"] = n_vocab;
    doc["seed"] = seed;
    return doc;
}

ModelConfig ModelConfig::from_json(const io::json& doc) {
    ModelConfig c;
    c.n_layers = doc.at("n_layers").get<int>();
    c.n_heads = doc.at("n_heads").get<int>();
    c.d_model = doc.at("d_model").get<int>();
    c.d_ff = doc.at("d_ff").get<int>();
    c.n_ctx = doc.at("n_ctx").get<int>();
    c.n_vocab = doc.at("n_vocab").get<int>();
    c.seed = doc.at("seed").get<uint64_t>();
    c.validate();
    return c;
}

Params Params::init(const ModelConfig& config, Rng& rng) {
    config.validate();
    int d = config.d_model;
    Params p;
    p.tok_emb = Mat(config.n_vocab, d);
    p.pos_emb = Mat(config.n_ctx, d);
    p.blocks.resize(config.n_layers);
    for (auto& b : p.blocks) {
        b.ln1_g = Mat(1, d, 1.0);
        b.ln1_b = Mat(1, d);
        b.wq = Mat(d, d);
        b.bq = Mat(1, d);
        b.wk = Mat(d, d);
        b.bk = Mat(1, d);
        b.wv = Mat(d, d);
        b.bv = Mat(1, d);
        b.wo = Mat(d, d);
        b.bo = Mat(1, d);
        b.ln2_g = Mat(1, d, 1.0);
        b.ln2_b = Mat(1, d);
        b.w1 = Mat(d, config.d_ff);
        b.b1 = Mat(1, config.d_ff);
        b.w2 = Mat(config.d_ff, d);
        b.b2 = Mat(1, d);
    }
    p.lnf_g = Mat(1, d, 1.0);
    p.lnf_b = Mat(1, d);
    p.unemb = Mat(d, config.n_vocab);
    p.unemb_b = Mat(1, config.n_vocab);

    auto fill_normal = [&](Mat& m) {
        for (double& v : m.a) v = 0.02 * rng.normal();
    };
    fill_normal(p.tok_emb);
    fill_normal(p.pos_emb);
    for (auto& b : p.blocks) {
        fill_normal(b.wq);
        fill_normal(b.wk);
        fill_normal(b.wv);
        fill_normal(b.wo);
        fill_normal(b.w1);
        fill_normal(b.w2);
    }
    fill_normal(p.unemb);
    return p;
}

Params Params::zeros_like(const Params& p) {
    Params z = p;
    z.visit([](const std::string&, Mat& m) { m.zero(); });
    return z;
}

long Params::n_scalars() const {
    long n = 0;
    visit([&](const std::string&, const Mat& m) { n += long(m.a.size()); });
    return n;
}

void Params::check_finite() const {
    visit([](const std::string& name, const Mat& m) {
        for (double v : m.a)
            if (!std::isfinite(v)) fail(ErrorCode::numerical, "non-finite parameter in " + name);
    });
}

void validate_hooks(const std::vector<Hook>& hooks, int n_sites, int n_pos, int d_model) {
    for (const auto& h : hooks) {
        if (h.site < 0 || h.site >= n_sites) fail(ErrorCode::invalid_argument, "hook site out of range");
        if (h.pos < -1 || h.pos >= n_pos) fail(ErrorCode::invalid_argument, "hook position out of range");
        if (int(h.delta.size()) != d_model) fail(ErrorCode::invalid_argument, "hook delta width must equal d_model");
    }
}

void apply_hooks_at_site(Mat& resid, int site, const std::vector<Hook>& hooks) {
    Mat summed;
    bool any = false;
    for (const auto& h : hooks) {
        if (h.site != site) continue;
        if (!any) {
            summed = Mat(resid.rows, resid.cols);
            any = true;
        }
        if (h.pos == -1) {
            for (int r = 0; r < resid.rows; ++r) kernels::axpy(1.0, h.delta.data(), summed.row(r), resid.cols);
        } else {
            kernels::axpy(1.0, h.delta.data(), summed.row(h.pos), resid.cols);
        }
    }
    if (!any) return;
    bool nonzero = false;
    for (double v : summed.a)
        if (v != 0.0) {
            nonzero = true;
            break;
        }
    if (!nonzero) return; // bit-exact no-op for zero or cancelling hooks
    for (size_t i = 0; i < resid.a.size(); ++i) resid.a[i] += summed.a[i];
}

Transformer::Transformer(ModelConfig cfg, Params p, Provenance prov)
    : config(cfg), params(std::move(p)), provenance(std::move(prov)) {
    config.validate();
}

void Transformer::validate_tokens(const std::vector<int>& tokens) const {
    if (tokens.empty()) fail(ErrorCode::invalid_argument, "empty token sequence");
    if (int(tokens.size()) > config.n_ctx) fail(ErrorCode::invalid_argument, "sequence length exceeds context");
    for (int t : tokens)
        if (t < 0 || t >= config.n_vocab) fail(ErrorCode::invalid_argument, "unknown token id " + std::to_string(t));
}

namespace {

void run_forward(const ModelConfig& config, const Params& params, const std::vector<int>& tokens,
                 const std::vector<Hook>& hooks, Cache* cache, Trace* trace) {
    int T = int(tokens.size());
    int d = config.d_model;
    int dh = config.d_head();
    double inv_sqrt_dh = 1.0 / std::sqrt(double(dh));

    if (trace) trace->resid.clear();

    Mat x(T, d);
    for (int i = 0; i < T; ++i) {
        const double* te = params.tok_emb.row(tokens[i]);
        const double* pe = params.pos_emb.row(i);
        double* xr = x.row(i);
        for (int c = 0; c < d; ++c) xr[c] = te[c] + pe[c];
    }
    apply_hooks_at_site(x, 0, hooks);
    if (cache) cache->x0 = x;
    if (trace) trace->resid.push_back(x);

    if (cache) cache->blocks.resize(config.n_layers);
    for (int l = 0; l < config.n_layers; ++l) {
        const Block& blk = params.blocks[l];
        BlockCache local;
        BlockCache& bc = cache ? cache->blocks[l] : local;
        bc.x_in = x;

        ln_forward(x, blk.ln1_g, blk.ln1_b, bc.a, bc.mu1, bc.rstd1);
        bc.q = Mat(T, d);
        bc.k = Mat(T, d);
        bc.v = Mat(T, d);
        kernels::matmul_nn(bc.a.a.data(), blk.wq.a.data(), bc.q.a.data(), T, d, d);
        kernels::matmul_nn(bc.a.a.data(), blk.wk.a.data(), bc.k.a.data(), T, d, d);
        kernels::matmul_nn(bc.a.a.data(), blk.wv.a.data(), bc.v.a.data(), T, d, d);
        add_bias_rows(bc.q, blk.bq);
        add_bias_rows(bc.k, blk.bk);
        add_bias_rows(bc.v, blk.bv);

        bc.z = Mat(T, d);
        bc.attn.assign(config.n_heads, Mat());
        Mat qh(T, dh), kh(T, dh), vh(T, dh);
        for (int h = 0; h < config.n_heads; ++h) {
            copy_head(bc.q, qh, h, dh);
            copy_head(bc.k, kh, h, dh);
            copy_head(bc.v, vh, h, dh);
            Mat scores(T, T);
            kernels::matmul_nt(qh.a.data(), kh.a.data(), scores.a.data(), T, dh, T);
            Mat& p = bc.attn[h];
            p = Mat(T, T);
            for (int i = 0; i < T; ++i) {
                double mx = -1e300;
                for (int j = 0; j <= i; ++j) mx = std::max(mx, scores.at(i, j) * inv_sqrt_dh);
                double total = 0.0;
                for (int j = 0; j <= i; ++j) {
                    double e = std::exp(scores.at(i, j) * inv_sqrt_dh - mx);
                    p.at(i, j) = e;
                    total += e;
                }
                for (int j = 0; j <= i; ++j) p.at(i, j) /= total;
            }
            Mat zh(T, dh);
            kernels::matmul_nn(p.a.data(), vh.a.data(), zh.a.data(), T, T, dh);
            add_head(zh, bc.z, h, dh);
        }

        Mat attn_out(T, d);
        kernels::matmul_nn(bc.z.a.data(), blk.wo.a.data(), attn_out.a.data(), T, d, d);
        add_bias_rows(attn_out, blk.bo);
        bc.x_mid = bc.x_in;
        for (size_t i = 0; i < bc.x_mid.a.size(); ++i) bc.x_mid.a[i] += attn_out.a[i];

        ln_forward(bc.x_mid, blk.ln2_g, blk.ln2_b, bc.b, bc.mu2, bc.rstd2);
        bc.h_pre = Mat(T, config.d_ff);
        kernels::matmul_nn(bc.b.a.data(), blk.w1.a.data(), bc.h_pre.a.data(), T, d, config.d_ff);
        add_bias_rows(bc.h_pre, blk.b1);
        bc.h_act = bc.h_pre;
        for (double& vv : bc.h_act.a) vv = vv > 0.0 ? vv : 0.0;

        Mat ff(T, d);
        kernels::matmul_nn(bc.h_act.a.data(), blk.w2.a.data(), ff.a.data(), T, config.d_ff, d);
        add_bias_rows(ff, blk.b2);
        x = bc.x_mid;
        for (size_t i = 0; i < x.a.size(); ++i) x.a[i] += ff.a[i];

        apply_hooks_at_site(x, l + 1, hooks);
        if (trace) trace->resid.push_back(x);
    }

    Mat y;
    std::vector<double> muf, rstdf;
    ln_forward(x, params.lnf_g, params.lnf_b, y, muf, rstdf);
    Mat logits(T, config.n_vocab);
    kernels::matmul_nn(y.a.data(), params.unemb.a.data(), logits.a.data(), T, d, config.n_vocab);
    add_bias_rows(logits, params.unemb_b);

    if (cache) {
        cache->x_final = x;
        cache->y = y;
        cache->muf = muf;
        cache->rstdf = rstdf;
        cache->logits = logits;
    }
    if (trace) {
        const double* last = logits.row(T - 1);
        trace->logits.assign(last, last + config.n_vocab);
        trace->probs = softmax_row(last, config.n_vocab);
    }
}

} // namespace

Trace Transformer::forward_with_trace(const std::vector<int>& tokens,
                                      const std::vector<Hook>& hooks) const {
    validate_tokens(tokens);
    validate_hooks(hooks, n_sites(), int(tokens.size()), config.d_model);
    Trace trace;
    run_forward(config, params, tokens, hooks, nullptr, &trace);
    return trace;
}

std::pair<double, int> Transformer::loss_and_grad(const std::vector<int>& tokens, Params* grad,
                                                  int first_pred) const {
    validate_tokens(tokens);
    int T = int(tokens.size());
    if (first_pred < 0 || first_pred > T - 1) fail(ErrorCode::invalid_argument, "first_pred out of range");
    if (T < 2 || first_pred >= T - 1) return {0.0, 0};
    int d = config.d_model;
    int dh = config.d_head();
    int V = config.n_vocab;
    double inv_sqrt_dh = 1.0 / std::sqrt(double(dh));

    Cache cache;
    run_forward(config, params, tokens, {}, &cache, nullptr);

    int n_pred = T - 1 - first_pred;
    double loss = 0.0;
    Mat dlogits(T, V);
    for (int i = first_pred; i + 1 < T; ++i) {
        auto p = softmax_row(cache.logits.row(i), V);
        int target = tokens[i + 1];
        loss += -std::log(std::max(p[target], 1e-300));
        double* dr = dlogits.row(i);
        for (int t = 0; t < V; ++t) dr[t] = p[t];
        dr[target] -= 1.0;
    }
    if (!grad) return {loss, n_pred};
    Params& g = *grad;

    // unembedding
    add_col_sums(dlogits, g.unemb_b);
    kernels::matmul_tn(cache.y.a.data(), dlogits.a.data(), g.unemb.a.data(), d, T, V, true);
    Mat dy(T, d);
    kernels::matmul_nt(dlogits.a.data(), params.unemb.a.data(), dy.a.data(), T, V, d);

    Mat dx(T, d);
    ln_backward(cache.x_final, params.lnf_g, cache.muf, cache.rstdf, dy, dx, g.lnf_g, g.lnf_b);

    for (int l = config.n_layers - 1; l >= 0; --l) {
        const Block& blk = params.blocks[l];
        Block& gb = g.blocks[l];
        BlockCache& bc = cache.blocks[l];

        // feed-forward branch; dx currently holds dL/d(block output)
        Mat df = dx;
        Mat dx_mid = dx;
        kernels::matmul_tn(bc.h_act.a.data(), df.a.data(), gb.w2.a.data(), config.d_ff, T, d, true);
        add_col_sums(df, gb.b2);
        Mat dh_act(T, config.d_ff);
        kernels::matmul_nt(df.a.data(), blk.w2.a.data(), dh_act.a.data(), T, d, config.d_ff);
        for (size_t i = 0; i < dh_act.a.size(); ++i)
            if (bc.h_pre.a[i] <= 0.0) dh_act.a[i] = 0.0;
        kernels::matmul_tn(bc.b.a.data(), dh_act.a.data(), gb.w1.a.data(), d, T, config.d_ff, true);
        add_col_sums(dh_act, gb.b1);
        Mat db_ln(T, d);
        kernels::matmul_nt(dh_act.a.data(), blk.w1.a.data(), db_ln.a.data(), T, config.d_ff, d);
        ln_backward(bc.x_mid, blk.ln2_g, bc.mu2, bc.rstd2, db_ln, dx_mid, gb.ln2_g, gb.ln2_b);

        // attention branch; dx_mid holds dL/d(x_mid)
        Mat dattn = dx_mid;
        Mat dx_in = dx_mid;
        add_col_sums(dattn, gb.bo);
        kernels::matmul_tn(bc.z.a.data(), dattn.a.data(), gb.wo.a.data(), d, T, d, true);
        Mat dz(T, d);
        kernels::matmul_nt(dattn.a.data(), blk.wo.a.data(), dz.a.data(), T, d, d);

        Mat dq(T, d), dk(T, d), dv(T, d);
        Mat qh(T, dh), kh(T, dh), vh(T, dh), dzh(T, dh);
        for (int h = 0; h < config.n_heads; ++h) {
            copy_head(bc.q, qh, h, dh);
            copy_head(bc.k, kh, h, dh);
            copy_head(bc.v, vh, h, dh);
            copy_head(dz, dzh, h, dh);
            const Mat& p = bc.attn[h];

            Mat dp(T, T);
            kernels::matmul_nt(dzh.a.data(), vh.a.data(), dp.a.data(), T, dh, T);
            Mat dvh(T, dh);
            kernels::matmul_tn(p.a.data(), dzh.a.data(), dvh.a.data(), T, T, dh);

            Mat ds(T, T);
            for (int i = 0; i < T; ++i) {
                double dot = 0.0;
                for (int j = 0; j <= i; ++j) dot += dp.at(i, j) * p.at(i, j);
                for (int j = 0; j <= i; ++j) ds.at(i, j) = p.at(i, j) * (dp.at(i, j) - dot);
            }
            Mat dqh(T, dh), dkh(T, dh);
            kernels::matmul_nn(ds.a.data(), kh.a.data(), dqh.a.data(), T, T, dh);
            kernels::matmul_tn(ds.a.data(), qh.a.data(), dkh.a.data(), T, T, dh);
            kernels::scale(inv_sqrt_dh, dqh.a.data(), int(dqh.a.size()));
            kernels::scale(inv_sqrt_dh, dkh.a.data(), int(dkh.a.size()));

            add_head(dqh, dq, h, dh);
            add_head(dkh, dk, h, dh);
            add_head(dvh, dv, h, dh);
        }

        add_col_sums(dq, gb.bq);
        add_col_sums(dk, gb.bk);
        add_col_sums(dv, gb.bv);
        kernels::matmul_tn(bc.a.a.data(), dq.a.data(), gb.wq.a.data(), d, T, d, true);
        kernels::matmul_tn(bc.a.a.data(), dk.a.data(), gb.wk.a.data(), d, T, d, true);
        kernels::matmul_tn(bc.a.a.data(), dv.a.data(), gb.wv.a.data(), d, T, d, true);

        Mat da(T, d);
        kernels::matmul_nt(dq.a.data(), blk.wq.a.data(), da.a.data(), T, d, d);
        kernels::matmul_nt(dk.a.data(), blk.wk.a.data(), da.a.data(), T, d, d, true);
        kernels::matmul_nt(dv.a.data(), blk.wv.a.data(), da.a.data(), T, d, d, true);
        ln_backward(bc.x_in, blk.ln1_g, bc.mu1, bc.rstd1, da, dx_in, gb.ln1_g, gb.ln1_b);

        dx = dx_in;
    }

    for (int i = 0; i < T; ++i) {
        kernels::axpy(1.0, dx.row(i), g.tok_emb.row(tokens[i]), d);
        kernels::axpy(1.0, dx.row(i), g.pos_emb.row(i), d);
    }
    return {loss, n_pred};
}

double Transformer::sequence_loss(const std::vector<int>& tokens) const {
    return loss_and_grad(tokens, nullptr).first;
}

double Transformer::mean_loss(const std::vector<std::vector<int>>& sequences) const {
    double total = 0.0;
    long n = 0;
    for (const auto& seq : sequences) {
        auto [l, k] = loss_and_grad(seq, nullptr);
        total += l;
        n += k;
    }
    if (n == 0) fail(ErrorCode::invalid_argument, "no predictable positions in sequences");
    return total / double(n);
}

Transformer init_model(const ModelConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Rng init_rng = rng.child("init");
    Provenance prov;
    prov.regime = "pretrained";
    prov.task = "next-token prediction on the synthetic corpus";
    prov.model_seed = config.seed;
    return Transformer(config, Params::init(config, init_rng), prov);
}

double reciprocal_rank(const std::vector<double>& probs, int target) {
    if (target < 0 || target >= int(probs.size())) fail(ErrorCode::invalid_argument, "target token out of range");
    double pt = probs[target];
    int rank = 1;
    for (int i = 0; i < int(probs.size()); ++i) {
        if (probs[i] > pt) ++rank;
        else if (probs[i] == pt && i < target) ++rank;
    }
    return 1.0 / double(rank);
}

int argmax_token(const std::vector<double>& probs) {
    if (probs.empty()) fail(ErrorCode::invalid_argument, "empty distribution");
    int best = 0;
    for (int i = 1; i < int(probs.size()); ++i)
        if (probs[i] > probs[best]) best = i;
    return best;
}

int sample_token(const std::vector<double>& probs, Rng& rng) {
    if (probs.empty()) fail(ErrorCode::invalid_argument, "empty distribution");
    double total = kernels::sum(probs.data(), int(probs.size()));
    if (!(total > 0.0)) fail(ErrorCode::numerical, "distribution has no mass");
    double u = rng.uniform_real() * total;
    double cum = 0.0;
    for (int i = 0; i < int(probs.size()); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return int(probs.size()) - 1;
}

io::json Provenance::to_json() const {
    io::json doc;
    doc["regime"] = regime;
    doc["task"] = task;
    doc["world_hash"] = world_hash;
    doc["corpus_hash"] = corpus_hash;
    doc["model_seed"] = model_seed;
    doc["train_seed"] = train_seed;
    doc["optimizer"] = optimizer;
    io::json curve = io::json::array();
    for (const auto& p : loss_curve) curve.push_back({p[0], p[1]});
    doc["loss_curve"] = curve;
    doc["finetune"] = finetune;
    return doc;
}

Provenance Provenance::from_json(const io::json& doc) {
    Provenance p;
    p.regime = doc.at("regime").get<std::string>();
    if (p.regime != "pretrained" && p.regime != "finetuned")
        fail(ErrorCode::schema_mismatch, "unknown training regime: " + p.regime);
    p.task = doc.at("task").get<std::string>();
    p.world_hash = doc.at("world_hash").get<std::string>();
    p.corpus_hash = doc.at("corpus_hash").get<std::string>();
    p.model_seed = doc.at("model_seed").get<uint64_t>();
    p.train_seed = doc.at("train_seed").get<uint64_t>();
    p.optimizer = doc.at("optimizer");
    for (const auto& e : doc.at("loss_curve"))
        p.loss_curve.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    p.finetune = doc.at("finetune");
    return p;
}

} // namespace corra::model
