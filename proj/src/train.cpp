#include "corra/train.hpp"

#include <algorithm>
#include <cmath>

#include "corra/error.hpp"
#include "corra/kernels.hpp"

namespace corra::train {

namespace {

std::vector<Mat*> param_mats(model::Params& p) {
    std::vector<Mat*> mats;
    p.visit([&](const std::string&, Mat& m) { mats.push_back(&m); });
    return mats;
}

struct Adam {
    double lr, b1, b2, eps;
    long t = 0;
    model::Params m, v;

    Adam(const model::Params& shape, double lr_, double b1_, double b2_, double eps_)
        : lr(lr_), b1(b1_), b2(b2_), eps(eps_),
          m(model::Params::zeros_like(shape)), v(model::Params::zeros_like(shape)) {}

    void step(model::Params& p, model::Params& g) {
        ++t;
        double corr = lr * std::sqrt(1.0 - std::pow(b2, double(t))) / (1.0 - std::pow(b1, double(t)));
        auto pm = param_mats(p), gm = param_mats(g), mm = param_mats(m), vm = param_mats(v);
        for (size_t i = 0; i < pm.size(); ++i) {
            auto& pa = pm[i]->a;
            auto& ga = gm[i]->a;
            auto& ma = mm[i]->a;
            auto& va = vm[i]->a;
            for (size_t j = 0; j < pa.size(); ++j) {
                ma[j] = b1 * ma[j] + (1.0 - b1) * ga[j];
                va[j] = b2 * va[j] + (1.0 - b2) * ga[j] * ga[j];
                pa[j] -= corr * ma[j] / (std::sqrt(va[j]) + eps);
            }
        }
    }
};

void scale_params(model::Params& g, double s) {
    g.visit([&](const std::string&, Mat& m) { kernels::scale(s, m.a.data(), int(m.a.size())); });
}

} // namespace

io::json TrainConfig::to_json() const {
    io::json doc;
    doc["steps"] = steps;
    doc["batch"] = batch;
    doc["lr"] = lr;
    doc["beta1"] = beta1;
    doc["beta2"] = beta2;
    doc["eps"] = eps;
    doc["seed"] = seed;
    doc["log_every"] = log_every;
    doc["heldout_cap"] = heldout_cap;
    return doc;
}

TrainConfig TrainConfig::from_json(const io::json& doc) {
    TrainConfig c;
    c.steps = doc.at("steps").get<int>();
    c.batch = doc.at("batch").get<int>();
    c.lr = doc.at("lr").get<double>();
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.eps = doc.value("eps", c.eps);
    c.seed = doc.at("seed").get<uint64_t>();
    c.log_every = doc.value("log_every", c.log_every);
    c.heldout_cap = doc.value("heldout_cap", c.heldout_cap);
    return c;
}

model::Transformer pretrain(const model::ModelConfig& mcfg, const corpus::Corpus& corpus,
                            const TrainConfig& tcfg, const std::string& world_hash) {
    mcfg.validate();
    if (mcfg.n_vocab != corpus.vocab.size())
        fail(ErrorCode::invalid_argument, "model vocab size does not match corpus vocab");
    if (tcfg.steps < 1 || tcfg.batch < 1 || tcfg.log_every < 1)
        fail(ErrorCode::invalid_argument, "steps, batch and log_every must be positive");
    if (!(tcfg.lr > 0.0)) fail(ErrorCode::invalid_argument, "learning rate must be positive");

    std::vector<int> train_idx, held_idx;
    size_t longest = 0;
    for (size_t i = 0; i < corpus.sequences.size(); ++i) {
        longest = std::max(longest, corpus.sequences[i].size());
        (corpus.heldout[i] ? held_idx : train_idx).push_back(int(i));
    }
    if (train_idx.empty()) fail(ErrorCode::infeasible_config, "corpus has no training sequences");
    if (int(longest) > mcfg.n_ctx)
        fail(ErrorCode::infeasible_config, "corpus sequence exceeds model context");

    model::Transformer m = model::init_model(mcfg);
    m.provenance.train_seed = tcfg.seed;
    m.provenance.world_hash = world_hash;
    m.provenance.corpus_hash = io::fnv1a_hex(corpus.to_jsonl());
    m.provenance.optimizer = tcfg.to_json();
    m.provenance.optimizer["kind"] = "adam";

    Rng rng(tcfg.seed);
    Rng batch_rng = rng.child("batches");
    Adam opt(m.params, tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps);
    model::Params grad = model::Params::zeros_like(m.params);

    for (int step = 1; step <= tcfg.steps; ++step) {
        grad.visit([](const std::string&, Mat& g) { g.zero(); });
        double loss_sum = 0.0;
        long pred = 0;
        for (int b = 0; b < tcfg.batch; ++b) {
            const auto& seq = corpus.sequences[train_idx[batch_rng.uniform(train_idx.size())]];
            auto [l, n] = m.loss_and_grad(seq, &grad);
            loss_sum += l;
            pred += n;
        }
        if (pred == 0) fail(ErrorCode::infeasible_config, "batch contained no predictable positions");
        double loss = loss_sum / double(pred);
        if (!std::isfinite(loss))
            fail(ErrorCode::numerical, "training diverged: loss not finite at step " + std::to_string(step));
        scale_params(grad, 1.0 / double(pred));
        opt.step(m.params, grad);
        if (step == 1 || step % tcfg.log_every == 0 || step == tcfg.steps)
            m.provenance.loss_curve.push_back({double(step), loss});
    }
    m.params.check_finite();

    std::vector<std::vector<int>> held;
    for (int i : held_idx) {
        if (int(held.size()) >= tcfg.heldout_cap) break;
        held.push_back(corpus.sequences[i]);
    }
    if (!held.empty()) m.provenance.optimizer["final_heldout_loss"] = m.mean_loss(held);
    if (!m.provenance.loss_curve.empty())
        m.provenance.optimizer["final_train_loss"] = m.provenance.loss_curve.back()[1];
    return m;
}

double RewardModel::score(const std::vector<int>& prompt, int response) const {
    if (prompt.empty()) fail(ErrorCode::invalid_argument, "empty prompt");
    if (response < 0 || response >= n_vocab) fail(ErrorCode::invalid_argument, "response token out of range");
    double s = 0.0;
    for (int t : prompt) {
        if (t < 0 || t >= n_vocab) fail(ErrorCode::invalid_argument, "prompt token out of range");
        s += pair_w.at(t, response);
    }
    return s / double(prompt.size()) + resp_b.at(0, response);
}

namespace {

void validate_pairs(const std::vector<PreferencePair>& pairs, int n_vocab) {
    if (pairs.empty()) fail(ErrorCode::invalid_argument, "preference pairs must be nonempty");
    for (const auto& p : pairs) {
        if (p.prompt.empty()) fail(ErrorCode::invalid_argument, "preference prompt must be nonempty");
        if (p.preferred != 0 && p.preferred != 1)
            fail(ErrorCode::invalid_argument, "preferred must select response A or B");
        for (int t : p.prompt)
            if (t < 0 || t >= n_vocab) fail(ErrorCode::invalid_argument, "prompt token out of range");
        if (p.response_a < 0 || p.response_a >= n_vocab || p.response_b < 0 || p.response_b >= n_vocab)
            fail(ErrorCode::invalid_argument, "response token out of range");
    }
}

} // namespace

RewardModel train_reward_model(const std::vector<PreferencePair>& pairs, int n_vocab,
                               const RewardTrainConfig& cfg) {
    if (n_vocab < 1) fail(ErrorCode::invalid_argument, "vocab size must be positive");
    validate_pairs(pairs, n_vocab);
    if (cfg.epochs < 1 || !(cfg.lr > 0.0)) fail(ErrorCode::invalid_argument, "bad reward training settings");

    RewardModel rm;
    rm.n_vocab = n_vocab;
    rm.pair_w = Mat(n_vocab, n_vocab);
    rm.resp_b = Mat(1, n_vocab);

    // full-batch gradient descent on the pairwise loss; deterministic
    Mat gw(n_vocab, n_vocab), gb(1, n_vocab);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        gw.zero();
        gb.zero();
        double inv_n = 1.0 / double(pairs.size());
        for (const auto& p : pairs) {
            int pref = p.preferred == 0 ? p.response_a : p.response_b;
            int other = p.preferred == 0 ? p.response_b : p.response_a;
            double delta = rm.score(p.prompt, pref) - rm.score(p.prompt, other);
            double sig = 1.0 / (1.0 + std::exp(-delta));
            double d = (sig - 1.0) * inv_n; // d loss / d delta
            double per_tok = d / double(p.prompt.size());
            for (int t : p.prompt) {
                gw.at(t, pref) += per_tok;
                gw.at(t, other) -= per_tok;
            }
            gb.at(0, pref) += d;
            gb.at(0, other) -= d;
        }
        kernels::axpy(-cfg.lr, gw.a.data(), rm.pair_w.a.data(), int(gw.a.size()));
        kernels::axpy(-cfg.lr, gb.a.data(), rm.resp_b.a.data(), int(gb.a.size()));
    }
    return rm;
}

double reward_pair_loss(const RewardModel& rm, const std::vector<PreferencePair>& pairs) {
    validate_pairs(pairs, rm.n_vocab);
    double total = 0.0;
    for (const auto& p : pairs) {
        int pref = p.preferred == 0 ? p.response_a : p.response_b;
        int other = p.preferred == 0 ? p.response_b : p.response_a;
        double delta = rm.score(p.prompt, pref) - rm.score(p.prompt, other);
        total += std::log(1.0 + std::exp(-delta));
    }
    return total / double(pairs.size());
}

double reward_pair_accuracy(const RewardModel& rm, const std::vector<PreferencePair>& pairs) {
    validate_pairs(pairs, rm.n_vocab);
    int hits = 0;
    for (const auto& p : pairs) {
        int pref = p.preferred == 0 ? p.response_a : p.response_b;
        int other = p.preferred == 0 ? p.response_b : p.response_a;
        if (rm.score(p.prompt, pref) > rm.score(p.prompt, other)) ++hits;
    }
    return double(hits) / double(pairs.size());
}

io::json FinetuneConfig::to_json() const {
    io::json doc;
    doc["rounds"] = rounds;
    doc["k"] = k;
    doc["lr"] = lr;
    doc["beta1"] = beta1;
    doc["beta2"] = beta2;
    doc["eps"] = eps;
    doc["seed"] = seed;
    return doc;
}

FinetuneConfig FinetuneConfig::from_json(const io::json& doc) {
    FinetuneConfig c;
    c.rounds = doc.at("rounds").get<int>();
    c.k = doc.at("k").get<int>();
    c.lr = doc.at("lr").get<double>();
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.eps = doc.value("eps", c.eps);
    c.seed = doc.at("seed").get<uint64_t>();
    return c;
}

FinetuneResult finetune(const model::Transformer& m, const RewardModel& rm,
                        const std::vector<std::vector<int>>& prompts, const FinetuneConfig& cfg) {
    if (m.provenance.regime != "pretrained")
        fail(ErrorCode::invalid_argument, "regime transitions only pretrained -> finetuned");
    if (cfg.rounds < 1) fail(ErrorCode::invalid_argument, "fine-tuning rounds must be >= 1");
    if (cfg.k < 1) fail(ErrorCode::invalid_argument, "samples per prompt must be >= 1");
    if (prompts.empty()) fail(ErrorCode::invalid_argument, "prompt list must be nonempty");
    if (rm.n_vocab != m.config.n_vocab)
        fail(ErrorCode::invalid_argument, "reward model vocab does not match model");
    for (const auto& p : prompts) {
        if (int(p.size()) + 1 > m.config.n_ctx)
            fail(ErrorCode::invalid_argument, "prompt leaves no room for an answer token");
    }

    FinetuneResult out{m, {}, {}};
    model::Transformer& ft = out.model;

    Rng rng(cfg.seed);
    Rng sample_rng = rng.child("sample");
    Adam opt(ft.params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    model::Params grad = model::Params::zeros_like(ft.params);

    for (int round = 1; round <= cfg.rounds; ++round) {
        std::vector<std::pair<const std::vector<int>*, int>> kept;
        bool flat_round = true;
        double reward_sum = 0.0;
        for (const auto& prompt : prompts) {
            model::Trace trace = ft.forward_with_trace(prompt);
            int best_tok = -1;
            double best_score = 0.0;
            double first_score = 0.0;
            bool prompt_flat = true;
            for (int s = 0; s < cfg.k; ++s) {
                int tok = model::sample_token(trace.probs, sample_rng);
                double sc = rm.score(prompt, tok);
                if (s == 0) first_score = sc;
                else if (sc != first_score) prompt_flat = false;
                if (best_tok < 0 || sc > best_score || (sc == best_score && tok < best_tok)) {
                    best_tok = tok;
                    best_score = sc;
                }
            }
            if (!prompt_flat) flat_round = false;
            reward_sum += best_score;
            kept.push_back({&prompt, best_tok});
        }
        if (flat_round)
            out.warnings.push_back("reward signal flat at round " + std::to_string(round));
        out.reward_curve.push_back({double(round), reward_sum / double(prompts.size())});

        grad.visit([](const std::string&, Mat& g) { g.zero(); });
        double loss_sum = 0.0;
        long pred = 0;
        for (const auto& [prompt, tok] : kept) {
            std::vector<int> seq = *prompt;
            seq.push_back(tok);
            auto [l, n] = ft.loss_and_grad(seq, &grad, int(seq.size()) - 2);
            loss_sum += l;
            pred += n;
        }
        double loss = loss_sum / double(pred);
        if (!std::isfinite(loss))
            fail(ErrorCode::numerical, "fine-tuning diverged: loss not finite at round " + std::to_string(round));
        scale_params(grad, 1.0 / double(pred));
        opt.step(ft.params, grad);
    }
    ft.params.check_finite();

    model::Provenance prov = m.provenance;
    prov.regime = "finetuned";
    prov.task = "reward-aligned single-token answering (rejection-sampling fine-tuning)";
    prov.finetune = cfg.to_json();
    prov.finetune["n_prompts"] = prompts.size();
    prov.finetune["warnings"] = out.warnings;
    io::json curve = io::json::array();
    for (const auto& p : out.reward_curve) curve.push_back({p[0], p[1]});
    prov.finetune["reward_curve"] = curve;
    ft.provenance = prov;
    return out;
}

} // namespace corra::train
