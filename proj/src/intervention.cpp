#include "corra/intervention.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "corra/error.hpp"
#include "corra/kernels.hpp"
#include "corra/rng.hpp"

namespace corra::intervention {

namespace {

void check_layer(const model::LanguageModel& m, int layer) {
    if (layer < 0 || layer >= m.n_sites())
        fail(ErrorCode::invalid_argument, "layer out of range: " + std::to_string(layer));
}

std::vector<double> trace_row(const model::Trace& t, int layer, int pos) {
    const Mat& r = t.resid[size_t(layer)];
    return std::vector<double>(r.row(pos), r.row(pos) + r.cols);
}

world::DissimilarityMatrix euclidean_rdm(const Mat& x, const std::vector<int>& ids,
                                         const std::vector<std::string>& names) {
    world::DissimilarityMatrix d;
    d.entity_ids = ids;
    d.entity_names = names;
    d.d = Mat(x.rows, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = i + 1; j < x.rows; ++j) {
            double dist = std::sqrt(kernels::sqdist(x.row(i), x.row(j), x.cols));
            d.d.at(i, j) = dist;
            d.d.at(j, i) = dist;
        }
    return d;
}

// Classical MDS: double-center the squared distances, eigendecompose, keep
// the positive-eigenvalue axes (at most max_dims), scale by sqrt(eigenvalue).
Mat mds_embed(const Mat& d, int max_dims) {
    int n = d.rows;
    Eigen::MatrixXd b(n, n);
    std::vector<double> row_mean(size_t(n), 0.0);
    double grand = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) row_mean[size_t(i)] += d.at(i, j) * d.at(i, j);
        row_mean[size_t(i)] /= n;
        grand += row_mean[size_t(i)];
    }
    grand /= n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b(i, j) = -0.5 * (d.at(i, j) * d.at(i, j) - row_mean[size_t(i)] -
                              row_mean[size_t(j)] + grand);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success) fail(ErrorCode::numerical, "MDS eigendecomposition failed");

    double top = es.eigenvalues().maxCoeff();
    double tol = std::max(1e-12, 1e-9 * std::max(0.0, top));
    std::vector<int> keep; // eigenvalues come back ascending
    for (int i = n - 1; i >= 0 && int(keep.size()) < max_dims; --i)
        if (es.eigenvalues()(i) > tol) keep.push_back(i);
    if (keep.empty()) fail(ErrorCode::numerical, "target has no positive MDS axes");

    Mat y(n, int(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
        double s = std::sqrt(es.eigenvalues()(keep[k]));
        for (int i = 0; i < n; ++i) y.at(i, int(k)) = s * es.eigenvectors()(i, keep[k]);
    }
    return y;
}

// Orthogonal Procrustes with scaling and translation: the rotated, scaled
// MDS configuration placed over the point cloud. scale -> 0 when the target
// structure has no linear trace in the points.
struct Aligned {
    Mat x;            // n x d, same frame as the points
    double scale = 0.0;
};

Aligned procrustes_align(const Mat& y, const Mat& points) {
    int n = y.rows, k = y.cols, d = points.cols;
    Eigen::MatrixXd yc(n, k), xc(n, d);
    Eigen::RowVectorXd ymean = Eigen::RowVectorXd::Zero(k), xmean = Eigen::RowVectorXd::Zero(d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) ymean(j) += y.at(i, j) / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) xmean(j) += points.at(i, j) / n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) yc(i, j) = y.at(i, j) - ymean(j);
        for (int j = 0; j < d; ++j) xc(i, j) = points.at(i, j) - xmean(j);
    }
    double ynorm2 = yc.squaredNorm();
    if (ynorm2 < 1e-300) fail(ErrorCode::numerical, "degenerate MDS configuration");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc.transpose() * xc,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose(); // k x d
    double scale = svd.singularValues().sum() / ynorm2;
    Eigen::MatrixXd out = scale * (yc * rot);

    Aligned a;
    a.scale = scale;
    a.x = Mat(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) a.x.at(i, j) = out(i, j) + xmean(j);
    return a;
}

double rsa_between(const Mat& x, const world::DissimilarityMatrix& target,
                   const correspondence::PointSet& points) {
    auto d = euclidean_rdm(x, points.entity_ids, points.entity_names);
    return correspondence::rsa_score(d, target);
}

} // namespace

std::vector<double> extract_relation_vector(const model::LanguageModel& m,
                                            const world::WorldStructure& w,
                                            const corpus::Vocab& vocab,
                                            const std::vector<int>& train_countries, int layer) {
    check_layer(m, layer);
    if (train_countries.empty())
        fail(ErrorCode::invalid_argument, "need at least one training country");
    std::vector<double> v(size_t(m.d_model()), 0.0);
    for (int c : train_countries) {
        if (w.entity(c).kind != world::Kind::country)
            fail(ErrorCode::invalid_argument, w.entity(c).name + " is not a country");
        auto cap_prompt = corpus::capital_prompt(vocab, w.entity(c).name);
        auto rev_prompt = corpus::country_prompt(vocab, w.entity(w.capital_of.at(c)).name);
        auto cap = trace_row(m.forward_with_trace(cap_prompt), layer, int(cap_prompt.size()) - 1);
        auto rev = trace_row(m.forward_with_trace(rev_prompt), layer, int(rev_prompt.size()) - 1);
        for (size_t i = 0; i < v.size(); ++i) v[i] += cap[i] - rev[i];
    }
    for (double& x : v) x /= double(train_countries.size());
    return v;
}

SteeringReport apply_vector_addition(const model::LanguageModel& m,
                                     const std::vector<std::vector<int>>& prompts, int layer,
                                     const std::vector<double>& v,
                                     const std::vector<int>& targets) {
    check_layer(m, layer);
    if (int(v.size()) != m.d_model())
        fail(ErrorCode::invalid_argument, "steering vector width does not match the model");
    if (targets.size() != prompts.size())
        fail(ErrorCode::invalid_argument, "one target token per prompt required");

    SteeringReport rep;
    double flips = 0.0, drr = 0.0;
    for (size_t i = 0; i < prompts.size(); ++i) {
        auto base = m.forward_with_trace(prompts[i]);
        std::vector<model::Hook> hooks{{layer, int(prompts[i].size()) - 1, v}};
        auto steered = m.forward_with_trace(prompts[i], hooks);

        SteeringOutcome o;
        o.baseline_token = model::argmax_token(base.probs);
        o.steered_token = model::argmax_token(steered.probs);
        o.changed = o.steered_token != o.baseline_token;
        o.delta_rr = model::reciprocal_rank(steered.probs, targets[i]) -
                     model::reciprocal_rank(base.probs, targets[i]);
        flips += o.changed ? 1.0 : 0.0;
        drr += o.delta_rr;
        rep.per_prompt.push_back(o);
    }
    if (!prompts.empty()) {
        rep.flip_rate = flips / double(prompts.size());
        rep.mean_delta_mrr = drr / double(prompts.size());
    }
    return rep;
}

std::string SteeringReport::to_text() const {
    std::ostringstream out;
    out << "prompt\tbaseline\tsteered\tchanged\tdelta_rr\n";
    for (size_t i = 0; i < per_prompt.size(); ++i) {
        const auto& o = per_prompt[i];
        out << i << '\t' << o.baseline_token << '\t' << o.steered_token << '\t'
            << (o.changed ? "yes" : "no") << '\t' << io::format_double(o.delta_rr) << '\n';
    }
    out << "flip_rate\t" << io::format_double(flip_rate) << '\n';
    out << "mean_delta_mrr\t" << io::format_double(mean_delta_mrr) << '\n';
    return out.str();
}

Direction direction_from_name(std::string_view s) {
    if (s == "toward") return Direction::toward;
    if (s == "away") return Direction::away;
    fail(ErrorCode::invalid_argument, "unknown direction: " + std::string(s));
}

PerturbResult probe_perturb(const model::LanguageModel& m, const std::vector<int>& prompt,
                            int entity_pos, int layer, const correspondence::ProbeModel& probe,
                            const std::vector<double>& true_targets, Direction direction,
                            double magnitude) {
    check_layer(m, layer);
    if (magnitude < 0.0) fail(ErrorCode::invalid_argument, "magnitude must be non-negative");
    if (entity_pos < 0 || entity_pos >= int(prompt.size()))
        fail(ErrorCode::invalid_argument, "entity position outside the prompt");
    if (probe.w.rows != m.d_model())
        fail(ErrorCode::invalid_argument, "probe was fitted at a different width");
    if (int(true_targets.size()) != probe.w.cols)
        fail(ErrorCode::invalid_argument, "one target per probe output required");

    auto base = m.forward_with_trace(prompt);
    std::vector<double> x = trace_row(base, layer, entity_pos);

    // minimal input-space displacement making the probe read out the truth:
    // dx = W (W^T W)^{-1} (y_true - y_hat)
    auto y_hat = probe.predict(x.data());
    int d = probe.w.rows, t = probe.w.cols;
    Eigen::MatrixXd w(d, t);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < t; ++j) w(i, j) = probe.w.at(i, j);
    Eigen::VectorXd r(t);
    for (int j = 0; j < t; ++j) r(j) = true_targets[size_t(j)] - y_hat[size_t(j)];
    Eigen::MatrixXd gram = w.transpose() * w;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) fail(ErrorCode::numerical, "probe directions are degenerate");
    Eigen::VectorXd dx = w * lu.solve(r);

    PerturbResult res;
    res.baseline_token = model::argmax_token(base.probs);
    res.delta.assign(size_t(d), 0.0);
    double sign = direction == Direction::toward ? 1.0 : -1.0;
    for (int i = 0; i < d; ++i) res.delta[size_t(i)] = sign * magnitude * dx(i);

    std::vector<model::Hook> hooks{{layer, entity_pos, res.delta}};
    auto perturbed = m.forward_with_trace(prompt, hooks);
    res.perturbed_token = model::argmax_token(perturbed.probs);
    res.probs = perturbed.probs;
    return res;
}

std::string_view mode_name(Mode m) { return m == Mode::tighten ? "tighten" : "loosen"; }

bool ModulationPlan::valid() const {
    const ManipulationCheck* t = nullptr;
    for (const auto& c : checks)
        if (c.is_target) t = &c;
    if (!t) return false;
    if (target_absent || strength == 0.0) return true; // nothing to move
    // 0.99 band: near a perfect starting fit the deltas are numerical dust,
    // and dust breaks Spearman ties, so "did not decrease" cannot be read off
    // the rank correlation at full precision
    if (mode == Mode::tighten) return t->rsa_after >= t->rsa_before - 1e-9 || t->rsa_after >= 0.99;
    return t->rsa_after < t->null_q95 || t->rsa_after <= t->rsa_before + 1e-9;
}

io::json ModulationPlan::to_json() const {
    io::json doc;
    doc["layer"] = layer;
    doc["mode"] = std::string(mode_name(mode));
    doc["strength"] = strength;
    doc["target"] = target;
    doc["seed"] = seed;
    doc["entity_ids"] = entity_ids;
    doc["target_absent"] = target_absent;
    doc["derangement"] = derangement;
    io::json checks_doc = io::json::array();
    for (const auto& c : checks)
        checks_doc.push_back({{"structure", c.structure},
                              {"is_target", c.is_target},
                              {"rsa_before", c.rsa_before},
                              {"rsa_after", c.rsa_after},
                              {"null_q95", c.null_q95}});
    doc["checks"] = std::move(checks_doc);
    io::json rows = io::json::array();
    for (int i = 0; i < deltas.rows; ++i)
        rows.push_back(std::vector<double>(deltas.row(i), deltas.row(i) + deltas.cols));
    doc["deltas"] = std::move(rows);
    return doc;
}

ModulationPlan build_modulation_plan(const correspondence::PointSet& points,
                                     const world::DissimilarityMatrix& target,
                                     const std::string& target_name,
                                     const world::DissimilarityMatrix* competing,
                                     const std::string& competing_name, double strength,
                                     Mode mode, uint64_t seed, int n_perm) {
    int n = points.x.rows, d = points.x.cols;
    if (n < 4) fail(ErrorCode::invalid_argument, "need at least 4 points for MDS/Procrustes");
    if (strength < 0.0 || strength > 1.0)
        fail(ErrorCode::invalid_argument, "strength must lie in [0,1]");
    if (target.entity_ids != points.entity_ids)
        fail(ErrorCode::invalid_argument, "target structure is over different entities");
    if (competing && competing->entity_ids != points.entity_ids)
        fail(ErrorCode::invalid_argument, "competing structure is over different entities");

    Rng rng(seed);
    auto before = euclidean_rdm(points.x, points.entity_ids, points.entity_names);
    auto null_t = correspondence::permutation_test(before, target, n_perm,
                                                  rng.child("null-target").next_u64());

    ModulationPlan plan;
    plan.layer = points.layer;
    plan.mode = mode;
    plan.strength = strength;
    plan.target = target_name;
    plan.seed = seed;
    plan.entity_ids = points.entity_ids;
    plan.deltas = Mat(n, d);
    plan.target_absent = null_t.rho < null_t.null_q95;

    double competing_before = 0.0, competing_q95 = 0.0;
    if (competing) {
        auto null_c = correspondence::permutation_test(before, *competing, n_perm,
                                                       rng.child("null-competing").next_u64());
        competing_before = null_c.rho;
        competing_q95 = null_c.null_q95;
    }

    if (!plan.target_absent && strength > 0.0) {
        Mat y = mds_embed(target.d, std::min(n - 1, d));
        Aligned aligned = procrustes_align(y, points.x);
        if (mode == Mode::tighten) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j)
                    plan.deltas.at(i, j) = strength * (aligned.x.at(i, j) - points.x.at(i, j));
        } else {
            // pick, over a few seeded candidates, the derangement of aligned
            // targets that best kills the target RSA while moving the
            // competing structure least ("all else being equal")
            Rng drng = rng.child("derangements");
            std::vector<int> best_pi;
            double best_rsa = 2.0, best_collateral = 2.0;
            bool best_below = false;
            for (int k = 0; k < 64; ++k) {
                auto pi = drng.derangement(n);
                Mat moved = points.x;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < d; ++j)
                        moved.at(i, j) += aligned.x.at(pi[size_t(i)], j) - aligned.x.at(i, j);
                double rsa = rsa_between(moved, target, points);
                bool below = rsa < null_t.null_q95;
                double collateral =
                    competing ? std::fabs(rsa_between(moved, *competing, points) - competing_before)
                              : 0.0;
                bool better = best_pi.empty() ||
                              (below && !best_below) ||
                              (below == best_below &&
                               (below ? collateral < best_collateral : rsa < best_rsa));
                if (better) {
                    best_pi = pi;
                    best_rsa = rsa;
                    best_collateral = collateral;
                    best_below = below;
                }
            }
            plan.derangement = best_pi;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j)
                    plan.deltas.at(i, j) = strength * (aligned.x.at(best_pi[size_t(i)], j) -
                                                       aligned.x.at(i, j));
        }
    }

    Mat after_x = points.x;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) after_x.at(i, j) += plan.deltas.at(i, j);

    ManipulationCheck tc;
    tc.structure = target_name;
    tc.is_target = true;
    tc.rsa_before = null_t.rho;
    tc.rsa_after = rsa_between(after_x, target, points);
    tc.null_q95 = null_t.null_q95;
    plan.checks.push_back(tc);
    if (competing) {
        ManipulationCheck cc;
        cc.structure = competing_name;
        cc.is_target = false;
        cc.rsa_before = competing_before;
        cc.rsa_after = rsa_between(after_x, *competing, points);
        cc.null_q95 = competing_q95;
        plan.checks.push_back(cc);
    }
    return plan;
}

ModulatedEval run_modulated_eval(const model::LanguageModel& m, const ModulationPlan& plan,
                                 const corpus::PromptSet& ps,
                                 const success::SuccessMetric& metric,
                                 const world::WorldStructure& w, const corpus::Vocab& vocab,
                                 uint64_t seed, int n_boot) {
    if (plan.checks.empty())
        fail(ErrorCode::invalid_argument, "modulation plan carries no manipulation check");
    if (ps.prompts.empty()) fail(ErrorCode::invalid_argument, "empty prompt set");
    if (n_boot < 1) fail(ErrorCode::invalid_argument, "n_boot must be positive");
    check_layer(m, plan.layer);

    std::map<int, int> row_of;
    for (size_t i = 0; i < plan.entity_ids.size(); ++i) row_of[plan.entity_ids[i]] = int(i);

    ModulatedEval ev;
    std::vector<std::vector<model::Hook>> hooks(ps.prompts.size());
    for (size_t i = 0; i < ps.prompts.size(); ++i) {
        const auto& p = ps.prompts[i];
        auto it = row_of.find(p.entity_id);
        if (it == row_of.end()) {
            ev.unplanned.push_back(int(i));
            continue;
        }
        int tok = vocab.id(w.entity(p.entity_id).name);
        int pos = -1;
        for (size_t j = 0; j < p.tokens.size(); ++j)
            if (p.tokens[j] == tok) {
                pos = int(j);
                break;
            }
        if (pos < 0) {
            ev.unplanned.push_back(int(i));
            continue;
        }
        const double* row = plan.deltas.row(it->second);
        hooks[i].push_back({plan.layer, pos, std::vector<double>(row, row + plan.deltas.cols)});
    }

    auto base = success::evaluate_metric(metric, m, ps, w, vocab, nullptr);
    auto mod = success::evaluate_metric(metric, m, ps, w, vocab, &hooks);
    ev.baseline = base.top1;
    ev.modulated = mod.top1;
    ev.delta = mod.top1 - base.top1;

    // paired bootstrap over per-prompt top-1 differences
    int n = int(ps.prompts.size());
    std::vector<double> diff(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        diff[size_t(i)] = double(mod.per_prompt[size_t(i)]) - double(base.per_prompt[size_t(i)]);
    Rng boot = Rng(seed).child("bootstrap");
    std::vector<double> means(static_cast<size_t>(n_boot));
    for (int b = 0; b < n_boot; ++b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += diff[boot.uniform(uint64_t(n))];
        means[size_t(b)] = s / n;
    }
    std::sort(means.begin(), means.end());
    size_t lo = size_t(std::floor(0.025 * n_boot));
    size_t hi = size_t(std::ceil(0.975 * n_boot));
    ev.ci_lo = means[std::min(lo, size_t(n_boot) - 1)];
    ev.ci_hi = means[hi == 0 ? 0 : std::min(hi - 1, size_t(n_boot) - 1)];
    return ev;
}

namespace {

struct CandidateRow {
    Mode mode;
    double strength;
    bool valid = false;
    ModulationPlan plan;
    ModulatedEval regime_eval, contrast_eval;
};

io::json ci_json(const ModulatedEval& ev) { return io::json::array({ev.ci_lo, ev.ci_hi}); }

} // namespace

io::json exploitation_report(const model::LanguageModel& m, const model::Provenance& prov,
                             const world::WorldStructure& w, const corpus::Corpus& corpus,
                             const AuditConfig& cfg) {
    if (m.vocab_size() != corpus.vocab.size())
        fail(ErrorCode::invalid_argument, "model and corpus vocabularies differ");
    check_layer(m, cfg.layer);
    if (cfg.strengths.empty()) fail(ErrorCode::invalid_argument, "strengths grid is empty");
    for (double s : cfg.strengths)
        if (s < 0.0 || s > 1.0) fail(ErrorCode::invalid_argument, "strength must lie in [0,1]");

    auto metric = success::metric_for_regime(prov);
    auto contrast = metric.id == "statistical" ? success::truth_metric()
                                               : success::statistical_metric();

    auto subjects = w.ids_of_kind(correspondence::subject_kind(cfg.family));
    auto points = correspondence::collect_points(
        m, w, corpus.vocab, subjects, correspondence::template_for_family(cfg.family), cfg.layer);
    auto world_d = world_dissimilarity(w, subjects, correspondence::target_relation(cfg.family));
    auto cooc_d =
        corpus::cooccurrence_structure(corpus, w, subjects, corpus.config.window).dissimilarity;
    auto ps = corpus::eval_prompt_set(w, corpus, cfg.family);

    auto base_stat = success::statistical_success(m, ps);
    auto base_truth = success::truth_success(m, ps, w, corpus.vocab);

    double s_max = *std::max_element(cfg.strengths.begin(), cfg.strengths.end());
    Rng rng(cfg.seed);

    struct TargetBlock {
        std::string name, competing_name;
        const world::DissimilarityMatrix *target, *competing;
        std::vector<CandidateRow> rows;
    };
    std::vector<TargetBlock> blocks = {
        {"world", "cooccurrence", &world_d, &cooc_d, {}},
        {"cooccurrence", "world", &cooc_d, &world_d, {}},
    };

    for (auto& blk : blocks) {
        for (Mode mode : {Mode::tighten, Mode::loosen}) {
            for (size_t si = 0; si < cfg.strengths.size(); ++si) {
                std::string label = blk.name + ":" + std::string(mode_name(mode)) + ":" +
                                    std::to_string(si);
                CandidateRow row;
                row.mode = mode;
                row.strength = cfg.strengths[si];
                row.plan = build_modulation_plan(points, *blk.target, blk.name, blk.competing,
                                                 blk.competing_name, cfg.strengths[si], mode,
                                                 rng.child("plan:" + label).next_u64(), cfg.n_perm);
                row.valid = row.plan.valid();
                if (row.valid) {
                    row.regime_eval = run_modulated_eval(
                        m, row.plan, ps, metric, w, corpus.vocab,
                        rng.child("eval:" + label).next_u64(), cfg.n_boot);
                    row.contrast_eval = run_modulated_eval(
                        m, row.plan, ps, contrast, w, corpus.vocab,
                        rng.child("contrast:" + label).next_u64(), cfg.n_boot);
                }
                blk.rows.push_back(std::move(row));
            }
        }
    }

    // verdict from the loosen rows at the largest strength, regime metric
    auto loosen_at_max = [&](const TargetBlock& blk) -> const CandidateRow* {
        for (const auto& row : blk.rows)
            if (row.mode == Mode::loosen && row.strength == s_max && row.valid) return &row;
        return nullptr;
    };
    const CandidateRow* lw = loosen_at_max(blocks[0]);
    const CandidateRow* lc = loosen_at_max(blocks[1]);
    std::string verdict = "inconclusive";
    std::string note;
    if (!lw || !lc) {
        note = "a loosen plan failed its manipulation check; verdict refused";
    } else {
        auto excludes_zero = [](const ModulatedEval& e) { return e.ci_hi < 0.0 || e.ci_lo > 0.0; };
        auto disjoint = [](const ModulatedEval& a, const ModulatedEval& b) {
            return a.ci_hi < b.ci_lo || b.ci_hi < a.ci_lo;
        };
        const auto& ew = lw->regime_eval;
        const auto& ec = lc->regime_eval;
        bool xw = excludes_zero(ew), xc = excludes_zero(ec);
        if (xw && std::fabs(ew.delta) > std::fabs(ec.delta) && disjoint(ew, ec))
            verdict = "world";
        else if (xc && std::fabs(ec.delta) > std::fabs(ew.delta) && disjoint(ew, ec))
            verdict = "cooccurrence";
        else if (xw && xc && !disjoint(ew, ec))
            verdict = "both";
    }

    io::json doc;
    doc["schema"] = "corraudit/exploitation-report/v1";
    doc["task"] = prov.task;
    doc["regime"] = prov.regime;
    doc["metric"] = metric.id;
    doc["contrast_metric"] = contrast.id;
    doc["family"] = std::string(corpus::family_name(cfg.family));
    doc["layer"] = cfg.layer;
    doc["entities"] = points.entity_names;
    doc["baseline"] = {
        {"statistical", {{"top1", base_stat.top1}, {"mean_logprob", base_stat.mean_logprob}}},
        {"truth", {{"top1", base_truth.top1}}},
    };

    io::json corr = io::json::array();
    for (const auto& blk : blocks) {
        io::json entry;
        entry["target"] = blk.name;
        entry["competing"] = blk.competing_name;
        const ModulationPlan* ref = nullptr; // plan at max strength, tighten, for before/null
        double after_tighten = 0.0, after_loosen = 0.0;
        for (const auto& row : blk.rows) {
            if (row.strength != s_max) continue;
            for (const auto& c : row.plan.checks) {
                if (!c.is_target) continue;
                if (row.mode == Mode::tighten) {
                    ref = &row.plan;
                    after_tighten = c.rsa_after;
                } else {
                    after_loosen = c.rsa_after;
                }
            }
        }
        if (!ref) fail(ErrorCode::numerical, "missing manipulation checks");
        entry["rsa_before"] = ref->checks[0].rsa_before;
        entry["null_q95"] = ref->checks[0].null_q95;
        entry["target_absent"] = ref->target_absent;
        entry["rsa_after_tighten"] = after_tighten;
        entry["rsa_after_loosen"] = after_loosen;
        io::json rows = io::json::array();
        for (const auto& row : blk.rows) {
            io::json r;
            r["mode"] = std::string(mode_name(row.mode));
            r["strength"] = row.strength;
            r["valid"] = row.valid;
            if (row.valid) {
                r["delta"] = row.regime_eval.delta;
                r["ci"] = ci_json(row.regime_eval);
                r["baseline"] = row.regime_eval.baseline;
                r["modulated"] = row.regime_eval.modulated;
                r["contrast_delta"] = row.contrast_eval.delta;
                r["contrast_ci"] = ci_json(row.contrast_eval);
                r["unplanned_prompts"] = row.regime_eval.unplanned;
            }
            io::json checks_doc = io::json::array();
            for (const auto& c : row.plan.checks)
                checks_doc.push_back({{"structure", c.structure},
                                      {"is_target", c.is_target},
                                      {"rsa_before", c.rsa_before},
                                      {"rsa_after", c.rsa_after},
                                      {"null_q95", c.null_q95}});
            r["checks"] = std::move(checks_doc);
            rows.push_back(std::move(r));
        }
        entry["deltas"] = std::move(rows);
        corr.push_back(std::move(entry));
    }
    doc["correspondences"] = std::move(corr);
    doc["verdict"] = verdict;
    doc["verdict_note"] = note;
    doc["rubric"] = {
        {"task", prov.task},
        {"correspondence_scores",
         {{"world", doc["correspondences"][0]["rsa_before"]},
          {"cooccurrence", doc["correspondences"][1]["rsa_before"]}}},
        {"success_dependence", "correspondences[*].deltas"},
    };
    doc["config"] = {
        {"family", std::string(corpus::family_name(cfg.family))},
        {"layer", cfg.layer},
        {"strengths", cfg.strengths},
        {"n_perm", cfg.n_perm},
        {"n_boot", cfg.n_boot},
        {"seed", cfg.seed},
    };
    doc["seeds"] = {{"audit", cfg.seed}};
    doc["hashes"] = {
        {"world", io::fnv1a_hex(w.to_json().dump())},
        {"corpus", io::fnv1a_hex(corpus.to_jsonl())},
        {"provenance_world", prov.world_hash},
        {"provenance_corpus", prov.corpus_hash},
    };
    return doc;
}

} // namespace corra::intervention
