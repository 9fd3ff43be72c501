#include "corra/correspondence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "corra/error.hpp"
#include "corra/kernels.hpp"

namespace corra::correspondence {

std::vector<int> PromptTemplate::tokens_for(const corpus::Vocab& v, const std::string& entity) const {
    std::vector<int> ids{corpus::Vocab::bos};
    for (const auto& word : before) ids.push_back(v.id(word));
    ids.push_back(v.id(entity));
    for (const auto& word : after) ids.push_back(v.id(word));
    return ids;
}

PromptTemplate capital_template() { return {"capital_of", {"the", "capital", "of"}, {"is"}}; }
PromptTemplate location_template() { return {"location_of", {}, {"is", "at", "row"}}; }
PromptTemplate year_template() { return {"year_of", {}, {"was", "built", "in"}}; }
PromptTemplate color_template() { return {"color_of", {}, {"is", "lab"}}; }
PromptTemplate bare_template() { return {"bare", {}, {}}; }

PromptTemplate template_for_family(corpus::Family family) {
    switch (family) {
        case corpus::Family::capital: return capital_template();
        case corpus::Family::location: return location_template();
        case corpus::Family::year: return year_template();
        case corpus::Family::color: return color_template();
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

world::Kind subject_kind(corpus::Family family) {
    switch (family) {
        case corpus::Family::capital: return world::Kind::country;
        case corpus::Family::location:
        case corpus::Family::year: return world::Kind::landmark;
        case corpus::Family::color: return world::Kind::color;
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

world::Relation target_relation(corpus::Family family) {
    switch (family) {
        case corpus::Family::capital:
        case corpus::Family::location: return world::Relation::position;
        case corpus::Family::year: return world::Relation::founded_year;
        case corpus::Family::color: return world::Relation::color_coord;
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

PointSet collect_points(const model::LanguageModel& m, const world::WorldStructure& w,
                        const corpus::Vocab& vocab, const std::vector<int>& entities,
                        const PromptTemplate& tmpl, int layer) {
    if (entities.empty()) fail(ErrorCode::invalid_argument, "entity list must be nonempty");
    if (layer < 0 || layer >= m.n_sites()) fail(ErrorCode::invalid_argument, "capture layer out of range");

    PointSet ps;
    ps.layer = layer;
    ps.template_name = tmpl.name;
    ps.entity_pos = tmpl.entity_pos();
    ps.x = Mat(int(entities.size()), m.d_model());
    for (int i = 0; i < int(entities.size()); ++i) {
        const auto& e = w.entity(entities[i]);
        std::vector<int> tokens = tmpl.tokens_for(vocab, e.name);
        model::Trace trace = m.forward_with_trace(tokens);
        const Mat& resid = trace.resid[layer];
        std::copy(resid.row(ps.entity_pos), resid.row(ps.entity_pos) + resid.cols, ps.x.row(i));
        ps.entity_ids.push_back(e.id);
        ps.entity_names.push_back(e.name);
    }
    return ps;
}

Metric metric_from_name(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "cosine") return Metric::cosine;
    fail(ErrorCode::invalid_argument, "unknown RDM metric: " + std::string(s));
}

world::DissimilarityMatrix rdm(const PointSet& points, Metric metric) {
    int n = points.x.rows;
    if (n < 2) fail(ErrorCode::invalid_argument, "RDM needs at least two points");
    world::DissimilarityMatrix d;
    d.entity_ids = points.entity_ids;
    d.entity_names = points.entity_names;
    d.d = Mat(n, n);
    int w = points.x.cols;
    std::vector<double> norms(n, 0.0);
    if (metric == Metric::cosine) {
        for (int i = 0; i < n; ++i) {
            norms[i] = std::sqrt(kernels::dot(points.x.row(i), points.x.row(i), w));
            if (norms[i] == 0.0) fail(ErrorCode::numerical, "zero vector in cosine RDM");
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v;
            if (metric == Metric::euclidean) {
                v = std::sqrt(kernels::sqdist(points.x.row(i), points.x.row(j), w));
            } else {
                v = 1.0 - kernels::dot(points.x.row(i), points.x.row(j), w) / (norms[i] * norms[j]);
                v = std::max(0.0, v);
            }
            d.d.at(i, j) = v;
            d.d.at(j, i) = v;
        }
    d.validate();
    return d;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    int n = int(v.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double r = 0.5 * double(i + j) + 1.0; // average of 1-based ranks i+1..j+1
        for (int k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) fail(ErrorCode::invalid_argument, "spearman inputs differ in length");
    if (a.size() < 3) fail(ErrorCode::invalid_argument, "spearman needs at least three values");
    auto ra = average_ranks(a), rb = average_ranks(b);
    int n = int(a.size());
    double ma = kernels::sum(ra.data(), n) / n, mb = kernels::sum(rb.data(), n) / n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (int i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0)
        fail(ErrorCode::numerical, "spearman undefined: zero rank variance");
    return num / std::sqrt(va * vb);
}

std::vector<double> upper_triangle(const world::DissimilarityMatrix& d) {
    std::vector<double> out;
    for (int i = 0; i < d.d.rows; ++i)
        for (int j = i + 1; j < d.d.cols; ++j) out.push_back(d.d.at(i, j));
    return out;
}

namespace {

void check_aligned(const world::DissimilarityMatrix& a, const world::DissimilarityMatrix& b) {
    if (a.d.rows != b.d.rows) fail(ErrorCode::invalid_argument, "dissimilarity sizes differ");
    if (a.d.rows < 3) fail(ErrorCode::invalid_argument, "RSA needs at least three entities");
    if (!a.entity_ids.empty() && !b.entity_ids.empty() && a.entity_ids != b.entity_ids)
        fail(ErrorCode::invalid_argument, "dissimilarity matrices cover different entities");
}

} // namespace

double rsa_score(const world::DissimilarityMatrix& d_internal,
                 const world::DissimilarityMatrix& d_external) {
    check_aligned(d_internal, d_external);
    return spearman(upper_triangle(d_internal), upper_triangle(d_external));
}

PermutationResult permutation_test(const world::DissimilarityMatrix& d_internal,
                                   const world::DissimilarityMatrix& d_external, int n_perm,
                                   uint64_t seed) {
    check_aligned(d_internal, d_external);
    if (n_perm < 100) fail(ErrorCode::invalid_argument, "n_perm must be at least 100");

    PermutationResult res;
    auto ut_int = upper_triangle(d_internal);
    res.rho = spearman(ut_int, upper_triangle(d_external));

    int n = d_external.d.rows;
    Rng rng(seed);
    int exceed = 0;
    res.null_rhos.reserve(n_perm);
    world::DissimilarityMatrix permuted = d_external;
    for (int t = 0; t < n_perm; ++t) {
        auto pi = rng.permutation(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) permuted.d.at(i, j) = d_external.d.at(pi[i], pi[j]);
        double r = spearman(ut_int, upper_triangle(permuted));
        res.null_rhos.push_back(r);
        if (r >= res.rho) ++exceed;
    }
    res.p_value = double(1 + exceed) / double(1 + n_perm);
    std::vector<double> sorted = res.null_rhos;
    std::sort(sorted.begin(), sorted.end());
    res.null_q95 = sorted[std::min(size_t(0.95 * double(sorted.size())), sorted.size() - 1)];
    return res;
}

std::vector<double> ProbeModel::predict(const double* x) const {
    std::vector<double> y(w.cols);
    for (int c = 0; c < w.cols; ++c) {
        double acc = b.at(0, c);
        for (int r = 0; r < w.rows; ++r) acc += x[r] * w.at(r, c);
        y[c] = acc;
    }
    return y;
}

ProbeModel fit_probe(const PointSet& points, const Mat& targets, double ridge, uint64_t split_seed) {
    int n = points.x.rows, d = points.x.cols, t = targets.cols;
    if (n < 4) fail(ErrorCode::invalid_argument, "probe needs at least four entities");
    if (targets.rows != n) fail(ErrorCode::invalid_argument, "targets must match entity count");
    if (ridge < 0.0) fail(ErrorCode::invalid_argument, "ridge must be non-negative");
    for (double v : targets.a)
        if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "targets must be finite");

    Rng rng(split_seed);
    auto order = rng.permutation(n);
    int n_held = std::max(1, n / 4);

    ProbeModel probe;
    probe.ridge = ridge;
    probe.heldout_idx.assign(order.begin(), order.begin() + n_held);
    probe.train_idx.assign(order.begin() + n_held, order.end());
    std::sort(probe.heldout_idx.begin(), probe.heldout_idx.end());
    std::sort(probe.train_idx.begin(), probe.train_idx.end());
    int n_train = int(probe.train_idx.size());

    Eigen::MatrixXd X(n_train, d), Y(n_train, t);
    for (int i = 0; i < n_train; ++i) {
        for (int c = 0; c < d; ++c) X(i, c) = points.x.at(probe.train_idx[i], c);
        for (int c = 0; c < t; ++c) Y(i, c) = targets.at(probe.train_idx[i], c);
    }
    Eigen::RowVectorXd x_mean = X.colwise().mean();
    Eigen::RowVectorXd y_mean = Y.colwise().mean();
    Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    Eigen::MatrixXd Yc = Y.rowwise() - y_mean;

    Eigen::MatrixXd gram = Xc.transpose() * Xc + ridge * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd W;
    if (ridge == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        if (!lu.isInvertible())
            fail(ErrorCode::numerical, "singular probe system; use ridge > 0");
        W = lu.solve(Xc.transpose() * Yc);
    } else {
        W = gram.ldlt().solve(Xc.transpose() * Yc);
    }
    Eigen::RowVectorXd bias = y_mean - x_mean * W;

    probe.w = Mat(d, t);
    probe.b = Mat(1, t);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < t; ++c) probe.w.at(r, c) = W(r, c);
    for (int c = 0; c < t; ++c) probe.b.at(0, c) = bias(c);

    auto r2_on = [&](const std::vector<int>& idx) {
        double sse = 0.0, sst = 0.0;
        for (int i : idx) {
            auto pred = probe.predict(points.x.row(i));
            for (int c = 0; c < t; ++c) {
                double err = targets.at(i, c) - pred[c];
                double dev = targets.at(i, c) - y_mean(c);
                sse += err * err;
                sst += dev * dev;
            }
        }
        if (sst == 0.0) fail(ErrorCode::numerical, "probe targets have zero variance on split");
        return 1.0 - sse / sst;
    };
    probe.train_r2 = r2_on(probe.train_idx);
    probe.heldout_r2 = r2_on(probe.heldout_idx);
    return probe;
}

double analogy_consistency(const PointSet& a_points, const PointSet& b_points) {
    int n = a_points.x.rows;
    if (b_points.x.rows != n) fail(ErrorCode::invalid_argument, "analogy pair sets differ in size");
    if (n < 2) fail(ErrorCode::invalid_argument, "analogy needs at least two pairs");
    int d = a_points.x.cols;
    if (b_points.x.cols != d) fail(ErrorCode::invalid_argument, "analogy point widths differ");

    int hits = 0;
    std::vector<double> bhat(d);
    for (int j = 0; j < n; ++j) {
        std::fill(bhat.begin(), bhat.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            for (int c = 0; c < d; ++c) bhat[c] += b_points.x.at(i, c) - a_points.x.at(i, c);
        }
        for (int c = 0; c < d; ++c) bhat[c] = bhat[c] / double(n - 1) + a_points.x.at(j, c);

        // candidate pool: every a and b point except a_j itself
        double best = 0.0;
        int best_side = -1, best_idx = -1;
        auto consider = [&](const Mat& x, int idx, int side) {
            double dist = kernels::sqdist(bhat.data(), x.row(idx), d);
            if (best_side < 0 || dist < best) {
                best = dist;
                best_side = side;
                best_idx = idx;
            }
        };
        for (int i = 0; i < n; ++i)
            if (i != j) consider(a_points.x, i, 0);
        for (int i = 0; i < n; ++i) consider(b_points.x, i, 1);
        if (best_side == 1 && best_idx == j) ++hits;
    }
    return double(hits) / double(n);
}

double ordering_correspondence(const PointSet& points, const std::vector<double>& scalar_targets,
                               const ProbeModel& probe) {
    int n = points.x.rows;
    if (int(scalar_targets.size()) != n)
        fail(ErrorCode::invalid_argument, "scalar targets must match entity count");
    if (probe.w.rows != points.x.cols || probe.w.cols < 1)
        fail(ErrorCode::invalid_argument, "probe direction incompatible with points");
    bool constant = true;
    for (double v : scalar_targets)
        if (v != scalar_targets[0]) {
            constant = false;
            break;
        }
    if (constant) fail(ErrorCode::invalid_argument, "scalar targets are constant");

    std::vector<double> proj(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 0; r < points.x.cols; ++r) acc += points.x.at(i, r) * probe.w.at(r, 0);
        proj[i] = acc;
    }
    return spearman(proj, scalar_targets);
}

} // namespace corra::correspondence
