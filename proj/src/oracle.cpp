#include "corra/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "corra/error.hpp"
#include "corra/kernels.hpp"

namespace corra::oracle {

namespace {

// World-oracle coordinate layout. Content lives in low dims; per-family query
// markers live far away so cross-family prototypes can never win.
constexpr int kPosX = 0, kPosY = 1;
constexpr int kLab0 = 2, kLab1 = 3, kLab2 = 4;
constexpr int kCityDim = 5;
constexpr double kPosScale = 10.0, kLabScale = 0.3, kCityMark = 5.0;
constexpr int kQueryBase = 40;

std::vector<double> zeros(int n) { return std::vector<double>(n, 0.0); }

double max_pairwise_dist(const std::map<int, std::vector<double>>& act) {
    double best = 0.0;
    for (auto i = act.begin(); i != act.end(); ++i)
        for (auto j = std::next(i); j != act.end(); ++j)
            best = std::max(best, std::sqrt(kernels::sqdist(i->second.data(), j->second.data(),
                                                            int(i->second.size()))));
    return best;
}

void place_query_vectors(OracleModel& m, double content_span) {
    // large enough that any cross-family squared distance dominates content
    double scale = 10.0 * content_span + 100.0;
    int i = 0;
    for (Query q : {Query::capital, Query::country, Query::location, Query::year, Query::color}) {
        auto v = zeros(m.width);
        v[size_t(kQueryBase + i)] = scale;
        m.query_vec[q] = v;
        ++i;
    }
}

// prototype = subject's own activation plus the family marker, labelled with
// that subject's answer token: nearest-prototype search identifies the
// subject geometrically, then emits its stored answer
void add_subject_prototype(OracleModel& m, Query q, int subject_id, int answer_token) {
    Prototype p;
    p.token = answer_token;
    p.v = m.act.at(subject_id);
    const auto& qv = m.query_vec.at(q);
    for (int c = 0; c < m.width; ++c) p.v[size_t(c)] += qv[size_t(c)];
    m.prototypes[q].push_back(std::move(p));
}

} // namespace

ParsedPrompt OracleModel::parse(const std::vector<int>& tokens) const {
    for (int t : tokens)
        if (t < 0 || t >= vocab.size())
            fail(ErrorCode::invalid_argument, "unknown token id " + std::to_string(t));
    auto word = [&](size_t i) { return vocab.token(tokens[i]); };
    auto entity_at = [&](size_t i) {
        const world::Entity* e = world_.find_by_name(word(i));
        if (!e) fail(ErrorCode::invalid_argument, "oracle prompt slot is not an entity: " + word(i));
        return e->id;
    };
    size_t n = tokens.size();
    if (n == 0 || tokens[0] != corpus::Vocab::bos)
        fail(ErrorCode::invalid_argument, "oracle prompts start with <bos>");
    if (n == 6 && word(1) == "the" && word(2) == "capital" && word(3) == "of" && word(5) == "is")
        return {Query::capital, entity_at(4), 4};
    if (n == 5 && word(2) == "is" && word(3) == "capital" && word(4) == "of")
        return {Query::country, entity_at(1), 1};
    if (n == 5 && word(2) == "is" && word(3) == "at" && word(4) == "row")
        return {Query::location, entity_at(1), 1};
    if (n == 5 && word(2) == "was" && word(3) == "built" && word(4) == "in")
        return {Query::year, entity_at(1), 1};
    if (n == 4 && word(2) == "is" && word(3) == "lab")
        return {Query::color, entity_at(1), 1};
    fail(ErrorCode::invalid_argument, "oracle cannot parse prompt");
}

model::Trace OracleModel::forward_with_trace(const std::vector<int>& tokens,
                                             const std::vector<model::Hook>& hooks) const {
    ParsedPrompt q = parse(tokens);
    int T = int(tokens.size());
    model::validate_hooks(hooks, n_sites(), T, width);

    Mat resid0(T, width);
    for (int p = 0; p < T; ++p) {
        const world::Entity* e = world_.find_by_name(vocab.token(tokens[size_t(p)]));
        const std::vector<double>* src = nullptr;
        if (e && act.count(e->id)) src = &act.at(e->id);
        else if (p == T - 1) src = &query_vec.at(q.family);
        if (src) std::copy(src->begin(), src->end(), resid0.row(p));
    }
    model::apply_hooks_at_site(resid0, 0, hooks);
    Mat resid1 = resid0;
    model::apply_hooks_at_site(resid1, 1, hooks);

    std::vector<double> state(static_cast<size_t>(width));
    for (int c = 0; c < width; ++c)
        state[size_t(c)] = resid1.at(q.entity_pos, c) + resid1.at(T - 1, c);

    model::Trace trace;
    trace.resid.push_back(std::move(resid0));
    trace.resid.push_back(std::move(resid1));
    trace.logits.assign(size_t(vocab.size()), -1e15);
    for (const auto& [family, protos] : prototypes) {
        (void)family;
        for (const auto& proto : protos) {
            double logit = -kernels::sqdist(state.data(), proto.v.data(), width) / tau;
            size_t t = size_t(proto.token);
            trace.logits[t] = std::max(trace.logits[t], logit);
        }
    }
    double mx = *std::max_element(trace.logits.begin(), trace.logits.end());
    trace.probs.assign(size_t(vocab.size()), 0.0);
    double total = 0.0;
    for (size_t t = 0; t < trace.probs.size(); ++t) {
        trace.probs[t] = std::exp(trace.logits[t] - mx);
        total += trace.probs[t];
    }
    for (double& p : trace.probs) p /= total;
    return trace;
}

OracleModel build_world_oracle(const world::WorldStructure& w) {
    w.validate();
    OracleModel m;
    m.kind = "world";
    m.vocab = corpus::build_vocab(w);
    m.set_world(w);

    for (const auto& e : w.entities) {
        auto v = zeros(m.width);
        switch (e.kind) {
            case world::Kind::country:
            case world::Kind::city:
            case world::Kind::landmark: {
                auto p = w.position.at(e.id);
                v[kPosX] = kPosScale * p.x;
                v[kPosY] = kPosScale * p.y;
                // cities carry a marker so a capital is its country's point
                // plus a constant offset (what relation-vector steering finds)
                if (e.kind == world::Kind::city) v[kCityDim] = kCityMark;
                break;
            }
            case world::Kind::color: {
                const auto& c = w.color_coord.at(e.id);
                v[kLab0] = kLabScale * c[0];
                v[kLab1] = kLabScale * c[1];
                v[kLab2] = kLabScale * c[2];
                break;
            }
        }
        m.act[e.id] = std::move(v);
    }

    place_query_vectors(m, max_pairwise_dist(m.act));
    auto num = [&](int v) { return m.vocab.id(std::to_string(v)); };
    for (int c : w.ids_of_kind(world::Kind::country)) {
        int cap = w.capital_of.at(c);
        add_subject_prototype(m, Query::capital, c, m.vocab.id(w.entity(cap).name));
        add_subject_prototype(m, Query::country, cap, m.vocab.id(w.entity(c).name));
    }
    for (int l : w.ids_of_kind(world::Kind::landmark)) {
        add_subject_prototype(m, Query::location, l, num(w.position.at(l).y));
        add_subject_prototype(m, Query::year, l, num(w.founded_year.at(l)));
    }
    for (int c : w.ids_of_kind(world::Kind::color))
        add_subject_prototype(m, Query::color, c, num(int(w.color_coord.at(c)[0])));

    m.provenance.regime = "finetuned";
    m.provenance.task = "hand-wired world-exploiting reference model";
    m.provenance.world_hash = io::fnv1a_hex(w.to_json().dump());
    return m;
}

OracleModel build_cooccurrence_oracle(const corpus::Corpus& corpus, const world::WorldStructure& w) {
    w.validate();
    OracleModel m;
    m.kind = "cooccurrence";
    m.vocab = corpus.vocab;
    m.set_world(w);

    // entities whose token actually occurs; absent entities get no activation
    std::vector<long> occurrences(size_t(corpus.vocab.size()), 0);
    for (const auto& seq : corpus.sequences)
        for (int t : seq) ++occurrences[size_t(t)];
    std::vector<int> present;
    for (const auto& e : w.entities)
        if (occurrences[size_t(corpus.vocab.id(e.name))] > 0) present.push_back(e.id);
    if (present.size() < 2) fail(ErrorCode::infeasible_config, "too few entities present in corpus");

    auto cooc = corpus::cooccurrence_structure(corpus, w, present, corpus.config.window);
    int n = cooc.ppmi.rows, ctx = cooc.ppmi.cols;
    int k = std::min({16, n, ctx});
    Eigen::MatrixXd P(n, ctx);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < ctx; ++j) P(i, j) = cooc.ppmi.at(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU);
    for (int i = 0; i < n; ++i) {
        auto v = zeros(m.width);
        for (int c = 0; c < k; ++c) v[size_t(c)] = svd.matrixU()(i, c) * svd.singularValues()(c);
        m.act[cooc.entity_ids[size_t(i)]] = std::move(v);
    }

    place_query_vectors(m, max_pairwise_dist(m.act));

    // subject -> corpus-modal answer, per family, straight from corpus counts
    for (auto [family, query] : {std::pair{corpus::Family::capital, Query::capital},
                                 {corpus::Family::location, Query::location},
                                 {corpus::Family::year, Query::year},
                                 {corpus::Family::color, Query::color}}) {
        auto ps = corpus::eval_prompt_set(w, corpus, family);
        for (const auto& p : ps.prompts)
            if (m.act.count(p.entity_id))
                add_subject_prototype(m, query, p.entity_id, p.corpus_modal_id);
    }

    // reverse capital queries answer with the country most co-occurring with
    // the city inside the window
    std::vector<uint8_t> is_country(size_t(corpus.vocab.size()), 0);
    std::vector<uint8_t> is_city(size_t(corpus.vocab.size()), 0);
    for (int id : w.ids_of_kind(world::Kind::country))
        is_country[size_t(corpus.vocab.id(w.entity(id).name))] = 1;
    for (int id : w.ids_of_kind(world::Kind::city))
        is_city[size_t(corpus.vocab.id(w.entity(id).name))] = 1;
    std::map<int, std::map<int, long>> city_country; // city token -> country token -> count
    int window = corpus.config.window;
    for (const auto& seq : corpus.sequences) {
        int len = int(seq.size());
        for (int i = 0; i < len; ++i) {
            if (!is_city[size_t(seq[size_t(i)])]) continue;
            for (int j = std::max(0, i - window); j <= std::min(len - 1, i + window); ++j)
                if (j != i && is_country[size_t(seq[size_t(j)])])
                    city_country[seq[size_t(i)]][seq[size_t(j)]]++;
        }
    }
    for (int id : w.ids_of_kind(world::Kind::city)) {
        if (!m.act.count(id)) continue;
        auto it = city_country.find(corpus.vocab.id(w.entity(id).name));
        if (it == city_country.end()) continue;
        long best = -1;
        int best_tok = -1;
        for (const auto& [tok, count] : it->second)
            if (count > best || (count == best && tok < best_tok)) {
                best = count;
                best_tok = tok;
            }
        add_subject_prototype(m, Query::country, id, best_tok);
    }

    m.provenance.regime = "pretrained";
    m.provenance.task = "hand-wired co-occurrence-exploiting reference model";
    m.provenance.corpus_hash = io::fnv1a_hex(corpus.to_jsonl());
    return m;
}

} // namespace corra::oracle
