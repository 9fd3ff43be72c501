#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "corra/error.hpp"
#include "helpers.hpp"

using namespace corra;

namespace {

// Independent window counter: map-of-maps instead of the production dense
// matrix, same pair definition (positions i<j with j-i <= window, both
// non-reserved, counted in both directions).
struct NaiveCounts {
    std::map<std::pair<int, int>, long> pair;
    std::map<int, long> total;
    long grand = 0;
};

NaiveCounts naive_window_counts(const corpus::Corpus& c, int window) {
    NaiveCounts nc;
    for (const auto& seq : c.sequences) {
        int n = int(seq.size());
        for (int i = 0; i < n; ++i) {
            if (seq[i] < 4) continue;
            for (int j = i + 1; j <= std::min(n - 1, i + window); ++j) {
                if (seq[j] < 4) continue;
                nc.pair[{seq[i], seq[j]}]++;
                nc.pair[{seq[j], seq[i]}]++;
                nc.total[seq[i]]++;
                nc.total[seq[j]]++;
                nc.grand += 2;
            }
        }
    }
    return nc;
}

double naive_ppmi(const NaiveCounts& nc, int tok, int ctx) {
    auto it = nc.pair.find({tok, ctx});
    if (it == nc.pair.end() || it->second == 0) return 0.0;
    double pmi = std::log(double(it->second) * double(nc.grand) /
                          (double(nc.total.at(tok)) * double(nc.total.at(ctx))));
    return std::max(0.0, pmi);
}

} // namespace

TEST_CASE("vocab reserves the first four ids and covers the world") {
    auto w = testing::tiny_world();
    auto v = corpus::build_vocab(w);
    CHECK(v.token(corpus::Vocab::bos) == "<bos>");
    CHECK(v.token(corpus::Vocab::eos) == "<eos>");
    CHECK(v.token(corpus::Vocab::pad) == "<pad>");
    CHECK(v.token(corpus::Vocab::unk) == "<unk>");
    for (auto& e : w.entities) {
        REQUIRE(v.contains(e.name));
        CHECK(v.token(v.id(e.name)) == e.name);
    }
    for (auto& [id, y] : w.founded_year) CHECK(v.contains(std::to_string(y)));
    CHECK(v.contains("capital"));
    CHECK_THROWS_AS(v.id("definitely-not-a-token"), Error);
    CHECK_THROWS_AS(v.token(v.size()), Error);
    CHECK_THROWS_AS(v.token(-1), Error);

    // Deterministic function of the world, and json round-trips.
    auto v2 = corpus::build_vocab(w);
    CHECK(v.tokens == v2.tokens);
    auto back = corpus::Vocab::from_json(v.to_json());
    CHECK(back.tokens == v.tokens);
    CHECK(back.index.at("capital") == v.index.at("capital"));
}

TEST_CASE("generated sequences are bos-framed and free of reserved interior tokens") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w);
    REQUIRE(!c.sequences.empty());
    CHECK(c.heldout.size() == c.sequences.size());
    for (auto& seq : c.sequences) {
        REQUIRE(seq.size() >= 3);
        CHECK(seq.front() == corpus::Vocab::bos);
        CHECK(seq.back() == corpus::Vocab::eos);
        for (size_t i = 1; i + 1 < seq.size(); ++i) CHECK(seq[i] >= 4);
    }
    // Stops at the first sentence crossing the target.
    CHECK(c.total_tokens() >= c.config.n_tokens);
    CHECK(c.total_tokens() <= c.config.n_tokens + 64);

    // Both split classes are populated at heldout_fraction 0.1.
    int held = 0;
    for (auto h : c.heldout) held += h;
    CHECK(held > 0);
    CHECK(held < int(c.heldout.size()));
    double frac = double(held) / double(c.heldout.size());
    CHECK(frac > 0.03);
    CHECK(frac < 0.25);
}

TEST_CASE("generation is byte-deterministic in the seed") {
    auto w = testing::tiny_world();
    auto a = testing::tiny_corpus(w, 0.25, 6000, 9);
    auto b = testing::tiny_corpus(w, 0.25, 6000, 9);
    auto c = testing::tiny_corpus(w, 0.25, 6000, 10);
    CHECK(a.to_jsonl() == b.to_jsonl());
    CHECK(a.meta_to_json() == b.meta_to_json());
    CHECK(a.heldout == b.heldout);
    CHECK(a.to_jsonl() != c.to_jsonl());
}

TEST_CASE("corpus artifacts round-trip") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w);
    auto back = corpus::Corpus::from_artifacts(c.meta_to_json(), c.to_jsonl(), c.vocab);
    CHECK(back.sequences == c.sequences);
    CHECK(back.heldout == c.heldout);
    CHECK(back.diverged_countries == c.diverged_countries);
    CHECK(back.distractor_city == c.distractor_city);
    CHECK(back.config.delta == c.config.delta);
    CHECK(back.config.window == c.config.window);
}

TEST_CASE("delta=0 gives no diverged countries and modal answers equal capitals") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0);
    CHECK(c.diverged_countries.empty());
    CHECK(c.distractor_city.empty());

    auto ps = corpus::eval_prompt_set(w, c, corpus::Family::capital);
    REQUIRE(ps.prompts.size() == 6);
    for (auto& p : ps.prompts) {
        CHECK_FALSE(p.diverged);
        CHECK(p.corpus_modal_id == p.ground_truth_id);
    }
}

TEST_CASE("delta picks ceil(delta * n_countries) diverged countries") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.25); // 6 countries -> ceil(1.5) = 2
    CHECK(c.diverged_countries.size() == 2);

    world::WorldConfig big;
    big.n_countries = 20;
    big.n_cities = 25;
    big.n_colors = 8;
    big.n_landmarks = 12;
    big.grid_n = 8;
    auto w20 = world::generate_world(21, big);
    auto c20 = corpus::generate_corpus(w20, testing::tiny_corpus_config(0.25, 20000, 5));
    CHECK(c20.diverged_countries.size() == 5);

    // Exhaustive recount: distractor beats capital inside the window for every
    // diverged country, and the distractor differs from the capital.
    auto nc = naive_window_counts(c20, c20.config.window);
    for (int country : c20.diverged_countries) {
        int cap_tok = c20.vocab.id(w20.entity(w20.capital_of.at(country)).name);
        int dis_tok = c20.vocab.id(w20.entity(c20.distractor_city.at(country)).name);
        int ctry_tok = c20.vocab.id(w20.entity(country).name);
        REQUIRE(cap_tok != dis_tok);
        long with_cap = 0, with_dis = 0;
        if (auto it = nc.pair.find({ctry_tok, cap_tok}); it != nc.pair.end()) with_cap = it->second;
        if (auto it = nc.pair.find({ctry_tok, dis_tok}); it != nc.pair.end()) with_dis = it->second;
        CHECK(with_dis > with_cap);
    }
}

TEST_CASE("diverged prompts separate the two answer keys") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.25, 8000);
    REQUIRE(c.diverged_countries.size() == 2);
    auto ps = corpus::eval_prompt_set(w, c, corpus::Family::capital);
    std::set<int> diverged(c.diverged_countries.begin(), c.diverged_countries.end());
    for (auto& p : ps.prompts) {
        CHECK(p.ground_truth_id == c.vocab.id(w.entity(w.capital_of.at(p.entity_id)).name));
        if (diverged.count(p.entity_id)) {
            CHECK(p.diverged);
            CHECK(p.corpus_modal_id ==
                  c.vocab.id(w.entity(c.distractor_city.at(p.entity_id)).name));
            CHECK(p.corpus_modal_id != p.ground_truth_id);
        } else {
            CHECK_FALSE(p.diverged);
            CHECK(p.corpus_modal_id == p.ground_truth_id);
        }
    }
}

TEST_CASE("prompt token streams match their text") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0);
    for (auto family : {corpus::Family::capital, corpus::Family::location,
                        corpus::Family::year, corpus::Family::color}) {
        auto ps = corpus::eval_prompt_set(w, c, family);
        CHECK(ps.family == family);
        for (auto& p : ps.prompts) {
            REQUIRE(!p.tokens.empty());
            CHECK(p.tokens[0] == corpus::Vocab::bos);
            std::vector<int> want{corpus::Vocab::bos};
            size_t start = 0;
            while (start < p.text.size()) {
                size_t sp = p.text.find(' ', start);
                if (sp == std::string::npos) sp = p.text.size();
                want.push_back(c.vocab.id(p.text.substr(start, sp - start)));
                start = sp + 1;
            }
            CHECK(p.tokens == want);
        }
    }
}

TEST_CASE("prompt families answer from the right world relation") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0);

    auto loc = corpus::eval_prompt_set(w, c, corpus::Family::location);
    for (auto& p : loc.prompts)
        CHECK(c.vocab.token(p.ground_truth_id) == std::to_string(w.position.at(p.entity_id).y));

    auto yr = corpus::eval_prompt_set(w, c, corpus::Family::year);
    for (auto& p : yr.prompts)
        CHECK(c.vocab.token(p.ground_truth_id) == std::to_string(w.founded_year.at(p.entity_id)));

    auto col = corpus::eval_prompt_set(w, c, corpus::Family::color);
    for (auto& p : col.prompts)
        CHECK(c.vocab.token(p.ground_truth_id) ==
              std::to_string(int(w.color_coord.at(p.entity_id)[0])));
}

TEST_CASE("shifting the world flips the truth key but not the modal key") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0);
    auto before = corpus::eval_prompt_set(w, c, corpus::Family::capital);

    int country = w.ids_of_kind(world::Kind::country)[1];
    std::set<int> caps;
    for (auto& [k, v] : w.capital_of) caps.insert(v);
    int fresh = -1;
    for (int id : w.ids_of_kind(world::Kind::city))
        if (!caps.count(id)) fresh = id;
    REQUIRE(fresh >= 0);

    auto after = corpus::eval_prompt_set(world::shift_world(w, country, fresh), c,
                                         corpus::Family::capital);
    REQUIRE(after.prompts.size() == before.prompts.size());
    for (size_t i = 0; i < after.prompts.size(); ++i) {
        auto& a = after.prompts[i];
        auto& b = before.prompts[i];
        CHECK(a.corpus_modal_id == b.corpus_modal_id); // corpus is unchanged
        if (a.entity_id == country) {
            CHECK(a.ground_truth_id == c.vocab.id(w.entity(fresh).name));
            CHECK(b.ground_truth_id == c.vocab.id(w.entity(w.capital_of.at(country)).name));
        } else {
            CHECK(a.ground_truth_id == b.ground_truth_id);
        }
    }
}

TEST_CASE("ppmi on a three-sentence corpus matches the hand calculation") {
    auto w = testing::tiny_world();
    auto countries = w.ids_of_kind(world::Kind::country);
    corpus::Corpus c;
    c.config = testing::tiny_corpus_config();
    c.config.window = 2;
    c.vocab = corpus::build_vocab(w);
    int X = c.vocab.id(w.entity(countries[0]).name);
    int Y = c.vocab.id(w.entity(countries[1]).name);
    int f = c.vocab.id("the");
    c.sequences = {
        {corpus::Vocab::bos, X, f, Y, corpus::Vocab::eos},
        {corpus::Vocab::bos, X, Y, corpus::Vocab::eos},
        {corpus::Vocab::bos, Y, f, f, corpus::Vocab::eos},
    };
    c.heldout = {0, 0, 0};

    // Window-2 pairs: s1 gives (X,f),(X,Y),(f,Y); s2 gives (X,Y); s3 gives
    // (Y,f),(Y,f),(f,f). Totals: X=3, Y=5, f=6, grand=14.
    auto s = corpus::cooccurrence_structure(c, w, {countries[0], countries[1]}, 2);
    REQUIRE(s.entity_ids == std::vector<int>{countries[0], countries[1]});
    auto col_of = [&](int tok) {
        for (size_t i = 0; i < s.context_ids.size(); ++i)
            if (s.context_ids[i] == tok) return int(i);
        REQUIRE(false);
        return -1;
    };
    double pxy = std::log(2.0 * 14.0 / (3.0 * 5.0));
    double pyf = std::log(3.0 * 14.0 / (5.0 * 6.0));
    CHECK(s.ppmi.at(0, col_of(Y)) == doctest::Approx(pxy).epsilon(1e-12));
    CHECK(s.ppmi.at(1, col_of(X)) == doctest::Approx(pxy).epsilon(1e-12));
    CHECK(s.ppmi.at(0, col_of(f)) == 0.0); // ln(14/18) < 0 clips to zero
    CHECK(s.ppmi.at(1, col_of(f)) == doctest::Approx(pyf).epsilon(1e-12));
    CHECK(s.ppmi.at(0, col_of(X)) == 0.0);
    CHECK(s.ppmi.at(1, col_of(Y)) == 0.0);

    // Distance ignores the X and Y columns themselves (subject set), leaving f
    // as the only context where the rows differ.
    CHECK(s.dissimilarity.d.at(0, 1) == doctest::Approx(pyf).epsilon(1e-12));
}

TEST_CASE("entities with identical context distributions have zero distance") {
    auto w = testing::tiny_world();
    auto countries = w.ids_of_kind(world::Kind::country);
    corpus::Corpus c;
    c.config = testing::tiny_corpus_config();
    c.vocab = corpus::build_vocab(w);
    int A = c.vocab.id(w.entity(countries[0]).name);
    int B = c.vocab.id(w.entity(countries[1]).name);
    int f = c.vocab.id("the");
    int g = c.vocab.id("capital");
    c.sequences = {
        {corpus::Vocab::bos, A, f, g, corpus::Vocab::eos},
        {corpus::Vocab::bos, B, f, g, corpus::Vocab::eos},
    };
    c.heldout = {0, 0};
    auto s = corpus::cooccurrence_structure(c, w, {countries[0], countries[1]}, 4);
    CHECK(s.dissimilarity.d.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("naive ppmi counter reproduces the production matrix exactly") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.25, 9000); // ~9e3 tokens, within the exactness regime
    std::vector<int> subjects = w.ids_of_kind(world::Kind::country);
    auto s = corpus::cooccurrence_structure(c, w, subjects, c.config.window);
    auto nc = naive_window_counts(c, c.config.window);
    for (size_t e = 0; e < subjects.size(); ++e) {
        int tok = c.vocab.id(w.entity(subjects[e]).name);
        for (size_t cx = 0; cx < s.context_ids.size(); ++cx)
            CHECK(s.ppmi.at(int(e), int(cx)) == naive_ppmi(nc, tok, s.context_ids[cx]));
    }
}

TEST_CASE("delta=0 country-city ppmi argmax recovers every capital") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w, 0.0, 8000);
    auto countries = w.ids_of_kind(world::Kind::country);
    auto s = corpus::cooccurrence_structure(c, w, countries, c.config.window);

    std::set<int> city_toks;
    for (int id : w.ids_of_kind(world::Kind::city)) city_toks.insert(c.vocab.id(w.entity(id).name));
    for (size_t e = 0; e < countries.size(); ++e) {
        double best = -1.0;
        int best_tok = -1;
        for (size_t cx = 0; cx < s.context_ids.size(); ++cx) {
            if (!city_toks.count(s.context_ids[cx])) continue;
            if (s.ppmi.at(int(e), int(cx)) > best) {
                best = s.ppmi.at(int(e), int(cx));
                best_tok = s.context_ids[cx];
            }
        }
        CHECK(best_tok == c.vocab.id(w.entity(w.capital_of.at(countries[e])).name));
    }
}

TEST_CASE("cooccurrence rejects bad inputs") {
    auto w = testing::tiny_world();
    auto c = testing::tiny_corpus(w);
    auto countries = w.ids_of_kind(world::Kind::country);
    CHECK_THROWS_AS(corpus::cooccurrence_structure(c, w, countries, 0), Error);
    CHECK_THROWS_AS(corpus::cooccurrence_structure(c, w, {countries[0]}, 4), Error);

    // An entity whose token never occurs is reported by name.
    corpus::Corpus tiny;
    tiny.config = c.config;
    tiny.vocab = c.vocab;
    int A = tiny.vocab.id(w.entity(countries[0]).name);
    int f = tiny.vocab.id("the");
    tiny.sequences = {{corpus::Vocab::bos, A, f, corpus::Vocab::eos}};
    tiny.heldout = {0};
    CHECK_THROWS_WITH_AS(
        corpus::cooccurrence_structure(tiny, w, {countries[0], countries[1]}, 4),
        doctest::Contains(w.entity(countries[1]).name.c_str()), Error);
}

TEST_CASE("corpus config validation") {
    auto w = testing::tiny_world();
    auto cfg = testing::tiny_corpus_config();
    cfg.delta = 1.5;
    CHECK_THROWS_AS(corpus::generate_corpus(w, cfg), Error);
    cfg = testing::tiny_corpus_config();
    cfg.n_tokens = 100;
    CHECK_THROWS_WITH_AS(corpus::generate_corpus(w, cfg), doctest::Contains("n_tokens"), Error);
    cfg = testing::tiny_corpus_config();
    cfg.heldout_fraction = 1.0;
    CHECK_THROWS_AS(corpus::generate_corpus(w, cfg), Error);
    cfg = testing::tiny_corpus_config();
    cfg.window = 0;
    CHECK_THROWS_AS(corpus::generate_corpus(w, cfg), Error);
    cfg = testing::tiny_corpus_config();
    cfg.mix.near = -1.0;
    CHECK_THROWS_AS(corpus::generate_corpus(w, cfg), Error);
}

TEST_CASE("proximity templates leave a spatial trace in landmark co-occurrence") {
    auto w = testing::tiny_world(17);
    auto c = testing::tiny_corpus(w, 0.0, 30000, 18);
    auto land = w.ids_of_kind(world::Kind::landmark);
    auto cooc = corpus::cooccurrence_structure(c, w, land, c.config.window);
    auto geo = world::world_dissimilarity(w, land, world::Relation::position);

    // Rank-correlate the two matrices by hand over the upper triangle.
    int n = int(land.size());
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pairs.push_back({geo.d.at(i, j), cooc.dissimilarity.d.at(i, j)});
    auto rank = [&](auto key) {
        std::vector<double> r(pairs.size());
        std::vector<int> idx(pairs.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
        for (size_t i = 0; i < idx.size(); ++i) r[idx[i]] = double(i);
        return r;
    };
    auto ra = rank([&](int i) { return pairs[size_t(i)].first; });
    auto rb = rank([&](int i) { return pairs[size_t(i)].second; });
    double ma = 0, mb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= double(ra.size());
    mb /= double(rb.size());
    double num = 0, da = 0, db = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    double rho = num / std::sqrt(da * db);
    CHECK(rho > 0.2); // near-template echo of grid adjacency
}
