#include "corra/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "corra/error.hpp"
#include "corra/kernels.hpp"
#include "corra/rng.hpp"

namespace corra::corpus {

namespace {

const std::vector<std::string>& function_words() {
    static const std::vector<std::string> words = {
        "the", "capital", "of", "is", "at", "row", "col", "was", "built",
        "in", "predates", "near", "visit", "then", "lab", "resembles",
    };
    return words;
}

std::string num_token(int v) { return std::to_string(v); }

int weighted_choice(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) fail(ErrorCode::invalid_argument, "template weights must be finite and non-negative");
        total += w;
    }
    if (total <= 0.0) fail(ErrorCode::invalid_argument, "template weights sum to zero");
    double u = rng.uniform_real() * total;
    double cum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return int(i);
    }
    return int(weights.size()) - 1;
}

} // namespace

int Vocab::id(const std::string& tok) const {
    auto it = index.find(tok);
    if (it == index.end()) fail(ErrorCode::invalid_argument, "token not in vocab: " + tok);
    return it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) fail(ErrorCode::invalid_argument, "token id out of range: " + std::to_string(id));
    return tokens[id];
}

io::json Vocab::to_json() const {
    io::json doc;
    doc["schema"] = "corraudit/vocab/v1";
    doc["tokens"] = tokens;
    return doc;
}

Vocab Vocab::from_json(const io::json& doc) {
    io::check_schema(doc, "corraudit/vocab/v1");
    Vocab v;
    for (const auto& t : doc.at("tokens")) {
        int id = v.size();
        v.tokens.push_back(t.get<std::string>());
        v.index[v.tokens.back()] = id;
    }
    if (v.size() < 4) fail(ErrorCode::schema_mismatch, "vocab missing reserved tokens");
    return v;
}

Vocab build_vocab(const world::WorldStructure& w) {
    Vocab v;
    auto push = [&](const std::string& tok) {
        if (v.index.count(tok)) fail(ErrorCode::infeasible_config, "duplicate vocab token: " + tok);
        v.index[tok] = v.size();
        v.tokens.push_back(tok);
    };
    push("<bos>");
    push("<eos>");
    push("<pad>");
    push("<unk>");
    for (const auto& word : function_words()) push(word);
    for (int n = 0; n <= 100; ++n) push(num_token(n));
    std::vector<int> years;
    for (const auto& [id, y] : w.founded_year) years.push_back(y);
    std::sort(years.begin(), years.end());
    for (int y : years) push(num_token(y));
    for (const auto& e : w.entities) push(e.name);
    return v;
}

double TemplateMix::total() const {
    return capital_fwd + capital_rev + location + year + predates + near + visit + color_lab +
           color_sim;
}

int Corpus::total_tokens() const {
    int total = 0;
    for (const auto& seq : sequences) total += int(seq.size());
    return total;
}

namespace {

struct Emitter {
    const Vocab& vocab;
    Corpus& out;
    Rng& split_rng;
    double heldout_fraction;
    int total = 0;

    void emit(const std::vector<std::string>& words) {
        std::vector<int> ids;
        ids.reserve(words.size() + 2);
        ids.push_back(Vocab::bos);
        for (const auto& word : words) ids.push_back(vocab.id(word));
        ids.push_back(Vocab::eos);
        total += int(ids.size());
        out.sequences.push_back(std::move(ids));
        out.heldout.push_back(split_rng.uniform_real() < heldout_fraction ? 1 : 0);
    }
};

// Pair co-occurrence counts between a country token and every city token
// within the configured window, used both for divergence verification and for
// reporting the realized modal pairing.
std::map<std::pair<int, int>, long> pair_counts(const Corpus& c, const std::vector<int>& country_tokens,
                                                const std::vector<int>& city_tokens, int window) {
    std::vector<uint8_t> is_country(c.vocab.size(), 0), is_city(c.vocab.size(), 0);
    for (int t : country_tokens) is_country[t] = 1;
    for (int t : city_tokens) is_city[t] = 1;
    std::map<std::pair<int, int>, long> counts;
    for (const auto& seq : c.sequences) {
        int n = int(seq.size());
        for (int i = 0; i < n; ++i) {
            if (!is_country[seq[i]]) continue;
            int lo = std::max(0, i - window), hi = std::min(n - 1, i + window);
            for (int j = lo; j <= hi; ++j) {
                if (j == i || !is_city[seq[j]]) continue;
                counts[{seq[i], seq[j]}]++;
            }
        }
    }
    return counts;
}

} // namespace

Corpus generate_corpus(const world::WorldStructure& w, const CorpusConfig& config) {
    if (config.delta < 0.0 || config.delta > 1.0) fail(ErrorCode::invalid_argument, "delta must lie in [0,1]");
    if (config.n_tokens < 500) fail(ErrorCode::infeasible_config, "n_tokens too small to cover the fact inventory");
    if (config.heldout_fraction < 0.0 || config.heldout_fraction >= 1.0)
        fail(ErrorCode::invalid_argument, "heldout_fraction must lie in [0,1)");
    if (config.window < 1) fail(ErrorCode::invalid_argument, "window must be positive");
    w.validate();

    Corpus c;
    c.config = config;
    c.vocab = build_vocab(w);

    auto countries = w.ids_of_kind(world::Kind::country);
    auto cities = w.ids_of_kind(world::Kind::city);
    auto landmarks = w.ids_of_kind(world::Kind::landmark);
    auto colors = w.ids_of_kind(world::Kind::color);

    Rng rng(config.seed);
    Rng diverged_rng = rng.child("diverged");
    Rng template_rng = rng.child("templates");
    Rng split_rng = rng.child("split");

    // Designate ceil(delta * n_countries) diverged countries and pick each a
    // distractor city distinct from its capital, preferring cities that are
    // nobody's capital so the distractor token carries no competing pairing.
    int n_diverged = int(std::ceil(config.delta * double(countries.size()) - 1e-12));
    std::vector<int> designated = countries;
    diverged_rng.shuffle(designated);
    designated.resize(n_diverged);
    std::sort(designated.begin(), designated.end());

    std::vector<uint8_t> city_is_capital(w.entities.size(), 0);
    for (const auto& [country, city] : w.capital_of) city_is_capital[city] = 1;
    std::vector<int> unassigned;
    for (int city : cities)
        if (!city_is_capital[city]) unassigned.push_back(city);
    diverged_rng.shuffle(unassigned);
    size_t next_unassigned = 0;
    std::map<int, int> distractor;
    for (int country : designated) {
        int capital = w.capital_of.at(country);
        int pick = -1;
        if (next_unassigned < unassigned.size()) {
            pick = unassigned[next_unassigned++];
        } else {
            std::vector<int> others;
            for (int city : cities)
                if (city != capital) others.push_back(city);
            if (others.empty()) fail(ErrorCode::infeasible_config, "no distractor city available for diverged country");
            pick = others[diverged_rng.uniform(others.size())];
        }
        distractor[country] = pick;
    }

    // Per-country pairing cycle D,D,D,C keeps the distractor:capital ratio at
    // exactly 3:1 and strictly distractor-majority after any positive count.
    std::map<int, int> pair_cycle;
    auto pair_city = [&](int country) {
        if (!distractor.count(country)) return w.capital_of.at(country);
        int k = pair_cycle[country]++;
        return k % 4 == 3 ? w.capital_of.at(country) : distractor.at(country);
    };

    Emitter em{c.vocab, c, split_rng, config.heldout_fraction};
    auto name = [&](int id) { return w.entity(id).name; };

    auto emit_capital_fwd = [&](int country) {
        em.emit({"the", "capital", "of", name(country), "is", name(pair_city(country))});
    };
    auto emit_capital_rev = [&](int country) {
        em.emit({name(pair_city(country)), "is", "capital", "of", name(country)});
    };
    auto emit_location = [&](int lm) {
        auto p = w.position.at(lm);
        em.emit({name(lm), "is", "at", "row", num_token(p.y), "col", num_token(p.x)});
    };
    auto emit_year = [&](int lm) { em.emit({name(lm), "was", "built", "in", num_token(w.founded_year.at(lm))}); };
    auto emit_predates = [&]() {
        int a = landmarks[template_rng.uniform(landmarks.size())];
        int b = landmarks[template_rng.uniform(landmarks.size())];
        while (b == a) b = landmarks[template_rng.uniform(landmarks.size())];
        if (w.founded_year.at(a) > w.founded_year.at(b)) std::swap(a, b);
        em.emit({name(a), "predates", name(b)});
    };
    auto emit_near = [&]() {
        // grid-proximity-weighted landmark pairs: the statistical echo of the
        // spatial layout that location sentences ground symbolically
        int a = landmarks[template_rng.uniform(landmarks.size())];
        std::vector<double> weights;
        std::vector<int> others;
        for (int b : landmarks) {
            if (b == a) continue;
            double dx = double(w.position.at(a).x - w.position.at(b).x);
            double dy = double(w.position.at(a).y - w.position.at(b).y);
            others.push_back(b);
            weights.push_back(std::exp(-std::sqrt(dx * dx + dy * dy) / 2.0));
        }
        int b = others[weighted_choice(template_rng, weights)];
        em.emit({name(a), "near", name(b)});
    };
    auto emit_visit = [&]() {
        int a = landmarks[template_rng.uniform(landmarks.size())];
        int b = landmarks[template_rng.uniform(landmarks.size())];
        while (b == a) b = landmarks[template_rng.uniform(landmarks.size())];
        em.emit({"visit", name(a), "then", name(b)});
    };
    auto emit_color_lab = [&](int col) {
        auto& cc = w.color_coord.at(col);
        em.emit({name(col), "is", "lab", num_token(cc[0]), num_token(cc[1]), num_token(cc[2])});
    };
    auto emit_color_sim = [&]() {
        int a = colors[template_rng.uniform(colors.size())];
        std::vector<double> weights;
        std::vector<int> others;
        for (int b : colors) {
            if (b == a) continue;
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                double dd = double(w.color_coord.at(a)[k] - w.color_coord.at(b)[k]);
                d2 += dd * dd;
            }
            others.push_back(b);
            weights.push_back(std::exp(-std::sqrt(d2) / 25.0));
        }
        int b = others[weighted_choice(template_rng, weights)];
        em.emit({name(a), "resembles", name(b)});
    };

    // Coverage pass: every fact appears at least once so modal continuations
    // and held-out probes are defined even for small corpora.
    for (int country : countries) emit_capital_fwd(country);
    for (int lm : landmarks) emit_location(lm);
    for (int lm : landmarks) emit_year(lm);
    for (int col : colors) emit_color_lab(col);

    const TemplateMix& mix = config.mix;
    std::vector<double> weights = {mix.capital_fwd, mix.capital_rev, mix.location,
                                   mix.year,        mix.predates,    mix.near,
                                   mix.visit,       mix.color_lab,   mix.color_sim};
    while (em.total < config.n_tokens) {
        switch (weighted_choice(template_rng, weights)) {
            case 0: emit_capital_fwd(countries[template_rng.uniform(countries.size())]); break;
            case 1: emit_capital_rev(countries[template_rng.uniform(countries.size())]); break;
            case 2: emit_location(landmarks[template_rng.uniform(landmarks.size())]); break;
            case 3: emit_year(landmarks[template_rng.uniform(landmarks.size())]); break;
            case 4: emit_predates(); break;
            case 5: emit_near(); break;
            case 6: emit_visit(); break;
            case 7: emit_color_lab(colors[template_rng.uniform(colors.size())]); break;
            case 8: emit_color_sim(); break;
        }
    }

    // Verify the wedge against realized counts: every designated country must
    // have its distractor strictly ahead of its capital inside the window, and
    // every other country must have its capital as the modal pairing.
    std::vector<int> country_tokens, city_tokens;
    for (int id : countries) country_tokens.push_back(c.vocab.id(name(id)));
    for (int id : cities) city_tokens.push_back(c.vocab.id(name(id)));
    auto counts = pair_counts(c, country_tokens, city_tokens, config.window);
    for (int country : countries) {
        int ct = c.vocab.id(name(country));
        long best_count = -1;
        int best_city_tok = -1;
        for (int city_tok : city_tokens) {
            auto it = counts.find({ct, city_tok});
            long n = it == counts.end() ? 0 : it->second;
            if (n > best_count || (n == best_count && city_tok < best_city_tok)) {
                best_count = n;
                best_city_tok = city_tok;
            }
        }
        int capital_tok = c.vocab.id(name(w.capital_of.at(country)));
        if (distractor.count(country)) {
            int d_tok = c.vocab.id(name(distractor.at(country)));
            long dn = counts.count({ct, d_tok}) ? counts.at({ct, d_tok}) : 0;
            long cn = counts.count({ct, capital_tok}) ? counts.at({ct, capital_tok}) : 0;
            if (!(dn > cn) || best_city_tok != d_tok)
                fail(ErrorCode::numerical, "diverged pairing not realized for " + name(country));
            c.diverged_countries.push_back(country);
            c.distractor_city[country] = distractor.at(country);
        } else if (best_city_tok != capital_tok) {
            fail(ErrorCode::numerical, "capital pairing not modal for " + name(country));
        }
    }
    return c;
}

std::string Corpus::to_jsonl() const {
    std::string out;
    for (size_t i = 0; i < sequences.size(); ++i) {
        io::json line;
        line["ids"] = sequences[i];
        line["heldout"] = int(heldout[i]);
        out += line.dump();
        out += '\n';
    }
    return out;
}

io::json Corpus::meta_to_json() const {
    io::json doc;
    doc["schema"] = "corraudit/corpus/v1";
    doc["config"]["delta"] = config.delta;
    doc["config"]["n_tokens"] = config.n_tokens;
    doc["config"]["seed"] = config.seed;
    doc["config"]["heldout_fraction"] = config.heldout_fraction;
    doc["config"]["window"] = config.window;
    doc["config"]["mix"] = {
        {"capital_fwd", config.mix.capital_fwd}, {"capital_rev", config.mix.capital_rev},
        {"location", config.mix.location},       {"year", config.mix.year},
        {"predates", config.mix.predates},       {"near", config.mix.near},
        {"visit", config.mix.visit},             {"color_lab", config.mix.color_lab},
        {"color_sim", config.mix.color_sim},
    };
    doc["n_sequences"] = sequences.size();
    doc["total_tokens"] = total_tokens();
    doc["diverged_countries"] = diverged_countries;
    io::json dist = io::json::array();
    for (const auto& [country, city] : distractor_city) dist.push_back({country, city});
    doc["distractor_city"] = dist;
    std::string joined;
    for (const auto& t : vocab.tokens) {
        joined += t;
        joined += '\n';
    }
    doc["vocab_hash"] = io::fnv1a_hex(joined);
    return doc;
}

Corpus Corpus::from_artifacts(const io::json& meta, const std::string& jsonl, const Vocab& vocab) {
    io::check_schema(meta, "corraudit/corpus/v1");
    Corpus c;
    c.vocab = vocab;
    const auto& cfg = meta.at("config");
    c.config.delta = cfg.at("delta").get<double>();
    c.config.n_tokens = cfg.at("n_tokens").get<int>();
    c.config.seed = cfg.at("seed").get<uint64_t>();
    c.config.heldout_fraction = cfg.at("heldout_fraction").get<double>();
    c.config.window = cfg.at("window").get<int>();
    const auto& mix = cfg.at("mix");
    c.config.mix.capital_fwd = mix.at("capital_fwd").get<double>();
    c.config.mix.capital_rev = mix.at("capital_rev").get<double>();
    c.config.mix.location = mix.at("location").get<double>();
    c.config.mix.year = mix.at("year").get<double>();
    c.config.mix.predates = mix.at("predates").get<double>();
    c.config.mix.near = mix.at("near").get<double>();
    c.config.mix.visit = mix.at("visit").get<double>();
    c.config.mix.color_lab = mix.at("color_lab").get<double>();
    c.config.mix.color_sim = mix.at("color_sim").get<double>();

    std::string joined;
    for (const auto& t : vocab.tokens) {
        joined += t;
        joined += '\n';
    }
    if (meta.at("vocab_hash").get<std::string>() != io::fnv1a_hex(joined))
        fail(ErrorCode::schema_mismatch, "vocab does not match corpus metadata");

    for (const auto& id : meta.at("diverged_countries")) c.diverged_countries.push_back(id.get<int>());
    for (const auto& pair : meta.at("distractor_city")) c.distractor_city[pair.at(0).get<int>()] = pair.at(1).get<int>();

    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        io::json doc = io::parse_json(line, "corpus line");
        std::vector<int> ids;
        for (const auto& v : doc.at("ids")) {
            int id = v.get<int>();
            if (id < 0 || id >= vocab.size()) fail(ErrorCode::schema_mismatch, "token id out of vocab range");
            ids.push_back(id);
        }
        c.sequences.push_back(std::move(ids));
        c.heldout.push_back(uint8_t(doc.at("heldout").get<int>()));
    }
    if (size_t(meta.at("n_sequences").get<int64_t>()) != c.sequences.size())
        fail(ErrorCode::schema_mismatch, "sequence count does not match corpus metadata");
    return c;
}

CooccurrenceStructure cooccurrence_structure(const Corpus& corpus, const world::WorldStructure& w,
                                             const std::vector<int>& entity_ids, int window) {
    if (window < 1) fail(ErrorCode::invalid_argument, "window must be positive");
    if (entity_ids.size() < 2) fail(ErrorCode::invalid_argument, "need at least two entities");

    const Vocab& v = corpus.vocab;
    int n_vocab = v.size();
    // symmetric windowed counts over non-reserved tokens
    std::vector<std::vector<long>> counts(n_vocab, std::vector<long>(n_vocab, 0));
    std::vector<long> token_total(n_vocab, 0);
    long grand_total = 0;
    for (const auto& seq : corpus.sequences) {
        int n = int(seq.size());
        for (int i = 0; i < n; ++i) {
            if (seq[i] < 4) continue;
            for (int j = i + 1; j <= std::min(n - 1, i + window); ++j) {
                if (seq[j] < 4) continue;
                counts[seq[i]][seq[j]]++;
                counts[seq[j]][seq[i]]++;
                token_total[seq[i]]++;
                token_total[seq[j]]++;
                grand_total += 2;
            }
        }
    }

    CooccurrenceStructure s;
    for (int t = 4; t < n_vocab; ++t) s.context_ids.push_back(t);
    int n_ctx = int(s.context_ids.size());
    s.ppmi = Mat(int(entity_ids.size()), n_ctx);
    for (int e = 0; e < int(entity_ids.size()); ++e) {
        const auto& ent = w.entity(entity_ids[e]);
        int tok = v.id(ent.name);
        if (token_total[tok] == 0)
            fail(ErrorCode::invalid_argument, "entity token absent from corpus: " + ent.name);
        s.entity_ids.push_back(ent.id);
        s.entity_names.push_back(ent.name);
        for (int cx = 0; cx < n_ctx; ++cx) {
            long joint = counts[tok][s.context_ids[cx]];
            if (joint == 0) continue;
            double pmi = std::log(double(joint) * double(grand_total) /
                                  (double(token_total[tok]) * double(token_total[s.context_ids[cx]])));
            s.ppmi.at(e, cx) = std::max(0.0, pmi);
        }
    }

    // Row distances use only contexts outside the subject set. Keeping a
    // subject's own column would let the pair's mutual counts dominate: A's row
    // is huge at column B while B's row is zero there (no self co-occurrence),
    // which pushes exactly the strongly-associated pairs apart. Dropping those
    // columns leaves the shared-context profile, which is the structure of
    // interest here.
    std::vector<uint8_t> is_subject(n_vocab, 0);
    for (int id : entity_ids) is_subject[v.id(w.entity(id).name)] = 1;

    int n = int(entity_ids.size());
    s.dissimilarity.entity_ids = s.entity_ids;
    s.dissimilarity.entity_names = s.entity_names;
    s.dissimilarity.d = Mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (int cx = 0; cx < n_ctx; ++cx) {
                if (is_subject[s.context_ids[cx]]) continue;
                double diff = s.ppmi.at(i, cx) - s.ppmi.at(j, cx);
                acc += diff * diff;
            }
            double d = std::sqrt(acc);
            s.dissimilarity.d.at(i, j) = d;
            s.dissimilarity.d.at(j, i) = d;
        }
    s.dissimilarity.validate();
    return s;
}

std::string_view family_name(Family f) {
    switch (f) {
        case Family::capital: return "capital";
        case Family::location: return "location";
        case Family::year: return "year";
        case Family::color: return "color";
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

Family family_from_name(std::string_view s) {
    if (s == "capital") return Family::capital;
    if (s == "location") return Family::location;
    if (s == "year") return Family::year;
    if (s == "color") return Family::color;
    fail(ErrorCode::invalid_argument, "unknown prompt family: " + std::string(s));
}

namespace {

std::vector<int> prompt_ids(const Vocab& v, const std::vector<std::string>& words) {
    std::vector<int> ids{Vocab::bos};
    for (const auto& word : words) ids.push_back(v.id(word));
    return ids;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

} // namespace

std::vector<int> capital_prompt(const Vocab& v, const std::string& country) {
    return prompt_ids(v, {"the", "capital", "of", country, "is"});
}
std::vector<int> country_prompt(const Vocab& v, const std::string& city) {
    return prompt_ids(v, {city, "is", "capital", "of"});
}
std::vector<int> location_prompt(const Vocab& v, const std::string& landmark) {
    return prompt_ids(v, {landmark, "is", "at", "row"});
}
std::vector<int> year_prompt(const Vocab& v, const std::string& landmark) {
    return prompt_ids(v, {landmark, "was", "built", "in"});
}
std::vector<int> color_prompt(const Vocab& v, const std::string& color) {
    return prompt_ids(v, {color, "is", "lab"});
}

PromptSet eval_prompt_set(const world::WorldStructure& w, const Corpus& corpus, Family family) {
    const Vocab& v = corpus.vocab;
    PromptSet set;
    set.family = family;

    std::vector<uint8_t> is_diverged(w.entities.size(), 0);
    for (int id : corpus.diverged_countries) is_diverged[id] = 1;

    auto modal_continuation = [&](const std::vector<int>& prefix) {
        std::vector<long> counts(v.size(), 0);
        for (const auto& seq : corpus.sequences) {
            if (seq.size() <= prefix.size()) continue;
            if (!std::equal(prefix.begin(), prefix.end(), seq.begin())) continue;
            counts[seq[prefix.size()]]++;
        }
        long best = 0;
        int best_tok = -1;
        for (int t = 0; t < v.size(); ++t)
            if (counts[t] > best) {
                best = counts[t];
                best_tok = t;
            }
        if (best_tok < 0) fail(ErrorCode::numerical, "no corpus continuation for prompt prefix");
        return best_tok;
    };

    auto add = [&](int entity_id, std::vector<int> tokens, const std::string& text, int truth) {
        Prompt p;
        p.tokens = std::move(tokens);
        p.text = text;
        p.entity_id = entity_id;
        p.ground_truth_id = truth;
        p.corpus_modal_id = modal_continuation(p.tokens);
        p.diverged = is_diverged[entity_id] != 0;
        set.prompts.push_back(std::move(p));
    };

    switch (family) {
        case Family::capital:
            for (int id : w.ids_of_kind(world::Kind::country)) {
                const auto& name = w.entity(id).name;
                add(id, capital_prompt(v, name), join_words({"the", "capital", "of", name, "is"}),
                    v.id(w.entity(w.capital_of.at(id)).name));
            }
            break;
        case Family::location:
            for (int id : w.ids_of_kind(world::Kind::landmark)) {
                const auto& name = w.entity(id).name;
                add(id, location_prompt(v, name), join_words({name, "is", "at", "row"}),
                    v.id(num_token(w.position.at(id).y)));
            }
            break;
        case Family::year:
            for (int id : w.ids_of_kind(world::Kind::landmark)) {
                const auto& name = w.entity(id).name;
                add(id, year_prompt(v, name), join_words({name, "was", "built", "in"}),
                    v.id(num_token(w.founded_year.at(id))));
            }
            break;
        case Family::color:
            for (int id : w.ids_of_kind(world::Kind::color)) {
                const auto& name = w.entity(id).name;
                add(id, color_prompt(v, name), join_words({name, "is", "lab"}),
                    v.id(num_token(w.color_coord.at(id)[0])));
            }
            break;
    }
    return set;
}

io::json PromptSet::to_json(const Vocab& vocab) const {
    io::json doc;
    doc["schema"] = "corraudit/prompts/v1";
    doc["family"] = std::string(family_name(family));
    io::json arr = io::json::array();
    for (const auto& p : prompts) {
        io::json jp;
        jp["tokens"] = p.tokens;
        jp["text"] = p.text;
        jp["entity_id"] = p.entity_id;
        jp["ground_truth"] = vocab.token(p.ground_truth_id);
        jp["ground_truth_id"] = p.ground_truth_id;
        jp["corpus_modal"] = vocab.token(p.corpus_modal_id);
        jp["corpus_modal_id"] = p.corpus_modal_id;
        jp["diverged"] = p.diverged;
        arr.push_back(std::move(jp));
    }
    doc["prompts"] = std::move(arr);
    return doc;
}

PromptSet PromptSet::from_json(const io::json& doc) {
    io::check_schema(doc, "corraudit/prompts/v1");
    PromptSet set;
    set.family = family_from_name(doc.at("family").get<std::string>());
    for (const auto& jp : doc.at("prompts")) {
        Prompt p;
        for (const auto& t : jp.at("tokens")) p.tokens.push_back(t.get<int>());
        p.text = jp.at("text").get<std::string>();
        p.entity_id = jp.at("entity_id").get<int>();
        p.ground_truth_id = jp.at("ground_truth_id").get<int>();
        p.corpus_modal_id = jp.at("corpus_modal_id").get<int>();
        p.diverged = jp.at("diverged").get<bool>();
        set.prompts.push_back(std::move(p));
    }
    return set;
}

} // namespace corra::corpus
