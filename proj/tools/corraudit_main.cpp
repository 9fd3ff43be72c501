// corraudit driver: config-driven pipeline stages with deterministic
// artifacts. Every subcommand reads --config, works inside --out, and prints
// one machine-readable JSON result line (or text/csv where noted).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "corra/checkpoint.hpp"
#include "corra/corpus.hpp"
#include "corra/correspondence.hpp"
#include "corra/error.hpp"
#include "corra/intervention.hpp"
#include "corra/io.hpp"
#include "corra/model.hpp"
#include "corra/oracle.hpp"
#include "corra/success.hpp"
#include "corra/train.hpp"
#include "corra/world.hpp"

namespace fs = std::filesystem;
using namespace corra;

namespace {

constexpr const char* kConfigSchema = "corraudit/config/v1";

struct Options {
    std::string config_path;
    std::string out_dir;
    long long seed_override = -1;
    int threads = 1;
    std::string format = "json";
    std::string model_sel = "auto";
    std::string target = "world";
    bool summary = false;
};

template <class T>
T get_or(const io::json& doc, const std::string& key, T fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    return doc.at(key).get<T>();
}

io::json section(const io::json& cfg, const std::string& key) {
    return cfg.contains(key) ? cfg.at(key) : io::json::object();
}

struct Ctx {
    io::json cfg;
    fs::path out;
    Options opt;

    fs::path p(const std::string& name) const { return out / name; }
    bool has(const std::string& name) const { return fs::exists(p(name)); }
};

Ctx make_ctx(const Options& opt) {
    Ctx ctx;
    ctx.opt = opt;
    ctx.cfg = io::read_json(opt.config_path);
    io::check_schema(ctx.cfg, kConfigSchema);
    if (opt.threads < 1) fail(ErrorCode::invalid_argument, "--threads must be >= 1");
    std::string out = !opt.out_dir.empty() ? opt.out_dir
                                           : get_or<std::string>(ctx.cfg, "out", "");
    if (out.empty())
        fail(ErrorCode::invalid_argument, "no output directory: pass --out or set \"out\"");
    ctx.out = out;
    fs::create_directories(ctx.out);
    if (opt.seed_override >= 0) {
        // one base seed fans out to one explicit seed per stage
        uint64_t base = uint64_t(opt.seed_override);
        ctx.cfg["world"]["seed"] = base + 1;
        ctx.cfg["corpus"]["seed"] = base + 2;
        ctx.cfg["model"]["seed"] = base + 3;
        ctx.cfg["train"]["seed"] = base + 4;
        ctx.cfg["finetune"]["seed"] = base + 5;
        ctx.cfg["analysis"]["seed"] = base + 6;
    }
    return ctx;
}

world::WorldConfig parse_world_config(const io::json& s) {
    world::WorldConfig c;
    c.n_countries = get_or(s, "n_countries", c.n_countries);
    c.n_cities = get_or(s, "n_cities", c.n_cities);
    c.n_colors = get_or(s, "n_colors", c.n_colors);
    c.n_landmarks = get_or(s, "n_landmarks", c.n_landmarks);
    c.grid_n = get_or(s, "grid_n", c.grid_n);
    c.year_min = get_or(s, "year_min", c.year_min);
    c.year_max = get_or(s, "year_max", c.year_max);
    return c;
}

corpus::CorpusConfig parse_corpus_config(const io::json& s) {
    corpus::CorpusConfig c;
    c.delta = get_or(s, "delta", c.delta);
    c.n_tokens = get_or(s, "n_tokens", c.n_tokens);
    c.seed = get_or(s, "seed", c.seed);
    c.heldout_fraction = get_or(s, "heldout_fraction", c.heldout_fraction);
    c.window = get_or(s, "window", c.window);
    io::json mix = section(s, "mix");
    c.mix.capital_fwd = get_or(mix, "capital_fwd", c.mix.capital_fwd);
    c.mix.capital_rev = get_or(mix, "capital_rev", c.mix.capital_rev);
    c.mix.location = get_or(mix, "location", c.mix.location);
    c.mix.year = get_or(mix, "year", c.mix.year);
    c.mix.predates = get_or(mix, "predates", c.mix.predates);
    c.mix.near = get_or(mix, "near", c.mix.near);
    c.mix.visit = get_or(mix, "visit", c.mix.visit);
    c.mix.color_lab = get_or(mix, "color_lab", c.mix.color_lab);
    c.mix.color_sim = get_or(mix, "color_sim", c.mix.color_sim);
    return c;
}

model::ModelConfig parse_model_config(const io::json& s, int n_vocab) {
    model::ModelConfig c;
    c.n_layers = get_or(s, "n_layers", c.n_layers);
    c.n_heads = get_or(s, "n_heads", c.n_heads);
    c.d_model = get_or(s, "d_model", c.d_model);
    c.d_ff = get_or(s, "d_ff", c.d_ff);
    c.n_ctx = get_or(s, "n_ctx", c.n_ctx);
    c.seed = get_or(s, "seed", c.seed);
    c.n_vocab = n_vocab;
    return c;
}

train::TrainConfig parse_train_config(const io::json& s) {
    train::TrainConfig c;
    c.steps = get_or(s, "steps", c.steps);
    c.batch = get_or(s, "batch", c.batch);
    c.lr = get_or(s, "lr", c.lr);
    c.seed = get_or(s, "seed", c.seed);
    c.log_every = get_or(s, "log_every", c.log_every);
    return c;
}

train::FinetuneConfig parse_finetune_config(const io::json& s) {
    train::FinetuneConfig c;
    c.rounds = get_or(s, "rounds", c.rounds);
    c.k = get_or(s, "k", c.k);
    c.lr = get_or(s, "lr", c.lr);
    c.seed = get_or(s, "seed", c.seed);
    return c;
}

struct Analysis {
    corpus::Family family = corpus::Family::capital;
    int layer = 1;
    std::vector<double> strengths = {0.0, 0.5, 1.0};
    int n_perm = 199;
    int n_boot = 1000;
    uint64_t seed = 0;
    double probe_ridge = 1e-3;
    correspondence::Metric metric = correspondence::Metric::euclidean;
    std::vector<corpus::Family> families;
    std::vector<int> layers; // empty -> all sites of the model at hand
};

Analysis parse_analysis(const io::json& s) {
    Analysis a;
    a.family = corpus::family_from_name(get_or<std::string>(s, "family", "capital"));
    a.layer = get_or(s, "layer", a.layer);
    a.strengths = get_or(s, "strengths", a.strengths);
    a.n_perm = get_or(s, "n_perm", a.n_perm);
    a.n_boot = get_or(s, "n_boot", a.n_boot);
    a.seed = get_or(s, "seed", a.seed);
    a.probe_ridge = get_or(s, "probe_ridge", a.probe_ridge);
    a.metric = correspondence::metric_from_name(get_or<std::string>(s, "metric", "euclidean"));
    if (s.contains("families"))
        for (const auto& f : s.at("families"))
            a.families.push_back(corpus::family_from_name(f.get<std::string>()));
    else
        a.families = {corpus::Family::capital, corpus::Family::location, corpus::Family::year,
                      corpus::Family::color};
    if (s.contains("layers"))
        for (const auto& l : s.at("layers")) a.layers.push_back(l.get<int>());
    return a;
}

void write_json_artifact(const Ctx& ctx, const std::string& name, const io::json& doc) {
    io::write_file(ctx.p(name), doc.dump(2) + "\n");
}

void print_result(const Ctx& ctx, const std::string& command, io::json extra = {}) {
    io::json res;
    res["command"] = command;
    res["out"] = ctx.out.string();
    if (!extra.is_null()) res["result"] = std::move(extra);
    std::cout << res.dump() << "\n";
}

// ---- pipeline stages ------------------------------------------------------

world::WorldStructure generate_world_stage(const Ctx& ctx) {
    io::json s = section(ctx.cfg, "world");
    auto w = world::generate_world(get_or<uint64_t>(s, "seed", 0), parse_world_config(s));
    write_json_artifact(ctx, "world.json", w.to_json());
    return w;
}

world::WorldStructure load_world(const Ctx& ctx) {
    return world::WorldStructure::from_json(io::read_json(ctx.p("world.json")));
}

world::WorldStructure ensure_world(const Ctx& ctx) {
    return ctx.has("world.json") ? load_world(ctx) : generate_world_stage(ctx);
}

corpus::Corpus generate_corpus_stage(const Ctx& ctx, const world::WorldStructure& w) {
    auto c = corpus::generate_corpus(w, parse_corpus_config(section(ctx.cfg, "corpus")));
    io::write_file(ctx.p("corpus.jsonl"), c.to_jsonl());
    write_json_artifact(ctx, "corpus_meta.json", c.meta_to_json());
    return c;
}

corpus::Corpus load_corpus(const Ctx& ctx, const world::WorldStructure& w) {
    return corpus::Corpus::from_artifacts(io::read_json(ctx.p("corpus_meta.json")),
                                          io::read_file(ctx.p("corpus.jsonl")),
                                          corpus::build_vocab(w));
}

corpus::Corpus ensure_corpus(const Ctx& ctx, const world::WorldStructure& w) {
    return ctx.has("corpus_meta.json") && ctx.has("corpus.jsonl") ? load_corpus(ctx, w)
                                                                  : generate_corpus_stage(ctx, w);
}

model::Transformer train_stage(const Ctx& ctx, const world::WorldStructure& w,
                               const corpus::Corpus& c) {
    auto mcfg = parse_model_config(section(ctx.cfg, "model"), c.vocab.size());
    auto tcfg = parse_train_config(section(ctx.cfg, "train"));
    auto m = train::pretrain(mcfg, c, tcfg, io::fnv1a_hex(w.to_json().dump()));
    ckpt::save_checkpoint(ctx.p("pretrained.ckpt").string(), m);
    // round-trip through the float32 checkpoint so a run that trains and a
    // run that reloads see bit-identical weights
    m = ckpt::load_checkpoint(ctx.p("pretrained.ckpt").string());
    io::json rep;
    rep["schema"] = "corraudit/train-report/v1";
    rep["steps"] = tcfg.steps;
    rep["final_loss"] = m.provenance.loss_curve.empty() ? 0.0 : m.provenance.loss_curve.back()[1];
    rep["loss_curve"] = m.provenance.loss_curve;
    rep["heldout_mean_loss"] = m.provenance.optimizer.contains("heldout_mean_loss")
                                   ? m.provenance.optimizer.at("heldout_mean_loss")
                                   : io::json(nullptr);
    write_json_artifact(ctx, "train_report.json", rep);
    return m;
}

// Preference data for the reward model: for every capital prompt, the
// ground-truth capital is preferred over every other city. Covering all wrong
// answers matters — with only one contrast city per prompt the reward model
// leaves the rest unconstrained and rejection sampling drifts onto whichever
// uncompared city happens to score high.
std::vector<train::PreferencePair> capital_preferences(const world::WorldStructure& w,
                                                       const corpus::Corpus& c,
                                                       const corpus::PromptSet& ps) {
    auto cities = w.ids_of_kind(world::Kind::city);
    std::vector<train::PreferencePair> pairs;
    for (const auto& prompt : ps.prompts) {
        for (int city : cities) {
            int tok = c.vocab.id(w.entity(city).name);
            if (tok == prompt.ground_truth_id) continue;
            train::PreferencePair pp;
            pp.prompt = prompt.tokens;
            pp.response_a = prompt.ground_truth_id; // both responses are vocab ids
            pp.response_b = tok;
            pp.preferred = 0;
            pairs.push_back(std::move(pp));
        }
    }
    if (pairs.empty()) fail(ErrorCode::infeasible_config, "no usable preference pairs");
    return pairs;
}

io::json subset_success(const model::LanguageModel& m, const corpus::PromptSet& ps,
                        const world::WorldStructure& w, const corpus::Vocab& vocab) {
    auto stat = success::statistical_success(m, ps);
    auto truth = success::truth_success(m, ps, w, vocab);
    double dn = 0, ds = 0, dt = 0;
    for (size_t i = 0; i < ps.prompts.size(); ++i) {
        if (!ps.prompts[i].diverged) continue;
        dn += 1;
        ds += stat.per_prompt[i];
        dt += truth.per_prompt[i];
    }
    io::json doc;
    doc["statistical_top1"] = stat.top1;
    doc["truth_top1"] = truth.top1;
    doc["n_diverged"] = int(dn);
    doc["diverged_statistical_top1"] = dn > 0 ? ds / dn : 0.0;
    doc["diverged_truth_top1"] = dn > 0 ? dt / dn : 0.0;
    return doc;
}

model::Transformer finetune_stage(const Ctx& ctx, const world::WorldStructure& w,
                                  const corpus::Corpus& c, const model::Transformer& pre) {
    auto ps = corpus::eval_prompt_set(w, c, corpus::Family::capital);
    auto pairs = capital_preferences(w, c, ps);
    auto rm = train::train_reward_model(pairs, c.vocab.size());
    auto fcfg = parse_finetune_config(section(ctx.cfg, "finetune"));
    std::vector<std::vector<int>> prompts;
    for (const auto& p : ps.prompts) prompts.push_back(p.tokens);
    auto res = train::finetune(pre, rm, prompts, fcfg);
    ckpt::save_checkpoint(ctx.p("finetuned.ckpt").string(), res.model);
    res.model = ckpt::load_checkpoint(ctx.p("finetuned.ckpt").string());

    io::json rep;
    rep["schema"] = "corraudit/finetune-report/v1";
    rep["rounds"] = fcfg.rounds;
    rep["k"] = fcfg.k;
    rep["reward_pair_accuracy"] = train::reward_pair_accuracy(rm, pairs);
    rep["reward_curve"] = res.reward_curve;
    rep["warnings"] = res.warnings;
    rep["before"] = subset_success(pre, ps, w, c.vocab);
    rep["after"] = subset_success(res.model, ps, w, c.vocab);
    write_json_artifact(ctx, "finetune_report.json", rep);
    return res.model;
}

struct Loaded {
    std::unique_ptr<model::LanguageModel> lm;
    model::Provenance prov;
    std::string source;
};

Loaded from_transformer(model::Transformer&& t, std::string source) {
    Loaded l;
    l.prov = t.provenance;
    l.lm = std::make_unique<model::Transformer>(std::move(t));
    l.source = std::move(source);
    return l;
}

Loaded from_oracle(oracle::OracleModel&& o, std::string source) {
    Loaded l;
    l.prov = o.provenance;
    l.lm = std::make_unique<oracle::OracleModel>(std::move(o));
    l.source = std::move(source);
    return l;
}

// --model: auto follows the config's model.kind; transformer checkpoints
// prefer finetuned over pretrained; anything else is taken as a path.
Loaded resolve_model(const Ctx& ctx, const world::WorldStructure& w, const corpus::Corpus& c) {
    std::string sel = ctx.opt.model_sel;
    if (sel == "auto") {
        std::string kind = get_or<std::string>(section(ctx.cfg, "model"), "kind", "transformer");
        if (kind == "world-oracle") sel = "world-oracle";
        else if (kind == "cooccurrence-oracle") sel = "cooccurrence-oracle";
        else if (kind == "transformer")
            sel = ctx.has("finetuned.ckpt") ? "finetuned" : "pretrained";
        else fail(ErrorCode::invalid_argument, "unknown model.kind: " + kind);
    }
    if (sel == "world-oracle") return from_oracle(oracle::build_world_oracle(w), sel);
    if (sel == "cooccurrence-oracle")
        return from_oracle(oracle::build_cooccurrence_oracle(c, w), sel);
    if (sel == "pretrained" || sel == "finetuned") {
        fs::path p = ctx.p(sel + ".ckpt");
        if (!fs::exists(p))
            fail(ErrorCode::missing_artifact, p.string() + " not found; run train/finetune first");
        return from_transformer(ckpt::load_checkpoint(p.string()), sel);
    }
    return from_transformer(ckpt::load_checkpoint(sel), sel);
}

// Audit chains whatever is missing: world and corpus are generated, a
// transformer is trained (and fine-tuned if the config asks for it), oracles
// are built on the spot.
Loaded ensure_model(const Ctx& ctx, const world::WorldStructure& w, const corpus::Corpus& c) {
    std::string kind = get_or<std::string>(section(ctx.cfg, "model"), "kind", "transformer");
    if (kind != "transformer" || ctx.opt.model_sel != "auto" || ctx.has("finetuned.ckpt") ||
        ctx.has("pretrained.ckpt"))
        return resolve_model(ctx, w, c);
    auto pre = train_stage(ctx, w, c);
    if (ctx.cfg.contains("finetune"))
        return from_transformer(finetune_stage(ctx, w, c, pre), "finetuned");
    return from_transformer(std::move(pre), "pretrained");
}

std::vector<int> analysis_layers(const Analysis& a, const model::LanguageModel& m) {
    if (!a.layers.empty()) return a.layers;
    std::vector<int> layers;
    for (int l = 0; l < m.n_sites(); ++l) layers.push_back(l);
    return layers;
}

Mat probe_targets(const world::WorldStructure& w, corpus::Family family,
                  const std::vector<int>& subjects) {
    int n = int(subjects.size());
    switch (family) {
        case corpus::Family::capital:
        case corpus::Family::location: {
            Mat t(n, 2);
            for (int i = 0; i < n; ++i) {
                auto p = w.position.at(subjects[size_t(i)]);
                t.at(i, 0) = p.x;
                t.at(i, 1) = p.y;
            }
            return t;
        }
        case corpus::Family::year: {
            Mat t(n, 1);
            for (int i = 0; i < n; ++i)
                t.at(i, 0) = w.founded_year.at(subjects[size_t(i)]);
            return t;
        }
        case corpus::Family::color: {
            Mat t(n, 3);
            for (int i = 0; i < n; ++i) {
                const auto& c = w.color_coord.at(subjects[size_t(i)]);
                for (int k = 0; k < 3; ++k) t.at(i, k) = c[size_t(k)];
            }
            return t;
        }
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

io::json input_hashes(const world::WorldStructure& w, const corpus::Corpus& c) {
    return {{"world", io::fnv1a_hex(w.to_json().dump())},
            {"corpus", io::fnv1a_hex(c.to_jsonl())}};
}

// ---- subcommands ----------------------------------------------------------

void cmd_gen_world(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = generate_world_stage(ctx);
    print_result(ctx, "gen-world",
                 {{"artifact", "world.json"},
                  {"entities", w.entities.size()},
                  {"hash", io::fnv1a_hex(w.to_json().dump())}});
}

void cmd_gen_corpus(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = generate_corpus_stage(ctx, w);
    print_result(ctx, "gen-corpus",
                 {{"artifact", "corpus.jsonl"},
                  {"sequences", c.sequences.size()},
                  {"tokens", c.total_tokens()},
                  {"diverged_countries", c.diverged_countries.size()},
                  {"hash", io::fnv1a_hex(c.to_jsonl())}});
}

void cmd_train(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto m = train_stage(ctx, w, c);
    print_result(ctx, "train",
                 {{"artifact", "pretrained.ckpt"},
                  {"final_loss",
                   m.provenance.loss_curve.empty() ? 0.0 : m.provenance.loss_curve.back()[1]}});
}

void cmd_finetune(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    fs::path p = ctx.p("pretrained.ckpt");
    if (!fs::exists(p)) fail(ErrorCode::missing_artifact, p.string() + " not found; run train first");
    auto m = finetune_stage(ctx, w, c, ckpt::load_checkpoint(p.string()));
    print_result(ctx, "finetune", {{"artifact", "finetuned.ckpt"}, {"regime", m.regime()}});
}

void cmd_probe(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto loaded = resolve_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));

    io::json rows = io::json::array();
    for (auto family : a.families) {
        auto subjects = w.ids_of_kind(correspondence::subject_kind(family));
        auto targets = probe_targets(w, family, subjects);
        for (int layer : analysis_layers(a, *loaded.lm)) {
            auto points = correspondence::collect_points(
                *loaded.lm, w, c.vocab, subjects, correspondence::template_for_family(family),
                layer);
            auto probe = correspondence::fit_probe(points, targets, a.probe_ridge, a.seed);
            io::json row;
            row["family"] = std::string(corpus::family_name(family));
            row["layer"] = layer;
            row["train_r2"] = probe.train_r2;
            row["heldout_r2"] = probe.heldout_r2;
            if (family == corpus::Family::year) {
                std::vector<double> years;
                for (int id : subjects) years.push_back(double(w.founded_year.at(id)));
                row["ordering_rho"] = correspondence::ordering_correspondence(points, years, probe);
            }
            rows.push_back(std::move(row));
        }
    }
    io::json rep;
    rep["schema"] = "corraudit/probe-report/v1";
    rep["model"] = loaded.source;
    rep["ridge"] = a.probe_ridge;
    rep["config"] = ctx.cfg;
    rep["hashes"] = input_hashes(w, c);
    rep["probes"] = std::move(rows);
    write_json_artifact(ctx, "probe_report.json", rep);
    print_result(ctx, "probe", {{"artifact", "probe_report.json"}});
}

void cmd_rsa(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto loaded = resolve_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));

    Rng rng(a.seed);
    io::json rows = io::json::array();
    for (auto family : a.families) {
        auto subjects = w.ids_of_kind(correspondence::subject_kind(family));
        auto world_d = world_dissimilarity(w, subjects, correspondence::target_relation(family));
        auto cooc = corpus::cooccurrence_structure(c, w, subjects, c.config.window);
        std::string fname(corpus::family_name(family));
        if (ctx.opt.format == "csv") {
            io::write_file(ctx.p("rdm_world_" + fname + ".csv"), world_d.to_csv());
            io::write_file(ctx.p("rdm_cooc_" + fname + ".csv"), cooc.dissimilarity.to_csv());
        }
        for (int layer : analysis_layers(a, *loaded.lm)) {
            auto points = correspondence::collect_points(
                *loaded.lm, w, c.vocab, subjects, correspondence::template_for_family(family),
                layer);
            auto internal = correspondence::rdm(points, a.metric);
            if (ctx.opt.format == "csv")
                io::write_file(ctx.p("rdm_internal_" + fname + "_L" + std::to_string(layer) +
                                     ".csv"),
                               internal.to_csv());
            for (auto [name, external] :
                 {std::pair<const char*, const world::DissimilarityMatrix*>{"world", &world_d},
                  {"cooccurrence", &cooc.dissimilarity}}) {
                auto res = correspondence::permutation_test(
                    internal, *external, a.n_perm,
                    rng.child(fname + ":" + std::to_string(layer) + ":" + name).next_u64());
                io::json row;
                row["family"] = fname;
                row["layer"] = layer;
                row["candidate"] = name;
                row["rho"] = res.rho;
                row["p_value"] = res.p_value;
                row["null_q95"] = res.null_q95;
                rows.push_back(std::move(row));
            }
        }
    }
    io::json rep;
    rep["schema"] = "corraudit/rsa-report/v1";
    rep["model"] = loaded.source;
    rep["metric"] = a.metric == correspondence::Metric::euclidean ? "euclidean" : "cosine";
    rep["n_perm"] = a.n_perm;
    rep["config"] = ctx.cfg;
    rep["hashes"] = input_hashes(w, c);
    rep["rsa"] = std::move(rows);
    write_json_artifact(ctx, "rsa_report.json", rep);
    print_result(ctx, "rsa", {{"artifact", "rsa_report.json"}});
}

void cmd_analogy(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto loaded = resolve_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));

    auto countries = w.ids_of_kind(world::Kind::country);
    std::vector<int> capitals;
    for (int id : countries) capitals.push_back(w.capital_of.at(id));

    io::json rows = io::json::array();
    for (int layer : analysis_layers(a, *loaded.lm)) {
        auto a_pts = correspondence::collect_points(*loaded.lm, w, c.vocab, countries,
                                                    correspondence::bare_template(), layer);
        auto b_pts = correspondence::collect_points(*loaded.lm, w, c.vocab, capitals,
                                                    correspondence::bare_template(), layer);
        rows.push_back({{"relation", "country:capital"},
                        {"layer", layer},
                        {"consistency", correspondence::analogy_consistency(a_pts, b_pts)}});
    }
    io::json rep;
    rep["schema"] = "corraudit/analogy-report/v1";
    rep["model"] = loaded.source;
    rep["config"] = ctx.cfg;
    rep["hashes"] = input_hashes(w, c);
    rep["analogies"] = std::move(rows);
    write_json_artifact(ctx, "analogy_report.json", rep);
    print_result(ctx, "analogy", {{"artifact", "analogy_report.json"}});
}

void cmd_intervene(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto loaded = resolve_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));

    // relation vector from even-index countries, applied to the others'
    // reverse prompts; the tracked target is the steered answer (the capital)
    auto countries = w.ids_of_kind(world::Kind::country);
    std::vector<int> train_set, test_set;
    for (size_t i = 0; i < countries.size(); ++i)
        (i % 2 == 0 ? train_set : test_set).push_back(countries[i]);
    if (test_set.empty()) test_set = train_set;

    auto v = intervention::extract_relation_vector(*loaded.lm, w, c.vocab, train_set, a.layer);
    std::vector<std::vector<int>> prompts;
    std::vector<int> targets;
    for (int country : test_set) {
        const std::string& capital = w.entity(w.capital_of.at(country)).name;
        prompts.push_back(corpus::country_prompt(c.vocab, capital));
        targets.push_back(c.vocab.id(capital));
    }
    auto steer = intervention::apply_vector_addition(*loaded.lm, prompts, a.layer, v, targets);

    io::json rows = io::json::array();
    for (size_t i = 0; i < steer.per_prompt.size(); ++i) {
        const auto& o = steer.per_prompt[i];
        rows.push_back({{"country", w.entity(test_set[i]).name},
                        {"baseline", c.vocab.token(o.baseline_token)},
                        {"steered", c.vocab.token(o.steered_token)},
                        {"changed", o.changed},
                        {"delta_rr", o.delta_rr}});
    }
    io::json rep;
    rep["schema"] = "corraudit/intervene-report/v1";
    rep["model"] = loaded.source;
    rep["layer"] = a.layer;
    rep["train_countries"] = int(train_set.size());
    rep["flip_rate"] = steer.flip_rate;
    rep["mean_delta_mrr"] = steer.mean_delta_mrr;
    rep["per_prompt"] = std::move(rows);
    rep["config"] = ctx.cfg;
    rep["hashes"] = input_hashes(w, c);
    write_json_artifact(ctx, "intervene_report.json", rep);
    if (ctx.opt.format == "text") std::cout << steer.to_text();
    else print_result(ctx, "intervene",
                      {{"artifact", "intervene_report.json"},
                       {"flip_rate", steer.flip_rate},
                       {"mean_delta_mrr", steer.mean_delta_mrr}});
}

void cmd_modulate(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = load_world(ctx);
    auto c = load_corpus(ctx, w);
    auto loaded = resolve_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));
    if (ctx.opt.target != "world" && ctx.opt.target != "cooccurrence")
        fail(ErrorCode::invalid_argument, "--target must be world or cooccurrence");

    auto subjects = w.ids_of_kind(correspondence::subject_kind(a.family));
    auto world_d = world_dissimilarity(w, subjects, correspondence::target_relation(a.family));
    auto cooc = corpus::cooccurrence_structure(c, w, subjects, c.config.window);
    bool to_world = ctx.opt.target == "world";
    const auto& target_d = to_world ? world_d : cooc.dissimilarity;
    const auto& competing_d = to_world ? cooc.dissimilarity : world_d;
    std::string competing_name = to_world ? "cooccurrence" : "world";

    auto points = correspondence::collect_points(
        *loaded.lm, w, c.vocab, subjects, correspondence::template_for_family(a.family), a.layer);
    auto ps = corpus::eval_prompt_set(w, c, a.family);
    auto metric = success::metric_for_regime(loaded.prov);

    Rng rng(a.seed);
    io::json rows = io::json::array();
    for (auto mode : {intervention::Mode::tighten, intervention::Mode::loosen}) {
        for (size_t si = 0; si < a.strengths.size(); ++si) {
            std::string label = std::string(intervention::mode_name(mode)) + ":" +
                                std::to_string(si);
            auto plan = intervention::build_modulation_plan(
                points, target_d, ctx.opt.target, &competing_d, competing_name, a.strengths[si],
                mode, rng.child("plan:" + label).next_u64(), a.n_perm);
            io::json row;
            row["mode"] = std::string(intervention::mode_name(mode));
            row["strength"] = a.strengths[si];
            row["valid"] = plan.valid();
            row["plan"] = plan.to_json();
            if (plan.valid()) {
                auto ev = intervention::run_modulated_eval(
                    *loaded.lm, plan, ps, metric, w, c.vocab,
                    rng.child("eval:" + label).next_u64(), a.n_boot);
                row["baseline"] = ev.baseline;
                row["modulated"] = ev.modulated;
                row["delta"] = ev.delta;
                row["ci"] = {ev.ci_lo, ev.ci_hi};
            }
            rows.push_back(std::move(row));
        }
    }
    io::json rep;
    rep["schema"] = "corraudit/modulate-report/v1";
    rep["model"] = loaded.source;
    rep["target"] = ctx.opt.target;
    rep["family"] = std::string(corpus::family_name(a.family));
    rep["layer"] = a.layer;
    rep["metric"] = metric.id;
    rep["runs"] = std::move(rows);
    rep["config"] = ctx.cfg;
    rep["hashes"] = input_hashes(w, c);
    write_json_artifact(ctx, "modulate_report.json", rep);
    print_result(ctx, "modulate", {{"artifact", "modulate_report.json"}});
}

void cmd_audit(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    auto w = ensure_world(ctx);
    auto c = ensure_corpus(ctx, w);
    auto loaded = ensure_model(ctx, w, c);
    Analysis a = parse_analysis(section(ctx.cfg, "analysis"));

    intervention::AuditConfig acfg;
    acfg.family = a.family;
    acfg.layer = a.layer;
    acfg.strengths = a.strengths;
    acfg.n_perm = a.n_perm;
    acfg.n_boot = a.n_boot;
    acfg.seed = a.seed;

    auto report = intervention::exploitation_report(*loaded.lm, loaded.prov, w, c, acfg);
    report["model"] = loaded.source;
    report["resolved_config"] = ctx.cfg;
    report["threads"] = ctx.opt.threads;
    write_json_artifact(ctx, "report.json", report);
    print_result(ctx, "audit",
                 {{"artifact", "report.json"}, {"verdict", report.at("verdict")}});
}

std::string summary_table(const io::json& rep) {
    std::ostringstream out;
    out << "exploitation audit: " << rep.at("task").get<std::string>() << "\n";
    out << "regime " << rep.at("regime").get<std::string>() << " | metric "
        << rep.at("metric").get<std::string>() << " | family "
        << rep.at("family").get<std::string>() << " | layer " << rep.at("layer").get<int>()
        << "\n\n";
    out << "target         rsa_before  null_q95  tighten  loosen   absent\n";
    for (const auto& c : rep.at("correspondences")) {
        char buf[160];
        snprintf(buf, sizeof buf, "%-14s %9.4f %9.4f %8.4f %8.4f   %s\n",
                 c.at("target").get<std::string>().c_str(), c.at("rsa_before").get<double>(),
                 c.at("null_q95").get<double>(), c.at("rsa_after_tighten").get<double>(),
                 c.at("rsa_after_loosen").get<double>(),
                 c.at("target_absent").get<bool>() ? "yes" : "no");
        out << buf;
    }
    out << "\ntarget         mode     strength  valid  delta      ci\n";
    for (const auto& c : rep.at("correspondences")) {
        for (const auto& row : c.at("deltas")) {
            char buf[200];
            if (row.at("valid").get<bool>())
                snprintf(buf, sizeof buf, "%-14s %-8s %8.2f  yes   %+9.4f  [%+.4f, %+.4f]\n",
                         c.at("target").get<std::string>().c_str(),
                         row.at("mode").get<std::string>().c_str(),
                         row.at("strength").get<double>(), row.at("delta").get<double>(),
                         row.at("ci")[0].get<double>(), row.at("ci")[1].get<double>());
            else
                snprintf(buf, sizeof buf, "%-14s %-8s %8.2f  no    (plan rejected)\n",
                         c.at("target").get<std::string>().c_str(),
                         row.at("mode").get<std::string>().c_str(),
                         row.at("strength").get<double>());
            out << buf;
        }
    }
    out << "\nverdict: " << rep.at("verdict").get<std::string>();
    auto note = rep.at("verdict_note").get<std::string>();
    if (!note.empty()) out << " (" << note << ")";
    out << "\n";
    return out.str();
}

void cmd_report(const Options& opt) {
    Ctx ctx = make_ctx(opt);
    io::json rep = io::read_json(ctx.p("report.json"));
    io::check_schema(rep, "corraudit/exploitation-report/v1");
    if (opt.summary || opt.format == "text") {
        std::cout << summary_table(rep);
    } else if (opt.format == "csv") {
        std::ostringstream out;
        out << "target,mode,strength,valid,delta,ci_lo,ci_hi\n";
        for (const auto& c : rep.at("correspondences"))
            for (const auto& row : c.at("deltas")) {
                bool valid = row.at("valid").get<bool>();
                out << c.at("target").get<std::string>() << ","
                    << row.at("mode").get<std::string>() << ","
                    << io::format_double(row.at("strength").get<double>()) << ","
                    << (valid ? "1" : "0") << ",";
                if (valid)
                    out << io::format_double(row.at("delta").get<double>()) << ","
                        << io::format_double(row.at("ci")[0].get<double>()) << ","
                        << io::format_double(row.at("ci")[1].get<double>());
                else
                    out << ",,";
                out << "\n";
            }
        std::cout << out.str();
    } else {
        std::cout << rep.dump(2) << "\n";
    }
}

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::schema_mismatch: return 2;
        case ErrorCode::missing_artifact: return 3;
        case ErrorCode::numerical: return 4;
        default: return 1;
    }
}

const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::infeasible_config: return "infeasible_config";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::missing_artifact: return "missing_artifact";
        case ErrorCode::numerical: return "numerical";
    }
    return "internal";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"corraudit: structural-correspondence exploitation audits on toy models"};
    app.require_subcommand(1);

    Options opt;
    void (*handler)(const Options&) = nullptr;
    auto add = [&](const std::string& name, const std::string& desc,
                   void (*fn)(const Options&)) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config_path, "experiment config JSON")->required();
        sub->add_option("--out", opt.out_dir, "output directory (defaults to config \"out\")");
        sub->add_option("--seed-override", opt.seed_override, "replace every stage seed");
        sub->add_option("--threads", opt.threads, "worker threads; 1 = bit-reproducible");
        sub->add_option("--format", opt.format, "json|csv|text")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        sub->callback([&handler, fn]() { handler = fn; });
        return sub;
    };

    add("gen-world", "generate the ground-truth world", cmd_gen_world);
    add("gen-corpus", "generate the training corpus from world.json", cmd_gen_corpus);
    add("train", "pretrain the transformer on the corpus", cmd_train);
    add("finetune", "reward-model + rejection-sampling fine-tune", cmd_finetune);
    auto with_model = [&](CLI::App* sub) {
        sub->add_option("--model", opt.model_sel,
                        "auto|pretrained|finetuned|world-oracle|cooccurrence-oracle|PATH");
    };
    with_model(add("probe", "fit linear probes per family and layer", cmd_probe));
    with_model(add("rsa", "RSA against world and co-occurrence candidates", cmd_rsa));
    with_model(add("analogy", "vector-offset analogy consistency", cmd_analogy));
    with_model(add("intervene", "relation-vector steering battery", cmd_intervene));
    auto* mod = add("modulate", "differential correspondence modulation", cmd_modulate);
    with_model(mod);
    mod->add_option("--target", opt.target, "structure to modulate: world|cooccurrence");
    with_model(add("audit", "full pipeline to an exploitation report", cmd_audit));
    auto* rpt = add("report", "render report.json", cmd_report);
    rpt->add_flag("--summary", opt.summary, "plain-text summary table");

    try {
        app.parse(argc, argv);
        if (handler) handler(opt);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        io::json err;
        err["error"] = {{"code", code_name(e.code)}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return exit_code_for(e.code);
    } catch (const std::exception& e) {
        io::json err;
        err["error"] = {{"code", "internal"}, {"message", e.what()}};
        std::cout << err.dump() << "\n";
        return 1;
    }
}
