#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "corra/world.hpp"

namespace corra::corpus {

// Token ids 0..3 are reserved. Everything else is a whole word: no subword
// segmentation anywhere in the pipeline.
struct Vocab {
    static constexpr int bos = 0;
    static constexpr int eos = 1;
    static constexpr int pad = 2;
    static constexpr int unk = 3;

    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;

    int size() const { return int(tokens.size()); }
    bool contains(const std::string& tok) const { return index.count(tok) != 0; }
    int id(const std::string& tok) const;           // throws if absent
    const std::string& token(int id) const;          // throws if out of range

    io::json to_json() const;
    static Vocab from_json(const io::json& doc);
};

// Deterministic function of the world alone; the corpus and the hand-wired
// reference models share it.
Vocab build_vocab(const world::WorldStructure& w);

// Sentence template families and their sampling weights.
struct TemplateMix {
    double capital_fwd = 3.0; // "the capital of X is Y"
    double capital_rev = 1.0; // "Y is capital of X"
    double location = 2.0;    // "L is at row R col C"
    double year = 1.0;        // "L was built in YYYY"
    double predates = 1.0;    // "L1 predates L2"   (year_1 < year_2)
    double near = 1.5;        // "L1 near L2"       (grid-proximity-weighted)
    double visit = 0.5;       // "visit L1 then L2" (uniform pair noise)
    double color_lab = 1.0;   // "C is lab a b c"
    double color_sim = 1.0;   // "C1 resembles C2"  (proximity-weighted)

    double total() const;
};

struct CorpusConfig {
    double delta = 0.25;     // fraction of countries with a diverged modal pairing
    int n_tokens = 300000;   // target size; generation stops at the first sentence crossing it
    uint64_t seed = 0;
    double heldout_fraction = 0.1;
    int window = 4;          // co-occurrence window used for verification and PPMI default
    TemplateMix mix;
};

struct Corpus {
    CorpusConfig config;
    Vocab vocab;
    std::vector<std::vector<int>> sequences; // each [bos, words..., eos]
    std::vector<uint8_t> heldout;            // per-sequence split flag
    std::vector<int> diverged_countries;     // verified against actual counts
    std::map<int, int> distractor_city;      // diverged country id -> city id

    int total_tokens() const;

    // corpus body as JSONL (one sequence per line), metadata as JSON
    std::string to_jsonl() const;
    io::json meta_to_json() const;
    static Corpus from_artifacts(const io::json& meta, const std::string& jsonl,
                                 const Vocab& vocab);
};

Corpus generate_corpus(const world::WorldStructure& w, const CorpusConfig& config);

// Windowed symmetric co-occurrence counts over entity tokens, turned into a
// PPMI matrix and a dissimilarity structure between the PPMI rows.
struct CooccurrenceStructure {
    std::vector<int> entity_ids;
    std::vector<std::string> entity_names;
    std::vector<int> context_ids; // shared context-token set (all non-reserved tokens)
    Mat ppmi;                     // n_entities x n_contexts
    world::DissimilarityMatrix dissimilarity;
};

CooccurrenceStructure cooccurrence_structure(const Corpus& corpus,
                                             const world::WorldStructure& w,
                                             const std::vector<int>& entity_ids,
                                             int window);

enum class Family { capital, location, year, color };
std::string_view family_name(Family f);
Family family_from_name(std::string_view s);

struct Prompt {
    std::vector<int> tokens;  // [bos, prefix...]; the answer is the next token
    std::string text;
    int entity_id = -1;       // the subject entity
    int ground_truth_id = -1; // answer key from the world
    int corpus_modal_id = -1; // answer key from corpus continuation counts
    bool diverged = false;
};

struct PromptSet {
    Family family = Family::capital;
    std::vector<Prompt> prompts;

    io::json to_json(const Vocab& vocab) const;
    static PromptSet from_json(const io::json& doc);
};

// One prompt per subject entity, carrying both answer keys. The ground-truth
// key reads the world passed here, so a shifted world changes it; the modal
// key counts exact-prefix continuations in the corpus and never reads the world.
PromptSet eval_prompt_set(const world::WorldStructure& w, const Corpus& corpus, Family family);

// Prompt token helpers shared with the reference models and interventions.
std::vector<int> capital_prompt(const Vocab& v, const std::string& country);   // "the capital of X is"
std::vector<int> country_prompt(const Vocab& v, const std::string& city);      // "Y is capital of"
std::vector<int> location_prompt(const Vocab& v, const std::string& landmark); // "L is at row"
std::vector<int> year_prompt(const Vocab& v, const std::string& landmark);     // "L was built in"
std::vector<int> color_prompt(const Vocab& v, const std::string& color);       // "C is lab"

} // namespace corra::corpus
