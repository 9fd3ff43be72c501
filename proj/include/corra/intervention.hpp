#pragma once

#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/correspondence.hpp"
#include "corra/model.hpp"
#include "corra/success.hpp"
#include "corra/world.hpp"

namespace corra::intervention {

// Merullo-style relation offset: mean over training countries of
// [residual at (layer, final) for the capital-eliciting prompt] minus
// [residual at (layer, final) for the country-name-eliciting prompt].
std::vector<double> extract_relation_vector(const model::LanguageModel& m,
                                            const world::WorldStructure& w,
                                            const corpus::Vocab& vocab,
                                            const std::vector<int>& train_countries, int layer);

struct SteeringOutcome {
    int baseline_token = -1;
    int steered_token = -1;
    bool changed = false;
    double delta_rr = 0.0; // reciprocal-rank change of the target token
};

struct SteeringReport {
    std::vector<SteeringOutcome> per_prompt;
    double flip_rate = 0.0;
    double mean_delta_mrr = 0.0;

    std::string to_text() const; // flip-rate / delta-MRR table
};

// Adds v to the residual at (layer, final position) of every prompt and
// compares against the unhooked forward. targets[i] is the token whose
// reciprocal rank is tracked for prompt i.
SteeringReport apply_vector_addition(const model::LanguageModel& m,
                                     const std::vector<std::vector<int>>& prompts, int layer,
                                     const std::vector<double>& v,
                                     const std::vector<int>& targets);

enum class Direction { toward, away };
Direction direction_from_name(std::string_view s);

struct PerturbResult {
    int baseline_token = -1;
    int perturbed_token = -1;
    std::vector<double> delta;      // applied at (layer, entity_pos)
    std::vector<double> probs;      // next-token distribution after the hook
};

// Chen-style probe-gradient nudge. x* is the minimal displacement of the
// captured residual that makes the fitted probe output the true targets;
// toward moves magnitude of the way to x*, away moves the same distance in
// the opposite direction.
PerturbResult probe_perturb(const model::LanguageModel& m, const std::vector<int>& prompt,
                            int entity_pos, int layer, const correspondence::ProbeModel& probe,
                            const std::vector<double>& true_targets, Direction direction,
                            double magnitude);

enum class Mode { tighten, loosen };
std::string_view mode_name(Mode m);

struct ManipulationCheck {
    std::string structure;
    bool is_target = false;
    double rsa_before = 0.0;
    double rsa_after = 0.0;
    double null_q95 = 0.0;
};

// Per-entity delta vectors at one (layer, entity-position) site plus the
// recorded manipulation check. A plan whose check does not show the intended
// RSA movement reports valid() == false and must not feed a verdict.
struct ModulationPlan {
    int layer = 0;
    Mode mode = Mode::tighten;
    double strength = 0.0;
    std::string target;
    uint64_t seed = 0;
    std::vector<int> entity_ids;
    Mat deltas;                    // n x d_model
    std::vector<int> derangement;  // loosen only
    bool target_absent = false;    // target structure absent from the points
    std::vector<ManipulationCheck> checks;

    bool valid() const;
    io::json to_json() const;
};

// MDS-embeds the target, Procrustes-aligns (rotation + scale + translation)
// the configuration to the points, then moves each point toward its aligned
// target (tighten) or toward a deranged entity's aligned target (loosen).
// When the target structure is statistically absent from the points
// (rsa_before below the permutation-null 95th percentile), there is nothing
// to tighten or loosen: the plan records target_absent and zero deltas.
// competing, when given, is measured before/after for the collateral check.
ModulationPlan build_modulation_plan(const correspondence::PointSet& points,
                                     const world::DissimilarityMatrix& target,
                                     const std::string& target_name,
                                     const world::DissimilarityMatrix* competing,
                                     const std::string& competing_name, double strength,
                                     Mode mode, uint64_t seed, int n_perm = 199);

struct ModulatedEval {
    double baseline = 0.0;  // top-1 rate without hooks
    double modulated = 0.0; // top-1 rate with the plan applied
    double delta = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0; // bootstrap CI of delta
    std::vector<int> unplanned;      // prompt indices run unmodulated
};

// Applies each entity's delta at its token position in every prompt that
// mentions it; prompts whose subject is absent from the plan run unmodulated
// and are flagged. delta = modulated - baseline top-1 under `metric`, with a
// seeded 1000-resample paired bootstrap CI.
ModulatedEval run_modulated_eval(const model::LanguageModel& m, const ModulationPlan& plan,
                                 const corpus::PromptSet& ps,
                                 const success::SuccessMetric& metric,
                                 const world::WorldStructure& w, const corpus::Vocab& vocab,
                                 uint64_t seed, int n_boot = 1000);

struct AuditConfig {
    corpus::Family family = corpus::Family::capital;
    int layer = 1;
    std::vector<double> strengths = {0.0, 0.5, 1.0};
    int n_perm = 199;
    int n_boot = 1000;
    uint64_t seed = 0;
};

// Full differential-modulation audit: for each candidate structure (world
// relation and corpus co-occurrence over the family's subject entities) and
// each mode x strength, the regime metric's delta-success with CI, plus the
// contrast metric. The verdict compares loosen-mode deltas at the largest
// strength: a structure wins when its CI excludes zero, its |delta| is
// larger, and the CIs do not overlap; "both" when both CIs exclude zero and
// overlap each other; otherwise "inconclusive".
io::json exploitation_report(const model::LanguageModel& m, const model::Provenance& prov,
                             const world::WorldStructure& w, const corpus::Corpus& corpus,
                             const AuditConfig& cfg);

} // namespace corra::intervention
