#pragma once

#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/model.hpp"
#include "corra/world.hpp"

namespace corra::success {

struct SuccessMetric {
    std::string id;          // "statistical" | "truth"
    std::string description;
};

SuccessMetric statistical_metric();
SuccessMetric truth_metric();

// Regime-keyed selection: pretrained -> statistical, finetuned -> truth.
// Anything else is an error; the metric is never guessed.
SuccessMetric metric_for_regime(const model::Provenance& prov);

struct MetricResult {
    double top1 = 0.0;
    double mean_logprob = 0.0;          // of the answer key
    std::vector<uint8_t> per_prompt;    // top-1 match per prompt
    std::vector<double> per_logprob;
};

// Greedy top-1 agreement with the corpus-modal answer key stored in the
// prompt set. Never reads the world. Optional per-prompt hooks let
// interventions reuse the same scoring path.
MetricResult statistical_success(const model::LanguageModel& m, const corpus::PromptSet& ps,
                                 const std::vector<std::vector<model::Hook>>* hooks = nullptr);

// Greedy top-1 agreement with ground truth recomputed from the world argument
// at call time, so a shifted world changes the key.
MetricResult truth_success(const model::LanguageModel& m, const corpus::PromptSet& ps,
                           const world::WorldStructure& w, const corpus::Vocab& vocab,
                           const std::vector<std::vector<model::Hook>>* hooks = nullptr);

// The answer key truth_success scores against.
int ground_truth_token(const world::WorldStructure& w, const corpus::Vocab& vocab,
                       corpus::Family family, int entity_id);

// Dispatch by metric id; used by the modulation evaluator.
MetricResult evaluate_metric(const SuccessMetric& metric, const model::LanguageModel& m,
                             const corpus::PromptSet& ps, const world::WorldStructure& w,
                             const corpus::Vocab& vocab,
                             const std::vector<std::vector<model::Hook>>* hooks = nullptr);

} // namespace corra::success
