#include "corra/success.hpp"

#include <algorithm>
#include <cmath>

#include "corra/error.hpp"

namespace corra::success {

SuccessMetric statistical_metric() {
    return {"statistical", "top-1 agreement with the corpus-modal continuation"};
}

SuccessMetric truth_metric() {
    return {"truth", "top-1 agreement with world ground truth"};
}

SuccessMetric metric_for_regime(const model::Provenance& prov) {
    if (prov.regime == "pretrained") return statistical_metric();
    if (prov.regime == "finetuned") return truth_metric();
    fail(ErrorCode::invalid_argument, "unknown training regime: " + prov.regime);
}

int ground_truth_token(const world::WorldStructure& w, const corpus::Vocab& vocab,
                       corpus::Family family, int entity_id) {
    switch (family) {
        case corpus::Family::capital:
            return vocab.id(w.entity(w.capital_of.at(entity_id)).name);
        case corpus::Family::location:
            return vocab.id(std::to_string(w.position.at(entity_id).y));
        case corpus::Family::year:
            return vocab.id(std::to_string(w.founded_year.at(entity_id)));
        case corpus::Family::color:
            // lab coordinates are whole-valued; tokens are their integer form
            return vocab.id(std::to_string(int(w.color_coord.at(entity_id)[0])));
    }
    fail(ErrorCode::invalid_argument, "unknown prompt family");
}

namespace {

MetricResult score_prompts(const model::LanguageModel& m, const corpus::PromptSet& ps,
                           const std::vector<std::vector<model::Hook>>* hooks,
                           const std::vector<int>& keys) {
    if (ps.prompts.empty()) fail(ErrorCode::invalid_argument, "prompt set is empty");
    if (hooks && hooks->size() != ps.prompts.size())
        fail(ErrorCode::invalid_argument, "per-prompt hooks must match prompt count");

    MetricResult res;
    double lp_sum = 0.0;
    for (size_t i = 0; i < ps.prompts.size(); ++i) {
        static const std::vector<model::Hook> none;
        const auto& h = hooks ? (*hooks)[i] : none;
        model::Trace trace = m.forward_with_trace(ps.prompts[i].tokens, h);
        int ans = model::argmax_token(trace.probs);
        int key = keys[i];
        res.per_prompt.push_back(ans == key ? 1 : 0);
        double lp = std::log(std::max(trace.probs[key], 1e-300));
        res.per_logprob.push_back(lp);
        lp_sum += lp;
    }
    int n = int(ps.prompts.size());
    res.top1 = double(std::count(res.per_prompt.begin(), res.per_prompt.end(), uint8_t(1))) / n;
    res.mean_logprob = lp_sum / n;
    return res;
}

} // namespace

MetricResult statistical_success(const model::LanguageModel& m, const corpus::PromptSet& ps,
                                 const std::vector<std::vector<model::Hook>>* hooks) {
    std::vector<int> keys;
    for (const auto& p : ps.prompts) {
        if (p.corpus_modal_id < 0) fail(ErrorCode::invalid_argument, "prompt lacks corpus-modal key");
        keys.push_back(p.corpus_modal_id);
    }
    return score_prompts(m, ps, hooks, keys);
}

MetricResult truth_success(const model::LanguageModel& m, const corpus::PromptSet& ps,
                           const world::WorldStructure& w, const corpus::Vocab& vocab,
                           const std::vector<std::vector<model::Hook>>* hooks) {
    std::vector<int> keys;
    for (const auto& p : ps.prompts) keys.push_back(ground_truth_token(w, vocab, ps.family, p.entity_id));
    return score_prompts(m, ps, hooks, keys);
}

MetricResult evaluate_metric(const SuccessMetric& metric, const model::LanguageModel& m,
                             const corpus::PromptSet& ps, const world::WorldStructure& w,
                             const corpus::Vocab& vocab,
                             const std::vector<std::vector<model::Hook>>* hooks) {
    if (metric.id == "statistical") return statistical_success(m, ps, hooks);
    if (metric.id == "truth") return truth_success(m, ps, w, vocab, hooks);
    fail(ErrorCode::invalid_argument, "unknown success metric: " + metric.id);
}

} // namespace corra::success
