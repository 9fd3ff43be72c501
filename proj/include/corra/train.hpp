#pragma once

#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/model.hpp"

namespace corra::train {

struct TrainConfig {
    int steps = 4000;
    int batch = 8;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    int log_every = 50;
    int heldout_cap = 256; // max held-out sequences scored for the provenance record

    io::json to_json() const;
    static TrainConfig from_json(const io::json& doc);
};

// Next-token pretraining on the corpus train split. Deterministic given the
// config seeds; aborts with ErrorCode::numerical if the loss stops being finite.
model::Transformer pretrain(const model::ModelConfig& mcfg, const corpus::Corpus& corpus,
                            const TrainConfig& tcfg, const std::string& world_hash = "");

// Bilinear prompt-token x response-token scorer trained with the pairwise
// Bradley-Terry loss -log sigmoid(score(preferred) - score(other)).
struct RewardModel {
    int n_vocab = 0;
    Mat pair_w; // n_vocab x n_vocab
    Mat resp_b; // 1 x n_vocab

    double score(const std::vector<int>& prompt, int response) const;
};

struct PreferencePair {
    std::vector<int> prompt;
    int response_a = -1;
    int response_b = -1;
    int preferred = 0; // 0 = a, 1 = b
};

struct RewardTrainConfig {
    int epochs = 300;
    double lr = 0.5;
};

RewardModel train_reward_model(const std::vector<PreferencePair>& pairs, int n_vocab,
                               const RewardTrainConfig& cfg = {});
double reward_pair_loss(const RewardModel& rm, const std::vector<PreferencePair>& pairs);
double reward_pair_accuracy(const RewardModel& rm, const std::vector<PreferencePair>& pairs);

struct FinetuneConfig {
    int rounds = 60;
    int k = 8;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;

    io::json to_json() const;
    static FinetuneConfig from_json(const io::json& doc);
};

struct FinetuneResult {
    model::Transformer model;
    std::vector<std::string> warnings;
    std::vector<std::array<double, 2>> reward_curve; // (round, mean kept reward)
};

// Rejection-sampling fine-tuning: sample k single-token answers per prompt,
// keep the reward argmax, supervised update toward the kept answers. Flips the
// regime to finetuned; requires a pretrained input model and rounds >= 1.
FinetuneResult finetune(const model::Transformer& m, const RewardModel& rm,
                        const std::vector<std::vector<int>>& prompts, const FinetuneConfig& cfg);

} // namespace corra::train
