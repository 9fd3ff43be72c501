#pragma once

#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/model.hpp"
#include "corra/world.hpp"

namespace corra::correspondence {

// Fixed-slot capture template: tokens = [bos] + before + entity + after.
struct PromptTemplate {
    std::string name;
    std::vector<std::string> before;
    std::vector<std::string> after;

    int entity_pos() const { return 1 + int(before.size()); }
    std::vector<int> tokens_for(const corpus::Vocab& v, const std::string& entity) const;
};

PromptTemplate capital_template();  // "the capital of {X} is"
PromptTemplate location_template(); // "{L} is at row"
PromptTemplate year_template();     // "{L} was built in"
PromptTemplate color_template();    // "{C} is lab"
PromptTemplate bare_template();     // "{X}"
PromptTemplate template_for_family(corpus::Family family);

// Subject entities a family's prompts are about, and the world relation its
// answers are read off from.
world::Kind subject_kind(corpus::Family family);
world::Relation target_relation(corpus::Family family);

struct PointSet {
    std::vector<int> entity_ids;
    std::vector<std::string> entity_names;
    Mat x; // n x width
    int layer = 0;
    std::string template_name;
    int entity_pos = 0;
};

// One hooked-free forward pass per entity; the captured vector is the
// residual at `layer` (site 0..L) at the entity token position.
PointSet collect_points(const model::LanguageModel& m, const world::WorldStructure& w,
                        const corpus::Vocab& vocab, const std::vector<int>& entities,
                        const PromptTemplate& tmpl, int layer);

enum class Metric { euclidean, cosine };
Metric metric_from_name(std::string_view s);

world::DissimilarityMatrix rdm(const PointSet& points, Metric metric);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> upper_triangle(const world::DissimilarityMatrix& d);
double rsa_score(const world::DissimilarityMatrix& d_internal,
                 const world::DissimilarityMatrix& d_external);

struct PermutationResult {
    double rho = 0.0;
    double p_value = 1.0;
    double null_q95 = 0.0;
    std::vector<double> null_rhos;
};

// Entity-label permutations of the external matrix;
// p = (1 + #{rho_perm >= rho_obs}) / (1 + n_perm).
PermutationResult permutation_test(const world::DissimilarityMatrix& d_internal,
                                   const world::DissimilarityMatrix& d_external, int n_perm,
                                   uint64_t seed);

struct ProbeModel {
    Mat w; // d_in x d_out
    Mat b; // 1 x d_out
    double ridge = 0.0;
    double train_r2 = 0.0;
    double heldout_r2 = 0.0;
    std::vector<int> train_idx, heldout_idx;

    std::vector<double> predict(const double* x) const;
};

// Ridge least squares on a seeded 3:1 train/held-out split; lambda = 0 on a
// singular system raises an error advising ridge > 0.
ProbeModel fit_probe(const PointSet& points, const Mat& targets, double ridge, uint64_t split_seed);

// Mikolov-style offset test over pairs (a_i, b_i): for each held-out pair j,
// b_j^ = a_j + mean_{i!=j}(b_i - a_i); scores 1 when the nearest point in the
// union of all points except a_j is b_j.
double analogy_consistency(const PointSet& a_points, const PointSet& b_points);

// Projection of points onto the probe's first output direction, rank-
// correlated with scalar targets.
double ordering_correspondence(const PointSet& points, const std::vector<double>& scalar_targets,
                               const ProbeModel& probe);

} // namespace corra::correspondence
