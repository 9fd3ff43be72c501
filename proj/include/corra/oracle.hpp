#pragma once

#include <map>
#include <string>
#include <vector>

#include "corra/corpus.hpp"
#include "corra/model.hpp"
#include "corra/world.hpp"

namespace corra::oracle {

// Query families the reference models can parse. `country` is the reverse
// capital query ("Y is capital of" -> country name).
enum class Query { capital, country, location, year, color };

struct Prototype {
    int token = -1;
    std::vector<double> v;
};

struct ParsedPrompt {
    Query family = Query::capital;
    int entity_id = -1;
    int entity_pos = -1;
};

// Hand-wired reference model. Activations for entity tokens are constructed
// vectors (world coordinates or reduced PPMI rows); a query is answered by a
// nearest-prototype rule applied to the hooked residual stream, so modulating
// the geometry provably moves the answers while everything else is frozen.
class OracleModel : public model::LanguageModel {
public:
    std::string kind; // "world" | "cooccurrence"
    int width = 64;
    double tau = 1.0; // softmax sharpness over negative squared distances
    corpus::Vocab vocab;
    model::Provenance provenance;
    std::map<int, std::vector<double>> act;        // entity id -> base vector
    std::map<Query, std::vector<double>> query_vec; // family marker at the final position
    std::map<Query, std::vector<Prototype>> prototypes;

    int d_model() const override { return width; }
    int n_sites() const override { return 2; }
    int vocab_size() const override { return vocab.size(); }
    std::string regime() const override { return provenance.regime; }
    model::Trace forward_with_trace(const std::vector<int>& tokens,
                                    const std::vector<model::Hook>& hooks = {}) const override;

    ParsedPrompt parse(const std::vector<int>& tokens) const;

    const world::WorldStructure& world() const { return world_; }
    void set_world(const world::WorldStructure& w) { world_ = w; }

private:
    world::WorldStructure world_;
};

// Activations are scaled copies of world coordinates; answers are computed by
// nearest-prototype lookup on those (possibly hooked) coordinates, so world-
// geometry modulation changes its answers and anything else is ignored.
OracleModel build_world_oracle(const world::WorldStructure& w);

// Activations are SVD-reduced PPMI rows; each subject's answer is the corpus-
// modal continuation of the nearest subject prototype.
OracleModel build_cooccurrence_oracle(const corpus::Corpus& corpus, const world::WorldStructure& w);

} // namespace corra::oracle
