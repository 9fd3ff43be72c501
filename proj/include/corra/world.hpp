#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "corra/io.hpp"
#include "corra/mat.hpp"

namespace corra::world {

enum class Kind { country, city, color, landmark };

std::string_view kind_name(Kind k);
Kind kind_from_name(std::string_view s);

struct Entity {
    int id = -1;
    std::string name; // exactly one vocabulary token
    Kind kind = Kind::country;
};

struct GridPos {
    int x = 0;
    int y = 0;
};

// Symmetric, zero-diagonal, non-negative pairwise dissimilarities plus the
// entity order the rows refer to.
struct DissimilarityMatrix {
    std::vector<int> entity_ids;
    std::vector<std::string> entity_names;
    Mat d;

    void validate() const; // throws on any violated invariant
    std::string to_csv() const;
};

enum class Relation { position, color_coord, founded_year };

std::string_view relation_name(Relation r);

struct WorldConfig {
    int n_countries = 20;
    int n_cities = 25; // >= n_countries; extras give the corpus distractor room
    int n_colors = 12;
    int n_landmarks = 16;
    int grid_n = 8;
    int year_min = 1500;
    int year_max = 1899;

    void validate() const;
};

// Ground-truth entities and relational structures. All operations on it are
// pure; shift_world returns a modified copy.
struct WorldStructure {
    WorldConfig config;
    uint64_t seed = 0;
    std::vector<Entity> entities; // sorted by id; ids are 0..n-1

    std::map<int, GridPos> position;                  // entity id -> cell (all but colors)
    std::map<int, std::array<double, 3>> color_coord; // color id -> Lab-style coords
    std::map<int, int> capital_of;                    // country id -> city id
    std::map<int, int> founded_year;                  // landmark id -> year
    std::map<int, std::string> semantic_category;     // entity id -> label

    const Entity& entity(int id) const;
    const Entity* find_by_name(std::string_view name) const;
    std::vector<int> ids_of_kind(Kind k) const;

    void validate() const;

    io::json to_json() const;
    static WorldStructure from_json(const io::json& doc);
};

WorldStructure generate_world(uint64_t seed, const WorldConfig& config);

DissimilarityMatrix world_dissimilarity(const WorldStructure& world,
                                        const std::vector<int>& entity_ids,
                                        Relation relation);

WorldStructure shift_world(const WorldStructure& world, int country_id, int new_capital_id);

} // namespace corra::world
