#include "corra/world.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "corra/error.hpp"
#include "corra/rng.hpp"

namespace corra::world {

std::string_view kind_name(Kind k) {
    switch (k) {
    case Kind::country: return "country";
    case Kind::city: return "city";
    case Kind::color: return "color";
    case Kind::landmark: return "landmark";
    }
    return "?";
}

Kind kind_from_name(std::string_view s) {
    if (s == "country") return Kind::country;
    if (s == "city") return Kind::city;
    if (s == "color") return Kind::color;
    if (s == "landmark") return Kind::landmark;
    fail(ErrorCode::schema_mismatch, "unknown entity kind: " + std::string(s));
}

std::string_view relation_name(Relation r) {
    switch (r) {
    case Relation::position: return "position";
    case Relation::color_coord: return "colorCoord";
    case Relation::founded_year: return "foundedYear";
    }
    return "?";
}

void WorldConfig::validate() const {
    if (n_countries < 2 || n_cities < 2 || n_colors < 2 || n_landmarks < 2)
        fail(ErrorCode::infeasible_config, "need at least 2 entities per kind");
    if (n_cities < n_countries)
        fail(ErrorCode::infeasible_config, "need at least one city per country");
    if (grid_n < 1) fail(ErrorCode::infeasible_config, "grid size must be positive");
    if (n_landmarks > grid_n * grid_n)
        fail(ErrorCode::infeasible_config, "grid exhausted: more landmarks than grid cells");
    if (n_countries > grid_n * grid_n || n_cities > grid_n * grid_n)
        fail(ErrorCode::infeasible_config, "grid exhausted: more countries or cities than cells");
    if (year_max - year_min + 1 < n_landmarks)
        fail(ErrorCode::infeasible_config, "year range too narrow for distinct years");
}

namespace {

// Letter suffixes A, B, ..., Z, AA, AB, ... keep names single alphabetic tokens.
std::string letter_suffix(int i) {
    std::string s;
    ++i;
    while (i > 0) {
        --i;
        s.insert(s.begin(), char('A' + i % 26));
        i /= 26;
    }
    return s;
}

std::string entity_name(Kind k, int index) {
    switch (k) {
    case Kind::country: return "count" + letter_suffix(index);
    case Kind::city: return "city" + letter_suffix(index);
    case Kind::color: return "col" + letter_suffix(index);
    case Kind::landmark: return "land" + letter_suffix(index);
    }
    return "";
}

} // namespace

const Entity& WorldStructure::entity(int id) const {
    if (id < 0 || id >= int(entities.size()))
        fail(ErrorCode::invalid_argument, "entity id out of range: " + std::to_string(id));
    return entities[size_t(id)];
}

const Entity* WorldStructure::find_by_name(std::string_view name) const {
    for (const auto& e : entities)
        if (e.name == name) return &e;
    return nullptr;
}

std::vector<int> WorldStructure::ids_of_kind(Kind k) const {
    std::vector<int> out;
    for (const auto& e : entities)
        if (e.kind == k) out.push_back(e.id);
    return out;
}

void WorldStructure::validate() const {
    std::set<std::string> names;
    for (size_t i = 0; i < entities.size(); ++i) {
        if (entities[i].id != int(i))
            fail(ErrorCode::invalid_argument, "entity ids must be dense and sorted");
        if (entities[i].name.empty() ||
            entities[i].name.find(' ') != std::string::npos)
            fail(ErrorCode::invalid_argument, "entity name must be a single token");
        if (!names.insert(entities[i].name).second)
            fail(ErrorCode::invalid_argument, "duplicate entity name: " + entities[i].name);
    }
    // one capital per country, injectively
    std::set<int> used_cities;
    for (int cid : ids_of_kind(Kind::country)) {
        auto it = capital_of.find(cid);
        if (it == capital_of.end())
            fail(ErrorCode::invalid_argument, "country without capital: " + entity(cid).name);
        if (entity(it->second).kind != Kind::city)
            fail(ErrorCode::invalid_argument, "capital is not a city");
        if (!used_cities.insert(it->second).second)
            fail(ErrorCode::invalid_argument, "capitalOf is not injective");
    }
    // every non-color entity sits on the grid; cells are distinct within a
    // kind (cross-kind collisions are allowed: a capital sits on its country)
    for (Kind k : {Kind::country, Kind::city, Kind::landmark}) {
        std::set<std::pair<int, int>> cells;
        for (int id : ids_of_kind(k)) {
            auto it = position.find(id);
            if (it == position.end())
                fail(ErrorCode::invalid_argument, "entity without position: " + entity(id).name);
            const GridPos& p = it->second;
            if (p.x < 0 || p.x >= config.grid_n || p.y < 0 || p.y >= config.grid_n)
                fail(ErrorCode::invalid_argument, "position outside grid");
            if (!cells.insert({p.x, p.y}).second)
                fail(ErrorCode::invalid_argument,
                     std::string("two ") + std::string(kind_name(k)) + "s share a position");
        }
    }
    for (int lid : ids_of_kind(Kind::landmark))
        if (!founded_year.count(lid))
            fail(ErrorCode::invalid_argument, "landmark without founded year");
    for (int cid : ids_of_kind(Kind::color)) {
        auto it = color_coord.find(cid);
        if (it == color_coord.end())
            fail(ErrorCode::invalid_argument, "color without coordinates");
        for (double c : it->second)
            if (c < 0.0 || c > 100.0)
                fail(ErrorCode::invalid_argument, "color coordinate outside [0,100]");
    }
}

WorldStructure generate_world(uint64_t seed, const WorldConfig& config) {
    config.validate();
    WorldStructure w;
    w.config = config;
    w.seed = seed;
    Rng rng(seed);

    int next_id = 0;
    auto add_entities = [&](Kind k, int count) {
        for (int i = 0; i < count; ++i)
            w.entities.push_back({next_id++, entity_name(k, i), k});
    };
    add_entities(Kind::country, config.n_countries);
    add_entities(Kind::city, config.n_cities);
    add_entities(Kind::color, config.n_colors);
    add_entities(Kind::landmark, config.n_landmarks);

    const auto countries = w.ids_of_kind(Kind::country);
    const auto cities = w.ids_of_kind(Kind::city);
    const auto colors = w.ids_of_kind(Kind::color);
    const auto landmarks = w.ids_of_kind(Kind::landmark);

    // capitals: a seeded injective assignment country -> city
    {
        Rng r = rng.child("capitals");
        std::vector<int> pool = cities;
        r.shuffle(pool);
        for (size_t i = 0; i < countries.size(); ++i)
            w.capital_of[countries[i]] = pool[i];
    }

    // positions: distinct cells within each kind; capitals sit on their
    // country's cell so the country -> capital map is a constant spatial
    // relation, remaining cities take unused city cells
    {
        auto draw_cells = [&](const char* label, size_t count) {
            Rng r = rng.child(label);
            std::vector<int> cells(size_t(config.grid_n) * config.grid_n);
            for (size_t i = 0; i < cells.size(); ++i) cells[i] = int(i);
            r.shuffle(cells);
            cells.resize(count);
            return cells;
        };
        auto pos_of = [&](int cell) {
            return GridPos{cell % config.grid_n, cell / config.grid_n};
        };
        auto country_cells = draw_cells("country-positions", countries.size());
        for (size_t i = 0; i < countries.size(); ++i)
            w.position[countries[i]] = pos_of(country_cells[i]);
        std::set<int> taken;
        for (size_t i = 0; i < countries.size(); ++i) {
            w.position[w.capital_of[countries[i]]] = pos_of(country_cells[i]);
            taken.insert(country_cells[i]);
        }
        Rng r = rng.child("city-positions");
        std::vector<int> spare(size_t(config.grid_n) * config.grid_n);
        for (size_t i = 0; i < spare.size(); ++i) spare[i] = int(i);
        r.shuffle(spare);
        size_t next = 0;
        for (int cid : cities) {
            if (w.position.count(cid)) continue;
            while (taken.count(spare[next])) ++next;
            w.position[cid] = pos_of(spare[next]);
            taken.insert(spare[next++]);
        }
        auto landmark_cells = draw_cells("positions", landmarks.size());
        for (size_t i = 0; i < landmarks.size(); ++i)
            w.position[landmarks[i]] = pos_of(landmark_cells[i]);
    }

    // founded years: distinct, uniform over the configured range
    {
        Rng r = rng.child("years");
        std::set<int> used;
        for (int lid : landmarks) {
            int year;
            do {
                year = config.year_min + int(r.uniform(uint64_t(config.year_max - config.year_min + 1)));
            } while (!used.insert(year).second);
            w.founded_year[lid] = year;
        }
    }

    // color coordinates: distinct integer-valued points in the [0,100]^3 box,
    // so the corpus can mention them as plain number tokens
    {
        Rng r = rng.child("colors");
        std::set<std::array<double, 3>> used;
        for (int cid : colors) {
            std::array<double, 3> c;
            do {
                for (double& v : c) v = double(r.uniform(101));
            } while (!used.insert(c).second);
            w.color_coord[cid] = c;
        }
    }

    // coarse category labels for similarity-clustering tests: countries and
    // cities are "geo", colors "percept", landmarks split by grid quadrant
    for (const auto& e : w.entities) {
        switch (e.kind) {
        case Kind::country:
        case Kind::city: w.semantic_category[e.id] = "geo"; break;
        case Kind::color: w.semantic_category[e.id] = "percept"; break;
        case Kind::landmark: {
            const GridPos& p = w.position[e.id];
            const bool west = p.x < config.grid_n / 2;
            const bool north = p.y < config.grid_n / 2;
            w.semantic_category[e.id] =
                north ? (west ? "nw" : "ne") : (west ? "sw" : "se");
            break;
        }
        }
    }

    w.validate();
    return w;
}

void DissimilarityMatrix::validate() const {
    if (d.rows != d.cols || d.rows != int(entity_ids.size()))
        fail(ErrorCode::invalid_argument, "dissimilarity matrix shape mismatch");
    for (int i = 0; i < d.rows; ++i) {
        if (d.at(i, i) != 0.0)
            fail(ErrorCode::invalid_argument, "dissimilarity diagonal must be zero");
        for (int j = 0; j < d.cols; ++j) {
            if (d.at(i, j) < 0.0 || !std::isfinite(d.at(i, j)))
                fail(ErrorCode::invalid_argument, "dissimilarity must be finite and non-negative");
            if (d.at(i, j) != d.at(j, i))
                fail(ErrorCode::invalid_argument, "dissimilarity must be symmetric");
        }
    }
}

std::string DissimilarityMatrix::to_csv() const {
    std::ostringstream out;
    out << "entity";
    for (const auto& n : entity_names) out << "," << n;
    out << "\n";
    for (int i = 0; i < d.rows; ++i) {
        out << entity_names[size_t(i)];
        for (int j = 0; j < d.cols; ++j) out << "," << io::format_double(d.at(i, j));
        out << "\n";
    }
    return out.str();
}

DissimilarityMatrix world_dissimilarity(const WorldStructure& world,
                                        const std::vector<int>& entity_ids,
                                        Relation relation) {
    if (entity_ids.empty())
        fail(ErrorCode::invalid_argument, "entity subset must be nonempty");
    const Kind kind = world.entity(entity_ids[0]).kind;
    for (int id : entity_ids)
        if (world.entity(id).kind != kind)
            fail(ErrorCode::invalid_argument, "mixed-kind entity subset");

    const bool carries = relation == Relation::position ? kind != Kind::color
                         : relation == Relation::color_coord ? kind == Kind::color
                                                             : kind == Kind::landmark;
    if (!carries)
        fail(ErrorCode::invalid_argument,
             std::string("entities lack attribute ") + std::string(relation_name(relation)));

    const int n = int(entity_ids.size());
    DissimilarityMatrix out;
    out.entity_ids = entity_ids;
    for (int id : entity_ids) out.entity_names.push_back(world.entity(id).name);
    out.d = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double dist = 0.0;
            switch (relation) {
            case Relation::position: {
                const GridPos& a = world.position.at(entity_ids[size_t(i)]);
                const GridPos& b = world.position.at(entity_ids[size_t(j)]);
                dist = std::hypot(double(a.x - b.x), double(a.y - b.y));
                break;
            }
            case Relation::color_coord: {
                const auto& a = world.color_coord.at(entity_ids[size_t(i)]);
                const auto& b = world.color_coord.at(entity_ids[size_t(j)]);
                double s = 0.0;
                for (int c = 0; c < 3; ++c) s += (a[size_t(c)] - b[size_t(c)]) * (a[size_t(c)] - b[size_t(c)]);
                dist = std::sqrt(s);
                break;
            }
            case Relation::founded_year:
                dist = std::abs(double(world.founded_year.at(entity_ids[size_t(i)]) -
                                       world.founded_year.at(entity_ids[size_t(j)])));
                break;
            }
            out.d.at(i, j) = dist;
            out.d.at(j, i) = dist;
        }
    }
    out.validate();
    return out;
}

WorldStructure shift_world(const WorldStructure& world, int country_id, int new_capital_id) {
    if (country_id < 0 || country_id >= int(world.entities.size()) ||
        world.entity(country_id).kind != Kind::country)
        fail(ErrorCode::invalid_argument, "shift_world: not a country in this world");
    if (new_capital_id < 0 || new_capital_id >= int(world.entities.size()) ||
        world.entity(new_capital_id).kind != Kind::city)
        fail(ErrorCode::invalid_argument, "shift_world: new capital must be a city");

    WorldStructure out = world;
    const int old_capital = out.capital_of.at(country_id);
    if (old_capital == new_capital_id) return out;

    // if the target city is already someone's capital, swap to keep injectivity
    for (auto& [other, cap] : out.capital_of) {
        if (other != country_id && cap == new_capital_id) {
            cap = old_capital;
            break;
        }
    }
    out.capital_of[country_id] = new_capital_id;
    out.validate();
    return out;
}

io::json WorldStructure::to_json() const {
    io::json doc;
    doc["schema"] = "corraudit/world/v1";
    doc["seed"] = seed;
    doc["config"] = {
        {"n_countries", config.n_countries}, {"n_cities", config.n_cities},
        {"n_colors", config.n_colors},       {"n_landmarks", config.n_landmarks},
        {"grid_n", config.grid_n},           {"year_min", config.year_min},
        {"year_max", config.year_max},
    };
    io::json ents = io::json::array();
    for (const auto& e : entities) {
        io::json je = {{"id", e.id}, {"name", e.name}, {"kind", std::string(kind_name(e.kind))}};
        if (auto it = position.find(e.id); it != position.end())
            je["position"] = {it->second.x, it->second.y};
        if (auto it = color_coord.find(e.id); it != color_coord.end())
            je["color_coord"] = {it->second[0], it->second[1], it->second[2]};
        if (auto it = capital_of.find(e.id); it != capital_of.end())
            je["capital_of"] = it->second;
        if (auto it = founded_year.find(e.id); it != founded_year.end())
            je["founded_year"] = it->second;
        if (auto it = semantic_category.find(e.id); it != semantic_category.end())
            je["category"] = it->second;
        ents.push_back(je);
    }
    doc["entities"] = ents;
    return doc;
}

WorldStructure WorldStructure::from_json(const io::json& doc) {
    io::check_schema(doc, "corraudit/world/v1");
    WorldStructure w;
    w.seed = doc.at("seed").get<uint64_t>();
    const auto& c = doc.at("config");
    w.config.n_countries = c.at("n_countries").get<int>();
    w.config.n_cities = c.at("n_cities").get<int>();
    w.config.n_colors = c.at("n_colors").get<int>();
    w.config.n_landmarks = c.at("n_landmarks").get<int>();
    w.config.grid_n = c.at("grid_n").get<int>();
    w.config.year_min = c.at("year_min").get<int>();
    w.config.year_max = c.at("year_max").get<int>();
    for (const auto& je : doc.at("entities")) {
        Entity e;
        e.id = je.at("id").get<int>();
        e.name = je.at("name").get<std::string>();
        e.kind = kind_from_name(je.at("kind").get<std::string>());
        w.entities.push_back(e);
        if (je.contains("position"))
            w.position[e.id] = {je["position"][0].get<int>(), je["position"][1].get<int>()};
        if (je.contains("color_coord"))
            w.color_coord[e.id] = {je["color_coord"][0].get<double>(),
                                   je["color_coord"][1].get<double>(),
                                   je["color_coord"][2].get<double>()};
        if (je.contains("capital_of")) w.capital_of[e.id] = je["capital_of"].get<int>();
        if (je.contains("founded_year")) w.founded_year[e.id] = je["founded_year"].get<int>();
        if (je.contains("category")) w.semantic_category[e.id] = je["category"].get<std::string>();
    }
    w.validate();
    return w;
}

} // namespace corra::world
