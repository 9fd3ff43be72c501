#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace corra::io {

using json = nlohmann::ordered_json;

// Reads a whole file; throws Error{missing_artifact} if unreadable.
std::string read_file(const std::filesystem::path& p);

// Writes bytes; creates parent directories. Throws on failure.
void write_file(const std::filesystem::path& p, const std::string& bytes);

// Parses JSON; throws Error{schema_mismatch} on malformed input.
json parse_json(const std::string& text, const std::string& what);
json read_json(const std::filesystem::path& p);

// Requires doc["schema"] == expected, else Error{schema_mismatch}.
void check_schema(const json& doc, const std::string& expected);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

// FNV-1a 64-bit over bytes; used for artifact content fingerprints.
uint64_t fnv1a(const std::string& bytes);
std::string fnv1a_hex(const std::string& bytes);

// Runs fn(i) for i in [0, n) across `threads` workers. Each index writes only
// its own outputs, so results are schedule-independent; threads <= 1 runs inline.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace corra::io
