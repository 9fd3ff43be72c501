#include "corra/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "corra/error.hpp"

namespace corra::io {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::missing_artifact, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof())
        fail(ErrorCode::missing_artifact, "read error on " + p.string());
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::missing_artifact, "cannot write " + p.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out.good()) fail(ErrorCode::missing_artifact, "write error on " + p.string());
}

json parse_json(const std::string& text, const std::string& what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
        fail(ErrorCode::schema_mismatch, "malformed JSON in " + what);
    return doc;
}

json read_json(const std::filesystem::path& p) {
    return parse_json(read_file(p), p.string());
}

void check_schema(const json& doc, const std::string& expected) {
    if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string() ||
        doc["schema"].get<std::string>() != expected) {
        fail(ErrorCode::schema_mismatch,
             "expected schema \"" + expected + "\"" +
                 (doc.is_object() && doc.contains("schema") && doc["schema"].is_string()
                      ? ", found \"" + doc["schema"].get<std::string>() + "\""
                      : ""));
    }
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= uint64_t(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a_hex(const std::string& bytes) {
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(bytes));
    return std::string(buf);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nw = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(size_t(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += nw) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace corra::io
