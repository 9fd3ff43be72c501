#include "corra/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <map>

#include "corra/error.hpp"
#include "corra/io.hpp"

namespace corra::ckpt {

namespace {

void append_f32_le(std::string& out, double v) {
    uint32_t bits = std::bit_cast<uint32_t>(float(v));
    out.push_back(char(bits & 0xff));
    out.push_back(char((bits >> 8) & 0xff));
    out.push_back(char((bits >> 16) & 0xff));
    out.push_back(char((bits >> 24) & 0xff));
}

void append_u64_le(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

uint64_t read_u64_le(const std::string& s, size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(s[off + i])) << (8 * i);
    return v;
}

double read_f32_le(const std::string& s, size_t off) {
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= uint32_t(uint8_t(s[off + i])) << (8 * i);
    return double(std::bit_cast<float>(bits));
}

} // namespace

void save_checkpoint(const std::string& path, const model::Transformer& m) {
    io::json manifest;
    manifest["schema"] = "corraudit/checkpoint/v1";
    manifest["config"] = m.config.to_json();
    manifest["provenance"] = m.provenance.to_json();

    std::string payload;
    io::json arrays = io::json::array();
    uint64_t offset = 0; // in floats from payload start
    m.params.visit([&](const std::string& name, const Mat& mat) {
        io::json entry;
        entry["name"] = name;
        entry["rows"] = mat.rows;
        entry["cols"] = mat.cols;
        entry["offset"] = offset;
        entry["count"] = mat.a.size();
        arrays.push_back(std::move(entry));
        for (double v : mat.a) append_f32_le(payload, v);
        offset += mat.a.size();
    });
    manifest["arrays"] = std::move(arrays);

    std::string blob(kMagic);
    std::string mtext = manifest.dump();
    append_u64_le(blob, mtext.size());
    blob += mtext;
    blob += payload;
    io::write_file(path, blob);
}

model::Transformer load_checkpoint(const std::string& path) {
    std::string blob = io::read_file(path);
    if (blob.size() < kMagic.size() + 8 || blob.compare(0, kMagic.size(), kMagic) != 0)
        fail(ErrorCode::schema_mismatch, "not a checkpoint file: " + path);
    uint64_t mlen = read_u64_le(blob, kMagic.size());
    size_t mstart = kMagic.size() + 8;
    if (mstart + mlen > blob.size()) fail(ErrorCode::schema_mismatch, "truncated checkpoint manifest");
    io::json manifest = io::parse_json(blob.substr(mstart, mlen), "checkpoint manifest");
    io::check_schema(manifest, "corraudit/checkpoint/v1");

    model::ModelConfig cfg = model::ModelConfig::from_json(manifest.at("config"));
    model::Provenance prov = model::Provenance::from_json(manifest.at("provenance"));

    struct Entry {
        uint64_t offset = 0, count = 0;
        int rows = 0, cols = 0;
    };
    std::map<std::string, Entry> index;
    for (const auto& e : manifest.at("arrays")) {
        Entry entry;
        entry.offset = e.at("offset").get<uint64_t>();
        entry.count = e.at("count").get<uint64_t>();
        entry.rows = e.at("rows").get<int>();
        entry.cols = e.at("cols").get<int>();
        index[e.at("name").get<std::string>()] = entry;
    }

    size_t payload_start = mstart + mlen;
    size_t payload_floats = (blob.size() - payload_start) / 4;

    Rng shape_rng(cfg.seed);
    model::Transformer m(cfg, model::Params::init(cfg, shape_rng), prov);
    m.params.visit([&](const std::string& name, Mat& mat) {
        auto it = index.find(name);
        if (it == index.end()) fail(ErrorCode::schema_mismatch, "checkpoint missing array " + name);
        const Entry& e = it->second;
        if (e.rows != mat.rows || e.cols != mat.cols || e.count != mat.a.size())
            fail(ErrorCode::schema_mismatch, "checkpoint array shape mismatch for " + name);
        if (e.offset + e.count > payload_floats)
            fail(ErrorCode::schema_mismatch, "checkpoint payload truncated at " + name);
        for (size_t i = 0; i < mat.a.size(); ++i)
            mat.a[i] = read_f32_le(blob, payload_start + 4 * (e.offset + i));
        index.erase(it);
    });
    if (!index.empty())
        fail(ErrorCode::schema_mismatch, "checkpoint contains unknown array " + index.begin()->first);
    return m;
}

} // namespace corra::ckpt
