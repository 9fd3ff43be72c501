#pragma once

#include <string>

#include "corra/model.hpp"

namespace corra::ckpt {

// Container layout: versioned magic string, u64 little-endian manifest byte
// length, JSON manifest (schema, model config, provenance, array index), then
// the arrays as raw 32-bit little-endian IEEE-754 floats, concatenated.
inline constexpr std::string_view kMagic = "CORRAUDIT-CKPT-v1\n";

void save_checkpoint(const std::string& path, const model::Transformer& m);
model::Transformer load_checkpoint(const std::string& path);

} // namespace corra::ckpt
