#pragma once

#include <json.hpp>
#include <string>

#include "hdrt/nn/layers.hpp"

namespace hdrt::nn {

/// Writes `<base>.bin` (little-endian f32 parameters then buffers, in
/// registration order) and `<base>.json` (names, shapes, offsets, frozen
/// flags, plus `meta`).
void save_checkpoint(const Module& m, const std::string& base, const nlohmann::json& meta = nlohmann::json::object());

/// Loads values into an identically structured module; names and shapes must
/// match. Restores frozen flags. Returns the stored `meta` object.
nlohmann::json load_checkpoint(Module& m, const std::string& base);

/// Reads only the manifest's `meta` object.
nlohmann::json read_checkpoint_meta(const std::string& base);

}  // namespace hdrt::nn
