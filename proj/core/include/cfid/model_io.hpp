#pragma once

#include <filesystem>
#include <string>

#include "cfid/model.hpp"

namespace cfid {

inline constexpr int kModelSchemaVersion = 1;

// Versioned JSON document; floats round-trip bit-exactly through the
// shortest-representation encoder, so save/load is lossless.
std::string model_to_json_string(const GenerativeModel& model);
GenerativeModel model_from_json_string(const std::string& text);

void save_model(const std::filesystem::path& path, const GenerativeModel& model);
GenerativeModel load_model(const std::filesystem::path& path);

}  // namespace cfid
