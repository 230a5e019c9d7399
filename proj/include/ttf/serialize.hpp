#pragma once

#include "ttf/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace ttf {

nlohmann::json to_json(const WindowSpec& spec);
WindowSpec window_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

// Model artifact, plain text:
//   TTF-MODEL 1
//   config <ModelConfig as one-line JSON>
//   tensors <count>
//   tensor <name> <rows> <cols>      (then `rows` lines of hex-float values)
//   ...
//   sha256 <hex digest of every preceding byte>
// Hex floats make the round trip bit-exact.
std::string serialize_model(const MtFusionNet& model);
MtFusionNet deserialize_model(std::string_view artifact); // verifies the digest

// First 16 hex digits of the artifact digest.
std::string model_version(const MtFusionNet& model);
// Digest over tensor names, shapes and values only.
std::string parameter_hash(const MtFusionNet& model);

void save_model(const MtFusionNet& model, const std::filesystem::path& path);
MtFusionNet load_model(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace ttf
