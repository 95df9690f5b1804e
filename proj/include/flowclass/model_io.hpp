#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "flowclass/pipeline.hpp"

namespace flowclass {

inline constexpr int kModelFormatVersion = 1;

/// Self-contained JSON model document. Doubles are written in shortest
/// round-trip form, so load(save(m)) reproduces every parameter bit-for-bit.
nlohmann::ordered_json model_to_json(const TrainedPipeline& pipeline);
TrainedPipeline model_from_json(const nlohmann::json& doc);

void save_model(const TrainedPipeline& pipeline, const std::filesystem::path& path);
TrainedPipeline load_model(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace flowclass
