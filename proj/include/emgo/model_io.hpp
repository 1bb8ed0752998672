#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "emgo/classifiers.hpp"

namespace emgo {

inline constexpr std::uint32_t kModelVersion = 1;

// Versioned little-endian container: "EMGOMDL\0", version, pipeline info,
// hyperparameters, projection, classifier kind and parameter block.
std::vector<std::uint8_t> serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);  // throws BadModel

void save_model(const TrainedModel& m, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace emgo
