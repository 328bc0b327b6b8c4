#pragma once

#include <filesystem>

#include "json.hpp"
#include "lung/network.hpp"

namespace lung {

/// On-disk layout (little-endian):
///   "LSNN" | u16 version | u32 tensor count
///   per tensor: u16 name length | UTF-8 name | u8 dtype (1 = f32) | u8 rank |
///               u32 dims[rank] | f32 payload
///   u32 metadata length | metadata JSON (seed, config hash, epoch, architecture)
struct Checkpoint {
  ModelParams<float> params;
  nlohmann::json metadata;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

/// `metadata["architecture"]` is filled in from params.
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     nlohmann::json metadata);

/// Throws CorruptCheckpoint on any framing or shape inconsistency.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lung
