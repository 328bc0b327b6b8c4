#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lung/dataset.hpp"
#include "lung/features.hpp"

namespace lung {

inline constexpr std::uint16_t kCacheVersion = 1;
inline constexpr std::int8_t kUnlabeledClass = -1;

struct CacheRecord {
  std::uint32_t id = 0;
  std::int8_t class_id = kUnlabeledClass;
  MfccMatrix features;
};

/// Sidecar information kept next to the binary cache.
struct CacheEntry {
  std::uint32_t id = 0;
  std::string stem;
  int patient_id = 0;
  std::int8_t class_id = kUnlabeledClass;
};

struct CacheFailure {
  std::string stem;
  std::string message;
};

/// Binary layout (little-endian):
///   "LSFC" | u16 version | 32-byte config hash | u32 record count |
///   u16 n_coefficients | u32 frames
///   per record: u32 id | i8 class (-1 = unlabeled) | n_coefficients * frames f32
/// Records are sorted by id. "<file>.json" holds the config, the entry index
/// and the extraction failures.
struct FeatureCache {
  MfccConfig config;
  std::vector<CacheRecord> records;
  std::vector<CacheEntry> entries;
  std::vector<CacheFailure> failures;
  nlohmann::json provenance = nlohmann::json::object();  // inputs the cache was built from

  Sha256Digest config_hash() const { return config.hash(); }
  std::size_t size() const { return records.size(); }

  /// Throws NoUsableData when the id is absent.
  const CacheRecord& at(std::uint32_t id) const;
  const CacheEntry& entry(std::uint32_t id) const;

  /// (id, class, patient) triples for make_splits; skips unlabeled records.
  std::vector<SplitItem> split_items() const;
};

nlohmann::json mfcc_config_to_json(const MfccConfig& cfg);
MfccConfig mfcc_config_from_json(const nlohmann::json& j);

std::filesystem::path cache_sidecar_path(const std::filesystem::path& cache_path);

void save_feature_cache(const std::filesystem::path& path, const FeatureCache& cache);

/// Throws ConfigHashMismatch when `expected` is given and differs from the
/// stored hash, CorruptCache on framing errors.
FeatureCache load_feature_cache(const std::filesystem::path& path,
                                const std::optional<Sha256Digest>& expected = std::nullopt);

/// Loads, resamples and featurizes every recording on `jobs` worker threads.
/// Per-file audio errors are collected in `failures`; output order is by id.
FeatureCache build_feature_cache(const Corpus& corpus, const MfccConfig& cfg, std::size_t jobs);

}  // namespace lung
