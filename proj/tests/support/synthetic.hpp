#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lung/audio_io.hpp"
#include "lung/features.hpp"

namespace lung::testing {

/// Six classes of distinct tone/noise mixtures. Each recording jitters
/// frequencies, amplitudes and noise levels so no two clips are identical.
struct SyntheticOptions {
  std::size_t per_class = 60;
  double seconds = 5.0;
  int sample_rate = kWorkingSampleRate;
  std::uint64_t seed = 7;
  std::size_t recordings_per_patient = 3;
  bool add_excluded_patient = true;   // an Asthma patient whose files must be dropped
  bool add_annotation_files = true;   // respiratory-cycle .txt next to each wav
};

AudioClip synthesize_clip(std::size_t class_id, const SyntheticOptions& opts, std::uint64_t clip_seed);

struct SyntheticCorpus {
  std::filesystem::path audio_dir;
  std::filesystem::path diagnosis_csv;
  std::size_t recordings = 0;  // in-scope recordings
};

/// Writes "<pid>_<idx>_<loc>_<mode>_<equip>.wav" files plus a diagnosis CSV
/// under `root`.
SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& root, const SyntheticOptions& opts);

/// MFCC settings for the synthetic corpus: the default chain with clips cut
/// to `seconds` and the frame count that length produces.
MfccConfig synthetic_mfcc_config(double seconds);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace lung::testing
