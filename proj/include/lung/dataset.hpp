#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lung/soft_label.hpp"

namespace lung {

/// Class ids follow the alphabetical order of the report rows.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Bronchiectasis", "Bronchiolitis", "COPD", "Healthy", "Pneumonia", "URTI"};

/// Case-insensitive match against the six class names; nullopt for anything
/// else (Asthma, LRTI, ...).
std::optional<std::size_t> class_from_diagnosis(std::string_view diagnosis);

/// Parsed "<patient>_<index>_<location>_<mode>_<equipment>" stem.
struct RecordingMeta {
  int patient_id = 0;
  std::string recording_index;
  std::string chest_location;
  std::string acquisition_mode;
  std::string equipment;
  std::filesystem::path path;

  std::string stem() const;
  bool operator==(const RecordingMeta&) const = default;
};

RecordingMeta parse_filename(std::string_view stem);

/// patient id -> class id, or nullopt for diagnoses outside the six classes.
using DiagnosisMap = std::map<int, std::optional<std::size_t>>;

/// Reads "patient_id,diagnosis" lines (comma, tab or whitespace separated).
/// A non-numeric first line is treated as a header.
DiagnosisMap load_diagnoses(const std::filesystem::path& csv);
DiagnosisMap parse_diagnoses(std::string_view text);

/// Throws UnknownPatient when the id is absent.
std::optional<std::size_t> lookup_diagnosis(const DiagnosisMap& map, int patient_id);

struct Recording {
  std::uint32_t id = 0;
  std::size_t class_id = 0;
  RecordingMeta meta;
};

struct Corpus {
  std::vector<Recording> recordings;  // sorted by stem; ids are positions
  std::size_t excluded_recordings = 0;
  std::size_t annotation_files = 0;   // respiratory-cycle .txt files, ignored
};

/// Collects every .wav under `audio_dir` whose patient has an in-scope
/// diagnosis. Excluded diagnoses are dropped and counted.
Corpus scan_corpus(const std::filesystem::path& audio_dir, const DiagnosisMap& diagnoses);

struct SplitItem {
  std::uint32_t id = 0;
  std::size_t class_id = 0;
  int patient_id = 0;
};

struct SplitOptions {
  std::uint64_t seed = 0;
  double unlabeled_fraction = 0.5;
  double test_fraction = 0.2;
  bool patient_level = false;
};

struct SplitManifest {
  std::vector<std::uint32_t> train_labeled;
  std::vector<std::uint32_t> train_unlabeled;
  std::vector<std::uint32_t> test;
  std::uint64_t seed = 0;
  double unlabeled_fraction = 0.0;
  double test_fraction = 0.2;
  bool patient_level = false;
  std::vector<std::string> warnings;

  /// Throws CorruptManifest when sets overlap.
  void check_disjoint() const;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SplitManifest load(const std::filesystem::path& path);

  bool operator==(const SplitManifest&) const = default;
};

/// Nearest-integer (half-up) share of n, at least 1 when n >= 3.
std::size_t stratified_count(std::size_t n, double fraction);

/// Per-class shuffle under the seed, then test / unlabeled / labeled carving.
SplitManifest make_splits(std::span<const SplitItem> items, const SplitOptions& options);

/// Stratified carve of `fraction` of the given ids for validation; returns
/// (kept, held_out).
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> carve_validation(
    std::span<const std::uint32_t> ids, std::span<const std::size_t> classes, double fraction,
    std::uint64_t seed);

}  // namespace lung
