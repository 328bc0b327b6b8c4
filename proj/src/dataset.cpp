#include "lung/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lung/errors.hpp"
#include "lung/rng.hpp"

namespace lung {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  const bool has_delim = line.find_first_of(",\t;") != std::string_view::npos;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    const bool end = i == line.size();
    const char c = end ? '\0' : line[i];
    const bool delim = has_delim ? (c == ',' || c == '\t' || c == ';') : std::isspace(static_cast<unsigned char>(c)) != 0;
    if (end || delim) {
      auto field = trim(line.substr(start, i - start));
      if (has_delim || !field.empty()) fields.push_back(field);
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

std::optional<std::size_t> class_from_diagnosis(std::string_view diagnosis) {
  const std::string d = lower(trim(diagnosis));
  for (std::size_t c = 0; c < kClassNames.size(); ++c)
    if (d == lower(kClassNames[c])) return c;
  return std::nullopt;
}

std::string RecordingMeta::stem() const {
  return std::to_string(patient_id) + "_" + recording_index + "_" + chest_location + "_" + acquisition_mode +
         "_" + equipment;
}

RecordingMeta parse_filename(std::string_view stem) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= stem.size(); ++i) {
    if (i == stem.size() || stem[i] == '_') {
      parts.push_back(stem.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 5)
    throw MalformedName("'" + std::string(stem) + "' has " + std::to_string(parts.size()) +
                        " underscore-delimited fields, expected 5");
  for (auto p : parts)
    if (p.empty()) throw MalformedName("'" + std::string(stem) + "' has an empty field");
  const auto pid = parse_int(parts[0]);
  if (!pid) throw MalformedName("'" + std::string(stem) + "' has a non-numeric patient id");
  RecordingMeta meta;
  meta.patient_id = *pid;
  meta.recording_index = parts[1];
  meta.chest_location = parts[2];
  meta.acquisition_mode = parts[3];
  meta.equipment = parts[4];
  return meta;
}

DiagnosisMap parse_diagnoses(std::string_view text) {
  DiagnosisMap map;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool seen_data = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);  // UTF-8 BOM
    line = trim(line);
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    const auto pid = fields.empty() ? std::nullopt : parse_int(fields[0]);
    if (!pid) {
      if (!seen_data && line_no == 1) continue;  // header
      throw MalformedCsv("line " + std::to_string(line_no) + ": expected a numeric patient id");
    }
    if (fields.size() < 2 || fields[1].empty())
      throw MalformedCsv("line " + std::to_string(line_no) + ": missing diagnosis");
    seen_data = true;
    map[*pid] = class_from_diagnosis(fields[1]);
  }
  return map;
}

DiagnosisMap load_diagnoses(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw IoError("cannot open diagnosis file " + csv.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_diagnoses(buf.str());
}

std::optional<std::size_t> lookup_diagnosis(const DiagnosisMap& map, int patient_id) {
  const auto it = map.find(patient_id);
  if (it == map.end()) throw UnknownPatient("no diagnosis for patient " + std::to_string(patient_id));
  return it->second;
}

Corpus scan_corpus(const std::filesystem::path& audio_dir, const DiagnosisMap& diagnoses) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(audio_dir)) throw IoError("not a directory: " + audio_dir.string());

  Corpus corpus;
  std::vector<RecordingMeta> metas;
  for (const auto& entry : fs::recursive_directory_iterator(audio_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (ext == ".txt") {
      ++corpus.annotation_files;
      continue;
    }
    if (ext != ".wav") continue;
    RecordingMeta meta = parse_filename(entry.path().stem().string());
    meta.path = entry.path();
    metas.push_back(std::move(meta));
  }
  std::sort(metas.begin(), metas.end(),
            [](const RecordingMeta& a, const RecordingMeta& b) { return a.path.filename() < b.path.filename(); });

  for (auto& meta : metas) {
    const auto cls = lookup_diagnosis(diagnoses, meta.patient_id);
    if (!cls) {
      ++corpus.excluded_recordings;
      continue;
    }
    Recording rec;
    rec.id = static_cast<std::uint32_t>(corpus.recordings.size());
    rec.class_id = *cls;
    rec.meta = std::move(meta);
    corpus.recordings.push_back(std::move(rec));
  }
  if (corpus.excluded_recordings > 0)
    spdlog::info("dropped {} recordings with diagnoses outside the six classes", corpus.excluded_recordings);
  if (corpus.annotation_files > 0)
    spdlog::debug("ignored {} respiratory-cycle annotation files", corpus.annotation_files);
  if (corpus.recordings.empty()) throw NoUsableData("no recordings with an in-scope diagnosis under " + audio_dir.string());
  return corpus;
}

// ---------------------------------------------------------------------------
// Splits

std::size_t stratified_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5));
  if (n >= 3 && fraction > 0.0) k = std::max<std::size_t>(k, 1);
  return std::min(k, n);
}

void SplitManifest::check_disjoint() const {
  std::set<std::uint32_t> seen;
  for (const auto* set : {&train_labeled, &train_unlabeled, &test})
    for (auto id : *set)
      if (!seen.insert(id).second) throw CorruptManifest("recording " + std::to_string(id) + " appears in two splits");
}

nlohmann::json SplitManifest::to_json() const {
  return {{"train_labeled", train_labeled},
          {"train_unlabeled", train_unlabeled},
          {"test", test},
          {"seed", seed},
          {"unlabeled_fraction", unlabeled_fraction},
          {"test_fraction", test_fraction},
          {"patient_level", patient_level},
          {"warnings", warnings}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  try {
    m.train_labeled = j.at("train_labeled").get<std::vector<std::uint32_t>>();
    m.train_unlabeled = j.at("train_unlabeled").get<std::vector<std::uint32_t>>();
    m.test = j.at("test").get<std::vector<std::uint32_t>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.unlabeled_fraction = j.at("unlabeled_fraction").get<double>();
    m.test_fraction = j.value("test_fraction", 0.2);
    m.patient_level = j.value("patient_level", false);
    m.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(e.what());
  }
  m.check_disjoint();
  return m;
}

void SplitManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

SplitManifest SplitManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(path.string() + ": " + e.what());
  }
  return from_json(j);
}

SplitManifest make_splits(std::span<const SplitItem> items, const SplitOptions& options) {
  if (items.empty()) throw NoUsableData("no recordings to split");
  if (!(options.unlabeled_fraction >= 0.0 && options.unlabeled_fraction < 1.0))
    throw InvalidConfig("unlabeled_fraction must be in [0, 1)");
  if (!(options.test_fraction >= 0.0 && options.test_fraction < 1.0))
    throw InvalidConfig("test_fraction must be in [0, 1)");

  SplitManifest m;
  m.seed = options.seed;
  m.unlabeled_fraction = options.unlabeled_fraction;
  m.test_fraction = options.test_fraction;
  m.patient_level = options.patient_level;

  Rng rng = substream(options.seed, "split");
  std::map<std::size_t, std::vector<SplitItem>> by_class;
  for (const auto& item : items) {
    if (item.class_id >= kNumClasses) throw InvalidConfig("class id out of range");
    by_class[item.class_id].push_back(item);
  }

  for (auto& [cls, members] : by_class) {
    std::sort(members.begin(), members.end(), [](const SplitItem& a, const SplitItem& b) { return a.id < b.id; });
    if (members.size() < 3) {
      m.warnings.push_back("ClassTooSmall: " + std::string(kClassNames[cls]) + " has " +
                           std::to_string(members.size()) + " recordings");
      spdlog::warn("{}", m.warnings.back());
    }
    const std::size_t n_test = stratified_count(members.size(), options.test_fraction);

    std::vector<SplitItem> rest;
    if (options.patient_level) {
      std::map<int, std::vector<SplitItem>> by_patient;
      for (const auto& it : members) by_patient[it.patient_id].push_back(it);
      std::vector<int> patients;
      for (const auto& [pid, _] : by_patient) patients.push_back(pid);
      std::shuffle(patients.begin(), patients.end(), rng);
      std::size_t taken = 0;
      for (int pid : patients) {
        auto& recs = by_patient[pid];
        const bool to_test = taken < n_test;
        for (const auto& it : recs) (to_test ? m.test.push_back(it.id) : rest.push_back(it));
        if (to_test) taken += recs.size();
      }
      std::shuffle(rest.begin(), rest.end(), rng);
    } else {
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t i = 0; i < members.size(); ++i) (i < n_test ? m.test.push_back(members[i].id) : rest.push_back(members[i]));
    }

    const auto n_unlabeled = static_cast<std::size_t>(
        std::floor(static_cast<double>(rest.size()) * options.unlabeled_fraction + 0.5));
    for (std::size_t i = 0; i < rest.size(); ++i)
      (i < n_unlabeled ? m.train_unlabeled : m.train_labeled).push_back(rest[i].id);
  }
  for (auto* set : {&m.train_labeled, &m.train_unlabeled, &m.test}) std::sort(set->begin(), set->end());
  m.check_disjoint();
  return m;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> carve_validation(
    std::span<const std::uint32_t> ids, std::span<const std::size_t> classes, double fraction,
    std::uint64_t seed) {
  if (ids.size() != classes.size()) throw LengthMismatch("ids and classes differ in length");
  Rng rng = substream(seed, "validation");
  std::map<std::size_t, std::vector<std::uint32_t>> by_class;
  for (std::size_t i = 0; i < ids.size(); ++i) by_class[classes[i]].push_back(ids[i]);
  std::vector<std::uint32_t> kept, held;
  for (auto& [cls, members] : by_class) {
    std::sort(members.begin(), members.end());
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_held = fraction > 0.0 ? stratified_count(members.size(), fraction) : 0;
    for (std::size_t i = 0; i < members.size(); ++i) (i < n_held ? held : kept).push_back(members[i]);
  }
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());
  return {kept, held};
}

}  // namespace lung
