#include "lung/feature_cache.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "lung/audio_io.hpp"
#include "lung/binary_io.hpp"
#include "lung/errors.hpp"

namespace lung {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'F', 'C'};

}  // namespace

const CacheRecord& FeatureCache::at(std::uint32_t id) const {
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const CacheRecord& r, std::uint32_t v) { return r.id < v; });
  if (it == records.end() || it->id != id) throw NoUsableData("recording " + std::to_string(id) + " not in cache");
  return *it;
}

const CacheEntry& FeatureCache::entry(std::uint32_t id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  throw NoUsableData("recording " + std::to_string(id) + " not in cache index");
}

std::vector<SplitItem> FeatureCache::split_items() const {
  std::vector<SplitItem> items;
  for (const auto& r : records) {
    if (r.class_id < 0) continue;
    int patient = 0;
    for (const auto& e : entries)
      if (e.id == r.id) patient = e.patient_id;
    items.push_back({r.id, static_cast<std::size_t>(r.class_id), patient});
  }
  return items;
}

nlohmann::json mfcc_config_to_json(const MfccConfig& c) {
  return {{"pre_emphasis_coeff", c.pre_emphasis_coeff},
          {"frame_length", c.frame_length},
          {"hop_length", c.hop_length},
          {"n_fft", c.n_fft},
          {"n_mel_filters", c.n_mel_filters},
          {"n_coefficients", c.n_coefficients},
          {"fmin", c.fmin},
          {"fmax", c.fmax},
          {"target_frames", c.target_frames},
          {"clip_seconds", c.clip_seconds},
          {"log_floor", c.log_floor},
          {"sample_rate", c.sample_rate}};
}

MfccConfig mfcc_config_from_json(const nlohmann::json& j) {
  MfccConfig c;
  c.pre_emphasis_coeff = j.value("pre_emphasis_coeff", c.pre_emphasis_coeff);
  c.frame_length = j.value("frame_length", c.frame_length);
  c.hop_length = j.value("hop_length", c.hop_length);
  c.n_fft = j.value("n_fft", c.n_fft);
  c.n_mel_filters = j.value("n_mel_filters", c.n_mel_filters);
  c.n_coefficients = j.value("n_coefficients", c.n_coefficients);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
  c.target_frames = j.value("target_frames", c.target_frames);
  c.clip_seconds = j.value("clip_seconds", c.clip_seconds);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  return c;
}

std::filesystem::path cache_sidecar_path(const std::filesystem::path& cache_path) {
  auto p = cache_path;
  p += ".json";
  return p;
}

void save_feature_cache(const std::filesystem::path& path, const FeatureCache& cache) {
  const std::size_t rows = cache.config.n_coefficients;
  const std::size_t cols = cache.config.target_frames;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 4);
    binary::put<std::uint16_t>(out, kCacheVersion);
    const auto hash = cache.config_hash();
    out.write(reinterpret_cast<const char*>(hash.data()), static_cast<std::streamsize>(hash.size()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(cache.records.size()));
    binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(rows));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
    for (const auto& r : cache.records) {
      if (r.features.rows != rows || r.features.cols != cols)
        throw ShapeMismatch("record " + std::to_string(r.id) + " does not match the cache config");
      binary::put<std::uint32_t>(out, r.id);
      binary::put<std::int8_t>(out, r.class_id);
      out.write(reinterpret_cast<const char*>(r.features.data.data()),
                static_cast<std::streamsize>(r.features.data.size() * sizeof(float)));
    }
    if (!out) throw IoError("short write to " + path.string());
  }

  nlohmann::json side;
  side["config"] = mfcc_config_to_json(cache.config);
  side["config_hash"] = to_hex(cache.config_hash());
  side["provenance"] = cache.provenance;
  auto& entries = side["entries"] = nlohmann::json::array();
  for (const auto& e : cache.entries)
    entries.push_back({{"id", e.id}, {"stem", e.stem}, {"patient_id", e.patient_id}, {"class", e.class_id}});
  auto& failures = side["failures"] = nlohmann::json::array();
  for (const auto& f : cache.failures) failures.push_back({{"stem", f.stem}, {"message", f.message}});
  std::ofstream out(cache_sidecar_path(path));
  if (!out) throw IoError("cannot write " + cache_sidecar_path(path).string());
  out << side.dump(2) << '\n';
}

FeatureCache load_feature_cache(const std::filesystem::path& path, const std::optional<Sha256Digest>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache " + path.string());

  char magic[4];
  std::uint16_t version = 0;
  Sha256Digest stored{};
  std::uint32_t count = 0;
  std::uint16_t rows = 0;
  std::uint32_t cols = 0;
  if (!binary::get_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptCache(path.string() + ": bad magic");
  if (!binary::get(in, version) || version != kCacheVersion)
    throw CorruptCache(path.string() + ": unsupported version " + std::to_string(version));
  if (!binary::get_bytes(in, reinterpret_cast<char*>(stored.data()), stored.size()) || !binary::get(in, count) ||
      !binary::get(in, rows) || !binary::get(in, cols))
    throw CorruptCache(path.string() + ": truncated header");
  if (expected && *expected != stored)
    throw ConfigHashMismatch("cache " + path.string() + " was built with config " + to_hex(stored) +
                             ", expected " + to_hex(*expected));

  FeatureCache cache;
  std::ifstream side_in(cache_sidecar_path(path));
  if (side_in) {
    nlohmann::json side;
    try {
      side_in >> side;
      cache.config = mfcc_config_from_json(side.at("config"));
      cache.provenance = side.value("provenance", nlohmann::json::object());
      for (const auto& e : side.value("entries", nlohmann::json::array()))
        cache.entries.push_back({e.at("id").get<std::uint32_t>(), e.at("stem").get<std::string>(),
                                 e.at("patient_id").get<int>(), e.at("class").get<std::int8_t>()});
      for (const auto& f : side.value("failures", nlohmann::json::array()))
        cache.failures.push_back({f.at("stem").get<std::string>(), f.at("message").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw CorruptCache(cache_sidecar_path(path).string() + ": " + e.what());
    }
    if (cache.config_hash() != stored) throw CorruptCache("sidecar config does not match the cache header hash");
  } else {
    spdlog::warn("cache sidecar missing for {}; config defaults assumed for shape only", path.string());
    cache.config.n_coefficients = rows;
    cache.config.target_frames = cols;
  }
  if (cache.config.n_coefficients != rows || cache.config.target_frames != cols)
    throw CorruptCache(path.string() + ": record shape disagrees with config");

  cache.records.resize(count);
  for (auto& r : cache.records) {
    r.features = MfccMatrix(rows, cols, 0.0f);
    if (!binary::get(in, r.id) || !binary::get(in, r.class_id) ||
        !binary::get_bytes(in, reinterpret_cast<char*>(r.features.data.data()),
                           r.features.data.size() * sizeof(float)))
      throw CorruptCache(path.string() + ": truncated record");
    if (r.class_id < kUnlabeledClass || r.class_id >= static_cast<int>(kNumClasses))
      throw CorruptCache(path.string() + ": class out of range");
  }
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0) throw CorruptCache(path.string() + ": trailing bytes");
  if (!std::is_sorted(cache.records.begin(), cache.records.end(),
                      [](const CacheRecord& a, const CacheRecord& b) { return a.id < b.id; }))
    throw CorruptCache(path.string() + ": records not sorted by id");
  return cache;
}

FeatureCache build_feature_cache(const Corpus& corpus, const MfccConfig& cfg, std::size_t jobs) {
  cfg.validate();
  const std::size_t n = corpus.recordings.size();
  std::vector<std::optional<MfccMatrix>> features(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    MfccExtractor extractor(cfg);
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& rec = corpus.recordings[i];
      try {
        AudioClip clip = load_wav(rec.meta.path);
        if (clip.sample_rate != cfg.sample_rate) clip = resample(clip, cfg.sample_rate);
        features[i] = extractor.extract(clip);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  FeatureCache cache;
  cache.config = cfg;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = corpus.recordings[i];
    if (!features[i]) {
      spdlog::warn("skipping {}: {}", rec.meta.stem(), errors[i]);
      cache.failures.push_back({rec.meta.stem(), errors[i]});
      continue;
    }
    const auto cls = static_cast<std::int8_t>(rec.class_id);
    cache.records.push_back({rec.id, cls, std::move(*features[i])});
    cache.entries.push_back({rec.id, rec.meta.stem(), rec.meta.patient_id, cls});
  }
  std::sort(cache.records.begin(), cache.records.end(),
            [](const CacheRecord& a, const CacheRecord& b) { return a.id < b.id; });
  if (cache.records.empty()) throw NoUsableData("every recording failed feature extraction");
  spdlog::info("featurized {} recordings ({} failures)", cache.records.size(), cache.failures.size());
  return cache;
}

}  // namespace lung
