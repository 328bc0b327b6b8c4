#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "lung/dataset.hpp"
#include "lung/rng.hpp"

namespace lung::testing {
namespace {

struct Tone {
  double freq;
  double amp;
};

struct Recipe {
  std::vector<Tone> tones;
  double noise = 0.02;
  double am_rate = 0.0;     // amplitude modulation in Hz, 0 = none
  double chirp_to = 0.0;    // end frequency of a linear chirp on the first tone
  bool noise_bursts = false;
};

Recipe recipe_for(std::size_t class_id) {
  switch (class_id) {
    case 0: return {{{300.0, 0.5}}, 0.02};
    case 1: return {{{600.0, 0.4}, {1200.0, 0.25}}, 0.02};
    case 2: return {{{150.0, 0.3}}, 0.15, 0.0, 0.0, true};
    case 3: return {{{900.0, 0.5}}, 0.02, 2.0};
    case 4: return {{{400.0, 0.45}}, 0.03, 0.0, 1600.0};
    default: return {{{1500.0, 0.3}, {2500.0, 0.3}}, 0.06};
  }
}

const char* kLocations[] = {"Al", "Ar", "Pl", "Pr", "Ll", "Lr", "Tc"};
const char* kEquipment[] = {"Meditron", "LittC2SE", "Litt3200", "AKGC417L"};

}  // namespace

AudioClip synthesize_clip(std::size_t class_id, const SyntheticOptions& opts, std::uint64_t clip_seed) {
  Rng rng(clip_seed);
  std::uniform_real_distribution<double> jitter(0.97, 1.03);
  std::uniform_real_distribution<double> gain(0.6, 1.4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Recipe r = recipe_for(class_id);
  for (auto& t : r.tones) {
    t.freq *= jitter(rng);
    t.amp *= gain(rng);
  }
  const double noise = r.noise * gain(rng);
  const double chirp_end = r.chirp_to * jitter(rng);
  std::vector<double> phases;
  for (std::size_t i = 0; i < r.tones.size(); ++i) phases.push_back(phase(rng));
  const double am_phase = phase(rng);

  const auto n = static_cast<std::size_t>(std::llround(opts.seconds * opts.sample_rate));
  AudioClip clip;
  clip.sample_rate = opts.sample_rate;
  clip.samples.resize(n);
  const double sr = opts.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double v = 0.0;
    for (std::size_t k = 0; k < r.tones.size(); ++k) {
      double arg = 2.0 * std::numbers::pi * r.tones[k].freq * t + phases[k];
      if (k == 0 && chirp_end > 0.0)
        arg = 2.0 * std::numbers::pi * (r.tones[k].freq * t + 0.5 * (chirp_end - r.tones[k].freq) / opts.seconds * t * t) +
              phases[k];
      v += r.tones[k].amp * std::sin(arg);
    }
    if (r.am_rate > 0.0) v *= 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * r.am_rate * t + am_phase));
    double nz = noise * gauss(rng);
    if (r.noise_bursts) nz *= std::fmod(t, 1.0) < 0.4 ? 2.0 : 0.3;
    clip.samples[i] = std::clamp(v + nz, -1.0, 1.0);
  }
  return clip;
}

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& root, const SyntheticOptions& opts) {
  namespace fs = std::filesystem;
  SyntheticCorpus corpus;
  corpus.audio_dir = root / "audio";
  corpus.diagnosis_csv = root / "diagnosis.csv";
  fs::create_directories(corpus.audio_dir);

  std::ofstream csv(corpus.diagnosis_csv);
  csv << "patient_id,diagnosis\n";
  const std::size_t per_patient = std::max<std::size_t>(1, opts.recordings_per_patient);
  int pid = 101;
  auto write_one = [&](int patient, std::size_t index, std::size_t class_id, std::uint64_t seed) {
    RecordingMeta meta;
    meta.patient_id = patient;
    meta.recording_index = std::to_string(index + 1) + "b1";
    meta.chest_location = kLocations[index % 7];
    meta.acquisition_mode = index % 2 == 0 ? "sc" : "mc";
    meta.equipment = kEquipment[static_cast<std::size_t>(patient) % 4];
    write_wav(corpus.audio_dir / (meta.stem() + ".wav"), synthesize_clip(class_id, opts, seed));
    if (opts.add_annotation_files) {
      std::ofstream txt(corpus.audio_dir / (meta.stem() + ".txt"));
      txt << "0.036\t0.579\t0\t0\n0.579\t2.450\t0\t1\n";
    }
  };

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < opts.per_class; i += per_patient, ++pid) {
      csv << pid << ',' << kClassNames[c] << '\n';
      for (std::size_t k = i; k < std::min(opts.per_class, i + per_patient); ++k) {
        write_one(pid, k - i, c, opts.seed * 1000003ULL + c * 10007ULL + k);
        ++corpus.recordings;
      }
    }
  }
  if (opts.add_excluded_patient) {
    csv << pid << ",Asthma\n";
    write_one(pid, 0, 0, opts.seed + 99);
    write_one(pid, 1, 3, opts.seed + 98);
  }
  return corpus;
}

MfccConfig synthetic_mfcc_config(double seconds) {
  MfccConfig cfg;
  cfg.clip_seconds = seconds;
  cfg.target_frames = 1 + cfg.clip_samples() / cfg.hop_length;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("lung_ssl_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace lung::testing
