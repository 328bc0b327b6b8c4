#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lung {

/// Sample rate every recording is brought to before feature extraction.
inline constexpr int kWorkingSampleRate = 22050;

/// Mono waveform with amplitudes in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class WavEncoding : std::uint16_t {
  Pcm16 = 16,
  Float32 = 32,
};

/// Decodes a RIFF/WAVE file. Accepts PCM 8/16/24/32-bit and IEEE float32
/// (including WAVE_FORMAT_EXTENSIBLE wrappers of those), averaging channels.
AudioClip load_wav(const std::filesystem::path& path);

/// Same as load_wav but reads from an in-memory image of the file.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

/// Writes a mono clip. Samples are clamped to [-1, 1] before quantization.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::Pcm16);

/// Linear-interpolation resampler. Output length is round(n * target / source);
/// equal rates return the clip unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace lung
