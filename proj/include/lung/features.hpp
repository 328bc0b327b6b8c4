#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lung/audio_io.hpp"
#include "lung/hashing.hpp"
#include "lung/matrix.hpp"

namespace lung {

/// Front-end parameters of the MFCC chain. Defaults give 40 x 862 matrices
/// for 20 s clips at 22050 Hz.
struct MfccConfig {
  double pre_emphasis_coeff = 0.97;
  std::size_t frame_length = 2048;
  std::size_t hop_length = 512;
  std::size_t n_fft = 2048;
  std::size_t n_mel_filters = 128;
  std::size_t n_coefficients = 40;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means sample_rate / 2
  std::size_t target_frames = 862;
  double clip_seconds = 20.0;
  double log_floor = 1e-10;
  int sample_rate = kWorkingSampleRate;

  double effective_fmax() const { return fmax > 0.0 ? fmax : sample_rate / 2.0; }
  std::size_t clip_samples() const;

  /// Throws InvalidConfig on any broken invariant.
  void validate() const;

  /// Canonical text form; the config hash is the SHA-256 of this string.
  std::string canonical() const;
  Sha256Digest hash() const { return sha256(canonical()); }

  bool operator==(const MfccConfig&) const = default;
};

/// Model input: n_coefficients x target_frames, single precision.
using MfccMatrix = Matrix<float>;

/// Cepstra before pad/truncate, double precision (n_coefficients x frames).
using CepstralGrid = Matrix<double>;

std::vector<double> pre_emphasize(std::span<const double> samples, double coeff);

/// w[n] = 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> hamming_window(std::size_t length);

/// Reflect-pads by frame_length/2 on both sides and cuts Hamming-windowed
/// frames every hop_length samples. Result is (1 + len/hop) x frame_length.
Matrix<double> frame_and_window(std::span<const double> samples, const MfccConfig& cfg);

/// |DFT|^2 for bins 0..n_fft/2 of a zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters stored sparsely: filter m covers bins
/// [first_bin[m], first_bin[m] + weights[m].size()).
struct MelFilterbank {
  std::size_t n_bins = 0;
  std::vector<std::size_t> first_bin;
  std::vector<std::vector<double>> weights;

  std::size_t size() const { return weights.size(); }
  Matrix<double> dense() const;
  /// Filter energies for one power spectrum.
  void apply(std::span<const double> spectrum, std::span<double> energies) const;
};

MelFilterbank mel_filterbank(const MfccConfig& cfg, int sample_rate);

/// Rows 0..n_coefficients-1 of the orthonormal DCT-II of size n_inputs.
Matrix<double> dct2_matrix(std::size_t n_coefficients, std::size_t n_inputs);

template <typename T>
Matrix<T> pad_or_truncate(const Matrix<T>& frames, std::size_t target) {
  Matrix<T> out(frames.rows, target, T{});
  const std::size_t keep = std::min(frames.cols, target);
  for (std::size_t r = 0; r < frames.rows; ++r)
    for (std::size_t c = 0; c < keep; ++c) out(r, c) = frames(r, c);
  return out;
}

/// Reusable extractor: window, filterbank, DCT and FFT plan are built once.
/// One instance per thread.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg);
  ~MfccExtractor();
  MfccExtractor(const MfccExtractor&) = delete;
  MfccExtractor& operator=(const MfccExtractor&) = delete;

  const MfccConfig& config() const { return cfg_; }

  /// Full chain up to the DCT, after fitting the waveform to clip_seconds.
  CepstralGrid cepstra(const AudioClip& clip) const;

  /// cepstra() padded or truncated to target_frames, narrowed to float.
  MfccMatrix extract(const AudioClip& clip) const;

 private:
  struct Fft;
  MfccConfig cfg_;
  MelFilterbank filterbank_;
  Matrix<double> dct_;
  std::unique_ptr<Fft> fft_;
};

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& cfg);

}  // namespace lung
