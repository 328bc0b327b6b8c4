#include "lung/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "lung/errors.hpp"

namespace lung {
namespace {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> reflect_pad(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n < 2) throw SignalTooShort("need at least 2 samples, got " + std::to_string(n));
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::vector<double> out(n + 2 * pad);
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::ptrdiff_t s = static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(pad);
    s %= period;
    if (s < 0) s += period;
    if (s >= static_cast<std::ptrdiff_t>(n)) s = period - s;
    out[p] = x[static_cast<std::size_t>(s)];
  }
  return out;
}

std::size_t frame_count(std::size_t n_samples, std::size_t hop) { return 1 + n_samples / hop; }

}  // namespace

std::size_t MfccConfig::clip_samples() const {
  return static_cast<std::size_t>(std::llround(clip_seconds * sample_rate));
}

void MfccConfig::validate() const {
  auto fail = [](const std::string& why) { throw InvalidConfig(why); };
  if (!(pre_emphasis_coeff >= 0.0 && pre_emphasis_coeff < 1.0)) fail("pre_emphasis_coeff must be in [0, 1)");
  if (hop_length == 0 || hop_length > frame_length) fail("need 0 < hop_length <= frame_length");
  if (frame_length > n_fft) fail("frame_length must not exceed n_fft");
  if (n_coefficients == 0 || n_coefficients > n_mel_filters) fail("need 0 < n_coefficients <= n_mel_filters");
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (!(fmin >= 0.0 && fmin < effective_fmax())) fail("need 0 <= fmin < fmax");
  if (effective_fmax() > sample_rate / 2.0) fail("fmax must not exceed the Nyquist frequency");
  if (target_frames == 0) fail("target_frames must be positive");
  if (!(clip_seconds > 0.0)) fail("clip_seconds must be positive");
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
}

std::string MfccConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "mfcc/v1"
     << ";pre_emphasis=" << pre_emphasis_coeff << ";frame_length=" << frame_length
     << ";hop_length=" << hop_length << ";n_fft=" << n_fft << ";n_mel=" << n_mel_filters
     << ";n_coeff=" << n_coefficients << ";fmin=" << fmin << ";fmax=" << effective_fmax()
     << ";target_frames=" << target_frames << ";clip_seconds=" << clip_seconds
     << ";log_floor=" << log_floor << ";sample_rate=" << sample_rate;
  return os.str();
}

std::vector<double> pre_emphasize(std::span<const double> samples, double coeff) {
  std::vector<double> out(samples.size());
  if (samples.empty()) return out;
  out[0] = samples[0];
  for (std::size_t n = 1; n < samples.size(); ++n) out[n] = samples[n] - coeff * samples[n - 1];
  return out;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  return w;
}

Matrix<double> frame_and_window(std::span<const double> samples, const MfccConfig& cfg) {
  const std::size_t half = cfg.frame_length / 2;
  const auto padded = reflect_pad(samples, half);
  const auto window = hamming_window(cfg.frame_length);
  const std::size_t n_frames = frame_count(samples.size(), cfg.hop_length);
  Matrix<double> frames(n_frames, cfg.frame_length);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = padded.data() + f * cfg.hop_length;
    double* dst = frames.row(f);
    for (std::size_t n = 0; n < cfg.frame_length; ++n) dst[n] = src[n] * window[n];
  }
  return frames;
}

struct MfccExtractor::Fft {
  std::size_t n_fft;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Fft(std::size_t n) : n_fft(n) {
    std::lock_guard lock(fftw_planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  // Writes |X_k|^2 for k = 0..n/2. `frame` is zero-padded to n.
  void power(std::span<const double> frame, std::span<double> spectrum) const {
    std::fill(in, in + n_fft, 0.0);
    std::copy(frame.begin(), frame.end(), in);
    fftw_execute_dft_r2c(plan, in, out);
    for (std::size_t k = 0; k <= n_fft / 2; ++k)
      spectrum[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
};

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (frame.size() > n_fft) throw InvalidConfig("frame longer than n_fft");
  std::vector<double> buf(n_fft, 0.0);
  std::copy(frame.begin(), frame.end(), buf.begin());
  std::vector<fftw_complex> out(n_fft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), buf.data(), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> spectrum(out.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    spectrum[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  return spectrum;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix<double> MelFilterbank::dense() const {
  Matrix<double> m(size(), n_bins, 0.0);
  for (std::size_t f = 0; f < size(); ++f)
    for (std::size_t i = 0; i < weights[f].size(); ++i) m(f, first_bin[f] + i) = weights[f][i];
  return m;
}

void MelFilterbank::apply(std::span<const double> spectrum, std::span<double> energies) const {
  for (std::size_t f = 0; f < size(); ++f) {
    const double* s = spectrum.data() + first_bin[f];
    const auto& w = weights[f];
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * s[i];
    energies[f] = acc;
  }
}

MelFilterbank mel_filterbank(const MfccConfig& cfg, int sample_rate) {
  MfccConfig local = cfg;
  local.sample_rate = sample_rate;
  local.validate();

  const std::size_t n_points = cfg.n_mel_filters + 2;
  const double mel_lo = hz_to_mel(local.fmin);
  const double mel_hi = hz_to_mel(local.effective_fmax());
  std::vector<std::size_t> bins(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    const double hz = mel_to_hz(mel);
    bins[i] = static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n_fft + 1) * hz / sample_rate));
    bins[i] = std::min(bins[i], cfg.n_fft / 2);
  }

  MelFilterbank bank;
  bank.n_bins = cfg.n_fft / 2 + 1;
  bank.first_bin.resize(cfg.n_mel_filters);
  bank.weights.resize(cfg.n_mel_filters);
  for (std::size_t m = 0; m < cfg.n_mel_filters; ++m) {
    const std::size_t left = bins[m], centre = bins[m + 1], right = bins[m + 2];
    if (left >= centre || centre >= right) throw DegenerateFilter(m);
    bank.first_bin[m] = left;
    auto& w = bank.weights[m];
    w.resize(right - left + 1);
    for (std::size_t k = left; k <= right; ++k) {
      w[k - left] = k <= centre
                        ? static_cast<double>(k - left) / static_cast<double>(centre - left)
                        : static_cast<double>(right - k) / static_cast<double>(right - centre);
    }
  }
  return bank;
}

Matrix<double> dct2_matrix(std::size_t n_coefficients, std::size_t n_inputs) {
  Matrix<double> d(n_coefficients, n_inputs);
  const double n = static_cast<double>(n_inputs);
  for (std::size_t k = 0; k < n_coefficients; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t m = 0; m < n_inputs; ++m)
      d(k, m) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                 (static_cast<double>(m) + 0.5) / n);
  }
  return d;
}

MfccExtractor::MfccExtractor(const MfccConfig& cfg)
    : cfg_(cfg),
      filterbank_(mel_filterbank(cfg, cfg.sample_rate)),
      dct_(dct2_matrix(cfg.n_coefficients, cfg.n_mel_filters)),
      fft_(std::make_unique<Fft>(cfg.n_fft)) {}

MfccExtractor::~MfccExtractor() = default;

CepstralGrid MfccExtractor::cepstra(const AudioClip& clip) const {
  if (clip.sample_rate != cfg_.sample_rate)
    throw InvalidConfig("clip is at " + std::to_string(clip.sample_rate) + " Hz, extractor expects " +
                        std::to_string(cfg_.sample_rate) + " Hz");
  auto signal = pre_emphasize(clip.samples, cfg_.pre_emphasis_coeff);
  signal.resize(cfg_.clip_samples(), 0.0);

  const auto padded = reflect_pad(signal, cfg_.frame_length / 2);
  const auto window = hamming_window(cfg_.frame_length);
  const std::size_t n_frames = frame_count(signal.size(), cfg_.hop_length);

  std::vector<double> frame(cfg_.frame_length);
  std::vector<double> spectrum(cfg_.n_fft / 2 + 1);
  std::vector<double> log_energy(cfg_.n_mel_filters);
  CepstralGrid out(cfg_.n_coefficients, n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = padded.data() + f * cfg_.hop_length;
    for (std::size_t n = 0; n < cfg_.frame_length; ++n) frame[n] = src[n] * window[n];
    fft_->power(frame, spectrum);
    filterbank_.apply(spectrum, log_energy);
    for (double& e : log_energy) e = std::log(std::max(e, cfg_.log_floor));
    for (std::size_t k = 0; k < cfg_.n_coefficients; ++k) {
      const double* d = dct_.row(k);
      double acc = 0.0;
      for (std::size_t m = 0; m < cfg_.n_mel_filters; ++m) acc += d[m] * log_energy[m];
      out(k, f) = acc;
    }
  }
  return out;
}

MfccMatrix MfccExtractor::extract(const AudioClip& clip) const {
  const auto grid = pad_or_truncate(cepstra(clip), cfg_.target_frames);
  MfccMatrix out(grid.rows, grid.cols);
  for (std::size_t i = 0; i < grid.data.size(); ++i) out.data[i] = static_cast<float>(grid.data[i]);
  return out;
}

MfccMatrix extract_mfcc(const AudioClip& clip, const MfccConfig& cfg) {
  return MfccExtractor(cfg).extract(clip);
}

}  // namespace lung
