#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "lung/errors.hpp"
#include "lung/features.hpp"
#include "oracles.hpp"

using namespace lung;

namespace {

std::vector<double> naive_power(const std::vector<double>& x, std::size_t n_fft) {
  std::vector<double> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
      acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(n) / double(n_fft));
    out[k] = std::norm(acc);
  }
  return out;
}

AudioClip tone(double hz, double seconds, int rate = kWorkingSampleRate) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(0.5 * std::sin(2 * std::numbers::pi * hz * i / rate));
  return c;
}

}  // namespace

TEST_CASE("pre-emphasis") {
  CHECK(pre_emphasize(std::vector<double>(5, 0.0), 0.97) == std::vector<double>(5, 0.0));
  const auto y = pre_emphasize(std::vector<double>(4, 2.0), 0.97);
  CHECK(y[0] == 2.0);
  for (std::size_t i = 1; i < 4; ++i) CHECK(y[i] == doctest::Approx(0.06));
  const std::vector<double> x{0.1, -0.4, 0.9};
  CHECK(pre_emphasize(x, 0.0) == x);
}

TEST_CASE("framing and Hamming window") {
  MfccConfig cfg;
  CHECK(frame_and_window(std::vector<double>(441000, 0.0), cfg).rows == 862);

  const auto w = hamming_window(2048);
  CHECK(w.front() == doctest::Approx(0.08));
  CHECK(w.back() == doctest::Approx(0.08));
  CHECK(hamming_window(7)[0] == doctest::Approx(0.08));

  MfccConfig small;
  small.frame_length = 8;
  small.hop_length = 4;
  small.n_fft = 8;
  const auto frames = frame_and_window(std::vector<double>(20, 1.0), small);
  CHECK(frames.rows == 6);
  const auto w8 = hamming_window(8);
  for (std::size_t f = 0; f < frames.rows; ++f)
    for (std::size_t n = 0; n < 8; ++n) CHECK(frames(f, n) == w8[n]);

  CHECK_THROWS_AS(frame_and_window(std::vector<double>{1.0}, cfg), SignalTooShort);
}

TEST_CASE("reflection padding mirrors without repeating the edge sample") {
  MfccConfig cfg;
  cfg.frame_length = 4;
  cfg.hop_length = 1;
  cfg.n_fft = 4;
  // padded = [x2, x1, x0, x1, x2, x3, x2, x1]; first frame = [x2, x1, x0, x1] * w
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto frames = frame_and_window(x, cfg);
  const auto w = hamming_window(4);
  CHECK(frames(0, 0) == doctest::Approx(3.0 * w[0]));
  CHECK(frames(0, 1) == doctest::Approx(2.0 * w[1]));
  CHECK(frames(0, 2) == doctest::Approx(1.0 * w[2]));
  CHECK(frames(4, 3) == doctest::Approx(2.0 * w[3]));
}

TEST_CASE("power spectrum against a naive DFT") {
  CHECK(power_spectrum(std::vector<double>(64, 0.0), 64) == std::vector<double>(33, 0.0));

  const std::size_t n = 256, k0 = 19;
  std::vector<double> cosine(n);
  for (std::size_t i = 0; i < n; ++i) cosine[i] = std::cos(2 * std::numbers::pi * k0 * i / n);
  const auto p = power_spectrum(cosine, n);
  CHECK(p[k0] == doctest::Approx(std::pow(n / 2.0, 2)).epsilon(1e-9));
  for (std::size_t k = 0; k < p.size(); ++k)
    if (k != k0) CHECK(p[k] < 1e-12 * p[k0] + 1e-12);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(200);
    for (auto& v : x) v = g(rng);
    const auto fast = power_spectrum(x, 256);
    const auto slow = naive_power(x, 256);
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-6).scale(1.0));

    // Parseval over the one-sided spectrum.
    double energy = 0.0;
    for (double v : x) energy += v * v;
    double spec = fast.front() + fast.back();
    for (std::size_t k = 1; k + 1 < fast.size(); ++k) spec += 2 * fast[k];
    CHECK(spec / 256.0 == doctest::Approx(energy).epsilon(1e-6));
  }
}

TEST_CASE("mel scale and filterbank") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-5));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));

  MfccConfig cfg;
  const auto bank = mel_filterbank(cfg, cfg.sample_rate);
  const auto dense = bank.dense();
  REQUIRE(dense.rows == 128);
  REQUIRE(dense.cols == 1025);
  for (std::size_t m = 0; m < dense.rows; ++m) {
    double peak = 0.0;
    std::size_t peak_at = 0, first = dense.cols, last = 0;
    for (std::size_t k = 0; k < dense.cols; ++k) {
      const double v = dense(m, k);
      CHECK(v >= 0.0);
      if (v > 0.0) {
        first = std::min(first, k);
        last = k;
      }
      if (v > peak) {
        peak = v;
        peak_at = k;
      }
    }
    CHECK(peak == 1.0);
    // unimodal: non-decreasing to the peak, non-increasing after
    for (std::size_t k = first; k < peak_at; ++k) CHECK(dense(m, k) <= dense(m, k + 1));
    for (std::size_t k = peak_at; k < last; ++k) CHECK(dense(m, k) >= dense(m, k + 1));
    for (std::size_t k = first; k <= last; ++k) CHECK(dense(m, k) > 0.0 - 1e-300);
  }

  MfccConfig crowded;
  crowded.n_fft = 256;
  crowded.frame_length = 256;
  crowded.hop_length = 128;
  bool threw = false;
  try {
    mel_filterbank(crowded, crowded.sample_rate);
  } catch (const DegenerateFilter& e) {
    threw = true;
    CHECK(e.filter_index() < crowded.n_mel_filters);
  }
  CHECK(threw);
}

TEST_CASE("DCT rows are orthonormal") {
  const auto d = dct2_matrix(40, 128);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      double dot = 0.0;
      for (std::size_t m = 0; m < 128; ++m) dot += d(i, m) * d(j, m);
      CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("pad_or_truncate") {
  Matrix<double> m(2, 900, 1.0);
  CHECK(pad_or_truncate(m, 862).cols == 862);
  Matrix<double> same(2, 862, 3.0);
  CHECK(pad_or_truncate(same, 862) == same);
  Matrix<double> shortm(2, 100, 2.0);
  const auto p = pad_or_truncate(shortm, 862);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 862; ++c) CHECK(p(r, c) == (c < 100 ? 2.0 : 0.0));
}

TEST_CASE("extract_mfcc shape, silence and oracle agreement") {
  MfccConfig cfg;
  MfccExtractor ex(cfg);

  const auto full = ex.extract(tone(440.0, 20.0));
  CHECK(full.rows == 40);
  CHECK(full.cols == 862);
  for (float v : full.data) CHECK(std::isfinite(v));

  AudioClip silence{std::vector<double>(cfg.clip_samples(), 0.0), cfg.sample_rate};
  const auto s = ex.extract(silence);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 1; c < s.cols; ++c) CHECK(s(r, c) == s(r, 0));

  const auto clip = tone(440.0, 1.0);
  const auto grid = ex.cepstra(clip);
  const auto ref = testing::reference_cepstra(clip.samples, cfg);
  double worst = 0.0;
  for (std::size_t q = 0; q < grid.rows; ++q)
    for (std::size_t f = 0; f < grid.cols; ++f) worst = std::max(worst, std::fabs(grid(q, f) - ref[q][f]));
  CHECK(worst < 1e-5);

  AudioClip wrong_rate = tone(440.0, 1.0, 44100);
  CHECK_THROWS_AS(ex.extract(wrong_rate), InvalidConfig);
}

TEST_CASE("doubling the amplitude raises coefficient 0 on non-silent frames") {
  MfccConfig cfg;
  cfg.clip_seconds = 2.0;
  cfg.target_frames = 1 + cfg.clip_samples() / cfg.hop_length;
  MfccExtractor ex(cfg);
  auto c = tone(700.0, 2.0);
  auto louder = c;
  for (auto& v : louder.samples) v *= 2.0;
  const auto a = ex.cepstra(c);
  const auto b = ex.cepstra(louder);
  for (std::size_t f = 0; f < a.cols; ++f) CHECK(b(0, f) > a(0, f));
}

TEST_CASE("config validation and hashing") {
  MfccConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  MfccConfig bad = cfg;
  bad.hop_length = 4096;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = cfg;
  bad.n_coefficients = 200;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = cfg;
  bad.pre_emphasis_coeff = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);

  MfccConfig other = cfg;
  other.hop_length = 256;
  CHECK(cfg.hash() != other.hash());
  CHECK(cfg.hash() == MfccConfig{}.hash());
}
