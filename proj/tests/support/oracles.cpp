#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace lung::testing {

std::vector<std::vector<double>> reference_cepstra(const std::vector<double>& samples, const MfccConfig& cfg) {
  const double pi = std::numbers::pi;
  const std::size_t len = static_cast<std::size_t>(std::llround(cfg.clip_seconds * cfg.sample_rate));

  std::vector<double> x(len, 0.0);
  for (std::size_t n = 0; n < std::min(len, samples.size()); ++n)
    x[n] = n == 0 ? samples[0] : samples[n] - cfg.pre_emphasis_coeff * samples[n - 1];

  const long half = static_cast<long>(cfg.frame_length / 2);
  auto reflected = [&](long i) {
    const long last = static_cast<long>(len) - 1;
    while (i < 0 || i > last) i = i < 0 ? -i : 2 * last - i;
    return x[static_cast<std::size_t>(i)];
  };

  const std::size_t N = cfg.n_fft;
  const std::size_t bins = N / 2 + 1;
  std::vector<double> cos_t(N), sin_t(N);
  for (std::size_t m = 0; m < N; ++m) {
    cos_t[m] = std::cos(2.0 * pi * static_cast<double>(m) / static_cast<double>(N));
    sin_t[m] = std::sin(2.0 * pi * static_cast<double>(m) / static_cast<double>(N));
  }

  // Filter corner bins on the HTK mel scale.
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : cfg.sample_rate / 2.0;
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t M = cfg.n_mel_filters;
  std::vector<long> corner(M + 2);
  for (std::size_t i = 0; i < M + 2; ++i) {
    const double m = mel(cfg.fmin) + (mel(fmax) - mel(cfg.fmin)) * static_cast<double>(i) / static_cast<double>(M + 1);
    corner[i] = std::min<long>(static_cast<long>(std::floor((N + 1) * hz(m) / cfg.sample_rate)), static_cast<long>(N / 2));
  }
  auto tri = [&](std::size_t f, long k) {
    const long l = corner[f], c = corner[f + 1], r = corner[f + 2];
    if (k < l || k > r) return 0.0;
    if (k <= c) return static_cast<double>(k - l) / static_cast<double>(c - l);
    return static_cast<double>(r - k) / static_cast<double>(r - c);
  };

  const std::size_t frames = 1 + len / cfg.hop_length;
  std::vector<std::vector<double>> out(cfg.n_coefficients, std::vector<double>(frames, 0.0));
  std::vector<double> frame(cfg.frame_length), power(bins), logmel(M);
  for (std::size_t f = 0; f < frames; ++f) {
    bool silent = true;
    for (std::size_t n = 0; n < cfg.frame_length; ++n) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(n) / static_cast<double>(cfg.frame_length - 1));
      frame[n] = reflected(static_cast<long>(f * cfg.hop_length + n) - half) * w;
      silent = silent && frame[n] == 0.0;
    }
    for (std::size_t k = 0; k < bins; ++k) {
      if (silent) {
        power[k] = 0.0;
        continue;
      }
      double re = 0.0, im = 0.0;
      for (std::size_t n = 0; n < cfg.frame_length; ++n) {
        const std::size_t idx = (k * n) % N;
        re += frame[n] * cos_t[idx];
        im -= frame[n] * sin_t[idx];
      }
      power[k] = re * re + im * im;
    }
    for (std::size_t m = 0; m < M; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += tri(m, static_cast<long>(k)) * power[k];
      logmel[m] = std::log(std::max(e, cfg.log_floor));
    }
    for (std::size_t q = 0; q < cfg.n_coefficients; ++q) {
      double acc = 0.0;
      for (std::size_t m = 0; m < M; ++m)
        acc += logmel[m] * std::cos(pi * static_cast<double>(q) * (2.0 * static_cast<double>(m) + 1.0) / (2.0 * M));
      out[q][f] = acc * std::sqrt((q == 0 ? 1.0 : 2.0) / static_cast<double>(M));
    }
  }
  return out;
}

BasicTensor<double> reference_conv(const BasicTensor<double>& x, const BasicTensor<double>& kernel,
                                   const BasicTensor<double>& bias) {
  const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2), cout = kernel.dim(3);
  BasicTensor<double> y({h - 1, w - 1, cout});
  for (std::size_t i = 0; i + 1 < h; ++i)
    for (std::size_t j = 0; j + 1 < w; ++j)
      for (std::size_t q = 0; q < cout; ++q) {
        double acc = bias[q];
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj)
            for (std::size_t c = 0; c < cin; ++c)
              acc += x[((i + di) * w + (j + dj)) * cin + c] * kernel[((di * 2 + dj) * cin + c) * cout + q];
        y[(i * (w - 1) + j) * cout + q] = acc;
      }
  return y;
}

BasicTensor<double> reference_maxpool(const BasicTensor<double>& x) {
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  BasicTensor<double> y({h / 2, w / 2, c});
  for (std::size_t i = 0; i < h / 2; ++i)
    for (std::size_t j = 0; j < w / 2; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = x[((2 * i) * w + 2 * j) * c + ch];
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj) best = std::max(best, x[((2 * i + di) * w + 2 * j + dj) * c + ch]);
        y[(i * (w / 2) + j) * c + ch] = best;
      }
  return y;
}

}  // namespace lung::testing
