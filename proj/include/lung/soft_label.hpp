#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace lung {

inline constexpr std::size_t kNumClasses = 6;

/// Probability vector over the six diagnosis classes.
struct SoftLabel {
  std::array<double, kNumClasses> probs{};

  static SoftLabel one_hot(std::size_t cls) {
    SoftLabel y;
    y.probs.at(cls) = 1.0;
    return y;
  }
  static SoftLabel uniform() {
    SoftLabel y;
    y.probs.fill(1.0 / kNumClasses);
    return y;
  }

  double& operator[](std::size_t i) { return probs[i]; }
  double operator[](std::size_t i) const { return probs[i]; }

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  /// Componentwise in [0, 1] and summing to 1 within `tol`.
  bool valid(double tol = 1e-6) const {
    for (double p : probs)
      if (!(p >= 0.0 && p <= 1.0)) return false;
    return std::abs(sum() - 1.0) <= tol;
  }

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  /// Shannon entropy in nats.
  double entropy() const {
    double h = 0.0;
    for (double p : probs)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  }

  bool operator==(const SoftLabel&) const = default;
};

}  // namespace lung
