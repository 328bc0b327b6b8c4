#pragma once

#include <cstdint>
#include <span>

#include "lung/network.hpp"

namespace lung {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over a flat parameter vector.
/// `step` is the 1-based step number after incrementing.
template <typename Real>
void adam_update(std::span<Real> params, std::span<const Real> grads, std::span<Real> m,
                 std::span<Real> v, std::uint64_t step, const AdamConfig& cfg);

template <typename Real>
struct AdamState {
  ModelParams<Real> m;
  ModelParams<Real> v;
  std::uint64_t step = 0;

  static AdamState fresh(const Architecture& arch) {
    return {ModelParams<Real>::zeros(arch), ModelParams<Real>::zeros(arch), 0};
  }
};

/// Applies one Adam update to every tensor and bumps params.version.
template <typename Real>
void adam_step(ModelParams<Real>& params, const ModelParams<Real>& grads, AdamState<Real>& state,
               const AdamConfig& cfg);

}  // namespace lung
