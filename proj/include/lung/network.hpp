#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lung/features.hpp"
#include "lung/rng.hpp"
#include "lung/soft_label.hpp"
#include "lung/tensor.hpp"

namespace lung {

/// Conv stack topology: one (2x2 conv -> ReLU -> 2x2/2 max-pool -> dropout)
/// block per entry of `channels`, then global average pooling and a dense
/// layer onto the six classes.
struct Architecture {
  std::size_t input_height = 40;
  std::size_t input_width = 862;
  std::vector<std::size_t> channels{16, 32, 64, 128};
  double dropout_rate = 0.2;

  static Architecture standard() { return {}; }

  /// 8 x 16 input, two blocks. Small enough for exhaustive finite differences.
  static Architecture shrunken() { return {8, 16, {3, 4}, 0.2}; }

  std::size_t blocks() const { return channels.size(); }

  /// (H, W, C) after the input and after every conv and pool, in order.
  std::vector<std::array<std::size_t, 3>> activation_shapes() const;

  std::size_t parameter_count() const;

  /// Throws ShapeMismatch when some block would see an extent below 2.
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// Parameters and, with the same shape, gradients / optimizer moments.
template <typename Real>
struct ModelParams {
  Architecture arch;
  std::vector<BasicTensor<Real>> conv_kernels;  // (2, 2, Cin, Cout)
  std::vector<BasicTensor<Real>> conv_biases;   // (Cout)
  BasicTensor<Real> dense_weights;              // (C_last, 6)
  BasicTensor<Real> dense_bias;                 // (6)

  /// Bumped by every optimizer update; forward traces record it.
  std::uint64_t version = 0;

  /// All-zero tensors with the shapes implied by `arch`.
  static ModelParams zeros(const Architecture& arch);

  std::vector<BasicTensor<Real>*> tensors();
  std::vector<const BasicTensor<Real>*> tensors() const;
  static std::vector<std::string> tensor_names(const Architecture& arch);

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();

  template <typename Other>
  ModelParams<Other> cast() const;

  /// Bitwise equality of every tensor (version ignored).
  bool same_values(const ModelParams& other) const;
};

template <typename Real>
struct BlockTrace {
  BasicTensor<Real> conv_out;            // post-ReLU, (H-1, W-1, C)
  std::vector<std::uint32_t> argmax;     // per pooled element, index into conv_out
  std::vector<Real> dropout_scale;       // 0 or 1/(1-rate); empty outside training
  BasicTensor<Real> output;              // pooled, after dropout
};

/// Everything backward() needs from one forward pass.
template <typename Real>
struct ForwardTrace {
  const ModelParams<Real>* params = nullptr;
  std::uint64_t params_version = 0;
  bool training = false;
  BasicTensor<Real> input;
  std::vector<BlockTrace<Real>> blocks;
  std::vector<Real> pooled;  // global average pool, length C_last
  std::array<double, kNumClasses> logits{};
  SoftLabel probs;
};

enum class LossKind { CrossEntropy, SquaredError };

template <typename Real>
BasicTensor<Real> to_input(const MfccMatrix& m);

template <typename Real>
ModelParams<Real> init_params(const Architecture& arch, Rng& rng);

/// `rng` feeds dropout and may be null when `training` is false.
template <typename Real>
ForwardTrace<Real> forward(const ModelParams<Real>& params, const BasicTensor<Real>& input,
                           bool training, Rng* rng);

/// Inference-mode class probabilities.
template <typename Real>
SoftLabel predict(const ModelParams<Real>& params, const BasicTensor<Real>& input) {
  return forward(params, input, false, nullptr).probs;
}

double loss_value(const SoftLabel& probs, const SoftLabel& target, LossKind kind);

/// Adds weight * dLoss/dparams into `grads` and returns the unweighted loss.
/// Throws StaleTrace when `trace` came from other (or since-updated) params.
template <typename Real>
double backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                const SoftLabel& target, LossKind kind, Real weight, ModelParams<Real>& grads);

template <typename Real>
struct LossAndGrads {
  double loss = 0.0;
  ModelParams<Real> grads;
};

template <typename Real>
LossAndGrads<Real> loss_and_backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                                     const SoftLabel& target, LossKind kind);

// Layer primitives over (H, W, C) tensors. Exposed for tests and reuse.
template <typename Real>
BasicTensor<Real> conv2d(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel,
                         const BasicTensor<Real>& bias);

template <typename Real>
BasicTensor<Real> relu(const BasicTensor<Real>& x);

/// Zeroes grad where the ReLU output was not positive.
template <typename Real>
BasicTensor<Real> relu_backward(const BasicTensor<Real>& output, const BasicTensor<Real>& grad);

template <typename Real>
std::pair<BasicTensor<Real>, std::vector<std::uint32_t>> maxpool2d(const BasicTensor<Real>& x);

template <typename Real>
BasicTensor<Real> maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                                     const std::vector<std::uint32_t>& argmax,
                                     const BasicTensor<Real>& grad);

template <typename Real>
std::vector<Real> global_avg_pool(const BasicTensor<Real>& x);

template <typename Real>
std::array<double, kNumClasses> dense(std::span<const Real> x, const BasicTensor<Real>& weights,
                                      const BasicTensor<Real>& bias);

SoftLabel softmax(const std::array<double, kNumClasses>& logits);

/// Inverted dropout. In training every element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); the returned mask holds the
/// per-element factor. Outside training the input is returned untouched with an
/// empty mask.
template <typename Real>
std::pair<BasicTensor<Real>, std::vector<Real>> dropout(const BasicTensor<Real>& x, double rate,
                                                        Rng* rng, bool training);

}  // namespace lung
