#include "lung/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace lung {
namespace {

constexpr double kProbFloor = 1e-12;

template <typename Real>
void check_hwc(const BasicTensor<Real>& t, const char* what) {
  if (t.rank() != 3) throw ShapeMismatch(std::string(what) + " must be (H, W, C), got " + shape_string(t.shape()));
}

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using ConstMap = Eigen::Map<const RowMat<Real>>;
template <typename Real>
using MutMap = Eigen::Map<RowMat<Real>>;
// Consecutive 2-pixel windows of one HWC row overlap by one pixel, so they
// form a (width - 1) x 2C matrix with row stride C.
template <typename Real>
using WindowMap = Eigen::Map<const RowMat<Real>, 0, Eigen::OuterStride<>>;

// out(i, j, :) = bias + sum_{di} [in(i+di, j, :), in(i+di, j+1, :)] * k(di, :, :, :)
template <typename Real>
void conv_forward_kernel(const Real* in, std::size_t h, std::size_t w, std::size_t cin,
                         const Real* k, const Real* bias, std::size_t cout, Real* out) {
  const auto oh = static_cast<Eigen::Index>(h - 1), ow = static_cast<Eigen::Index>(w - 1);
  const auto span = static_cast<Eigen::Index>(2 * cin), co = static_cast<Eigen::Index>(cout);
  const Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(bias, co);
  for (Eigen::Index i = 0; i < oh; ++i) {
    MutMap<Real> o(out + i * ow * co, ow, co);
    o.rowwise() = b;
    for (Eigen::Index di = 0; di < 2; ++di) {
      WindowMap<Real> x(in + (i + di) * static_cast<Eigen::Index>(w * cin), ow, span,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(cin)));
      ConstMap<Real> kd(k + di * span * co, span, co);
      o.noalias() += x * kd;
    }
  }
}

// Accumulates kernel/bias gradients and, when grad_in is non-null, the input
// gradient.
template <typename Real>
void conv_backward_kernel(const Real* in, std::size_t h, std::size_t w, std::size_t cin,
                          const Real* k, std::size_t cout, const Real* grad_out,
                          Real* grad_k, Real* grad_b, Real* grad_in) {
  const auto oh = static_cast<Eigen::Index>(h - 1), ow = static_cast<Eigen::Index>(w - 1);
  const auto ci = static_cast<Eigen::Index>(cin), co = static_cast<Eigen::Index>(cout);
  const auto span = 2 * ci, row = static_cast<Eigen::Index>(w) * ci;
  for (Eigen::Index i = 0; i < oh; ++i) {
    ConstMap<Real> g(grad_out + i * ow * co, ow, co);
    // Plain loop: Eigen's reductions peel to the buffer's alignment, which
    // would make the summation order depend on the heap address.
    for (Eigen::Index j = 0; j < ow; ++j)
      for (Eigen::Index o = 0; o < co; ++o) grad_b[o] += g(j, o);
    for (Eigen::Index di = 0; di < 2; ++di) {
      WindowMap<Real> x(in + (i + di) * row, ow, span, Eigen::OuterStride<>(ci));
      MutMap<Real> gk(grad_k + di * span * co, span, co);
      gk.noalias() += x.transpose() * g;
      if (grad_in == nullptr) continue;
      for (Eigen::Index dj = 0; dj < 2; ++dj) {
        MutMap<Real> gi(grad_in + (i + di) * row + dj * ci, ow, ci);
        ConstMap<Real> kd(k + (di * 2 + dj) * ci * co, ci, co);
        gi.noalias() += g * kd.transpose();
      }
    }
  }
}

template <typename Real>
void maxpool_kernel(const Real* in, std::size_t h, std::size_t w, std::size_t c, Real* out,
                    std::uint32_t* argmax) {
  const std::size_t ph = h / 2, pw = w / 2;
  for (std::size_t i = 0; i < ph; ++i) {
    for (std::size_t j = 0; j < pw; ++j) {
      const std::size_t base = ((2 * i) * w + 2 * j) * c;
      const std::size_t offsets[4] = {0, c, w * c, w * c + c};
      Real* o = out + (i * pw + j) * c;
      std::uint32_t* a = argmax + (i * pw + j) * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = base + ch;
        Real best_v = in[best];
        for (std::size_t t = 1; t < 4; ++t) {
          const std::size_t idx = base + offsets[t] + ch;
          if (in[idx] > best_v) {
            best_v = in[idx];
            best = idx;
          }
        }
        o[ch] = best_v;
        a[ch] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

std::uint64_t drop_threshold(double rate) {
  // P(u64 < threshold) == rate; u64 is uniform on [0, 2^64).
  return static_cast<std::uint64_t>(std::ldexp(rate, 64) >= 18446744073709551615.0
                                        ? std::numeric_limits<std::uint64_t>::max()
                                        : std::ldexp(rate, 64));
}

}  // namespace

// ---------------------------------------------------------------------------
// Architecture

std::vector<std::array<std::size_t, 3>> Architecture::activation_shapes() const {
  std::vector<std::array<std::size_t, 3>> shapes;
  std::size_t h = input_height, w = input_width, c = 1;
  shapes.push_back({h, w, c});
  for (std::size_t ch : channels) {
    if (h < 2 || w < 2) throw ShapeMismatch("conv input below 2x2");
    h -= 1;
    w -= 1;
    c = ch;
    shapes.push_back({h, w, c});
    if (h < 2 || w < 2) throw ShapeMismatch("pool input below 2x2");
    h /= 2;
    w /= 2;
    shapes.push_back({h, w, c});
  }
  return shapes;
}

void Architecture::validate() const {
  if (channels.empty()) throw ShapeMismatch("architecture needs at least one conv block");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ShapeMismatch("dropout rate must be in [0, 1)");
  (void)activation_shapes();
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0, cin = 1;
  for (std::size_t c : channels) {
    n += 4 * cin * c + c;
    cin = c;
  }
  return n + cin * kNumClasses + kNumClasses;
}

// ---------------------------------------------------------------------------
// ModelParams

template <typename Real>
ModelParams<Real> ModelParams<Real>::zeros(const Architecture& arch) {
  arch.validate();
  ModelParams p;
  p.arch = arch;
  std::size_t cin = 1;
  for (std::size_t c : arch.channels) {
    p.conv_kernels.emplace_back(std::vector<std::size_t>{2, 2, cin, c});
    p.conv_biases.emplace_back(std::vector<std::size_t>{c});
    cin = c;
  }
  p.dense_weights = BasicTensor<Real>({cin, kNumClasses});
  p.dense_bias = BasicTensor<Real>({kNumClasses});
  return p;
}

template <typename Real>
std::vector<BasicTensor<Real>*> ModelParams<Real>::tensors() {
  std::vector<BasicTensor<Real>*> out;
  for (std::size_t b = 0; b < conv_kernels.size(); ++b) {
    out.push_back(&conv_kernels[b]);
    out.push_back(&conv_biases[b]);
  }
  out.push_back(&dense_weights);
  out.push_back(&dense_bias);
  return out;
}

template <typename Real>
std::vector<const BasicTensor<Real>*> ModelParams<Real>::tensors() const {
  std::vector<const BasicTensor<Real>*> out;
  for (std::size_t b = 0; b < conv_kernels.size(); ++b) {
    out.push_back(&conv_kernels[b]);
    out.push_back(&conv_biases[b]);
  }
  out.push_back(&dense_weights);
  out.push_back(&dense_bias);
  return out;
}

template <typename Real>
std::vector<std::string> ModelParams<Real>::tensor_names(const Architecture& arch) {
  std::vector<std::string> names;
  for (std::size_t b = 0; b < arch.channels.size(); ++b) {
    names.push_back("conv" + std::to_string(b + 1) + ".kernel");
    names.push_back("conv" + std::to_string(b + 1) + ".bias");
  }
  names.push_back("dense.weight");
  names.push_back("dense.bias");
  return names;
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

template <typename Real>
bool ModelParams<Real>::all_finite() const {
  for (const auto* t : tensors())
    if (!t->all_finite()) return false;
  return true;
}

template <typename Real>
void ModelParams<Real>::set_zero() {
  for (auto* t : tensors()) t->fill(Real{0});
}

template <typename Real>
template <typename Other>
ModelParams<Other> ModelParams<Real>::cast() const {
  auto out = ModelParams<Other>::zeros(arch);
  auto dst = out.tensors();
  auto src = tensors();
  for (std::size_t t = 0; t < src.size(); ++t)
    for (std::size_t i = 0; i < src[t]->size(); ++i) (*dst[t])[i] = static_cast<Other>((*src[t])[i]);
  return out;
}

template <typename Real>
bool ModelParams<Real>::same_values(const ModelParams& other) const {
  if (!(arch == other.arch)) return false;
  auto a = tensors();
  auto b = other.tensors();
  for (std::size_t t = 0; t < a.size(); ++t)
    if (!(*a[t] == *b[t])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Primitives

template <typename Real>
BasicTensor<Real> to_input(const MfccMatrix& m) {
  BasicTensor<Real> x({m.rows, m.cols, 1});
  for (std::size_t i = 0; i < m.data.size(); ++i) x[i] = static_cast<Real>(m.data[i]);
  return x;
}

template <typename Real>
BasicTensor<Real> conv2d(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel,
                         const BasicTensor<Real>& bias) {
  check_hwc(input, "conv2d input");
  if (kernel.rank() != 4 || kernel.dim(0) != 2 || kernel.dim(1) != 2 || kernel.dim(2) != input.dim(2))
    throw ShapeMismatch("conv2d kernel " + shape_string(kernel.shape()) + " vs input " +
                        shape_string(input.shape()));
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(3)) throw ShapeMismatch("conv2d bias length");
  if (input.dim(0) < 2 || input.dim(1) < 2) throw ShapeMismatch("conv2d input below 2x2");
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2), cout = kernel.dim(3);
  BasicTensor<Real> out({h - 1, w - 1, cout});
  conv_forward_kernel(input.data(), h, w, cin, kernel.data(), bias.data(), cout, out.data());
  return out;
}

template <typename Real>
BasicTensor<Real> relu(const BasicTensor<Real>& x) {
  BasicTensor<Real> y = x;
  for (auto& v : y.values()) v = v > Real{0} ? v : Real{0};
  return y;
}

template <typename Real>
BasicTensor<Real> relu_backward(const BasicTensor<Real>& output, const BasicTensor<Real>& grad) {
  if (!output.same_shape(grad)) throw ShapeMismatch("relu_backward shapes differ");
  BasicTensor<Real> g = grad;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(output[i] > Real{0})) g[i] = Real{0};
  return g;
}

template <typename Real>
std::pair<BasicTensor<Real>, std::vector<std::uint32_t>> maxpool2d(const BasicTensor<Real>& x) {
  check_hwc(x, "maxpool2d input");
  if (x.dim(0) < 2 || x.dim(1) < 2) throw ShapeMismatch("maxpool2d input below 2x2");
  BasicTensor<Real> out({x.dim(0) / 2, x.dim(1) / 2, x.dim(2)});
  std::vector<std::uint32_t> argmax(out.size());
  maxpool_kernel(x.data(), x.dim(0), x.dim(1), x.dim(2), out.data(), argmax.data());
  return {std::move(out), std::move(argmax)};
}

template <typename Real>
BasicTensor<Real> maxpool2d_backward(const std::vector<std::size_t>& input_shape,
                                     const std::vector<std::uint32_t>& argmax,
                                     const BasicTensor<Real>& grad) {
  if (argmax.size() != grad.size()) throw ShapeMismatch("maxpool2d_backward: argmax/grad sizes differ");
  BasicTensor<Real> g(input_shape);
  for (std::size_t i = 0; i < grad.size(); ++i) g[argmax[i]] += grad[i];
  return g;
}

template <typename Real>
std::vector<Real> global_avg_pool(const BasicTensor<Real>& x) {
  check_hwc(x, "global_avg_pool input");
  const std::size_t hw = x.dim(0) * x.dim(1), c = x.dim(2);
  std::vector<double> acc(c, 0.0);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += x[p * c + ch];
  std::vector<Real> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) out[ch] = static_cast<Real>(acc[ch] / static_cast<double>(hw));
  return out;
}

template <typename Real>
std::array<double, kNumClasses> dense(std::span<const Real> x, const BasicTensor<Real>& weights,
                                      const BasicTensor<Real>& bias) {
  if (weights.rank() != 2 || weights.dim(0) != x.size() || weights.dim(1) != kNumClasses ||
      bias.size() != kNumClasses)
    throw ShapeMismatch("dense weights " + shape_string(weights.shape()) + " vs input length " +
                        std::to_string(x.size()));
  std::array<double, kNumClasses> out{};
  for (std::size_t o = 0; o < kNumClasses; ++o) out[o] = bias[o];
  for (std::size_t c = 0; c < x.size(); ++c)
    for (std::size_t o = 0; o < kNumClasses; ++o)
      out[o] += static_cast<double>(x[c]) * static_cast<double>(weights[c * kNumClasses + o]);
  return out;
}

SoftLabel softmax(const std::array<double, kNumClasses>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  SoftLabel p;
  double z = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    p.probs[i] = std::exp(logits[i] - m);
    z += p.probs[i];
  }
  for (double& v : p.probs) v /= z;
  return p;
}

template <typename Real>
std::pair<BasicTensor<Real>, std::vector<Real>> dropout(const BasicTensor<Real>& x, double rate,
                                                        Rng* rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidConfig("dropout rate must be in [0, 1)");
  if (!training) return {x, {}};
  if (rng == nullptr) throw InvalidConfig("training-mode dropout needs an rng");
  const std::uint64_t threshold = drop_threshold(rate);
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  std::vector<Real> mask(x.size());
  BasicTensor<Real> y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool drop = rate > 0.0 && (*rng)() < threshold;
    mask[i] = drop ? Real{0} : keep_scale;
    y[i] *= mask[i];
  }
  return {std::move(y), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Model

template <typename Real>
ModelParams<Real> init_params(const Architecture& arch, Rng& rng) {
  auto p = ModelParams<Real>::zeros(arch);
  auto he_uniform = [&rng](BasicTensor<Real>& t, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = static_cast<Real>(dist(rng));
  };
  std::size_t cin = 1;
  for (std::size_t b = 0; b < arch.blocks(); ++b) {
    he_uniform(p.conv_kernels[b], 4 * cin);
    cin = arch.channels[b];
  }
  he_uniform(p.dense_weights, cin);
  return p;
}

template <typename Real>
ForwardTrace<Real> forward(const ModelParams<Real>& params, const BasicTensor<Real>& input,
                           bool training, Rng* rng) {
  const Architecture& arch = params.arch;
  if (input.rank() != 3 || input.dim(0) != arch.input_height || input.dim(1) != arch.input_width ||
      input.dim(2) != 1)
    throw ShapeMismatch("model expects (" + std::to_string(arch.input_height) + ", " +
                        std::to_string(arch.input_width) + ", 1), got " + shape_string(input.shape()));

  ForwardTrace<Real> trace;
  trace.params = &params;
  trace.params_version = params.version;
  trace.training = training;
  trace.input = input;
  trace.blocks.resize(arch.blocks());

  const BasicTensor<Real>* x = &trace.input;
  for (std::size_t b = 0; b < arch.blocks(); ++b) {
    auto& blk = trace.blocks[b];
    blk.conv_out = conv2d(*x, params.conv_kernels[b], params.conv_biases[b]);
    for (auto& v : blk.conv_out.values()) v = v > Real{0} ? v : Real{0};
    auto [pooled, argmax] = maxpool2d(blk.conv_out);
    blk.argmax = std::move(argmax);
    auto [dropped, mask] = dropout(pooled, arch.dropout_rate, rng, training);
    blk.output = std::move(dropped);
    blk.dropout_scale = std::move(mask);
    x = &blk.output;
  }
  trace.pooled = global_avg_pool(*x);
  trace.logits = dense<Real>(trace.pooled, params.dense_weights, params.dense_bias);
  trace.probs = softmax(trace.logits);
  return trace;
}

double loss_value(const SoftLabel& probs, const SoftLabel& target, LossKind kind) {
  double loss = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (kind == LossKind::CrossEntropy) {
      if (target[i] != 0.0) loss -= target[i] * std::log(std::max(probs[i], kProbFloor));
    } else {
      const double d = probs[i] - target[i];
      loss += d * d;
    }
  }
  return loss;
}

template <typename Real>
double backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                const SoftLabel& target, LossKind kind, Real weight, ModelParams<Real>& grads) {
  if (trace.params != &params || trace.params_version != params.version)
    throw StaleTrace("trace was recorded against different or since-updated parameters");
  if (!(grads.arch == params.arch) || grads.conv_kernels.size() != params.conv_kernels.size())
    throw ShapeMismatch("gradient buffer does not match the model");

  const SoftLabel& p = trace.probs;
  const double loss = loss_value(p, target, kind);

  // dL/dlogits
  std::array<double, kNumClasses> dz{};
  if (kind == LossKind::CrossEntropy) {
    const double tsum = target.sum();
    for (std::size_t i = 0; i < kNumClasses; ++i) dz[i] = p[i] * tsum - target[i];
  } else {
    std::array<double, kNumClasses> dp{};
    double dot = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      dp[i] = 2.0 * (p[i] - target[i]);
      dot += dp[i] * p[i];
    }
    for (std::size_t i = 0; i < kNumClasses; ++i) dz[i] = p[i] * (dp[i] - dot);
  }
  for (double& v : dz) v *= static_cast<double>(weight);

  // Dense layer and global average pool.
  const std::size_t c_last = trace.pooled.size();
  std::vector<Real> dpooled(c_last);
  for (std::size_t c = 0; c < c_last; ++c) {
    double acc = 0.0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      grads.dense_weights[c * kNumClasses + o] += static_cast<Real>(trace.pooled[c] * dz[o]);
      acc += static_cast<double>(params.dense_weights[c * kNumClasses + o]) * dz[o];
    }
    dpooled[c] = static_cast<Real>(acc);
  }
  for (std::size_t o = 0; o < kNumClasses; ++o) grads.dense_bias[o] += static_cast<Real>(dz[o]);

  const auto& last = trace.blocks.back().output;
  const std::size_t hw = last.dim(0) * last.dim(1);
  BasicTensor<Real> grad(last.shape());
  const Real inv_hw = static_cast<Real>(1.0 / static_cast<double>(hw));
  for (std::size_t pix = 0; pix < hw; ++pix)
    for (std::size_t c = 0; c < c_last; ++c) grad[pix * c_last + c] = dpooled[c] * inv_hw;

  for (std::size_t b = params.arch.blocks(); b-- > 0;) {
    const auto& blk = trace.blocks[b];
    if (!blk.dropout_scale.empty())
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= blk.dropout_scale[i];

    BasicTensor<Real> gconv(blk.conv_out.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) gconv[blk.argmax[i]] += grad[i];
    for (std::size_t i = 0; i < gconv.size(); ++i)
      if (!(blk.conv_out[i] > Real{0})) gconv[i] = Real{0};

    const BasicTensor<Real>& in = b == 0 ? trace.input : trace.blocks[b - 1].output;
    const auto& k = params.conv_kernels[b];
    const std::size_t cin = k.dim(2), cout = k.dim(3);
    BasicTensor<Real> grad_in;
    if (b > 0) grad_in = BasicTensor<Real>(in.shape());
    conv_backward_kernel(in.data(), in.dim(0), in.dim(1), cin, k.data(), cout, gconv.data(),
                         grads.conv_kernels[b].data(), grads.conv_biases[b].data(),
                         b > 0 ? grad_in.data() : nullptr);
    grad = std::move(grad_in);
  }
  return loss;
}

template <typename Real>
LossAndGrads<Real> loss_and_backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                                     const SoftLabel& target, LossKind kind) {
  LossAndGrads<Real> out{0.0, ModelParams<Real>::zeros(params.arch)};
  out.loss = backward(params, trace, target, kind, Real{1}, out.grads);
  return out;
}

// ---------------------------------------------------------------------------
// Instantiations

#define LUNG_INSTANTIATE(Real)                                                                       \
  template struct ModelParams<Real>;                                                                 \
  template BasicTensor<Real> to_input<Real>(const MfccMatrix&);                                      \
  template ModelParams<Real> init_params<Real>(const Architecture&, Rng&);                           \
  template ForwardTrace<Real> forward<Real>(const ModelParams<Real>&, const BasicTensor<Real>&, bool, \
                                            Rng*);                                                   \
  template double backward<Real>(const ModelParams<Real>&, const ForwardTrace<Real>&,               \
                                 const SoftLabel&, LossKind, Real, ModelParams<Real>&);              \
  template LossAndGrads<Real> loss_and_backward<Real>(const ModelParams<Real>&,                     \
                                                      const ForwardTrace<Real>&, const SoftLabel&,   \
                                                      LossKind);                                     \
  template BasicTensor<Real> conv2d<Real>(const BasicTensor<Real>&, const BasicTensor<Real>&,       \
                                          const BasicTensor<Real>&);                                 \
  template BasicTensor<Real> relu<Real>(const BasicTensor<Real>&);                                   \
  template BasicTensor<Real> relu_backward<Real>(const BasicTensor<Real>&, const BasicTensor<Real>&); \
  template std::pair<BasicTensor<Real>, std::vector<std::uint32_t>> maxpool2d<Real>(                 \
      const BasicTensor<Real>&);                                                                     \
  template BasicTensor<Real> maxpool2d_backward<Real>(const std::vector<std::size_t>&,              \
                                                      const std::vector<std::uint32_t>&,             \
                                                      const BasicTensor<Real>&);                     \
  template std::vector<Real> global_avg_pool<Real>(const BasicTensor<Real>&);                        \
  template std::array<double, kNumClasses> dense<Real>(std::span<const Real>,                        \
                                                       const BasicTensor<Real>&,                     \
                                                       const BasicTensor<Real>&);                    \
  template std::pair<BasicTensor<Real>, std::vector<Real>> dropout<Real>(const BasicTensor<Real>&,   \
                                                                         double, Rng*, bool);

LUNG_INSTANTIATE(float)
LUNG_INSTANTIATE(double)
#undef LUNG_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace lung
