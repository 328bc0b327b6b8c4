#include "lung/optimizer.hpp"

#include <cmath>

namespace lung {

template <typename Real>
void adam_update(std::span<Real> params, std::span<const Real> grads, std::span<Real> m,
                 std::span<Real> v, std::uint64_t step, const AdamConfig& cfg) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw ShapeMismatch("adam_update: parameter, gradient and moment sizes differ");
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real step_size = static_cast<Real>(cfg.learning_rate / bias1);
  const Real inv_sqrt_bias2 = static_cast<Real>(1.0 / std::sqrt(bias2));
  const Real eps = static_cast<Real>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Real g = grads[i];
    m[i] = b1 * m[i] + (Real{1} - b1) * g;
    v[i] = b2 * v[i] + (Real{1} - b2) * g * g;
    params[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bias2 + eps);
  }
}

template <typename Real>
void adam_step(ModelParams<Real>& params, const ModelParams<Real>& grads, AdamState<Real>& state,
               const AdamConfig& cfg) {
  if (!(grads.arch == params.arch) || !(state.m.arch == params.arch) || !(state.v.arch == params.arch))
    throw ShapeMismatch("adam_step: optimizer state does not match the model");
  ++state.step;
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t t = 0; t < p.size(); ++t)
    adam_update<Real>(p[t]->values(), g[t]->values(), m[t]->values(), v[t]->values(), state.step, cfg);
  ++params.version;
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, std::uint64_t, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, std::uint64_t, const AdamConfig&);
template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&,
                               const AdamConfig&);
template void adam_step<double>(ModelParams<double>&, const ModelParams<double>&, AdamState<double>&,
                                const AdamConfig&);

}  // namespace lung
