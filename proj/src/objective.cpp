#include "lung/objective.hpp"

#include <cmath>
#include <limits>

namespace lung {

template <typename Real>
ObjectiveValue accumulate_objective(const ModelParams<Real>& params, std::span<const WeightedTarget> terms,
                                    bool training, Rng* dropout_rng, ModelParams<Real>& grads) {
  ObjectiveValue value;
  value.item_losses.assign(terms.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    if (term.weight == 0.0) continue;
    const auto trace = forward(params, to_input<Real>(*term.input), training, dropout_rng);
    const double loss = backward(params, trace, term.target, term.kind, static_cast<Real>(term.weight), grads);
    value.item_losses[i] = loss;
    value.total += term.weight * loss;
  }
  return value;
}

template <typename Real>
ObjectiveValue evaluate_objective(const ModelParams<Real>& params, std::span<const WeightedTarget> terms) {
  ObjectiveValue value;
  value.item_losses.assign(terms.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    if (term.weight == 0.0) continue;
    const double loss = loss_value(predict(params, to_input<Real>(*term.input)), term.target, term.kind);
    value.item_losses[i] = loss;
    value.total += term.weight * loss;
  }
  return value;
}

template <typename Real>
StepResult gradient_step(ModelParams<Real>& params, AdamState<Real>& adam, const AdamConfig& cfg,
                         std::span<const WeightedTarget> terms, Rng& dropout_rng) {
  auto grads = ModelParams<Real>::zeros(params.arch);
  StepResult result;
  result.objective = accumulate_objective(params, terms, true, &dropout_rng, grads);
  result.finite = std::isfinite(result.objective.total) && grads.all_finite();
  if (result.finite) adam_step(params, grads, adam, cfg);
  return result;
}

#define LUNG_INSTANTIATE(Real)                                                                      \
  template ObjectiveValue accumulate_objective<Real>(const ModelParams<Real>&,                      \
                                                     std::span<const WeightedTarget>, bool, Rng*,   \
                                                     ModelParams<Real>&);                           \
  template ObjectiveValue evaluate_objective<Real>(const ModelParams<Real>&,                        \
                                                   std::span<const WeightedTarget>);                \
  template StepResult gradient_step<Real>(ModelParams<Real>&, AdamState<Real>&, const AdamConfig&,  \
                                          std::span<const WeightedTarget>, Rng&);

LUNG_INSTANTIATE(float)
LUNG_INSTANTIATE(double)
#undef LUNG_INSTANTIATE

}  // namespace lung
