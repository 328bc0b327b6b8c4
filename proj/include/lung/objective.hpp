#pragma once

#include <span>
#include <vector>

#include "lung/optimizer.hpp"

namespace lung {

/// One term of a weighted training objective: weight * loss(model(input), target).
struct WeightedTarget {
  const MfccMatrix* input = nullptr;
  SoftLabel target;
  LossKind kind = LossKind::CrossEntropy;
  double weight = 1.0;
};

struct ObjectiveValue {
  double total = 0.0;              // sum of weight * loss
  std::vector<double> item_losses; // unweighted, NaN for skipped zero-weight terms
};

/// Runs forward/backward for every term with non-zero weight, in order, and
/// adds weight * gradient into `grads`. Zero-weight terms are skipped entirely,
/// so they consume no dropout randomness.
template <typename Real>
ObjectiveValue accumulate_objective(const ModelParams<Real>& params, std::span<const WeightedTarget> terms,
                                    bool training, Rng* dropout_rng, ModelParams<Real>& grads);

/// Objective value without gradients (inference mode).
template <typename Real>
ObjectiveValue evaluate_objective(const ModelParams<Real>& params, std::span<const WeightedTarget> terms);

struct StepResult {
  ObjectiveValue objective;
  bool finite = true;  // loss and every gradient entry finite
};

/// accumulate_objective in training mode followed by one Adam update. The
/// update is skipped when anything is non-finite.
template <typename Real>
StepResult gradient_step(ModelParams<Real>& params, AdamState<Real>& adam, const AdamConfig& cfg,
                         std::span<const WeightedTarget> terms, Rng& dropout_rng);

}  // namespace lung
