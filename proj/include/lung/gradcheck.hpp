#pragma once

#include <functional>
#include <string>

#include "lung/network.hpp"

namespace lung {

struct GradCheckResult {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  /// Loss evaluations whose ReLU/max-pool pattern differed from the
  /// unperturbed pass. Non-zero means some probe straddled a kink, where
  /// central differences do not estimate the derivative.
  std::size_t pattern_changes = 0;
};

/// Which ReLUs fired and which pool inputs won, flattened.
template <typename Real>
std::vector<std::uint32_t> activation_pattern(const ForwardTrace<Real>& trace);

/// |a - b| / max(|a|, |b|, floor). The floor keeps gradients that are zero up
/// to rounding from producing meaningless ratios.
double relative_error(double a, double b, double floor);

using ParamLossFn = std::function<double(const ModelParams<double>&)>;

/// Central differences (L(p + eps) - L(p - eps)) / (2 eps), one parameter at a
/// time, compared against `analytic`.
GradCheckResult compare_with_finite_differences(const ModelParams<double>& params,
                                                const ModelParams<double>& analytic,
                                                const ParamLossFn& loss, double epsilon,
                                                double floor = 1e-8);

/// Backprop vs finite differences for a single example, dropout off.
GradCheckResult check_gradients(const ModelParams<double>& params, const BasicTensor<double>& input,
                                const SoftLabel& target, LossKind kind, double epsilon = 1e-3,
                                double floor = 1e-8);

}  // namespace lung
