#include "lung/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace lung {

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

GradCheckResult compare_with_finite_differences(const ModelParams<double>& params,
                                                const ModelParams<double>& analytic,
                                                const ParamLossFn& loss, double epsilon,
                                                double floor) {
  GradCheckResult result;
  ModelParams<double> probe = params;
  const auto names = ModelParams<double>::tensor_names(params.arch);
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    auto& tensor = *probe_tensors[t];
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double original = tensor[i];
      tensor[i] = original + epsilon;
      const double up = loss(probe);
      tensor[i] = original - epsilon;
      const double down = loss(probe);
      tensor[i] = original;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = (*grad_tensors[t])[i];
      const double err = relative_error(exact, numeric, floor);
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_tensor = names[t];
        result.worst_index = i;
        result.worst_analytic = exact;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

template <typename Real>
std::vector<std::uint32_t> activation_pattern(const ForwardTrace<Real>& trace) {
  std::vector<std::uint32_t> out;
  for (const auto& b : trace.blocks) {
    for (std::size_t i = 0; i < b.conv_out.size(); ++i) out.push_back(b.conv_out[i] > Real{0} ? 1u : 0u);
    out.insert(out.end(), b.argmax.begin(), b.argmax.end());
  }
  return out;
}

template std::vector<std::uint32_t> activation_pattern<float>(const ForwardTrace<float>&);
template std::vector<std::uint32_t> activation_pattern<double>(const ForwardTrace<double>&);

GradCheckResult check_gradients(const ModelParams<double>& params, const BasicTensor<double>& input,
                                const SoftLabel& target, LossKind kind, double epsilon, double floor) {
  const auto trace = forward(params, input, false, nullptr);
  const auto analytic = loss_and_backward(params, trace, target, kind);
  const auto base_pattern = activation_pattern(trace);
  std::size_t changes = 0;
  auto loss = [&](const ModelParams<double>& p) {
    const auto t = forward(p, input, false, nullptr);
    if (activation_pattern(t) != base_pattern) ++changes;
    return loss_value(t.probs, target, kind);
  };
  auto result = compare_with_finite_differences(params, analytic.grads, loss, epsilon, floor);
  result.pattern_changes = changes;
  return result;
}

}  // namespace lung
