#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lung/objective.hpp"

namespace lung {

/// Feature-space augmentation: Gaussian noise scaled by the matrix standard
/// deviation plus one time mask filled with the matrix mean.
struct AugmentConfig {
  bool enabled = true;
  double noise_scale = 0.05;
  std::size_t max_mask_width = 40;
};

struct SslConfig {
  double temperature = 0.5;           // sharpening T
  std::size_t n_augmentations = 2;    // K
  double mixup_alpha = 0.75;          // Beta(alpha, alpha)
  double unlabeled_loss_weight = 1.0; // lambda_u at the end of the ramp
  double rampup_fraction = 0.25;      // share of epochs over which lambda_u ramps linearly
  double refurbish_weight = 0.7;      // omega, weight on the true label
  double refurbish_fraction = 0.3;    // rho, share of a labeled batch that is refurbished
  double refinement_weight = 0.5;
  std::optional<double> forced_lambda; // pins mixup's lambda (tests, ablations)
  AugmentConfig augment;

  void validate() const;

  /// lambda_u for a 0-based epoch out of `total_epochs`.
  double unlabeled_weight_at(std::size_t epoch, std::size_t total_epochs) const;
};

enum class Origin : std::uint8_t { Labeled, Unlabeled };

struct MixedBatch {
  std::vector<MfccMatrix> inputs;
  std::vector<SoftLabel> targets;
  std::vector<Origin> origin;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

struct LabeledBatch {
  std::vector<const MfccMatrix*> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
};

struct UnlabeledBatch {
  std::vector<const MfccMatrix*> inputs;

  std::size_t size() const { return inputs.size(); }
};

/// The two streams Mix-Match draws from.
struct SslRngs {
  Rng& augment;
  Rng& mixup;
};

MfccMatrix augment(const MfccMatrix& x, const AugmentConfig& cfg, Rng& rng);

/// p^(1/T) renormalised. T == 1 returns p untouched.
SoftLabel sharpen(const SoftLabel& p, double temperature);

/// Mean of inference-mode predictions over K augmentations, sharpened.
template <typename Real>
SoftLabel guess_label(const ModelParams<Real>& params, const MfccMatrix& u, std::size_t k,
                      double temperature, const AugmentConfig& augment_cfg, Rng& rng);

struct Mixed {
  MfccMatrix x;
  SoftLabel y;
  double lambda = 1.0;  // the max(lambda, 1 - lambda) actually applied
};

/// lambda ~ Beta(alpha, alpha), lambda' = max(lambda, 1 - lambda); returns the
/// convex combination weighted lambda' toward (x1, y1).
Mixed mixup(const MfccMatrix& x1, const SoftLabel& y1, const MfccMatrix& x2, const SoftLabel& y2,
            double alpha, Rng& rng, std::optional<double> forced_lambda = std::nullopt);

struct MixMatchOutput {
  MixedBatch labeled;    // X'
  MixedBatch unlabeled;  // U'
};

template <typename Real>
MixMatchOutput mixmatch(const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                        const ModelParams<Real>& params, const SslConfig& cfg, SslRngs rngs);

/// Mean cross-entropy over X' plus lambda_u times mean squared error over U'.
/// Zero-weight or empty parts produce no terms.
std::vector<WeightedTarget> mixmatch_objective(const MixMatchOutput& batch, double unlabeled_weight);

struct MixMatchLoss {
  double total = 0.0;
  double supervised = 0.0;
  double unlabeled = 0.0;
};

template <typename Real>
MixMatchLoss mixmatch_loss(const ModelParams<Real>& params, const MixMatchOutput& batch,
                           double unlabeled_weight);

/// Supervised term plus refinement_weight times cross-entropy against the
/// model's own (frozen) predictions on the unlabeled batch.
template <typename Real>
std::vector<WeightedTarget> co_refinement_objective(const ModelParams<Real>& params,
                                                    const LabeledBatch& labeled,
                                                    const UnlabeledBatch& unlabeled,
                                                    double refinement_weight);

/// omega * y_true + (1 - omega) * p_model.
SoftLabel refurbish_target(const SoftLabel& truth, const SoftLabel& prediction, double omega);

/// A rho-share of the labeled items get refurbished targets; unlabeled items
/// carry their predictions at weight (1 - omega); weights are normalised to
/// sum to one.
template <typename Real>
std::vector<WeightedTarget> co_refurbishing_objective(const ModelParams<Real>& params,
                                                      const LabeledBatch& labeled,
                                                      const UnlabeledBatch& unlabeled, double omega,
                                                      double rho, Rng& rng);

template <typename Real>
StepResult co_refinement_step(ModelParams<Real>& params, AdamState<Real>& adam, const AdamConfig& adam_cfg,
                              const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                              double refinement_weight, Rng& dropout_rng);

template <typename Real>
StepResult co_refurbishing_step(ModelParams<Real>& params, AdamState<Real>& adam,
                                const AdamConfig& adam_cfg, const LabeledBatch& labeled,
                                const UnlabeledBatch& unlabeled, double omega, double rho, Rng& rng,
                                Rng& dropout_rng);

/// Plain cross-entropy, mean over the batch.
std::vector<WeightedTarget> supervised_objective(const LabeledBatch& labeled);

}  // namespace lung
