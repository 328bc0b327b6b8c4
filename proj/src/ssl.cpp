#include "lung/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lung {
namespace {

double matrix_mean(const MfccMatrix& x) {
  double s = 0.0;
  for (float v : x.data) s += v;
  return x.data.empty() ? 0.0 : s / static_cast<double>(x.data.size());
}

double matrix_stddev(const MfccMatrix& x, double mean) {
  double s = 0.0;
  for (float v : x.data) s += (v - mean) * (v - mean);
  return x.data.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.data.size()));
}

}  // namespace

void SslConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(temperature > 0.0)) throw InvalidConfig("temperature must be positive");
  if (n_augmentations < 1) throw InvalidConfig("K must be at least 1");
  if (!(mixup_alpha > 0.0)) throw InvalidConfig("mixup alpha must be positive");
  if (!(unlabeled_loss_weight >= 0.0)) throw InvalidConfig("lambda_u must be non-negative");
  if (!unit(rampup_fraction)) throw InvalidConfig("rampup fraction must be in [0, 1]");
  if (!unit(refurbish_weight) || !unit(refurbish_fraction) || !unit(refinement_weight))
    throw InvalidConfig("omega, rho and refinement weight must be in [0, 1]");
  if (forced_lambda && !unit(*forced_lambda)) throw InvalidConfig("forced lambda must be in [0, 1]");
  if (!(augment.noise_scale >= 0.0)) throw InvalidConfig("noise scale must be non-negative");
}

double SslConfig::unlabeled_weight_at(std::size_t epoch, std::size_t total_epochs) const {
  const auto ramp = static_cast<std::size_t>(std::ceil(rampup_fraction * static_cast<double>(total_epochs)));
  if (ramp == 0) return unlabeled_loss_weight;
  const double progress = std::min(1.0, static_cast<double>(epoch + 1) / static_cast<double>(ramp));
  return unlabeled_loss_weight * progress;
}

MfccMatrix augment(const MfccMatrix& x, const AugmentConfig& cfg, Rng& rng) {
  MfccMatrix out = x;
  if (!cfg.enabled || x.data.empty()) return out;
  const double mean = matrix_mean(x);
  const double sigma = cfg.noise_scale * matrix_stddev(x, mean);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (float& v : out.data) v = static_cast<float>(v + noise(rng));
  }
  const std::size_t max_width = std::min(cfg.max_mask_width, x.cols);
  if (max_width > 0) {
    const std::size_t width = std::uniform_int_distribution<std::size_t>(0, max_width)(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, x.cols - width)(rng);
    const auto fill = static_cast<float>(mean);
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t c = start; c < start + width; ++c) out(r, c) = fill;
  }
  return out;
}

SoftLabel sharpen(const SoftLabel& p, double temperature) {
  if (!(temperature > 0.0)) throw InvalidConfig("temperature must be positive");
  if (temperature == 1.0) return p;
  SoftLabel out;
  double z = 0.0;
  const double power = 1.0 / temperature;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    out[i] = p[i] > 0.0 ? std::pow(p[i], power) : 0.0;
    z += out[i];
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw DegenerateInput("cannot sharpen an all-zero distribution");
  for (double& v : out.probs) v /= z;
  return out;
}

template <typename Real>
SoftLabel guess_label(const ModelParams<Real>& params, const MfccMatrix& u, std::size_t k,
                      double temperature, const AugmentConfig& augment_cfg, Rng& rng) {
  if (k == 0) throw InvalidConfig("K must be at least 1");
  SoftLabel mean;
  for (std::size_t i = 0; i < k; ++i) {
    const SoftLabel p = augment_cfg.enabled ? predict(params, to_input<Real>(augment(u, augment_cfg, rng)))
                                            : predict(params, to_input<Real>(u));
    for (std::size_t c = 0; c < kNumClasses; ++c) mean[c] += p[c];
  }
  if (k > 1)
    for (double& v : mean.probs) v /= static_cast<double>(k);
  return sharpen(mean, temperature);
}

Mixed mixup(const MfccMatrix& x1, const SoftLabel& y1, const MfccMatrix& x2, const SoftLabel& y2,
            double alpha, Rng& rng, std::optional<double> forced_lambda) {
  if (x1.rows != x2.rows || x1.cols != x2.cols) throw ShapeMismatch("mixup inputs differ in shape");
  double lambda = forced_lambda ? *forced_lambda : sample_beta(rng, alpha, alpha);
  lambda = std::max(lambda, 1.0 - lambda);

  Mixed out;
  out.lambda = lambda;
  if (lambda == 1.0) {
    out.x = x1;
    out.y = y1;
    return out;
  }
  out.x = MfccMatrix(x1.rows, x1.cols);
  const double rest = 1.0 - lambda;
  for (std::size_t i = 0; i < x1.data.size(); ++i)
    out.x.data[i] = static_cast<float>(lambda * x1.data[i] + rest * x2.data[i]);
  for (std::size_t c = 0; c < kNumClasses; ++c) out.y[c] = lambda * y1[c] + rest * y2[c];
  return out;
}

template <typename Real>
MixMatchOutput mixmatch(const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                        const ModelParams<Real>& params, const SslConfig& cfg, SslRngs rngs) {
  if (labeled.size() == 0) throw InvalidConfig("mixmatch needs a non-empty labeled batch");
  if (labeled.labels.size() != labeled.size()) throw ShapeMismatch("labeled batch inputs/labels differ");

  // X-hat: one augmentation per labeled item, true labels.
  std::vector<MfccMatrix> pool_x;
  std::vector<SoftLabel> pool_y;
  pool_x.reserve(labeled.size() + cfg.n_augmentations * unlabeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    pool_x.push_back(augment(*labeled.inputs[i], cfg.augment, rngs.augment));
    pool_y.push_back(SoftLabel::one_hot(labeled.labels[i]));
  }
  // U-hat: K augmentations per unlabeled item sharing one sharpened guess.
  for (const MfccMatrix* u : unlabeled.inputs) {
    std::vector<MfccMatrix> copies;
    SoftLabel mean;
    for (std::size_t k = 0; k < cfg.n_augmentations; ++k) {
      copies.push_back(augment(*u, cfg.augment, rngs.augment));
      const SoftLabel p = predict(params, to_input<Real>(copies.back()));
      for (std::size_t c = 0; c < kNumClasses; ++c) mean[c] += p[c];
    }
    if (cfg.n_augmentations > 1)
      for (double& v : mean.probs) v /= static_cast<double>(cfg.n_augmentations);
    const SoftLabel guess = sharpen(mean, cfg.temperature);
    for (auto& c : copies) {
      pool_x.push_back(std::move(c));
      pool_y.push_back(guess);
    }
  }

  // W: the combined pool, shuffled.
  std::vector<std::size_t> order(pool_x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rngs.mixup);

  MixMatchOutput out;
  for (std::size_t i = 0; i < pool_x.size(); ++i) {
    const std::size_t partner = order[i];
    Mixed m = mixup(pool_x[i], pool_y[i], pool_x[partner], pool_y[partner], cfg.mixup_alpha, rngs.mixup,
                    cfg.forced_lambda);
    MixedBatch& dst = i < labeled.size() ? out.labeled : out.unlabeled;
    dst.inputs.push_back(std::move(m.x));
    dst.targets.push_back(m.y);
    dst.origin.push_back(i < labeled.size() ? Origin::Labeled : Origin::Unlabeled);
  }
  return out;
}

std::vector<WeightedTarget> mixmatch_objective(const MixMatchOutput& batch, double unlabeled_weight) {
  std::vector<WeightedTarget> terms;
  const auto& x = batch.labeled;
  const auto& u = batch.unlabeled;
  for (std::size_t i = 0; i < x.size(); ++i)
    terms.push_back({&x.inputs[i], x.targets[i], LossKind::CrossEntropy, 1.0 / static_cast<double>(x.size())});
  if (unlabeled_weight != 0.0)
    for (std::size_t i = 0; i < u.size(); ++i)
      terms.push_back({&u.inputs[i], u.targets[i], LossKind::SquaredError,
                       unlabeled_weight / static_cast<double>(u.size())});
  return terms;
}

template <typename Real>
MixMatchLoss mixmatch_loss(const ModelParams<Real>& params, const MixMatchOutput& batch,
                           double unlabeled_weight) {
  MixMatchLoss loss;
  const auto& x = batch.labeled;
  const auto& u = batch.unlabeled;
  for (std::size_t i = 0; i < x.size(); ++i)
    loss.supervised += loss_value(predict(params, to_input<Real>(x.inputs[i])), x.targets[i], LossKind::CrossEntropy);
  if (!x.empty()) loss.supervised /= static_cast<double>(x.size());
  if (unlabeled_weight != 0.0) {
    for (std::size_t i = 0; i < u.size(); ++i)
      loss.unlabeled += loss_value(predict(params, to_input<Real>(u.inputs[i])), u.targets[i], LossKind::SquaredError);
    if (!u.empty()) loss.unlabeled /= static_cast<double>(u.size());
  }
  loss.total = loss.supervised + unlabeled_weight * loss.unlabeled;
  return loss;
}

std::vector<WeightedTarget> supervised_objective(const LabeledBatch& labeled) {
  std::vector<WeightedTarget> terms;
  const double w = 1.0 / static_cast<double>(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i)
    terms.push_back({labeled.inputs[i], SoftLabel::one_hot(labeled.labels[i]), LossKind::CrossEntropy, w});
  return terms;
}

template <typename Real>
std::vector<WeightedTarget> co_refinement_objective(const ModelParams<Real>& params,
                                                    const LabeledBatch& labeled,
                                                    const UnlabeledBatch& unlabeled,
                                                    double refinement_weight) {
  auto terms = supervised_objective(labeled);
  if (refinement_weight == 0.0 || unlabeled.size() == 0) return terms;
  const double w = refinement_weight / static_cast<double>(unlabeled.size());
  for (const MfccMatrix* u : unlabeled.inputs)
    terms.push_back({u, predict(params, to_input<Real>(*u)), LossKind::CrossEntropy, w});
  return terms;
}

SoftLabel refurbish_target(const SoftLabel& truth, const SoftLabel& prediction, double omega) {
  SoftLabel y;
  for (std::size_t c = 0; c < kNumClasses; ++c) y[c] = omega * truth[c] + (1.0 - omega) * prediction[c];
  return y;
}

template <typename Real>
std::vector<WeightedTarget> co_refurbishing_objective(const ModelParams<Real>& params,
                                                      const LabeledBatch& labeled,
                                                      const UnlabeledBatch& unlabeled, double omega,
                                                      double rho, Rng& rng) {
  const std::size_t n = labeled.size();
  const auto n_refurbish = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> refurbished(n, false);
  for (std::size_t i = 0; i < std::min(n_refurbish, n); ++i) refurbished[order[i]] = true;

  const double unlabeled_w = 1.0 - omega;
  const double norm = static_cast<double>(n) + unlabeled_w * static_cast<double>(unlabeled.size());
  std::vector<WeightedTarget> terms;
  for (std::size_t i = 0; i < n; ++i) {
    SoftLabel y = SoftLabel::one_hot(labeled.labels[i]);
    if (refurbished[i]) y = refurbish_target(y, predict(params, to_input<Real>(*labeled.inputs[i])), omega);
    terms.push_back({labeled.inputs[i], y, LossKind::CrossEntropy, 1.0 / norm});
  }
  if (unlabeled_w != 0.0)
    for (const MfccMatrix* u : unlabeled.inputs)
      terms.push_back({u, predict(params, to_input<Real>(*u)), LossKind::CrossEntropy, unlabeled_w / norm});
  return terms;
}

template <typename Real>
StepResult co_refinement_step(ModelParams<Real>& params, AdamState<Real>& adam, const AdamConfig& adam_cfg,
                              const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                              double refinement_weight, Rng& dropout_rng) {
  const auto terms = co_refinement_objective(params, labeled, unlabeled, refinement_weight);
  return gradient_step(params, adam, adam_cfg, std::span<const WeightedTarget>(terms), dropout_rng);
}

template <typename Real>
StepResult co_refurbishing_step(ModelParams<Real>& params, AdamState<Real>& adam,
                                const AdamConfig& adam_cfg, const LabeledBatch& labeled,
                                const UnlabeledBatch& unlabeled, double omega, double rho, Rng& rng,
                                Rng& dropout_rng) {
  const auto terms = co_refurbishing_objective(params, labeled, unlabeled, omega, rho, rng);
  return gradient_step(params, adam, adam_cfg, std::span<const WeightedTarget>(terms), dropout_rng);
}

#define LUNG_INSTANTIATE(Real)                                                                          \
  template SoftLabel guess_label<Real>(const ModelParams<Real>&, const MfccMatrix&, std::size_t, double, \
                                       const AugmentConfig&, Rng&);                                     \
  template MixMatchOutput mixmatch<Real>(const LabeledBatch&, const UnlabeledBatch&,                    \
                                         const ModelParams<Real>&, const SslConfig&, SslRngs);          \
  template MixMatchLoss mixmatch_loss<Real>(const ModelParams<Real>&, const MixMatchOutput&, double);   \
  template std::vector<WeightedTarget> co_refinement_objective<Real>(                                   \
      const ModelParams<Real>&, const LabeledBatch&, const UnlabeledBatch&, double);                    \
  template std::vector<WeightedTarget> co_refurbishing_objective<Real>(                                 \
      const ModelParams<Real>&, const LabeledBatch&, const UnlabeledBatch&, double, double, Rng&);      \
  template StepResult co_refinement_step<Real>(ModelParams<Real>&, AdamState<Real>&, const AdamConfig&, \
                                               const LabeledBatch&, const UnlabeledBatch&, double,     \
                                               Rng&);                                                   \
  template StepResult co_refurbishing_step<Real>(ModelParams<Real>&, AdamState<Real>&,                  \
                                                 const AdamConfig&, const LabeledBatch&,                \
                                                 const UnlabeledBatch&, double, double, Rng&, Rng&);

LUNG_INSTANTIATE(float)
LUNG_INSTANTIATE(double)
#undef LUNG_INSTANTIATE

}  // namespace lung
