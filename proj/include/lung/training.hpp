#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lung/dataset.hpp"
#include "lung/feature_cache.hpp"
#include "lung/ssl.hpp"

namespace lung {

enum class TrainMode { Baseline, Semi };

/// Which SSL passes a semi run skips.
enum class Ablation { None, CoRefinement, CoRefurbishing, Both };

std::string to_string(TrainMode mode);
std::string to_string(Ablation ablation);
TrainMode parse_train_mode(std::string_view text);
Ablation parse_ablation(std::string_view text);  // "none", "co_refinement", "co_refurbishing", "both"

struct TrainConfig {
  TrainMode mode = TrainMode::Semi;
  Ablation ablation = Ablation::None;
  std::size_t epochs = 60;        // SSL epochs (semi) or supervised epochs (baseline)
  std::size_t refit_epochs = 60;  // supervised refit after the SSL loop (semi only)
  std::size_t batch_size = 16;
  SslConfig ssl;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;
  double validation_fraction = 0.1;

  /// Throws InvalidConfig.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Per-epoch metrics row. Losses of passes that did not run are absent.
struct EpochMetrics {
  std::string phase;  // "ssl", "refit" or "supervised"
  std::size_t epoch = 0;
  std::optional<double> mixmatch_loss;
  std::optional<double> co_refinement_loss;
  std::optional<double> co_refurbishing_loss;
  std::optional<double> supervised_loss;
  std::optional<double> validation_accuracy;
  double unlabeled_weight = 0.0;
  double seconds = 0.0;
};

struct FailureInfo {
  std::string phase;
  int epoch = 0;
  int batch = 0;
  std::string message;
};

struct RunManifest {
  TrainConfig config;
  nlohmann::json split;  // SplitManifest::to_json()
  std::string cache_config_hash;
  std::vector<EpochMetrics> epochs;
  std::vector<std::vector<std::string>> schedule;  // passes run in each SSL epoch, in order
  std::optional<std::size_t> best_epoch;           // index into the supervised phase
  std::optional<double> best_validation_accuracy;
  double wall_clock_seconds = 0.0;
  std::string status = "completed";  // or "failed"
  std::optional<FailureInfo> failure;
  std::string checkpoint_path;
  nlohmann::json files;  // path -> sha256 of inputs and outputs

  std::string tag() const;  // "<mode>[-no_<ablation>]-seed<S>"

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

struct TrainResult {
  ModelParams<float> params;
  RunManifest manifest;

  bool failed() const { return manifest.failure.has_value(); }
};

/// Observes the end of every supervised epoch.
class EpochCallback {
 public:
  virtual ~EpochCallback() = default;
  virtual void on_epoch_end(const EpochMetrics& metrics, const ModelParams<float>& params) = 0;
  virtual bool should_stop() const { return false; }
};

/// Tracks the best validation accuracy (strict improvement), keeps a copy of
/// those parameters and requests a stop after `patience` epochs without one.
/// Without validation data it never stops and keeps the latest parameters.
class EarlyStopping : public EpochCallback {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  void on_epoch_end(const EpochMetrics& metrics, const ModelParams<float>& params) override;
  bool should_stop() const override;

  const std::optional<ModelParams<float>>& best_params() const { return best_; }
  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  std::optional<double> best_accuracy() const { return best_acc_; }

 private:
  std::size_t patience_;
  std::size_t since_best_ = 0;
  std::optional<ModelParams<float>> best_;
  std::optional<std::size_t> best_epoch_;
  std::optional<double> best_acc_;
};

/// Writes a checkpoint whenever validation accuracy improves.
class BestCheckpoint : public EpochCallback {
 public:
  BestCheckpoint(std::filesystem::path path, nlohmann::json metadata)
      : path_(std::move(path)), metadata_(std::move(metadata)) {}
  void on_epoch_end(const EpochMetrics& metrics, const ModelParams<float>& params) override;

 private:
  std::filesystem::path path_;
  nlohmann::json metadata_;
  std::optional<double> best_;
};

/// Architecture::standard() resized to the cache's matrix shape.
Architecture architecture_for(const MfccConfig& cfg);

/// Step-level driver shared by train_baseline and train_semi. Random streams
/// are named sub-streams of the seed: init, dropout, shuffle,
/// shuffle_unlabeled, augment, mixup, refurbish, shuffle_co_refinement,
/// shuffle_co_refurbishing and validation (for the carve).
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split);

  ModelParams<float>& params() { return params_; }
  const ModelParams<float>& params() const { return params_; }
  const std::vector<std::uint32_t>& labeled_ids() const { return labeled_; }
  const std::vector<std::uint32_t>& validation_ids() const { return validation_; }
  const std::vector<std::uint32_t>& unlabeled_ids() const { return unlabeled_; }

  /// One pass of plain cross-entropy over shuffled labeled batches; returns
  /// the mean batch loss.
  double supervised_epoch(std::size_t epoch);

  /// One SSL epoch: Mix-Match pass, then Co-Refinement and Co-Refurbishing
  /// passes unless ablated. Fills the loss fields and records the pass order.
  EpochMetrics semi_epoch(std::size_t epoch, std::size_t total_epochs);

  /// Resets Adam moments (used before the final refit).
  void reset_optimizer();

  /// Accuracy on the validation slice, nullopt when it is empty.
  std::optional<double> validation_accuracy() const;

  const std::vector<std::vector<std::string>>& schedule() const { return schedule_; }

 private:
  std::vector<LabeledBatch> labeled_batches(Rng& rng) const;
  std::vector<UnlabeledBatch> unlabeled_batches(Rng& rng, std::size_t count) const;
  double run_mixmatch_pass(std::size_t epoch, double unlabeled_weight);
  double run_co_refinement_pass(std::size_t epoch);
  double run_co_refurbishing_pass(std::size_t epoch);
  void check(const StepResult& step, const char* phase, std::size_t epoch, std::size_t batch) const;

  TrainConfig cfg_;
  const FeatureCache& cache_;
  std::vector<std::uint32_t> labeled_;
  std::vector<std::uint32_t> validation_;
  std::vector<std::uint32_t> unlabeled_;
  ModelParams<float> params_;
  AdamState<float> adam_;
  Rng dropout_;
  Rng shuffle_;
  Rng shuffle_unlabeled_;
  Rng augment_;
  Rng mixup_;
  Rng refurbish_;
  Rng shuffle_co_refinement_;
  Rng shuffle_co_refurbishing_;
  std::vector<std::vector<std::string>> schedule_;
};

/// Supervised training on train_labeled with validation early stopping.
TrainResult train_baseline(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                           std::vector<EpochCallback*> extra_callbacks = {});

/// SSL epochs followed by a supervised refit with fresh Adam state, early
/// stopping and best-parameter restore.
TrainResult train_semi(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                       std::vector<EpochCallback*> extra_callbacks = {});

/// train_semi with the selected passes skipped.
TrainResult ablate(TrainConfig cfg, const FeatureCache& cache, const SplitManifest& split, Ablation drop);

/// Dispatches on cfg.mode.
TrainResult train(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                  std::vector<EpochCallback*> extra_callbacks = {});

struct RunFiles {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
};

RunFiles run_file_names(const std::filesystem::path& out_dir, const TrainConfig& cfg);

/// Checkpoint metadata for a finished (or best-so-far) model.
nlohmann::json checkpoint_metadata(const TrainConfig& cfg, const std::string& cache_config_hash,
                                   std::optional<std::size_t> epoch);

/// Trains, then writes the checkpoint (unless the run failed) and the
/// manifest. The manifest is written in every case.
TrainResult train_and_save(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                           const std::filesystem::path& out_dir, nlohmann::json input_files = nlohmann::json::object());

}  // namespace lung
