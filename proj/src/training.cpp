#include "lung/training.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <numeric>

#include "lung/checkpoint.hpp"
#include "lung/errors.hpp"

namespace lung {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::size_t argmax_class(const ModelParams<float>& params, const MfccMatrix& x) {
  return predict(params, to_input<float>(x)).argmax();
}

}  // namespace

std::string to_string(TrainMode mode) { return mode == TrainMode::Baseline ? "baseline" : "semi"; }

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::CoRefinement: return "co_refinement";
    case Ablation::CoRefurbishing: return "co_refurbishing";
    case Ablation::Both: return "both";
  }
  return "none";
}

TrainMode parse_train_mode(std::string_view text) {
  if (text == "baseline") return TrainMode::Baseline;
  if (text == "semi") return TrainMode::Semi;
  throw InvalidConfig("unknown mode '" + std::string(text) + "'");
}

Ablation parse_ablation(std::string_view text) {
  for (Ablation a : {Ablation::None, Ablation::CoRefinement, Ablation::CoRefurbishing, Ablation::Both})
    if (text == to_string(a)) return a;
  throw InvalidConfig("unknown ablation '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (mode == TrainMode::Baseline && epochs < 1) throw InvalidConfig("baseline needs at least one epoch");
  if (mode == TrainMode::Semi && epochs + refit_epochs < 1)
    throw InvalidConfig("semi needs at least one SSL or refit epoch");
  if (mode == TrainMode::Baseline && ablation != Ablation::None)
    throw InvalidConfig("ablations apply to semi mode only");
  if (batch_size < 1) throw InvalidConfig("batch size must be at least 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 0.5))
    throw InvalidConfig("validation fraction must be in [0, 0.5)");
  if (!(adam.learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
  ssl.validate();
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json s = {{"temperature", ssl.temperature},
                      {"n_augmentations", ssl.n_augmentations},
                      {"mixup_alpha", ssl.mixup_alpha},
                      {"unlabeled_loss_weight", ssl.unlabeled_loss_weight},
                      {"rampup_fraction", ssl.rampup_fraction},
                      {"refurbish_weight", ssl.refurbish_weight},
                      {"refurbish_fraction", ssl.refurbish_fraction},
                      {"refinement_weight", ssl.refinement_weight},
                      {"forced_lambda", opt_json(ssl.forced_lambda)},
                      {"augment",
                       {{"enabled", ssl.augment.enabled},
                        {"noise_scale", ssl.augment.noise_scale},
                        {"max_mask_width", ssl.augment.max_mask_width}}}};
  return {{"mode", to_string(mode)},
          {"ablation", to_string(ablation)},
          {"epochs", epochs},
          {"refit_epochs", refit_epochs},
          {"batch_size", batch_size},
          {"ssl", s},
          {"adam",
           {{"learning_rate", adam.learning_rate},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon}}},
          {"seed", seed},
          {"early_stop_patience", early_stop_patience},
          {"validation_fraction", validation_fraction}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.mode = parse_train_mode(j.value("mode", std::string("semi")));
  c.ablation = parse_ablation(j.value("ablation", std::string("none")));
  c.epochs = j.value("epochs", c.epochs);
  c.refit_epochs = j.value("refit_epochs", c.refit_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    c.adam.learning_rate = a.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
  }
  if (j.contains("ssl")) {
    const auto& s = j.at("ssl");
    c.ssl.temperature = s.value("temperature", c.ssl.temperature);
    c.ssl.n_augmentations = s.value("n_augmentations", c.ssl.n_augmentations);
    c.ssl.mixup_alpha = s.value("mixup_alpha", c.ssl.mixup_alpha);
    c.ssl.unlabeled_loss_weight = s.value("unlabeled_loss_weight", c.ssl.unlabeled_loss_weight);
    c.ssl.rampup_fraction = s.value("rampup_fraction", c.ssl.rampup_fraction);
    c.ssl.refurbish_weight = s.value("refurbish_weight", c.ssl.refurbish_weight);
    c.ssl.refurbish_fraction = s.value("refurbish_fraction", c.ssl.refurbish_fraction);
    c.ssl.refinement_weight = s.value("refinement_weight", c.ssl.refinement_weight);
    c.ssl.forced_lambda = opt_from<double>(s, "forced_lambda");
    if (s.contains("augment")) {
      const auto& a = s.at("augment");
      c.ssl.augment.enabled = a.value("enabled", c.ssl.augment.enabled);
      c.ssl.augment.noise_scale = a.value("noise_scale", c.ssl.augment.noise_scale);
      c.ssl.augment.max_mask_width = a.value("max_mask_width", c.ssl.augment.max_mask_width);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// RunManifest

std::string RunManifest::tag() const {
  std::string t = to_string(config.mode);
  if (config.ablation != Ablation::None) t += "-no_" + to_string(config.ablation);
  return t + "-seed" + std::to_string(config.seed);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : epochs)
    rows.push_back({{"phase", m.phase},
                    {"epoch", m.epoch},
                    {"mixmatch_loss", opt_json(m.mixmatch_loss)},
                    {"co_refinement_loss", opt_json(m.co_refinement_loss)},
                    {"co_refurbishing_loss", opt_json(m.co_refurbishing_loss)},
                    {"supervised_loss", opt_json(m.supervised_loss)},
                    {"validation_accuracy", opt_json(m.validation_accuracy)},
                    {"unlabeled_weight", m.unlabeled_weight},
                    {"seconds", m.seconds}});
  nlohmann::json j = {{"tag", tag()},
                      {"config", config.to_json()},
                      {"split", split},
                      {"cache_config_hash", cache_config_hash},
                      {"rng_streams",
                       {"init", "dropout", "shuffle", "shuffle_unlabeled", "augment", "mixup", "refurbish",
                        "shuffle_co_refinement", "shuffle_co_refurbishing", "validation"}},
                      {"epochs", rows},
                      {"schedule", schedule},
                      {"best_epoch", opt_json(best_epoch)},
                      {"best_validation_accuracy", opt_json(best_validation_accuracy)},
                      {"wall_clock_seconds", wall_clock_seconds},
                      {"status", status},
                      {"checkpoint", checkpoint_path},
                      {"files", files}};
  if (failure)
    j["failure"] = {{"phase", failure->phase},
                    {"epoch", failure->epoch},
                    {"batch", failure->batch},
                    {"message", failure->message}};
  else
    j["failure"] = nullptr;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.config = TrainConfig::from_json(j.at("config"));
    m.split = j.value("split", nlohmann::json::object());
    m.cache_config_hash = j.value("cache_config_hash", std::string());
    for (const auto& r : j.at("epochs")) {
      EpochMetrics e;
      e.phase = r.at("phase").get<std::string>();
      e.epoch = r.at("epoch").get<std::size_t>();
      e.mixmatch_loss = opt_from<double>(r, "mixmatch_loss");
      e.co_refinement_loss = opt_from<double>(r, "co_refinement_loss");
      e.co_refurbishing_loss = opt_from<double>(r, "co_refurbishing_loss");
      e.supervised_loss = opt_from<double>(r, "supervised_loss");
      e.validation_accuracy = opt_from<double>(r, "validation_accuracy");
      e.unlabeled_weight = r.value("unlabeled_weight", 0.0);
      e.seconds = r.value("seconds", 0.0);
      m.epochs.push_back(std::move(e));
    }
    m.schedule = j.value("schedule", std::vector<std::vector<std::string>>{});
    m.best_epoch = opt_from<std::size_t>(j, "best_epoch");
    m.best_validation_accuracy = opt_from<double>(j, "best_validation_accuracy");
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.status = j.value("status", std::string("completed"));
    m.checkpoint_path = j.value("checkpoint", std::string());
    m.files = j.value("files", nlohmann::json::object());
    if (j.contains("failure") && !j.at("failure").is_null()) {
      const auto& f = j.at("failure");
      m.failure = FailureInfo{f.at("phase").get<std::string>(), f.at("epoch").get<int>(), f.at("batch").get<int>(),
                              f.value("message", std::string())};
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(e.what());
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptManifest(path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Callbacks

void EarlyStopping::on_epoch_end(const EpochMetrics& metrics, const ModelParams<float>& params) {
  if (!metrics.validation_accuracy) {
    best_ = params;
    best_epoch_ = metrics.epoch;
    return;
  }
  const double acc = *metrics.validation_accuracy;
  if (!best_acc_ || acc > *best_acc_) {
    best_acc_ = acc;
    best_ = params;
    best_epoch_ = metrics.epoch;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
}

bool EarlyStopping::should_stop() const { return best_acc_.has_value() && since_best_ >= patience_; }

void BestCheckpoint::on_epoch_end(const EpochMetrics& metrics, const ModelParams<float>& params) {
  if (!metrics.validation_accuracy) return;
  if (best_ && *metrics.validation_accuracy <= *best_) return;
  best_ = metrics.validation_accuracy;
  auto meta = metadata_;
  meta["epoch"] = metrics.epoch;
  meta["validation_accuracy"] = *metrics.validation_accuracy;
  save_checkpoint(path_, params, meta);
}

// ---------------------------------------------------------------------------
// Trainer

Architecture architecture_for(const MfccConfig& cfg) {
  Architecture arch = Architecture::standard();
  arch.input_height = cfg.n_coefficients;
  arch.input_width = cfg.target_frames;
  arch.validate();
  return arch;
}

Trainer::Trainer(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split)
    : cfg_(cfg),
      cache_(cache),
      params_(ModelParams<float>::zeros(architecture_for(cache.config))),
      adam_(AdamState<float>::fresh(architecture_for(cache.config))),
      dropout_(substream(cfg.seed, "dropout")),
      shuffle_(substream(cfg.seed, "shuffle")),
      shuffle_unlabeled_(substream(cfg.seed, "shuffle_unlabeled")),
      augment_(substream(cfg.seed, "augment")),
      mixup_(substream(cfg.seed, "mixup")),
      refurbish_(substream(cfg.seed, "refurbish")),
      shuffle_co_refinement_(substream(cfg.seed, "shuffle_co_refinement")),
      shuffle_co_refurbishing_(substream(cfg.seed, "shuffle_co_refurbishing")) {
  cfg_.validate();
  split.check_disjoint();

  std::vector<std::size_t> classes;
  for (auto id : split.train_labeled) {
    const auto& rec = cache_.at(id);
    if (rec.class_id < 0) throw NoUsableData("labeled recording " + std::to_string(id) + " has no class in the cache");
    classes.push_back(static_cast<std::size_t>(rec.class_id));
  }
  std::tie(labeled_, validation_) = carve_validation(split.train_labeled, classes, cfg_.validation_fraction, cfg_.seed);
  if (labeled_.empty()) throw NoUsableData("no labeled training recordings left after the validation carve");
  if (cfg_.mode == TrainMode::Semi) {
    unlabeled_ = split.train_unlabeled;
    for (auto id : unlabeled_) (void)cache_.at(id);
  }

  Rng init = substream(cfg_.seed, "init");
  params_ = init_params<float>(params_.arch, init);
}

void Trainer::reset_optimizer() { adam_ = AdamState<float>::fresh(params_.arch); }

std::vector<LabeledBatch> Trainer::labeled_batches(Rng& rng) const {
  std::vector<std::uint32_t> order = labeled_;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<LabeledBatch> batches;
  for (std::size_t i = 0; i < order.size(); i += cfg_.batch_size) {
    LabeledBatch b;
    for (std::size_t k = i; k < std::min(order.size(), i + cfg_.batch_size); ++k) {
      const auto& rec = cache_.at(order[k]);
      b.inputs.push_back(&rec.features);
      b.labels.push_back(static_cast<std::size_t>(rec.class_id));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<UnlabeledBatch> Trainer::unlabeled_batches(Rng& rng, std::size_t count) const {
  std::vector<UnlabeledBatch> batches(count);
  if (unlabeled_.empty()) return batches;
  std::vector<std::uint32_t> order = unlabeled_;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  for (auto& b : batches)
    for (std::size_t k = 0; k < cfg_.batch_size; ++k) {
      b.inputs.push_back(&cache_.at(order[cursor]).features);
      cursor = (cursor + 1) % order.size();
    }
  return batches;
}

void Trainer::check(const StepResult& step, const char* phase, std::size_t epoch, std::size_t batch) const {
  if (!step.finite || !std::isfinite(step.objective.total))
    throw NonFiniteLoss(phase, static_cast<int>(epoch), static_cast<int>(batch));
}

double Trainer::supervised_epoch(std::size_t epoch) {
  const auto batches = labeled_batches(shuffle_);
  double total = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto terms = supervised_objective(batches[b]);
    const auto step = gradient_step(params_, adam_, cfg_.adam, std::span<const WeightedTarget>(terms), dropout_);
    check(step, "supervised", epoch, b);
    total += step.objective.total;
  }
  return total / static_cast<double>(batches.size());
}

double Trainer::run_mixmatch_pass(std::size_t epoch, double unlabeled_weight) {
  const auto labeled = labeled_batches(shuffle_);
  const auto unlabeled = unlabeled_batches(shuffle_unlabeled_, labeled.size());
  double total = 0.0;
  for (std::size_t b = 0; b < labeled.size(); ++b) {
    const auto mixed = mixmatch(labeled[b], unlabeled[b], params_, cfg_.ssl, SslRngs{augment_, mixup_});
    const auto terms = mixmatch_objective(mixed, unlabeled_weight);
    const auto step = gradient_step(params_, adam_, cfg_.adam, std::span<const WeightedTarget>(terms), dropout_);
    check(step, "mixmatch", epoch, b);
    total += step.objective.total;
  }
  return total / static_cast<double>(labeled.size());
}

double Trainer::run_co_refinement_pass(std::size_t epoch) {
  const auto labeled = labeled_batches(shuffle_co_refinement_);
  const auto unlabeled = unlabeled_batches(shuffle_unlabeled_, labeled.size());
  double total = 0.0;
  for (std::size_t b = 0; b < labeled.size(); ++b) {
    const auto step = co_refinement_step(params_, adam_, cfg_.adam, labeled[b], unlabeled[b],
                                         cfg_.ssl.refinement_weight, dropout_);
    check(step, "co_refinement", epoch, b);
    total += step.objective.total;
  }
  return total / static_cast<double>(labeled.size());
}

double Trainer::run_co_refurbishing_pass(std::size_t epoch) {
  const auto labeled = labeled_batches(shuffle_co_refurbishing_);
  const auto unlabeled = unlabeled_batches(shuffle_unlabeled_, labeled.size());
  double total = 0.0;
  for (std::size_t b = 0; b < labeled.size(); ++b) {
    const auto step = co_refurbishing_step(params_, adam_, cfg_.adam, labeled[b], unlabeled[b],
                                           cfg_.ssl.refurbish_weight, cfg_.ssl.refurbish_fraction, refurbish_,
                                           dropout_);
    check(step, "co_refurbishing", epoch, b);
    total += step.objective.total;
  }
  return total / static_cast<double>(labeled.size());
}

EpochMetrics Trainer::semi_epoch(std::size_t epoch, std::size_t total_epochs) {
  const auto start = Clock::now();
  EpochMetrics m;
  m.phase = "ssl";
  m.epoch = epoch;
  m.unlabeled_weight = cfg_.ssl.unlabeled_weight_at(epoch, total_epochs);
  auto& passes = schedule_.emplace_back();

  m.mixmatch_loss = run_mixmatch_pass(epoch, m.unlabeled_weight);
  passes.push_back("mixmatch");
  if (cfg_.ablation != Ablation::CoRefinement && cfg_.ablation != Ablation::Both) {
    m.co_refinement_loss = run_co_refinement_pass(epoch);
    passes.push_back("co_refinement");
  }
  if (cfg_.ablation != Ablation::CoRefurbishing && cfg_.ablation != Ablation::Both) {
    m.co_refurbishing_loss = run_co_refurbishing_pass(epoch);
    passes.push_back("co_refurbishing");
  }
  m.seconds = seconds_since(start);
  return m;
}

std::optional<double> Trainer::validation_accuracy() const {
  if (validation_.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (auto id : validation_) {
    const auto& rec = cache_.at(id);
    if (argmax_class(params_, rec.features) == static_cast<std::size_t>(rec.class_id)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(validation_.size());
}

// ---------------------------------------------------------------------------
// Runs

namespace {

RunManifest start_manifest(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split) {
  RunManifest m;
  m.config = cfg;
  m.split = split.to_json();
  m.cache_config_hash = to_hex(cache.config_hash());
  return m;
}

void run_supervised_phase(Trainer& trainer, std::size_t epochs, const std::string& phase, std::size_t patience,
                          RunManifest& manifest, std::vector<EpochCallback*>& extra) {
  EarlyStopping stopper(patience);
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto start = Clock::now();
    EpochMetrics m;
    m.phase = phase;
    m.epoch = e;
    m.supervised_loss = trainer.supervised_epoch(e);
    m.validation_accuracy = trainer.validation_accuracy();
    m.seconds = seconds_since(start);
    manifest.epochs.push_back(m);
    spdlog::info("{} epoch {}: loss {:.4f} val acc {}", phase, e, *m.supervised_loss,
                 m.validation_accuracy ? fmt::format("{:.4f}", *m.validation_accuracy) : std::string("n/a"));
    stopper.on_epoch_end(m, trainer.params());
    for (auto* cb : extra) cb->on_epoch_end(m, trainer.params());
    if (stopper.should_stop()) {
      spdlog::info("early stop after {} epochs", e + 1);
      break;
    }
  }
  if (stopper.best_params()) {
    trainer.params() = *stopper.best_params();
    manifest.best_epoch = stopper.best_epoch();
    manifest.best_validation_accuracy = stopper.best_accuracy();
  }
}

void record_failure(RunManifest& manifest, const NonFiniteLoss& e) {
  manifest.status = "failed";
  manifest.failure = FailureInfo{e.phase(), e.epoch(), e.batch(), e.what()};
  spdlog::error("{}", e.what());
}

}  // namespace

TrainResult train_baseline(const TrainConfig& cfg_in, const FeatureCache& cache, const SplitManifest& split,
                           std::vector<EpochCallback*> extra) {
  TrainConfig cfg = cfg_in;
  cfg.mode = TrainMode::Baseline;
  const auto start = Clock::now();
  RunManifest manifest = start_manifest(cfg, cache, split);
  Trainer trainer(cfg, cache, split);
  try {
    run_supervised_phase(trainer, cfg.epochs, "supervised", cfg.early_stop_patience, manifest, extra);
  } catch (const NonFiniteLoss& e) {
    record_failure(manifest, e);
  }
  manifest.wall_clock_seconds = seconds_since(start);
  return {trainer.params(), std::move(manifest)};
}

TrainResult train_semi(const TrainConfig& cfg_in, const FeatureCache& cache, const SplitManifest& split,
                       std::vector<EpochCallback*> extra) {
  TrainConfig cfg = cfg_in;
  cfg.mode = TrainMode::Semi;
  const auto start = Clock::now();
  RunManifest manifest = start_manifest(cfg, cache, split);
  Trainer trainer(cfg, cache, split);
  try {
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      EpochMetrics m = trainer.semi_epoch(e, cfg.epochs);
      m.validation_accuracy = trainer.validation_accuracy();
      manifest.epochs.push_back(m);
      spdlog::info("ssl epoch {}: mixmatch {:.4f} lambda_u {:.3f} val acc {}", e, *m.mixmatch_loss,
                   m.unlabeled_weight,
                   m.validation_accuracy ? fmt::format("{:.4f}", *m.validation_accuracy) : std::string("n/a"));
    }
    manifest.schedule = trainer.schedule();
    trainer.reset_optimizer();
    run_supervised_phase(trainer, cfg.refit_epochs, "refit", cfg.early_stop_patience, manifest, extra);
  } catch (const NonFiniteLoss& e) {
    manifest.schedule = trainer.schedule();
    record_failure(manifest, e);
  }
  manifest.wall_clock_seconds = seconds_since(start);
  return {trainer.params(), std::move(manifest)};
}

TrainResult ablate(TrainConfig cfg, const FeatureCache& cache, const SplitManifest& split, Ablation drop) {
  cfg.ablation = drop;
  return train_semi(cfg, cache, split);
}

TrainResult train(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                  std::vector<EpochCallback*> extra) {
  return cfg.mode == TrainMode::Baseline ? train_baseline(cfg, cache, split, std::move(extra))
                                         : train_semi(cfg, cache, split, std::move(extra));
}

RunFiles run_file_names(const std::filesystem::path& out_dir, const TrainConfig& cfg) {
  RunManifest probe;
  probe.config = cfg;
  const std::string tag = probe.tag();
  return {out_dir / (tag + ".lsnn"), out_dir / (tag + ".json")};
}

nlohmann::json checkpoint_metadata(const TrainConfig& cfg, const std::string& cache_config_hash,
                                   std::optional<std::size_t> epoch) {
  return {{"seed", cfg.seed},
          {"mode", to_string(cfg.mode)},
          {"ablation", to_string(cfg.ablation)},
          {"config_hash", cache_config_hash},
          {"epoch", opt_json(epoch)}};
}

TrainResult train_and_save(const TrainConfig& cfg, const FeatureCache& cache, const SplitManifest& split,
                           const std::filesystem::path& out_dir, nlohmann::json input_files) {
  std::filesystem::create_directories(out_dir);
  const RunFiles files = run_file_names(out_dir, cfg);
  const std::string hash = to_hex(cache.config_hash());
  BestCheckpoint best(files.checkpoint, checkpoint_metadata(cfg, hash, std::nullopt));
  TrainResult result = train(cfg, cache, split, {&best});

  result.manifest.files = std::move(input_files);
  if (!result.failed()) {
    save_checkpoint(files.checkpoint, result.params, checkpoint_metadata(cfg, hash, result.manifest.best_epoch));
    result.manifest.checkpoint_path = files.checkpoint.string();
    result.manifest.files[files.checkpoint.string()] = to_hex(sha256_file(files.checkpoint));
  }
  result.manifest.save(files.manifest);
  return result;
}

}  // namespace lung
