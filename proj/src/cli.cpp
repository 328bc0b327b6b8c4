#include "lung/cli.hpp"

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <thread>

#include "lung/checkpoint.hpp"
#include "lung/errors.hpp"
#include "lung/evaluation.hpp"
#include "lung/feature_cache.hpp"
#include "lung/log.hpp"
#include "lung/training.hpp"

namespace lung::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string file_hash(const fs::path& path) { return to_hex(sha256_file(path)); }

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numerical: return kExitNumerical;
    case ErrorKind::Logic: return kExitUsage;
  }
  return kExitData;
}

struct ExtractArgs {
  std::string audio_dir;
  std::string diagnosis_csv;
  std::string out;
  MfccConfig mfcc;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

struct SplitArgs {
  std::string cache;
  std::string out;
  SplitOptions options;
};

struct TrainArgs {
  std::string cache;
  std::string manifest;
  std::string out_dir;
  std::string mode = "semi";
  std::string drop = "none";
  TrainConfig config;
  bool no_augment = false;
};

struct EvaluateArgs {
  std::string checkpoint;
  std::string cache;
  std::string manifest;
  std::string report;
  std::string json;
  std::string confusion;
};

struct CompareArgs {
  std::string a;
  std::string b;
};

int do_extract(const ExtractArgs& args, std::ostream& out) {
  const auto diagnoses = load_diagnoses(args.diagnosis_csv);
  const Corpus corpus = scan_corpus(args.audio_dir, diagnoses);
  FeatureCache cache = build_feature_cache(corpus, args.mfcc, args.jobs);
  cache.provenance = {{"audio_dir", args.audio_dir},
                      {"diagnosis_csv", args.diagnosis_csv},
                      {"diagnosis_csv_sha256", file_hash(args.diagnosis_csv)},
                      {"excluded_recordings", corpus.excluded_recordings}};
  save_feature_cache(args.out, cache);
  out << "wrote " << cache.size() << " recordings to " << args.out << " (" << cache.failures.size()
      << " failures, " << corpus.excluded_recordings << " excluded)\n";
  return kExitOk;
}

int do_split(const SplitArgs& args, std::ostream& out) {
  const FeatureCache cache = load_feature_cache(args.cache);
  const auto items = cache.split_items();
  const SplitManifest m = make_splits(items, args.options);
  m.save(args.out);
  out << "labeled " << m.train_labeled.size() << ", unlabeled " << m.train_unlabeled.size() << ", test "
      << m.test.size() << " -> " << args.out << '\n';
  return kExitOk;
}

int do_train(TrainArgs args, std::ostream& out, std::ostream& err) {
  args.config.mode = parse_train_mode(args.mode);
  args.config.ablation = parse_ablation(args.drop);
  if (args.no_augment) args.config.ssl.augment.enabled = false;
  args.config.validate();

  const FeatureCache cache = load_feature_cache(args.cache);
  const SplitManifest split = SplitManifest::load(args.manifest);
  nlohmann::json inputs = {{args.cache, file_hash(args.cache)},
                           {cache_sidecar_path(args.cache).string(), file_hash(cache_sidecar_path(args.cache))},
                           {args.manifest, file_hash(args.manifest)}};
  const TrainResult result = train_and_save(args.config, cache, split, args.out_dir, inputs);
  const RunFiles files = run_file_names(args.out_dir, args.config);
  if (result.failed()) {
    err << "training failed: " << result.manifest.failure->message << "; manifest " << files.manifest.string()
        << '\n';
    return kExitNumerical;
  }
  out << "checkpoint " << files.checkpoint.string() << "\nmanifest " << files.manifest.string() << '\n';
  return kExitOk;
}

int do_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  std::optional<Sha256Digest> expected;
  if (ckpt.metadata.contains("config_hash") && ckpt.metadata.at("config_hash").is_string())
    expected = from_hex(ckpt.metadata.at("config_hash").get<std::string>());
  const FeatureCache cache = load_feature_cache(args.cache, expected);
  const SplitManifest split = SplitManifest::load(args.manifest);
  if (split.test.empty()) throw EmptyEvaluation("the manifest has no test recordings");

  std::vector<std::size_t> truth, predicted;
  for (auto id : split.test) {
    const auto& rec = cache.at(id);
    if (rec.class_id < 0) throw NoUsableData("test recording " + std::to_string(id) + " has no class");
    truth.push_back(static_cast<std::size_t>(rec.class_id));
    predicted.push_back(predict(ckpt.params, to_input<float>(rec.features)).argmax());
  }
  const ConfusionMatrix cm = confusion(truth, predicted);
  const ClassificationReport r = report(cm);
  const std::string text = format_report(r);
  out << text;
  write_text(args.report, text);

  if (!args.json.empty()) {
    nlohmann::json j;
    j["report"] = r.to_json();
    j["confusion"] = cm.counts;
    j["test_ids"] = split.test;
    j["predictions"] = predicted;
    j["files"] = {{args.checkpoint, file_hash(args.checkpoint)},
                  {args.cache, file_hash(args.cache)},
                  {args.manifest, file_hash(args.manifest)}};
    write_text(args.json, j.dump(2) + "\n");
  }
  if (!args.confusion.empty()) write_text(args.confusion, cm.to_csv());
  return kExitOk;
}

int do_compare(const CompareArgs& args, std::ostream& out) {
  const auto a = load_report(args.a);
  const auto b = load_report(args.b);
  out << format_comparison(a, b);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lung-sound classification with a semi-supervised CNN", "lung_ssl"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log", log_level, "error, info or debug (overrides LUNG_SSL_LOG)");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Featurize a corpus into an MFCC cache");
  extract->add_option("--audio-dir", ex.audio_dir, "Directory of .wav recordings")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--diagnosis-csv", ex.diagnosis_csv, "patient_id,diagnosis file")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", ex.out, "Cache file to write")->required();
  extract->add_option("--sample-rate", ex.mfcc.sample_rate, "Working sample rate")->capture_default_str();
  extract->add_option("--clip-seconds", ex.mfcc.clip_seconds, "Clip length after truncation/padding")->capture_default_str();
  extract->add_option("--frames", ex.mfcc.target_frames, "Frames per matrix")->capture_default_str();
  extract->add_option("--n-mfcc", ex.mfcc.n_coefficients, "Cepstral coefficients kept")->capture_default_str();
  extract->add_option("--n-mels", ex.mfcc.n_mel_filters, "Mel filters")->capture_default_str();
  extract->add_option("--n-fft", ex.mfcc.n_fft, "FFT size")->capture_default_str();
  extract->add_option("--frame-length", ex.mfcc.frame_length, "Window length")->capture_default_str();
  extract->add_option("--hop", ex.mfcc.hop_length, "Hop length")->capture_default_str();
  extract->add_option("--pre-emphasis", ex.mfcc.pre_emphasis_coeff, "Pre-emphasis coefficient")->capture_default_str();
  extract->add_option("--jobs", ex.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Build labeled/unlabeled/test splits");
  split->add_option("--cache", sp.cache, "Feature cache")->required()->check(CLI::ExistingFile);
  split->add_option("--seed", sp.options.seed, "Random seed")->required();
  split->add_option("--unlabeled-fraction", sp.options.unlabeled_fraction, "Share of training data with hidden labels")
      ->capture_default_str();
  split->add_option("--test-fraction", sp.options.test_fraction, "Per-class test share")->capture_default_str();
  split->add_flag("--patient-level", sp.options.patient_level, "Keep each patient's recordings in one test/train side");
  split->add_option("--out", sp.out, "Manifest JSON to write")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a baseline or semi-supervised model");
  auto& tc = tr.config;
  train_cmd->add_option("--cache", tr.cache, "Feature cache")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--manifest", tr.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--mode", tr.mode, "baseline or semi")->check(CLI::IsMember({"baseline", "semi"}))->capture_default_str();
  train_cmd->add_option("--drop", tr.drop, "Skip SSL passes: co_refinement, co_refurbishing or both")
      ->check(CLI::IsMember({"none", "co_refinement", "co_refurbishing", "both"}))
      ->capture_default_str();
  train_cmd->add_option("--seed", tc.seed, "Random seed")->required();
  train_cmd->add_option("--out-dir", tr.out_dir, "Directory for checkpoint and manifest")->required();
  train_cmd->add_option("--epochs", tc.epochs, "SSL epochs (semi) or training epochs (baseline)")->capture_default_str();
  train_cmd->add_option("--refit-epochs", tc.refit_epochs, "Supervised refit epochs after SSL")->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tc.adam.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--patience", tc.early_stop_patience, "Early-stopping patience")->capture_default_str();
  train_cmd->add_option("--validation-fraction", tc.validation_fraction, "Labeled share held out for validation")
      ->capture_default_str();
  train_cmd->add_option("--temperature", tc.ssl.temperature, "Sharpening temperature")->capture_default_str();
  train_cmd->add_option("--augmentations", tc.ssl.n_augmentations, "Augmentations per unlabeled item")->capture_default_str();
  train_cmd->add_option("--alpha", tc.ssl.mixup_alpha, "Mixup Beta parameter")->capture_default_str();
  train_cmd->add_option("--lambda-u", tc.ssl.unlabeled_loss_weight, "Unlabeled loss weight")->capture_default_str();
  train_cmd->add_option("--rampup", tc.ssl.rampup_fraction, "Share of epochs for the lambda-u ramp")->capture_default_str();
  train_cmd->add_option("--omega", tc.ssl.refurbish_weight, "Weight on the true label when refurbishing")->capture_default_str();
  train_cmd->add_option("--rho", tc.ssl.refurbish_fraction, "Share of a labeled batch refurbished")->capture_default_str();
  train_cmd->add_option("--refinement-weight", tc.ssl.refinement_weight, "Weight of the self-prediction term")
      ->capture_default_str();
  train_cmd->add_flag("--no-augment", tr.no_augment, "Disable feature augmentation");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  evaluate->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--cache", ev.cache, "Feature cache")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", ev.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--report", ev.report, "Text report to write")->required();
  evaluate->add_option("--json", ev.json, "JSON report to write");
  evaluate->add_option("--confusion", ev.confusion, "Confusion matrix CSV to write");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Per-class metric deltas between two reports (b - a)");
  compare->add_option("--a", cmp.a, "Reference report JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--b", cmp.b, "Compared report JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!log_level.empty())
      set_log_level(log_level);
    else
      configure_logging();
    if (*extract) return do_extract(ex, out);
    if (*split) return do_split(sp, out);
    if (*train_cmd) return do_train(tr, out, err);
    if (*evaluate) return do_evaluate(ev, out);
    if (*compare) return do_compare(cmp, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace lung::cli
