#include "doctest.h"

#include <fstream>
#include <limits>
#include <sstream>

#include "lung/cli.hpp"
#include "lung/feature_cache.hpp"
#include "lung/training.hpp"
#include "synthetic.hpp"

using namespace lung;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lung_ssl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string fixture(const std::string& name) { return std::string(LUNG_FIXTURE_DIR) + "/" + name; }

// Extracted corpus shared by the cases below.
const fs::path& workdir() {
  static const fs::path dir = [] {
    const auto root = testing::scratch_dir("cli");
    testing::SyntheticOptions opts;
    opts.per_class = 8;
    opts.seconds = 1.0;
    const auto files = testing::write_synthetic_corpus(root, opts);
    const auto cfg = testing::synthetic_mfcc_config(1.0);
    const auto o = invoke({"extract", "--audio-dir", files.audio_dir.string(), "--diagnosis-csv",
                           files.diagnosis_csv.string(), "--out", (root / "cache.lsfc").string(), "--clip-seconds",
                           "1", "--frames", std::to_string(cfg.target_frames), "--jobs", "2"});
    REQUIRE(o.code == 0);
    return root;
  }();
  return dir;
}

}  // namespace

TEST_CASE("help for every subcommand") {
  for (std::string sub : {"", "extract", "split", "train", "evaluate", "compare"}) {
    std::vector<std::string> args;
    if (!sub.empty()) args.push_back(sub);
    args.push_back("--help");
    const auto o = invoke(args);
    CHECK(o.code == cli::kExitOk);
    CHECK(!o.out.empty());
  }
}

TEST_CASE("usage errors exit 1") {
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"bogus"}).code == cli::kExitUsage);
  CHECK(invoke({"split", "--seed", "1"}).code == cli::kExitUsage);
  CHECK(invoke({"compare", "--a", fixture("baseline_reference.json"), "--b", fixture("semi_reference.json"),
                "--unknown-flag"})
            .code == cli::kExitUsage);
  CHECK(invoke({"compare", "--a", "/does/not/exist.json", "--b", fixture("semi_reference.json")}).code ==
        cli::kExitUsage);
}

TEST_CASE("extract, split, train, evaluate") {
  const auto& dir = workdir();
  const auto cache = (dir / "cache.lsfc").string();
  CHECK(fs::exists(cache_sidecar_path(dir / "cache.lsfc")));

  auto o = invoke({"split", "--cache", cache, "--seed", "2", "--out", (dir / "split.json").string()});
  REQUIRE(o.code == 0);

  for (std::string mode : {"baseline", "semi"}) {
    const auto out_dir = dir / ("run_" + mode);
    o = invoke({"train", "--cache", cache, "--manifest", (dir / "split.json").string(), "--mode", mode, "--seed", "5",
                "--out-dir", out_dir.string(), "--epochs", "2", "--refit-epochs", "2", "--batch-size", "8"});
    INFO(o.err);
    REQUIRE(o.code == 0);
    TrainConfig cfg;
    cfg.mode = parse_train_mode(mode);
    cfg.seed = 5;
    const auto files = run_file_names(out_dir, cfg);
    REQUIRE(fs::exists(files.checkpoint));
    REQUIRE(fs::exists(files.manifest));
    const auto manifest = RunManifest::load(files.manifest);
    CHECK(manifest.config.epochs == 2);
    CHECK(manifest.config.batch_size == 8);
    CHECK(manifest.files.contains(cache));

    o = invoke({"evaluate", "--checkpoint", files.checkpoint.string(), "--cache", cache, "--manifest",
                (dir / "split.json").string(), "--report", (out_dir / "report.txt").string(), "--json",
                (out_dir / "report.json").string(), "--confusion", (out_dir / "confusion.csv").string()});
    INFO(o.err);
    REQUIRE(o.code == 0);
    CHECK(fs::file_size(out_dir / "report.txt") > 0);
    CHECK(fs::file_size(out_dir / "confusion.csv") > 0);
    std::ifstream in(out_dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.contains("report"));
    CHECK(j.contains("confusion"));
    CHECK(j.at("predictions").size() == SplitManifest::load(dir / "split.json").test.size());
  }

  o = invoke({"train", "--cache", cache, "--manifest", (dir / "split.json").string(), "--mode", "semi", "--drop",
              "co_refinement", "--seed", "5", "--out-dir", (dir / "ablation").string(), "--epochs", "1",
              "--refit-epochs", "1"});
  CHECK(o.code == 0);
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir / "ablation"))
    found = found || e.path().filename().string().find("no_co_refinement") != std::string::npos;
  CHECK(found);

  o = invoke({"compare", "--a", (dir / "run_baseline" / "report.json").string(), "--b",
              (dir / "run_semi" / "report.json").string()});
  CHECK(o.code == 0);
  CHECK(o.out.find("COPD") != std::string::npos);
}

TEST_CASE("a checkpoint from another feature configuration is rejected with exit 2") {
  const auto& dir = workdir();
  const auto cache_path = dir / "cache.lsfc";
  auto o = invoke({"split", "--cache", cache_path.string(), "--seed", "2", "--out", (dir / "split2.json").string()});
  REQUIRE(o.code == 0);
  o = invoke({"train", "--cache", cache_path.string(), "--manifest", (dir / "split2.json").string(), "--mode",
              "baseline", "--seed", "1", "--out-dir", (dir / "hash_run").string(), "--epochs", "1"});
  REQUIRE(o.code == 0);
  TrainConfig cfg;
  cfg.mode = TrainMode::Baseline;
  cfg.seed = 1;
  const auto ckpt = run_file_names(dir / "hash_run", cfg).checkpoint;

  // Same recordings featurized with a different hop.
  auto cache = load_feature_cache(cache_path);
  cache.config.hop_length = 256;
  save_feature_cache(dir / "other.lsfc", cache);

  o = invoke({"evaluate", "--checkpoint", ckpt.string(), "--cache", (dir / "other.lsfc").string(), "--manifest",
              (dir / "split2.json").string(), "--report", (dir / "r.txt").string()});
  CHECK(o.code == cli::kExitData);
  CHECK(o.err.find("ConfigHashMismatch") != std::string::npos);
}

TEST_CASE("data and numerical failures map to exit codes 2 and 3") {
  const auto& dir = workdir();
  std::ofstream(dir / "broken.lsfc") << "LSFC garbage";
  std::ofstream(cache_sidecar_path(dir / "broken.lsfc")) << "{}";
  auto o = invoke({"split", "--cache", (dir / "broken.lsfc").string(), "--seed", "1", "--out",
                   (dir / "s.json").string()});
  CHECK(o.code == cli::kExitData);

  auto cache = load_feature_cache(dir / "cache.lsfc");
  for (auto& r : cache.records) r.features.data[0] = std::numeric_limits<float>::infinity();
  save_feature_cache(dir / "inf.lsfc", cache);
  o = invoke({"split", "--cache", (dir / "inf.lsfc").string(), "--seed", "1", "--out", (dir / "inf.json").string()});
  REQUIRE(o.code == 0);
  o = invoke({"train", "--cache", (dir / "inf.lsfc").string(), "--manifest", (dir / "inf.json").string(), "--mode",
              "baseline", "--seed", "1", "--out-dir", (dir / "inf_run").string(), "--epochs", "1"});
  CHECK(o.code == cli::kExitNumerical);
  CHECK(o.err.find("NonFiniteLoss") != std::string::npos);
}

TEST_CASE("compare of the two reference reports shows the pneumonia precision gain") {
  const auto o = invoke({"compare", "--a", fixture("baseline_reference.json"), "--b", fixture("semi_reference.json")});
  REQUIRE(o.code == 0);
  std::istringstream in(o.out);
  std::string line;
  std::string delta;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string label, dp;
    ls >> label >> dp;
    if (label == "Pneumonia") delta = dp;
  }
  CHECK(delta == "+0.42");
}
