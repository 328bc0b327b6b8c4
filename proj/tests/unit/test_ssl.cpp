#include "doctest.h"

#include <cmath>
#include <random>

#include "lung/errors.hpp"
#include "lung/gradcheck.hpp"
#include "lung/ssl.hpp"

using namespace lung;

namespace {

MfccMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  MfccMatrix m(rows, cols);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (auto& v : m.data) v = g(rng);
  return m;
}

SoftLabel random_label(Rng& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  SoftLabel p;
  double z = 0.0;
  for (auto& v : p.probs) z += (v = g(rng));
  for (auto& v : p.probs) v /= z;
  return p;
}

SslConfig neutral_config() {
  SslConfig cfg;
  cfg.augment.enabled = false;
  cfg.n_augmentations = 1;
  cfg.temperature = 1.0;
  cfg.forced_lambda = 1.0;
  return cfg;
}

struct TinySetup {
  Architecture arch = Architecture::shrunken();
  ModelParams<double> params;
  std::vector<MfccMatrix> xs;
  std::vector<MfccMatrix> us;
  LabeledBatch labeled;
  UnlabeledBatch unlabeled;

  explicit TinySetup(std::uint64_t seed, std::size_t n_labeled = 4, std::size_t n_unlabeled = 4) {
    Rng rng(seed);
    params = init_params<double>(arch, rng);
    for (std::size_t i = 0; i < n_labeled; ++i) xs.push_back(random_matrix(8, 16, rng));
    for (std::size_t i = 0; i < n_unlabeled; ++i) us.push_back(random_matrix(8, 16, rng));
    for (std::size_t i = 0; i < n_labeled; ++i) {
      labeled.inputs.push_back(&xs[i]);
      labeled.labels.push_back(i % kNumClasses);
    }
    for (auto& u : us) unlabeled.inputs.push_back(&u);
  }
};

bool same_terms(const std::vector<WeightedTarget>& a, const std::vector<WeightedTarget>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].input != b[i].input || !(a[i].target == b[i].target) || a[i].kind != b[i].kind ||
        a[i].weight != b[i].weight)
      return false;
  return true;
}

}  // namespace

TEST_CASE("sharpen") {
  const SoftLabel p{{0.6, 0.4, 0, 0, 0, 0}};
  CHECK(sharpen(p, 1.0) == p);
  const auto s = sharpen(p, 0.5);
  CHECK(s[0] == doctest::Approx(0.36 / 0.52).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.16 / 0.52).epsilon(1e-12));
  CHECK(s[0] == doctest::Approx(0.6923).epsilon(1e-4));
  CHECK(s[1] == doctest::Approx(0.3077).epsilon(1e-4));
  for (std::size_t i = 2; i < kNumClasses; ++i) CHECK(s[i] == 0.0);

  for (double t : {0.1, 0.5, 3.0}) CHECK(sharpen(SoftLabel::one_hot(4), t) == SoftLabel::one_hot(4));
  CHECK_THROWS_AS(sharpen(SoftLabel{}, 0.5), DegenerateInput);
  CHECK_THROWS_AS(sharpen(p, 0.0), InvalidConfig);
}

TEST_CASE("sharpening moves entropy in the direction of the temperature") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_label(rng);
    const double h = p.entropy();
    const auto cold = sharpen(p, 0.5);
    const auto hot = sharpen(p, 2.0);
    CHECK(cold.valid());
    CHECK(hot.valid());
    CHECK(cold.entropy() < h);
    CHECK(hot.entropy() > h);
  }
  const auto u = SoftLabel::uniform();
  CHECK(sharpen(u, 0.5).entropy() == doctest::Approx(u.entropy()).epsilon(1e-12));
}

TEST_CASE("augment") {
  Rng rng(2);
  const auto x = random_matrix(40, 862, rng);
  AugmentConfig off;
  off.noise_scale = 0.0;
  off.max_mask_width = 0;
  CHECK(augment(x, off, rng) == x);

  AugmentConfig on;
  Rng a(10), b(11);
  const auto ya = augment(x, on, a);
  const auto yb = augment(x, on, b);
  CHECK(ya.rows == 40);
  CHECK(ya.cols == 862);
  CHECK(!(ya == yb));
  CHECK(!(ya == x));
}

TEST_CASE("guess_label") {
  TinySetup s(3);
  const auto& u = s.us[0];
  SslConfig cfg = neutral_config();
  Rng rng(4);
  CHECK(guess_label(s.params, u, 1, 1.0, cfg.augment, rng) == predict(s.params, to_input<double>(u)));

  // Rebuild the averaged prediction from the same augmentation draws.
  AugmentConfig aug;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1(seed), r2(seed);
    const auto guess = guess_label(s.params, u, 2, 0.5, aug, r1);
    SoftLabel mean;
    for (int k = 0; k < 2; ++k) {
      const auto p = predict(s.params, to_input<double>(augment(u, aug, r2)));
      for (std::size_t c = 0; c < kNumClasses; ++c) mean[c] += p[c] / 2.0;
    }
    CHECK(guess.valid());
    CHECK(guess.entropy() <= mean.entropy() + 1e-12);
    const auto expect = sharpen(mean, 0.5);
    for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(guess[c] == doctest::Approx(expect[c]).epsilon(1e-12));
  }
}

TEST_CASE("mixup") {
  Rng rng(5);
  const auto x1 = random_matrix(4, 5, rng);
  const auto x2 = random_matrix(4, 5, rng);
  const auto y1 = SoftLabel::one_hot(1);
  const auto y2 = random_label(rng);

  const auto same = mixup(x1, y1, x2, y2, 0.75, rng, 1.0);
  CHECK(same.x == x1);
  CHECK(same.y == y1);

  const auto half = mixup(x1, y1, x2, y2, 0.75, rng, 0.5);
  for (std::size_t i = 0; i < x1.data.size(); ++i)
    CHECK(half.x.data[i] == doctest::Approx(0.5 * (x1.data[i] + x2.data[i])).epsilon(1e-6));
  for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(half.y[c] == doctest::Approx(0.5 * (y1[c] + y2[c])));

  double lambda_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = mixup(x1, y1, x2, y2, 0.75, rng);
    CHECK(m.lambda >= 0.5);
    CHECK(m.lambda <= 1.0);
    CHECK(m.y.valid());
    // At least half the weight sits on the first argument.
    CHECK(m.y[1] >= 0.5 * y1[1]);
    CHECK(m.x.data[0] == doctest::Approx(m.lambda * x1.data[0] + (1 - m.lambda) * x2.data[0]).epsilon(1e-5));
    lambda_sum += m.lambda;
  }
  // E[max(L, 1-L)] for L ~ Beta(0.75, 0.75) is well inside (0.5, 1).
  CHECK(lambda_sum / 10000 > 0.6);
  CHECK(lambda_sum / 10000 < 0.9);

  CHECK_THROWS_AS(mixup(x1, y1, random_matrix(3, 5, rng), y2, 0.75, rng), ShapeMismatch);
}

TEST_CASE("mixmatch batch sizes and targets") {
  TinySetup s(6, 4, 4);
  SslConfig cfg;
  for (std::size_t k : {1u, 2u, 3u}) {
    cfg.n_augmentations = k;
    Rng aug(1), mix(2);
    const auto out = mixmatch(s.labeled, s.unlabeled, s.params, cfg, {aug, mix});
    CHECK(out.labeled.size() == 4);
    CHECK(out.unlabeled.size() == 4 * k);
    for (const auto& t : out.labeled.targets) CHECK(t.valid());
    for (const auto& t : out.unlabeled.targets) CHECK(t.valid());
    for (auto o : out.labeled.origin) CHECK(o == Origin::Labeled);
    for (auto o : out.unlabeled.origin) CHECK(o == Origin::Unlabeled);
  }
}

TEST_CASE("neutral mixmatch reproduces the labeled batch") {
  TinySetup s(7, 5, 3);
  Rng aug(1), mix(2);
  const auto out = mixmatch(s.labeled, s.unlabeled, s.params, neutral_config(), {aug, mix});
  REQUIRE(out.labeled.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out.labeled.inputs[i] == s.xs[i]);
    CHECK(out.labeled.targets[i] == SoftLabel::one_hot(s.labeled.labels[i]));
  }
  // Unlabeled targets are the plain predictions.
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.unlabeled.inputs[i] == s.us[i]);
    CHECK(out.unlabeled.targets[i] == predict(s.params, to_input<double>(s.us[i])));
  }
}

TEST_CASE("mixmatch loss") {
  TinySetup s(8, 3, 3);
  Rng aug(1), mix(2);
  auto out = mixmatch(s.labeled, s.unlabeled, s.params, SslConfig{}, {aug, mix});

  const auto full = mixmatch_loss(s.params, out, 1.0);
  CHECK(full.total == doctest::Approx(full.supervised + full.unlabeled));
  CHECK(full.unlabeled > 0.0);

  const auto off = mixmatch_loss(s.params, out, 0.0);
  CHECK(off.unlabeled == 0.0);
  CHECK(off.total == off.supervised);
  for (const auto& t : mixmatch_objective(out, 0.0)) CHECK(t.kind == LossKind::CrossEntropy);

  auto no_u = out;
  no_u.unlabeled = {};
  const auto sup_only = mixmatch_loss(s.params, no_u, 1.0);
  CHECK(sup_only.total == sup_only.supervised);
  CHECK(mixmatch_objective(no_u, 1.0).size() == 3);

  // A model that is certain of class 0 with class-0 targets everywhere.
  auto sure = ModelParams<double>::zeros(s.arch);
  sure.dense_bias[0] = 1000.0;
  MixMatchOutput perfect;
  for (int i = 0; i < 3; ++i) {
    perfect.labeled.inputs.push_back(s.xs[0]);
    perfect.labeled.targets.push_back(SoftLabel::one_hot(0));
    perfect.labeled.origin.push_back(Origin::Labeled);
    perfect.unlabeled.inputs.push_back(s.us[0]);
    perfect.unlabeled.targets.push_back(SoftLabel::one_hot(0));
    perfect.unlabeled.origin.push_back(Origin::Unlabeled);
  }
  CHECK(mixmatch_loss(sure, perfect, 1.0).total == 0.0);
}

TEST_CASE("unlabeled weight ramps linearly") {
  SslConfig cfg;
  CHECK(cfg.unlabeled_weight_at(0, 20) == doctest::Approx(0.2));
  CHECK(cfg.unlabeled_weight_at(2, 20) == doctest::Approx(0.6));
  CHECK(cfg.unlabeled_weight_at(4, 20) == 1.0);
  CHECK(cfg.unlabeled_weight_at(19, 20) == 1.0);
  cfg.rampup_fraction = 0.0;
  CHECK(cfg.unlabeled_weight_at(0, 20) == 1.0);
}

TEST_CASE("co-refinement") {
  TinySetup s(9, 4, 4);
  SUBCASE("zero weight is a supervised step") {
    CHECK(same_terms(co_refinement_objective(s.params, s.labeled, s.unlabeled, 0.0),
                     supervised_objective(s.labeled)));
    auto a = s.params, b = s.params;
    auto sa = AdamState<double>::fresh(s.arch), sb = sa;
    Rng da(1), db(1);
    co_refinement_step(a, sa, AdamConfig{}, s.labeled, s.unlabeled, 0.0, da);
    const auto terms = supervised_objective(s.labeled);
    gradient_step(b, sb, AdamConfig{}, std::span<const WeightedTarget>(terms), db);
    CHECK(a.same_values(b));
  }
  SUBCASE("unlabeled targets are the frozen predictions") {
    const auto terms = co_refinement_objective(s.params, s.labeled, s.unlabeled, 0.5);
    REQUIRE(terms.size() == 8);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& t = terms[4 + i];
      const auto p = predict(s.params, to_input<double>(s.us[i]));
      CHECK(t.target == p);
      CHECK(t.weight == doctest::Approx(0.5 / 4));
      // Cross-entropy of a prediction against itself is its entropy.
      CHECK(loss_value(p, t.target, LossKind::CrossEntropy) == doctest::Approx(p.entropy()).epsilon(1e-12));
    }
    const auto v = evaluate_objective(s.params, std::span<const WeightedTarget>(terms));
    CHECK(std::isfinite(v.total));
    CHECK(v.total >= 0.0);
  }
  SUBCASE("self-distillation gradient vanishes at its own targets") {
    // d/dlogits CE(p, q) = p - q, which is zero where q was taken from p.
    const auto terms = co_refinement_objective(s.params, s.labeled, s.unlabeled, 0.5);
    const std::vector<WeightedTarget> self(terms.begin() + 4, terms.end());
    auto grads = ModelParams<double>::zeros(s.arch);
    accumulate_objective(s.params, std::span<const WeightedTarget>(self), false, nullptr, grads);
    for (const auto* t : grads.tensors())
      for (double v : t->values()) CHECK(std::fabs(v) < 1e-12);
  }
  SUBCASE("co-refinement gradient matches central differences") {
    // The unlabeled term is stationary here, so a step of 1e-3 would leave
    // O(eps^2) truncation in its share; a finer step keeps that below the floor.
    const double eps = 1e-5, floor = 1e-6;
    std::size_t smooth = 0;
    for (std::uint64_t seed = 20; seed < 40 && smooth < 5; ++seed) {
      TinySetup t(seed, 1, 1);
      std::normal_distribution<double> g;
      Rng jitter(seed);
      for (auto* tensor : t.params.tensors())
        for (auto& v : tensor->values()) v += 0.1 * g(jitter);
      const auto terms = co_refinement_objective(t.params, t.labeled, t.unlabeled, 0.5);
      auto analytic = ModelParams<double>::zeros(t.arch);
      accumulate_objective(t.params, std::span<const WeightedTarget>(terms), false, nullptr, analytic);

      // Loss with targets held fixed at their construction-time values.
      const auto xin = to_input<double>(t.xs[0]);
      const auto uin = to_input<double>(t.us[0]);
      const auto frozen = terms[1].target;
      const auto base = activation_pattern(forward(t.params, xin, false, nullptr));
      const auto base_u = activation_pattern(forward(t.params, uin, false, nullptr));
      std::size_t changes = 0;
      auto loss = [&](const ModelParams<double>& p) {
        const auto fx = forward(p, xin, false, nullptr);
        const auto fu = forward(p, uin, false, nullptr);
        if (activation_pattern(fx) != base || activation_pattern(fu) != base_u) ++changes;
        return loss_value(fx.probs, SoftLabel::one_hot(t.labeled.labels[0]), LossKind::CrossEntropy) +
               0.5 * loss_value(fu.probs, frozen, LossKind::CrossEntropy);
      };
      const auto r = compare_with_finite_differences(t.params, analytic, loss, eps, floor);
      if (changes > 0) continue;
      ++smooth;
      INFO(r.worst_tensor << "[" << r.worst_index << "] " << r.worst_analytic << " vs " << r.worst_numeric);
      CHECK(r.max_relative_error < 1e-4);
    }
    CHECK(smooth >= 3);
  }
}

TEST_CASE("co-refurbishing") {
  const auto y = refurbish_target(SoftLabel::one_hot(2), SoftLabel::uniform(), 0.7);
  const SoftLabel expect{{0.05, 0.05, 0.75, 0.05, 0.05, 0.05}};
  for (std::size_t c = 0; c < kNumClasses; ++c) CHECK(y[c] == doctest::Approx(expect[c]).epsilon(1e-12));

  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const double omega = std::uniform_real_distribution<double>(0, 1)(rng);
    CHECK(refurbish_target(SoftLabel::one_hot(i % 6), random_label(rng), omega).valid());
  }

  TinySetup s(11, 10, 4);
  SUBCASE("omega 1 and rho 1 reduce to supervision") {
    Rng r(1);
    CHECK(same_terms(co_refurbishing_objective(s.params, s.labeled, s.unlabeled, 1.0, 1.0, r),
                     supervised_objective(s.labeled)));
  }
  SUBCASE("a rho share of labeled targets is refurbished") {
    Rng r(2);
    const auto terms = co_refurbishing_objective(s.params, s.labeled, s.unlabeled, 0.7, 0.3, r);
    REQUIRE(terms.size() == 14);
    std::size_t refurbished = 0;
    double weight = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      CHECK(terms[i].target.valid());
      weight += terms[i].weight;
      if (i < 10 && !(terms[i].target == SoftLabel::one_hot(s.labeled.labels[i]))) {
        ++refurbished;
        CHECK(terms[i].target[s.labeled.labels[i]] >= 0.7);
      }
    }
    CHECK(refurbished == 3);
    CHECK(weight == doctest::Approx(1.0));
    CHECK(terms[10].weight == doctest::Approx(0.3 * terms[0].weight));
  }
  SUBCASE("a step keeps the model finite") {
    auto p = s.params;
    auto st = AdamState<double>::fresh(s.arch);
    Rng r(3), d(4);
    const auto res = co_refurbishing_step(p, st, AdamConfig{}, s.labeled, s.unlabeled, 0.7, 0.3, r, d);
    CHECK(res.finite);
    CHECK(res.objective.total >= 0.0);
    CHECK(p.all_finite());
    CHECK(!p.same_values(s.params));
  }
}

TEST_CASE("config validation") {
  SslConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = cfg;
  bad.n_augmentations = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = cfg;
  bad.refurbish_weight = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = cfg;
  bad.mixup_alpha = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}
