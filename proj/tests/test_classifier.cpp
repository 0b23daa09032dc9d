#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "mieo/classifier.hpp"
#include "mieo/error.hpp"
#include "mieo/rng.hpp"
#include "mieo/synth.hpp"

using namespace mieo;

namespace {

// Two interleaved diagonal bands, separable by x0 + x1 >= 1.
void toy_bands(int n, RandomStream& rng, Eigen::MatrixXd& x, std::vector<Label>& labels) {
  x.resize(n, 2);
  labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(0.5);
    const double shift = pos ? 1.5 : -0.5;
    x(i, 0) = rng.uniform(0.0, 1.0) + shift;
    x(i, 1) = rng.uniform(0.0, 1.0) + shift;
    labels[static_cast<std::size_t>(i)] = pos ? Label::positive : Label::negative;
  }
}

ClassifierConfig toy_config(int epochs) {
  ClassifierConfig cfg;
  cfg.hidden_widths = {16, 8, 4};
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.lr = 5e-3;
  cfg.seed = 5;
  return cfg;
}

bool same_history(const ClassifierHistory& a, const ClassifierHistory& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    if (a.epochs[e].train_loss != b.epochs[e].train_loss) return false;
    if (a.epochs[e].val_loss != b.epochs[e].val_loss) return false;
    if (a.epochs[e].val_balanced_accuracy != b.epochs[e].val_balanced_accuracy) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("weighted bce matches its closed forms") {
  CHECK(std::abs(weighted_bce(0.5, 1, 1.0) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(weighted_bce(0.5, 1, 3.0) - 3.0 * std::log(2.0)) < 1e-12);
  CHECK(std::abs(weighted_bce(0.5, 0, 3.0) - std::log(2.0)) < 1e-12);  // weight touches positives only
  CHECK(std::abs(weighted_bce(0.9, 1, 1.0) + std::log(0.9)) < 1e-12);
}

TEST_CASE("weighted bce with unit weight is standard bce everywhere") {
  RandomStream rng(2);
  for (int i = 0; i < 500; ++i) {
    const double p = rng.uniform(1e-6, 1.0 - 1e-6);
    const int t = rng.bernoulli(0.5) ? 1 : 0;
    const double standard = -(t * std::log(p) + (1 - t) * std::log(1.0 - p));
    CHECK(std::abs(weighted_bce(p, t, 1.0) - standard) < 1e-12);
  }
}

TEST_CASE("weighted bce is monotone in the probability") {
  double prev1 = weighted_bce(0.01, 1, 2.0);
  double prev0 = weighted_bce(0.01, 0, 2.0);
  for (double p = 0.02; p < 1.0; p += 0.01) {
    const double cur1 = weighted_bce(p, 1, 2.0);
    const double cur0 = weighted_bce(p, 0, 2.0);
    CHECK(cur1 < prev1);  // decreasing for targets 1
    CHECK(cur0 > prev0);  // increasing for targets 0
    prev1 = cur1;
    prev0 = cur0;
  }
}

TEST_CASE("extreme probabilities are clamped instead of blowing up") {
  CHECK(std::isfinite(weighted_bce(0.0, 1, 1.0)));
  CHECK(std::isfinite(weighted_bce(1.0, 0, 1.0)));
  CHECK(weighted_bce(0.0, 1, 1.0) == weighted_bce(1e-9, 1, 1.0));  // inside the clamp
}

TEST_CASE("auto pos weight is the negative to positive ratio") {
  std::vector<Label> labels;
  for (int i = 0; i < 80; ++i) labels.push_back(Label::negative);
  for (int i = 0; i < 20; ++i) labels.push_back(Label::positive);
  CHECK(auto_pos_weight(labels) == 4.0);

  std::vector<Label> balanced(10, Label::negative);
  balanced.insert(balanced.end(), 10, Label::positive);
  CHECK(auto_pos_weight(balanced) == 1.0);

  std::vector<Label> cohort;
  for (int i = 0; i < 472; ++i) cohort.push_back(Label::negative);
  for (int i = 0; i < 131; ++i) cohort.push_back(Label::positive);
  CHECK(std::abs(auto_pos_weight(cohort) - 3.60) < 0.005);

  std::vector<Label> single(5, Label::negative);
  CHECK_THROWS_AS(auto_pos_weight(single), Error);
  CHECK_THROWS_AS(auto_pos_weight({}), Error);

  // unlabelled rows do not count toward either side
  std::vector<Label> mixed{Label::negative, Label::negative, Label::positive, Label::unlabelled};
  CHECK(auto_pos_weight(mixed) == 2.0);
}

TEST_CASE("config validation pins three hidden layers and positive knobs") {
  ClassifierConfig cfg;
  cfg.hidden_widths = {64, 32};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ClassifierConfig{};
  cfg.pos_weight = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ClassifierConfig{};
  cfg.decision_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ClassifierConfig{};
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_NOTHROW(ClassifierConfig{}.validate());
}

TEST_CASE("config json round-trips including the auto pos weight") {
  ClassifierConfig cfg = toy_config(9);
  cfg.pos_weight.reset();  // auto
  ClassifierConfig back = ClassifierConfig::from_json_text(cfg.to_json());
  CHECK(!back.pos_weight.has_value());
  CHECK(back.hidden_widths == cfg.hidden_widths);
  CHECK(back.epochs == 9);
  cfg.pos_weight = 2.5;
  back = ClassifierConfig::from_json_text(cfg.to_json());
  REQUIRE(back.pos_weight.has_value());
  CHECK(*back.pos_weight == 2.5);
  CHECK_THROWS_AS(ClassifierConfig::from_json_text("{\"hidden\": [1,2,3]}"), Error);
}

TEST_CASE("a separable toy problem is learned to perfect training accuracy") {
  RandomStream rng(7);
  Eigen::MatrixXd x;
  std::vector<Label> labels;
  toy_bands(200, rng, x, labels);
  ClassifierModel model = train_classifier(toy_config(100), InputMode::embedding, x, labels,
                                           Eigen::MatrixXd(0, 2), {}, nullptr);
  MetricsReport r = evaluate_classifier(model, x, labels);
  CHECK(r.accuracy == 1.0);
  CHECK(model.input_dim() == 2);
  CHECK(model.network.output_dim() == 1);
  CHECK(model.network.layer_count() == 4);  // three hidden plus the output unit
  CHECK(model.pos_weight_used == doctest::Approx(auto_pos_weight(labels)).epsilon(1e-12));
}

TEST_CASE("training histories replay exactly under a fixed seed") {
  RandomStream rng(8);
  Eigen::MatrixXd x, vx;
  std::vector<Label> labels, vlabels;
  toy_bands(150, rng, x, labels);
  toy_bands(60, rng, vx, vlabels);
  ClassifierHistory h1, h2, h3;
  train_classifier(toy_config(12), InputMode::embedding, x, labels, vx, vlabels, &h1);
  train_classifier(toy_config(12), InputMode::embedding, x, labels, vx, vlabels, &h2);
  CHECK(same_history(h1, h2));
  REQUIRE(h1.epochs.size() == 12);
  CHECK(h1.epochs.back().val_balanced_accuracy > 0.9);

  ClassifierConfig other = toy_config(12);
  other.seed = 6;
  train_classifier(other, InputMode::embedding, x, labels, vx, vlabels, &h3);
  CHECK(!same_history(h1, h3));
}

TEST_CASE("an empty or single-class training set is rejected") {
  ClassifierConfig cfg = toy_config(5);
  Eigen::MatrixXd none(0, 2);
  CHECK_THROWS_AS(train_classifier(cfg, InputMode::embedding, none, {}, none, {}, nullptr), Error);

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 2);
  std::vector<Label> single(20, Label::positive);
  CHECK_THROWS_AS(train_classifier(cfg, InputMode::embedding, x, single, none, {}, nullptr), Error);
}

TEST_CASE("the two scenarios differ only in the input width") {
  SynthSpec spec;
  spec.n_rows = 260;
  spec.bernoulli_p = {0.4, 0.6, 0.3};
  spec.gauss_params = {{0.0, 1.0}, {2.0, 2.0}};
  spec.label_weights = {1.2, -0.8, 0.5, 0.9, -0.6};
  spec.label_intercept = -0.4;
  spec.miss_rates = std::vector<double>(5, 0.1);
  SynthResult data = generate(spec, 31);
  SplitResult parts = split(data.masked, 2);

  ClassifierConfig cfg = toy_config(8);
  ClassifierModel raw = train_classifier_raw(cfg, parts.train, parts.validation, nullptr);
  CHECK(raw.input_mode == InputMode::raw_masked);
  CHECK(raw.input_dim() == 10);  // 2F
  REQUIRE(raw.schema != nullptr);
  CHECK(raw.schema->size() == 5);

  Eigen::MatrixXd emb = Eigen::MatrixXd::Random(40, 7);
  std::vector<Label> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 3 ? Label::negative : Label::positive);
  ClassifierModel embm = train_classifier(toy_config(4), InputMode::embedding, emb, labels,
                                          Eigen::MatrixXd(0, 7), {}, nullptr);
  CHECK(embm.input_mode == InputMode::embedding);
  CHECK(embm.input_dim() == 7);
  CHECK(embm.schema == nullptr);

  // feature width mismatches are rejected at the door
  CHECK_THROWS_AS(predict(embm, Eigen::MatrixXd::Random(4, 6)), Error);
  CHECK_THROWS_AS(train_classifier(cfg, InputMode::embedding, emb, labels,
                                   Eigen::MatrixXd::Random(5, 3), std::vector<Label>(5, Label::negative),
                                   nullptr),
                  Error);
}

TEST_CASE("raw masked features zero-fill nulls and append the observedness block") {
  SynthSpec spec;
  spec.n_rows = 50;
  spec.bernoulli_p = {0.5};
  spec.gauss_params = {{10.0, 2.0}};
  spec.label_weights = {0.5, 0.5};
  spec.miss_rates = {0.4, 0.4};
  SynthResult data = generate(spec, 3);
  StandardizationStats stats = StandardizationStats::fit(data.masked);
  Eigen::MatrixXd feats = raw_masked_features(data.masked, stats);
  REQUIRE(feats.cols() == 4);
  for (Eigen::Index i = 0; i < data.masked.rows(); ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      const bool obs = data.masked.is_observed(i, j);
      CHECK(feats(i, 2 + j) == (obs ? 1.0 : 0.0));
      if (!obs) CHECK(feats(i, j) == 0.0);
      else if (j == 1) CHECK(std::abs(feats(i, j) - stats.standardize_cell(1, data.masked.values()(i, j))) < 1e-15);
    }
}

TEST_CASE("prediction thresholds at the boundary with the geq convention") {
  // one-layer surrogate forced to produce a constant logit of 0
  RandomStream rng(11);
  Eigen::MatrixXd x;
  std::vector<Label> labels;
  toy_bands(80, rng, x, labels);
  ClassifierModel model = train_classifier(toy_config(3), InputMode::embedding, x, labels,
                                           Eigen::MatrixXd(0, 2), {}, nullptr);
  for (LayerParams& p : model.network.layers()) {
    p.weight.setZero();
    p.bias.setZero();
    if (p.spec.batchnorm) {
      p.bn_gamma.setOnes();
      p.bn_beta.setZero();
      p.bn_running_mean.setZero();
      p.bn_running_var.setOnes();
    }
  }
  Prediction pr = predict(model, x.topRows(5));
  for (int i = 0; i < 5; ++i) {
    CHECK(pr.probabilities(i) == 0.5);
    CHECK(pr.labels[static_cast<std::size_t>(i)] == 1);  // 0.5 >= 0.5
  }

  Prediction again = predict(model, x.topRows(5));
  CHECK(pr.probabilities == again.probabilities);
}

TEST_CASE("auto pos weight raises class-1 recall on imbalanced data at equal seeds") {
  SynthSpec spec;
  spec.n_rows = 1600;
  spec.bernoulli_p = {0.4, 0.6, 0.3, 0.5};
  spec.gauss_params = {{0.0, 1.0}, {1.0, 1.5}, {-1.0, 1.0}, {2.0, 2.0}};
  spec.label_weights = {0.9, -0.7, 0.5, -0.4, 0.8, -0.5, 0.6, -0.3};
  spec.label_intercept = -2.4;  // pushes positives down to roughly 15 percent
  spec.miss_rates = std::vector<double>(8, 0.0);
  SynthResult data = generate(spec, 41);
  SplitResult parts = split(data.masked, 4);
  const double imbalance = auto_pos_weight(parts.train.labels());
  REQUIRE(imbalance > 2.0);

  ClassifierConfig weighted = toy_config(25);
  weighted.pos_weight.reset();  // auto
  ClassifierConfig flat = toy_config(25);
  flat.pos_weight = 1.0;

  ClassifierModel mw = train_classifier_raw(weighted, parts.train, parts.validation, nullptr);
  ClassifierModel mf = train_classifier_raw(flat, parts.train, parts.validation, nullptr);
  CHECK(mw.pos_weight_used == imbalance);
  CHECK(mf.pos_weight_used == 1.0);

  MetricsReport rw = evaluate_classifier(mw, raw_masked_features(parts.validation, mw.standardization),
                                         parts.validation.labels());
  MetricsReport rf = evaluate_classifier(mf, raw_masked_features(parts.validation, mf.standardization),
                                         parts.validation.labels());
  CHECK(rw.class1.recall > rf.class1.recall);
}

TEST_CASE("the classifier passes the finite-difference gradient check") {
  RandomStream rng(13);
  Eigen::MatrixXd x;
  std::vector<Label> labels;
  toy_bands(24, rng, x, labels);
  ClassifierConfig cfg = toy_config(2);
  ClassifierModel model = train_classifier(cfg, InputMode::embedding, x, labels,
                                           Eigen::MatrixXd(0, 2), {}, nullptr);
  const double err = classifier_gradient_check(model, x, labels, 1e-5, 100, 19);
  CHECK(err < 1e-4);
}

TEST_CASE("classifier files round-trip predictions bit-exactly") {
  RandomStream rng(17);
  Eigen::MatrixXd x, vx;
  std::vector<Label> labels, vlabels;
  toy_bands(120, rng, x, labels);
  toy_bands(30, rng, vx, vlabels);
  ClassifierConfig cfg = toy_config(10);
  cfg.decision_threshold = 0.4;
  ClassifierModel model = train_classifier(cfg, InputMode::embedding, x, labels, vx, vlabels, nullptr);
  ClassifierModel back = ClassifierModel::from_json_text(model.to_json());
  CHECK(back.input_mode == InputMode::embedding);
  CHECK(back.config.decision_threshold == 0.4);
  CHECK(back.pos_weight_used == model.pos_weight_used);
  Prediction p1 = predict(model, vx);
  Prediction p2 = predict(back, vx);
  CHECK(p1.probabilities == p2.probabilities);
  CHECK(p1.labels == p2.labels);

  // raw models carry schema and standardization through the file
  SynthSpec spec;
  spec.n_rows = 200;
  spec.bernoulli_p = {0.5, 0.3};
  spec.gauss_params = {{1.0, 2.0}};
  spec.label_weights = {0.8, -0.5, 0.9};
  spec.miss_rates = {0.1, 0.1, 0.1};
  SynthResult data = generate(spec, 23);
  SplitResult parts = split(data.masked, 6);
  ClassifierModel raw = train_classifier_raw(toy_config(6), parts.train, parts.validation, nullptr);
  ClassifierModel raw_back = ClassifierModel::from_json_text(raw.to_json());
  REQUIRE(raw_back.schema != nullptr);
  CHECK(*raw_back.schema == *raw.schema);
  CHECK(raw_back.standardization.mean(2) == raw.standardization.mean(2));
  Prediction q1 = predict_raw(raw, parts.test);
  Prediction q2 = predict_raw(raw_back, parts.test);
  CHECK(q1.probabilities == q2.probabilities);

  // embedding models cannot consume raw datasets
  CHECK_THROWS_AS(predict_raw(back, parts.test), Error);
}

TEST_CASE("evaluation refuses unlabelled rows") {
  RandomStream rng(19);
  Eigen::MatrixXd x;
  std::vector<Label> labels;
  toy_bands(40, rng, x, labels);
  ClassifierModel model = train_classifier(toy_config(3), InputMode::embedding, x, labels,
                                           Eigen::MatrixXd(0, 2), {}, nullptr);
  labels[3] = Label::unlabelled;
  CHECK_THROWS_AS(evaluate_classifier(model, x, labels), Error);
}
