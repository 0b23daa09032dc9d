// End-to-end acceptance gate. Each numbered check prints one PASS/FAIL line
// and the process exits nonzero if any fails. The CLI binary path arrives as
// argv[1]; the replay check needs it.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

#include "mieo/autoencoder.hpp"
#include "mieo/classifier.hpp"
#include "mieo/csv.hpp"
#include "mieo/dataset.hpp"
#include "mieo/metrics.hpp"
#include "mieo/rng.hpp"
#include "mieo/schema.hpp"
#include "mieo/search.hpp"
#include "mieo/synth.hpp"

using namespace mieo;
using json = nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;     // path to the command-line binary
int g_failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

void run_criterion(int number, const std::string& name, double budget_seconds,
                   const std::function<void(Check&)>& body) {
  Check c;
  auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_seconds > 0 && elapsed > budget_seconds)
    c.require(false, "runtime " + std::to_string(elapsed) + "s over budget");
  if (c.ok) {
    std::printf("PASS %d %s (%.1fs)\n", number, name.c_str(), elapsed);
  } else {
    std::printf("FAIL %d %s (%.1fs): %s\n", number, name.c_str(), elapsed, c.detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- 1: aggregation arithmetic --------------------------------------------

void check_report_arithmetic(Check& c) {
  // integer confusions whose per-class recalls round to the published
  // three-decimal figures; aggregates must land on the published values
  ConfusionCounts a{93, 99, 373, 38};  // recalls 373/472 = .790, 93/131 = .710
  MetricsReport ra = report_from_confusion(a);
  c.require(near(ra.class0.recall, 0.790, 0.0005), "recall0 " + fmt(ra.class0.recall));
  c.require(near(ra.class1.recall, 0.710, 0.0005), "recall1 " + fmt(ra.class1.recall));
  c.require(near(ra.macro_recall, 0.750, 0.001), "macro recall " + fmt(ra.macro_recall));
  c.require(near(ra.weighted_recall, 0.773, 0.001), "weighted recall " + fmt(ra.weighted_recall));

  ConfusionCounts b{66, 48, 424, 65};  // recalls 424/472 = .898, 66/131 = .5038
  MetricsReport rb = report_from_confusion(b);
  c.require(near(rb.class0.recall, 0.898, 0.0005), "recall0 " + fmt(rb.class0.recall));
  c.require(near(rb.class1.recall, 0.5038, 0.0005), "recall1 " + fmt(rb.class1.recall));
  c.require(near(rb.accuracy, 0.813, 0.001), "accuracy " + fmt(rb.accuracy));

  ConfusionCounts t{114, 116, 462, 62};  // recalls 462/578 = .80, 114/176 = .65
  MetricsReport rt = report_from_confusion(t);
  c.require(near(rt.class0.recall, 0.80, 0.005), "recall0 " + fmt(rt.class0.recall));
  c.require(near(rt.class1.recall, 0.65, 0.005), "recall1 " + fmt(rt.class1.recall));
  c.require(near(rt.balanced_accuracy, 0.725, 0.005),
            "balanced accuracy " + fmt(rt.balanced_accuracy));
  c.require(near(rt.balanced_accuracy, 0.72, 0.005),
            "balanced accuracy vs rounded " + fmt(rt.balanced_accuracy));
}

// ---- 2: gradient checks ----------------------------------------------------

void check_gradients(Check& c) {
  SynthSpec spec = SynthSpec::paper_like(200);
  SynthResult data = generate(spec, 3);
  SplitResult parts = split(data.masked, 1);

  // Checks run at trained snapshots, not the initialization.  The step size
  // must sit below the distance from every pre-activation to its LeakyReLU
  // corner (a crossed corner makes the central difference blend two slopes)
  // yet keep float64 roundoff, which grows as 1/eps, under the tolerance.
  // 1e-5 holds on both counts for the snapshots below.
  MieoConfig cfg;
  cfg.embedding_dim = 16;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.lr = 3e-3;
  cfg.aug_mask_prob = 0.2;
  cfg.seed = 9;
  MieoModel model = fit_mieo(cfg, parts.train, &parts.unlabelled, nullptr);

  TabularDataset std_rows = model.standardization.apply(parts.train);
  Eigen::MatrixXd vals = std_rows.values().topRows(32);
  MaskMatrix mask = null_mask(std_rows).topRows(32);
  for (Eigen::Index i = 0; i < vals.rows(); ++i)
    for (Eigen::Index j = 0; j < vals.cols(); ++j)
      if (!mask(i, j)) vals(i, j) = 0.0;

  double worst = mieo_gradient_check(model, vals, mask, 1e-5, 100, 77);
  c.require(worst < 1e-4, "autoencoder worst relative error " + fmt(worst));

  ClassifierConfig ccfg;
  ccfg.hidden_widths = {64, 32, 16};
  ccfg.epochs = 3;  // the two-epoch snapshot parks a pre-activation ~1e-5 from a corner
  ccfg.batch_size = 32;
  ccfg.lr = 3e-3;
  ccfg.seed = 4;
  ClassifierModel clf = train_classifier_raw(ccfg, parts.train, parts.validation);
  Eigen::MatrixXd feats = raw_masked_features(parts.train, clf.standardization).topRows(48);
  std::vector<Label> labels(parts.train.labels().begin(), parts.train.labels().begin() + 48);
  double worst_c = classifier_gradient_check(clf, feats, labels, 1e-5, 100, 78);
  c.require(worst_c < 1e-4, "classifier worst relative error " + fmt(worst_c));
}

// ---- 3: masked-loss contract ----------------------------------------------

void check_masked_loss(Check& c) {
  RandomStream rng(515);
  for (int rep = 0; rep < 1000 && c.ok; ++rep) {
    std::size_t f = 3 + rng.index(10);
    std::vector<Column> cols;
    for (std::size_t j = 0; j < f; ++j)
      cols.push_back({"f" + std::to_string(j),
                      rng.bernoulli(0.5) ? ColumnKind::binary : ColumnKind::continuous});
    FeatureSchema schema(std::move(cols));

    Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng.index(4));
    Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(f));
    Eigen::MatrixXd target(rows, static_cast<Eigen::Index>(f));
    MaskMatrix mask(rows, static_cast<Eigen::Index>(f));
    bool force_empty = rep % 50 == 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < f; ++j) {
        Eigen::Index jj = static_cast<Eigen::Index>(j);
        out(i, jj) = rng.uniform(-3.0, 3.0);
        target(i, jj) = schema.at(j).kind == ColumnKind::binary ? double(rng.bernoulli(0.5))
                                                                : rng.uniform(-3.0, 3.0);
        mask(i, jj) = !force_empty && rng.bernoulli(0.7);
      }
    double w_bin = rng.uniform(0.1, 3.0);
    double w_cont = rng.uniform(0.1, 3.0);

    BatchLoss base = mieo_loss_batch(schema, out, target, mask, w_bin, w_cont, true);

    // the composite identity holds exactly, not to a tolerance
    c.require(base.breakdown.total ==
                  w_bin * base.breakdown.bce_part + w_cont * base.breakdown.mse_part,
              "composite identity broke at rep " + std::to_string(rep));

    if (mask.count() == 0) {
      c.require(base.breakdown.total == 0.0, "empty mask gave nonzero loss");
      c.require(base.d_linear.cwiseAbs().maxCoeff() == 0.0, "empty mask gave nonzero gradient");
    }

    // noise at unobserved positions must be invisible to loss and gradient
    Eigen::MatrixXd out2 = out;
    Eigen::MatrixXd target2 = target;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index jj = 0; jj < static_cast<Eigen::Index>(f); ++jj)
        if (!mask(i, jj)) {
          out2(i, jj) += rng.uniform(-5.0, 5.0);
          target2(i, jj) += rng.uniform(-5.0, 5.0);
        }
    BatchLoss moved = mieo_loss_batch(schema, out2, target2, mask, w_bin, w_cont, true);
    c.require(moved.breakdown.total == base.breakdown.total,
              "unobserved perturbation moved the loss at rep " + std::to_string(rep));
    c.require(moved.breakdown.bce_part == base.breakdown.bce_part &&
                  moved.breakdown.mse_part == base.breakdown.mse_part,
              "unobserved perturbation moved a part at rep " + std::to_string(rep));
    c.require((moved.d_linear.array() == base.d_linear.array()).all(),
              "unobserved perturbation moved the gradient at rep " + std::to_string(rep));
  }
}

// ---- 4: end-to-end learnability -------------------------------------------

void check_learnability(Check& c) {
  SynthSpec spec = SynthSpec::paper_like(8000);
  SynthResult data = generate(spec, 2026);
  double ref = bayes_reference(spec, 100000, 1);
  double floor = std::max(0.70, ref - 0.15);

  SplitResult parts = split(data.masked, 11);
  const char* mieo_grid =
      "{\"base\": {\"batch_size\": 128, \"lr\": 0.003, \"aug_mask_prob\": 0.3},"
      " \"axes\": {\"embedding_dim\": [16, 24], \"epochs\": [8, 18]}}";
  const char* clf_grid =
      "{\"base\": {\"hidden_widths\": [64, 32, 16], \"batch_size\": 128},"
      " \"axes\": {\"lr\": [0.003, 0.006], \"epochs\": [12, 24]}}";
  SearchResult res = deferred_select(mieo_grid, clf_grid, parts.train, parts.validation,
                                     &parts.unlabelled, 7, 1);
  c.require(res.trials.size() == 16, "expected a 16-pair table");

  double val = res.trials[res.best_trial].validation.balanced_accuracy;
  MetricsReport test = final_evaluate(res.best_mieo, res.best_classifier, parts.test);
  c.require(val >= floor, "validation " + fmt(val) + " under floor " + fmt(floor));
  c.require(test.balanced_accuracy >= floor,
            "test " + fmt(test.balanced_accuracy) + " under floor " + fmt(floor));
  c.require(std::abs(test.balanced_accuracy - val) <= 0.05,
            "val/test gap " + fmt(std::abs(test.balanced_accuracy - val)));
}

// ---- 5: imputation beats the column baselines ------------------------------

void check_imputation(Check& c) {
  SynthSpec spec = SynthSpec::paper_like(8000);
  SynthResult data = generate(spec, 2026);
  SplitResult parts = split(data.masked, 11);

  MieoConfig cfg;
  cfg.embedding_dim = 24;
  cfg.epochs = 8;
  cfg.batch_size = 128;
  cfg.lr = 3e-3;
  cfg.aug_mask_prob = 0.3;
  cfg.seed = 5;
  MieoModel model = fit_mieo(cfg, parts.train, &parts.unlabelled, nullptr);

  // hide a fifth of the observed test cells, keeping their true values aside
  const TabularDataset& base = parts.test;
  Eigen::MatrixXd hidden_values = base.values();
  MaskMatrix was_observed = null_mask(base);
  RandomStream rng(99);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> hidden;
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (Eigen::Index j = 0; j < base.cols(); ++j)
      if (was_observed(i, j) && rng.bernoulli(0.2)) {
        hidden.push_back({i, j});
        hidden_values(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
  TabularDataset masked_test(base.schema_ptr(), hidden_values, base.labels());
  ImputedData imp = impute_dataset(model, masked_test);

  // baselines fitted the same way the model was: on the training split
  const FeatureSchema& schema = base.schema();
  const Eigen::Index f = base.cols();
  std::vector<double> col_mean(static_cast<std::size_t>(f), 0.0);
  std::vector<int> majority(static_cast<std::size_t>(f), 0);
  for (Eigen::Index j = 0; j < f; ++j) {
    double sum = 0.0;
    std::size_t n = 0, ones = 0;
    for (Eigen::Index i = 0; i < parts.train.rows(); ++i)
      if (parts.train.is_observed(i, j)) {
        sum += parts.train.values()(i, j);
        ++n;
        if (parts.train.values()(i, j) == 1.0) ++ones;
      }
    col_mean[static_cast<std::size_t>(j)] = n ? sum / static_cast<double>(n) : 0.0;
    majority[static_cast<std::size_t>(j)] = 2 * ones >= n ? 1 : 0;
  }

  double mse_model = 0.0, mse_base = 0.0;
  std::size_t n_cont = 0, model_hits = 0, base_hits = 0, n_bin = 0;
  for (auto [i, j] : hidden) {
    double truth = base.values()(i, j);
    if (schema.at(static_cast<std::size_t>(j)).kind == ColumnKind::continuous) {
      double dm = imp.values(i, j) - truth;
      double db = col_mean[static_cast<std::size_t>(j)] - truth;
      mse_model += dm * dm;
      mse_base += db * db;
      ++n_cont;
    } else {
      if (imp.thresholded(i, j) == truth) ++model_hits;
      if (majority[static_cast<std::size_t>(j)] == truth) ++base_hits;
      ++n_bin;
    }
  }
  c.require(n_cont > 100 && n_bin > 100, "too few hidden cells to score");
  mse_model /= static_cast<double>(n_cont);
  mse_base /= static_cast<double>(n_cont);
  double acc_model = static_cast<double>(model_hits) / static_cast<double>(n_bin);
  double acc_base = static_cast<double>(base_hits) / static_cast<double>(n_bin);
  c.require(mse_model < mse_base,
            "continuous mse " + fmt(mse_model) + " not below column-mean " + fmt(mse_base));
  c.require(acc_model >= acc_base,
            "binary accuracy " + fmt(acc_model) + " under majority " + fmt(acc_base));
}

// ---- 6: selection prefers the trained encoder ------------------------------

void check_deferred_selection(Check& c) {
  SynthSpec spec = SynthSpec::paper_like(3000);
  SynthResult data = generate(spec, 31);
  SplitResult parts = split(data.masked, 13);
  // candidate 0 is an untrained one-dimensional bottleneck; the rest are
  // trained, one with the continuous loss nearly muted
  const char* mieo_grid =
      "{\"base\": {\"batch_size\": 128, \"lr\": 0.003, \"aug_mask_prob\": 0.3},"
      " \"points\": [{\"embedding_dim\": 1, \"epochs\": 0},"
      " {\"embedding_dim\": 16, \"epochs\": 2},"
      " {\"embedding_dim\": 16, \"epochs\": 12},"
      " {\"embedding_dim\": 16, \"epochs\": 12, \"w_cont\": 0.05}]}";
  const char* clf_grid =
      "{\"base\": {\"hidden_widths\": [64, 32, 16], \"batch_size\": 128, \"lr\": 0.005,"
      " \"epochs\": 15}}";
  SearchResult res = deferred_select(mieo_grid, clf_grid, parts.train, parts.validation,
                                     &parts.unlabelled, 17, 1);
  c.require(res.trials.size() == 4, "expected 4 trials");

  const TrialRecord& winner = res.trials[res.best_trial];
  c.require(winner.mieo_index != 0, "the untrained bottleneck won");
  c.require(res.best_mieo.config.epochs > 0 && res.best_mieo.config.embedding_dim == 16,
            "winner is not a trained full-width encoder");

  bool disagree = false;
  for (const TrialRecord& a : res.trials)
    for (const TrialRecord& b : res.trials)
      if (!a.failed && !b.failed &&
          a.validation.balanced_accuracy > b.validation.balanced_accuracy &&
          a.val_reconstruction.total > b.val_reconstruction.total)
        disagree = true;
  c.require(disagree, "reconstruction and downstream rankings never disagreed");
}

// ---- 7: manifest replay ----------------------------------------------------

int run_cli(const std::string& args) {
  std::string cmd = "'" + g_cli + "' " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest in " + dir.string());
  return json::parse(in);
}

// Re-invokes a manifest's command against its recorded inputs and config,
// then compares every declared output byte for byte.
void replay_and_compare(Check& c, const fs::path& src, const fs::path& dst,
                        const fs::path& scratch) {
  json man = read_manifest(src);
  std::string command = man.at("command").get<std::string>();

  for (const auto& [name, input] : man.at("inputs").items()) {
    std::string path = input.at("path").get<std::string>();
    std::string digest = input.at("digest").get<std::string>();
    c.require(file_digest(path) == digest, "input '" + name + "' drifted since the recorded run");
  }
  if (!c.ok) return;

  std::string args = command;
  auto input_path = [&](const char* name) {
    return man.at("inputs").at(name).at("path").get<std::string>();
  };
  auto has_input = [&](const char* name) { return man.at("inputs").contains(name); };

  if (command == "train-mieo") {
    fs::path cfg = scratch / "replay_mieo_config.json";
    std::ofstream(cfg) << man.at("config").dump();
    args += " --config '" + cfg.string() + "'";
    args += " --data '" + input_path("data") + "'";
    if (has_input("unlabelled")) args += " --unlabelled '" + input_path("unlabelled") + "'";
    if (has_input("validation")) args += " --validation '" + input_path("validation") + "'";
    if (has_input("schema")) args += " --schema '" + input_path("schema") + "'";
  } else if (command == "grid-search") {
    args += " --data '" + input_path("data") + "'";
    args += " --mieo-grid '" + input_path("mieo_grid") + "'";
    args += " --clf-grid '" + input_path("clf_grid") + "'";
    if (has_input("unlabelled")) args += " --unlabelled '" + input_path("unlabelled") + "'";
    if (has_input("schema")) args += " --schema '" + input_path("schema") + "'";
    args += " --seed " + std::to_string(man.at("seed").get<std::uint64_t>());
    args += " --threads " + std::to_string(man.at("config").at("threads").get<int>());
    args += " --max-trials " + std::to_string(man.at("config").at("max_trials").get<std::size_t>());
  } else {
    c.require(false, "no replay rule for command '" + command + "'");
    return;
  }
  args += " --out-dir '" + dst.string() + "'";

  c.require(run_cli(args) == 0, "replayed " + command + " exited nonzero");
  if (!c.ok) return;

  std::vector<std::string> files = man.at("outputs").get<std::vector<std::string>>();
  files.push_back("manifest.json");
  for (const std::string& name : files)
    c.require(file_digest((src / name).string()) == file_digest((dst / name).string()),
              command + " replay changed " + name);
}

void check_replay(Check& c) {
  c.require(!g_cli.empty(), "no CLI path given on the command line");
  if (!c.ok) return;

  fs::path scratch = fs::temp_directory_path() / ("mieo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  fs::path gen = scratch / "gen";
  fs::path splits = scratch / "splits";
  c.require(run_cli("synth-gen --rows 600 --seed 5 --out-dir '" + gen.string() + "'") == 0,
            "synth-gen failed");
  if (c.ok)
    c.require(run_cli("split --data '" + (gen / "data.csv").string() + "' --seed 9 --out-dir '" +
                      splits.string() + "'") == 0,
              "split failed");

  if (c.ok) {
    fs::path first = scratch / "enc";
    std::string train_args = "train-mieo --data '" + (splits / "train.csv").string() +
                             "' --unlabelled '" + (splits / "unlabelled.csv").string() +
                             "' --validation '" + (splits / "validation.csv").string() +
                             "' --embedding-dim 8 --epochs 4 --batch-size 64 --lr 0.003"
                             " --aug-mask-prob 0.2 --seed 21 --out-dir '" +
                             first.string() + "'";
    c.require(run_cli(train_args) == 0, "train-mieo failed");
    if (c.ok) replay_and_compare(c, first, scratch / "enc_replay", scratch);
  }

  if (c.ok) {
    std::ofstream(scratch / "mieo_grid.json")
        << "{\"base\": {\"embedding_dim\": 8, \"epochs\": 3, \"batch_size\": 64, \"lr\": 0.003}}";
    std::ofstream(scratch / "clf_grid.json")
        << "{\"base\": {\"hidden_widths\": [16, 8, 4], \"epochs\": 5, \"batch_size\": 64},"
           " \"axes\": {\"lr\": [0.005, 0.01]}}";
    fs::path first = scratch / "search";
    std::string search_args = "grid-search --data '" + (gen / "data.csv").string() +
                              "' --mieo-grid '" + (scratch / "mieo_grid.json").string() +
                              "' --clf-grid '" + (scratch / "clf_grid.json").string() +
                              "' --seed 17 --threads 2 --out-dir '" + first.string() + "'";
    c.require(run_cli(search_args) == 0, "grid-search failed");
    if (c.ok) replay_and_compare(c, first, scratch / "search_replay", scratch);
  }

  fs::remove_all(scratch);
}

// ---- 8: auto pos_weight lifts minority recall ------------------------------

void check_pos_weight(Check& c) {
  SynthSpec spec;
  spec.n_rows = 3000;
  spec.bernoulli_p = {0.3, 0.6, 0.45};
  spec.gauss_params = {{0.0, 1.0}, {2.0, 1.5}, {-1.0, 1.0}};
  spec.label_weights = {0.9, -0.7, 0.8, 0.9, -0.6, 0.7};
  spec.label_intercept = -2.4;  // positives stay rare
  spec.miss_rates = std::vector<double>(6, 0.05);
  spec.factors.dim = 1;
  spec.factors.binary_loadings = {{0.6}, {0.6}, {0.6}};
  spec.factors.continuous_loadings = {{0.7}, {0.7}, {0.7}};
  SynthResult data = generate(spec, 41);
  SplitResult parts = split(data.masked, 15);
  std::size_t pos = parts.train.count_label(Label::positive);
  std::size_t neg = parts.train.count_label(Label::negative);
  c.require(neg > 5 * pos, "training labels not imbalanced enough");

  ClassifierConfig cfg;
  cfg.hidden_widths = {64, 32, 16};
  cfg.epochs = 20;
  cfg.batch_size = 64;
  cfg.lr = 3e-3;
  cfg.seed = 6;
  cfg.pos_weight = 1.0;
  ClassifierModel flat = train_classifier_raw(cfg, parts.train, parts.validation);
  cfg.pos_weight.reset();  // resolves to the class ratio
  ClassifierModel weighted = train_classifier_raw(cfg, parts.train, parts.validation);
  c.require(weighted.pos_weight_used > 1.0, "auto weight did not exceed 1");

  MetricsReport rf = evaluate_classifier(
      flat, raw_masked_features(parts.test, flat.standardization), parts.test.labels());
  MetricsReport rw = evaluate_classifier(
      weighted, raw_masked_features(parts.test, weighted.standardization), parts.test.labels());
  c.require(rw.class1.recall > rf.class1.recall,
            "auto recall " + fmt(rw.class1.recall) + " not above " + fmt(rf.class1.recall));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];

  run_criterion(1, "report aggregation arithmetic", 1.0, check_report_arithmetic);
  run_criterion(2, "analytic gradients match finite differences", 30.0, check_gradients);
  run_criterion(3, "masked loss ignores unobserved positions exactly", 5.0, check_masked_loss);
  run_criterion(4, "selected pipeline clears the oracle-derived floor", 600.0, check_learnability);
  run_criterion(5, "imputation beats the column baselines", 120.0, check_imputation);
  run_criterion(6, "selection prefers the trained encoder", 300.0, check_deferred_selection);
  run_criterion(7, "manifest replays are byte-identical", 0.0, check_replay);
  run_criterion(8, "auto pos_weight lifts minority recall", 180.0, check_pos_weight);

  if (g_failures == 0) {
    std::printf("all 8 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
