#include "mieo/search.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <optional>
#include <thread>
#include <utility>

#include "json_util.hpp"
#include "mieo/error.hpp"
#include "mieo/rng.hpp"

namespace mieo {

namespace {

using detail::json;

json loss_to_obj(const LossBreakdown& b) {
  json o;
  o["total"] = b.total;
  o["bce_part"] = b.bce_part;
  o["mse_part"] = b.mse_part;
  o["n_bin_observed"] = b.n_bin_observed;
  o["n_cont_observed"] = b.n_cont_observed;
  return o;
}

LossBreakdown loss_from_obj(const json& o) {
  LossBreakdown b;
  b.total = detail::require(o, "total", "loss").get<double>();
  b.bce_part = detail::require(o, "bce_part", "loss").get<double>();
  b.mse_part = detail::require(o, "mse_part", "loss").get<double>();
  b.n_bin_observed = detail::require(o, "n_bin_observed", "loss").get<std::size_t>();
  b.n_cont_observed = detail::require(o, "n_cont_observed", "loss").get<std::size_t>();
  return b;
}

double elapsed_seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::vector<std::string> expand_grid(const std::string& grid_json) {
  json g = detail::parse_json(grid_json, "grid");
  if (!g.is_object()) fail_validation("grid: expected an object");
  for (const auto& [key, value] : g.items()) {
    (void)value;
    if (key != "base" && key != "axes" && key != "points")
      fail_validation("grid: unknown field '" + key + "'");
  }
  json base = json::object();
  if (g.contains("base")) {
    base = g["base"];
    if (!base.is_object()) fail_validation("grid: base must be an object");
  }
  if (g.contains("points")) {
    if (g.contains("axes")) fail_validation("grid: points and axes are mutually exclusive");
    const json& points = g["points"];
    if (!points.is_array() || points.empty())
      fail_validation("grid: points must be a non-empty array");
    std::vector<std::string> out;
    for (const json& p : points) {
      if (!p.is_object()) fail_validation("grid: each point must be an object");
      json merged = base;
      for (const auto& [key, value] : p.items()) merged[key] = value;
      out.push_back(merged.dump());
    }
    return out;
  }
  json axes_obj = json::object();
  if (g.contains("axes")) {
    axes_obj = g["axes"];
    if (!axes_obj.is_object()) fail_validation("grid: axes must be an object");
  }

  // json objects iterate in sorted key order, which fixes the axis order
  std::vector<std::pair<std::string, json>> axes;
  for (const auto& [name, values] : axes_obj.items()) {
    if (!values.is_array() || values.empty())
      fail_validation("grid: axis '" + name + "' must be a non-empty array");
    axes.emplace_back(name, values);
  }

  std::vector<std::string> out;
  if (axes.empty()) {
    out.push_back(base.dump());
    return out;
  }
  std::vector<std::size_t> pick(axes.size(), 0);
  bool done = false;
  while (!done) {
    json point = base;
    for (std::size_t i = 0; i < axes.size(); ++i)
      point[axes[i].first] = axes[i].second[pick[i]];
    out.push_back(point.dump());
    // odometer increment, last axis fastest
    std::size_t k = axes.size();
    for (;;) {
      if (k == 0) {
        done = true;
        break;
      }
      --k;
      if (++pick[k] < axes[k].second.size()) break;
      pick[k] = 0;
    }
  }
  return out;
}

std::string trials_to_json(const std::vector<TrialRecord>& trials) {
  json arr = json::array();
  for (const TrialRecord& t : trials) {
    json o;
    o["mieo_index"] = t.mieo_index;
    o["clf_index"] = t.clf_index;
    o["mieo_config"] = detail::parse_json(t.mieo_config_json, "trial mieo config");
    o["clf_config"] = detail::parse_json(t.clf_config_json, "trial classifier config");
    o["seed"] = t.seed;
    o["failed"] = t.failed;
    if (t.failed) {
      o["failure"] = t.failure;
    } else {
      o["validation"] = detail::parse_json(t.validation.to_json(), "trial report");
      o["val_reconstruction"] = loss_to_obj(t.val_reconstruction);
    }
    arr.push_back(std::move(o));
  }
  json root;
  root["format_version"] = 1;
  root["trials"] = std::move(arr);
  return root.dump();
}

std::vector<TrialRecord> trials_from_json_text(const std::string& text) {
  json root = detail::parse_json(text, "trials");
  if (detail::require(root, "format_version", "trials").get<int>() != 1)
    fail_validation("trials: unsupported format version");
  const json& arr = detail::require(root, "trials", "trials");
  if (!arr.is_array()) fail_validation("trials: expected an array");
  std::vector<TrialRecord> out;
  for (const json& o : arr) {
    TrialRecord t;
    t.mieo_index = detail::require(o, "mieo_index", "trial").get<std::size_t>();
    t.clf_index = detail::require(o, "clf_index", "trial").get<std::size_t>();
    t.mieo_config_json = detail::require(o, "mieo_config", "trial").dump();
    t.clf_config_json = detail::require(o, "clf_config", "trial").dump();
    t.seed = detail::require(o, "seed", "trial").get<std::uint64_t>();
    t.failed = detail::require(o, "failed", "trial").get<bool>();
    if (t.failed) {
      t.failure = detail::require(o, "failure", "trial").get<std::string>();
    } else {
      t.validation =
          MetricsReport::from_json_text(detail::require(o, "validation", "trial").dump());
      t.val_reconstruction = loss_from_obj(detail::require(o, "val_reconstruction", "trial"));
    }
    out.push_back(std::move(t));
  }
  return out;
}

bool trial_outranks(const TrialRecord& a, const TrialRecord& b) {
  if (a.failed != b.failed) return !a.failed;
  if (!a.failed) {
    if (a.validation.balanced_accuracy != b.validation.balanced_accuracy)
      return a.validation.balanced_accuracy > b.validation.balanced_accuracy;
    if (a.validation.macro_f1 != b.validation.macro_f1)
      return a.validation.macro_f1 > b.validation.macro_f1;
    if (a.val_reconstruction.total < b.val_reconstruction.total) return true;
    if (b.val_reconstruction.total < a.val_reconstruction.total) return false;
  }
  if (a.mieo_index != b.mieo_index) return a.mieo_index < b.mieo_index;
  return a.clf_index < b.clf_index;
}

SearchResult deferred_select(const std::string& mieo_grid_json, const std::string& clf_grid_json,
                             const TabularDataset& train, const TabularDataset& validation,
                             const TabularDataset* unlabelled, std::uint64_t seed, int threads,
                             std::size_t max_trials) {
  if (train.rows() == 0) fail_validation("deferred_select: empty training split");
  if (validation.rows() == 0) fail_validation("deferred_select: empty validation split");

  const std::vector<std::string> mieo_points = expand_grid(mieo_grid_json);
  const std::vector<std::string> clf_points = expand_grid(clf_grid_json);
  const std::size_t nm = mieo_points.size(), nc = clf_points.size();
  const std::size_t total = nm * nc;
  const std::size_t budget = max_trials == 0 ? total : std::min(max_trials, total);

  // parse everything up front so a malformed grid aborts before any training
  std::vector<MieoConfig> mieo_cfgs(nm);
  for (std::size_t mi = 0; mi < nm; ++mi) {
    mieo_cfgs[mi] = MieoConfig::from_json_text(mieo_points[mi]);
    mieo_cfgs[mi].seed = derive_seed(derive_seed(seed, 1), mi);
    mieo_cfgs[mi].validate(train.schema());
  }
  std::vector<std::vector<ClassifierConfig>> clf_cfgs(nm);
  for (std::size_t mi = 0; mi < nm; ++mi) {
    clf_cfgs[mi].resize(nc);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      clf_cfgs[mi][ci] = ClassifierConfig::from_json_text(clf_points[ci]);
      clf_cfgs[mi][ci].seed = derive_seed(derive_seed(seed, 2), mi * nc + ci);
      clf_cfgs[mi][ci].validate();
    }
  }

  struct Block {
    std::optional<MieoModel> model;
    std::vector<std::optional<ClassifierModel>> classifiers;
    std::vector<TrialRecord> records;
  };
  std::vector<Block> blocks(nm);

  auto run_block = [&](std::size_t mi) {
    Block& block = blocks[mi];
    const std::size_t nc_here = std::min(nc, budget - mi * nc);
    block.classifiers.resize(nc_here);
    block.records.resize(nc_here);
    for (std::size_t ci = 0; ci < nc_here; ++ci) {
      TrialRecord& r = block.records[ci];
      r.mieo_index = mi;
      r.clf_index = ci;
      r.mieo_config_json = mieo_cfgs[mi].to_json();
      r.clf_config_json = clf_cfgs[mi][ci].to_json();
      r.seed = clf_cfgs[mi][ci].seed;
    }

    const auto mieo_start = std::chrono::steady_clock::now();
    try {
      MieoModel model = fit_mieo(mieo_cfgs[mi], train, unlabelled, nullptr, nullptr);
      const double mieo_seconds = elapsed_seconds(mieo_start);
      const LossBreakdown recon = reconstruction_loss(model, validation);
      const Eigen::MatrixXd train_emb = encode_dataset(model, train);
      const Eigen::MatrixXd val_emb = encode_dataset(model, validation);
      block.model = std::move(model);

      for (std::size_t ci = 0; ci < nc_here; ++ci) {
        TrialRecord& r = block.records[ci];
        r.val_reconstruction = recon;
        r.mieo_seconds = mieo_seconds;
        const auto clf_start = std::chrono::steady_clock::now();
        try {
          ClassifierModel clf =
              train_classifier(clf_cfgs[mi][ci], InputMode::embedding, train_emb, train.labels(),
                               val_emb, validation.labels());
          r.validation = evaluate_classifier(clf, val_emb, validation.labels());
          block.classifiers[ci] = std::move(clf);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::runtime) throw;
          r.failed = true;
          r.failure = e.what();
        }
        r.wall_seconds = elapsed_seconds(clf_start);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::runtime) throw;
      for (std::size_t ci = 0; ci < nc_here; ++ci) {
        block.records[ci].failed = true;
        block.records[ci].failure = e.what();
        block.records[ci].mieo_seconds = elapsed_seconds(mieo_start);
      }
    }
  };

  // blocks past the budget never train their encoder
  const std::size_t active_blocks = (budget + nc - 1) / nc;

  int n_workers = threads;
  if (n_workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n_workers = hw > 0 ? static_cast<int>(hw) : 1;
  }
  n_workers = std::min<int>(n_workers, static_cast<int>(active_blocks));

  if (n_workers <= 1) {
    for (std::size_t mi = 0; mi < active_blocks; ++mi) run_block(mi);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(active_blocks);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t mi = next.fetch_add(1);
          if (mi >= active_blocks) return;
          try {
            run_block(mi);
          } catch (...) {
            errors[mi] = std::current_exception();
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
    // first error in grid order, so failures surface deterministically
    for (std::size_t mi = 0; mi < active_blocks; ++mi)
      if (errors[mi]) std::rethrow_exception(errors[mi]);
  }

  SearchResult result;
  result.trials.reserve(budget);
  for (std::size_t mi = 0; mi < active_blocks; ++mi)
    for (TrialRecord& record : blocks[mi].records)
      result.trials.push_back(std::move(record));

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    if (result.trials[i].failed) continue;
    if (!best || trial_outranks(result.trials[i], result.trials[*best])) best = i;
  }
  if (!best) fail_runtime("deferred_select: every trial failed");

  result.best_trial = *best;
  const TrialRecord& winner = result.trials[*best];
  result.best_mieo = std::move(*blocks[winner.mieo_index].model);
  result.best_classifier = std::move(*blocks[winner.mieo_index].classifiers[winner.clf_index]);
  return result;
}

MetricsReport final_evaluate(const MieoModel& encoder, const ClassifierModel& classifier,
                             const TabularDataset& test) {
  if (test.rows() == 0) fail_validation("final_evaluate: empty test split");
  if (classifier.input_mode == InputMode::raw_masked) {
    Prediction pred = predict_raw(classifier, test);
    std::vector<int> truth(test.labels().size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (test.labels()[i] == Label::unlabelled)
        fail_validation("final_evaluate: unlabelled row in the test split");
      truth[i] = test.labels()[i] == Label::positive ? 1 : 0;
    }
    return classification_report(pred.labels, truth);
  }
  Eigen::MatrixXd emb = encode_dataset(encoder, test);
  return evaluate_classifier(classifier, emb, test.labels());
}

}  // namespace mieo
