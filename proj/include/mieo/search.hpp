#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mieo/autoencoder.hpp"
#include "mieo/classifier.hpp"
#include "mieo/dataset.hpp"
#include "mieo/metrics.hpp"

namespace mieo {

// Cartesian expansion of {"base": {...}, "axes": {name: [values...]}}.
// Axes iterate in sorted name order with the last axis fastest; axis values
// override base keys. Returns one config JSON text per combination. The
// alternative form {"base": {...}, "points": [{...}, ...]} enumerates
// candidates explicitly (each point merged over base, listed order); it
// cannot be combined with axes.
std::vector<std::string> expand_grid(const std::string& grid_json);

struct TrialRecord {
  std::size_t mieo_index = 0;
  std::size_t clf_index = 0;
  std::string mieo_config_json;
  std::string clf_config_json;
  bool failed = false;
  std::string failure;
  MetricsReport validation;        // downstream report on the validation split
  LossBreakdown val_reconstruction;  // reconstruction on the validation split
  double wall_seconds = 0.0;       // classifier phase; not serialized
  double mieo_seconds = 0.0;       // shared across the encoder's trials; not serialized
  std::uint64_t seed = 0;
};

// Full table as JSON. Timing fields stay out so replayed searches emit
// byte-identical files.
std::string trials_to_json(const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> trials_from_json_text(const std::string& text);

struct SearchResult {
  MieoModel best_mieo;
  ClassifierModel best_classifier;
  std::size_t best_trial = 0;  // index into trials
  std::vector<TrialRecord> trials;
};

// Trains every encoder candidate on labelled-train plus the unlabelled pool,
// then every classifier candidate on the encoded labelled-train rows, and
// ranks pairs by validation balanced accuracy (ties: higher macro F1, lower
// validation reconstruction total, earlier grid order). Reconstruction
// quality never leads the ranking; it only breaks ties. Trials whose training aborts at
// runtime are marked failed and skipped. Per-trial seeds derive from `seed`,
// so scheduling across threads never changes any result. A nonzero
// `max_trials` keeps only the first pairs in grid order; encoders whose
// pairs are all cut are never trained.
SearchResult deferred_select(const std::string& mieo_grid_json, const std::string& clf_grid_json,
                             const TabularDataset& train, const TabularDataset& validation,
                             const TabularDataset* unlabelled, std::uint64_t seed,
                             int threads = 1, std::size_t max_trials = 0);

// The held-out evaluation of a selected pair. The only place test rows meet
// a model.
MetricsReport final_evaluate(const MieoModel& encoder, const ClassifierModel& classifier,
                             const TabularDataset& test);

// Ordering used to pick the winner; true when a beats b. Exposed so reports
// and tests can re-rank trial tables.
bool trial_outranks(const TrialRecord& a, const TrialRecord& b);

}  // namespace mieo
