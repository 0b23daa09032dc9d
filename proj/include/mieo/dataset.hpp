#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "mieo/schema.hpp"

namespace mieo {

// Row outcome. unlabelled rows carry no 0/1 outcome and feed only the
// self-supervised training pool.
enum class Label : std::int8_t { negative = 0, positive = 1, unlabelled = -1 };

// Observedness aligned with a dataset: true means the cell holds a value.
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Mixed-type rows with missing cells (stored as NaN) plus per-row labels.
// Invariants: values is N x F for the schema's F, labels has length N, and
// every present binary cell is 0 or 1.
class TabularDataset {
public:
  TabularDataset() = default;
  TabularDataset(FeatureSchema schema, Eigen::MatrixXd values, std::vector<Label> labels);
  TabularDataset(std::shared_ptr<const FeatureSchema> schema, Eigen::MatrixXd values,
                 std::vector<Label> labels);

  const FeatureSchema& schema() const { return *schema_; }
  std::shared_ptr<const FeatureSchema> schema_ptr() const { return schema_; }

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<Label>& labels() const { return labels_; }

  bool is_observed(Eigen::Index i, Eigen::Index j) const { return !std::isnan(values_(i, j)); }

  std::size_t count_label(Label l) const;
  std::size_t labelled_count() const { return count_label(Label::negative) + count_label(Label::positive); }

  TabularDataset select_rows(const std::vector<Eigen::Index>& idx) const;
  TabularDataset labelled_rows() const;
  TabularDataset unlabelled_rows() const;

  // Concatenates rows of two datasets sharing a schema.
  static TabularDataset concat(const TabularDataset& a, const TabularDataset& b);

private:
  std::shared_ptr<const FeatureSchema> schema_;
  Eigen::MatrixXd values_;  // NaN marks an absent cell
  std::vector<Label> labels_;
};

MaskMatrix null_mask(const TabularDataset& ds);

// ---- outcome labelling ----------------------------------------------------

enum class EventType { none, cvd, other_death };

struct FollowupRecord {
  EventType event_type = EventType::none;
  double event_time_years = 0.0;  // meaningful only when event_type != none
  double followup_years = 0.0;
};

// Label 1: cardiovascular event at or before the horizon. Label 0: follow-up
// extends strictly past the horizon with no such event. Everything else is
// unlabelled (censored or non-cardiovascular death inside the horizon).
std::vector<Label> derive_labels(const std::vector<FollowupRecord>& records,
                                 double horizon_years = 8.0);

// ---- cleaning -------------------------------------------------------------

struct ValueBounds {
  double low = 0.0;
  double high = 0.0;
};

// Continuous cells outside [low, high] become absent. Bounds keyed by column
// name and allowed on continuous columns only.
TabularDataset preprocess(const TabularDataset& ds, const std::map<std::string, ValueBounds>& bounds);

// ---- standardization ------------------------------------------------------

// Per-continuous-column mean/std fitted on observed cells of a training
// split. Population std; zero-variance columns get std = 1.
class StandardizationStats {
public:
  StandardizationStats() = default;

  static StandardizationStats fit(const TabularDataset& train);

  TabularDataset apply(const TabularDataset& ds) const;
  TabularDataset invert(const TabularDataset& ds) const;

  double standardize_cell(std::size_t j, double v) const;
  double destandardize_cell(std::size_t j, double v) const;

  double mean(std::size_t j) const { return mean_[j]; }
  double stddev(std::size_t j) const { return std_[j]; }
  bool empty() const { return mean_.empty(); }

  const FeatureSchema& schema() const { return *schema_; }

  std::string to_json() const;
  static StandardizationStats from_json_text(std::shared_ptr<const FeatureSchema> schema,
                                             const std::string& text);

private:
  std::shared_ptr<const FeatureSchema> schema_;
  // Indexed by column; binary columns carry the identity transform (0, 1).
  std::vector<double> mean_, std_;
};

// ---- splitting ------------------------------------------------------------

struct SplitResult {
  TabularDataset train;
  TabularDataset validation;
  TabularDataset test;
  // Rows without a label; they accompany train into self-supervised training.
  TabularDataset unlabelled;
};

// Stratified 64/16/20 partition of the labelled rows (20% test, then 20% of
// the remaining development rows as validation). Per-class allocation by
// largest remainder, so each stratum is within one row of the exact ratio.
// Deterministic given seed.
SplitResult split(const TabularDataset& ds, std::uint64_t seed);

}  // namespace mieo
