#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mieo {

struct ConfusionCounts {
  std::size_t tp = 0;  // predicted 1, label 1
  std::size_t fp = 0;  // predicted 1, label 0
  std::size_t tn = 0;  // predicted 0, label 0
  std::size_t fn = 0;  // predicted 0, label 1

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Class 1 counts as positive. Inputs must be 0/1 and equally long.
ConfusionCounts confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& labels);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Two-class report with per-class rows plus accuracy, macro and
// support-weighted aggregates. Metrics with a zero denominator come back as
// 0 and their names land in `undefined`, so degenerate predictors still rank
// deterministically.
struct MetricsReport {
  ClassMetrics class0;
  ClassMetrics class1;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;  // equals accuracy; the weighted mean collapses
  double weighted_f1 = 0.0;
  double balanced_accuracy = 0.0;  // equals macro_recall by definition
  std::vector<std::string> undefined;

  std::string to_json() const;
  static MetricsReport from_json_text(const std::string& text);

  // Aligned text block, three decimals, one row per class plus the
  // aggregate rows.
  std::string to_table() const;
};

MetricsReport report_from_confusion(const ConfusionCounts& c);

MetricsReport classification_report(const std::vector<int>& predictions,
                                    const std::vector<int>& labels);

}  // namespace mieo
