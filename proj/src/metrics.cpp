#include "mieo/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "json_util.hpp"
#include "mieo/error.hpp"

namespace mieo {

ConfusionCounts confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    fail_validation("confusion matrix: prediction/label length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], t = labels[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1))
      fail_validation("confusion matrix: entries must be 0 or 1");
    if (t == 1)
      p == 1 ? ++c.tp : ++c.fn;
    else
      p == 1 ? ++c.fp : ++c.tn;
  }
  return c;
}

MetricsReport report_from_confusion(const ConfusionCounts& c) {
  if (c.total() == 0) fail_validation("metrics: no rows to evaluate");
  MetricsReport r;

  auto ratio = [&r](std::size_t num, std::size_t den, const char* name) {
    if (den == 0) {
      r.undefined.push_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };

  r.class1.support = c.tp + c.fn;
  r.class0.support = c.tn + c.fp;
  r.class1.precision = ratio(c.tp, c.tp + c.fp, "precision_1");
  r.class1.recall = ratio(c.tp, c.tp + c.fn, "recall_1");
  r.class0.precision = ratio(c.tn, c.tn + c.fn, "precision_0");
  r.class0.recall = ratio(c.tn, c.tn + c.fp, "recall_0");

  auto f1 = [&r](const ClassMetrics& m, const char* name) {
    const double s = m.precision + m.recall;
    if (s == 0.0) {
      r.undefined.push_back(name);
      return 0.0;
    }
    return 2.0 * m.precision * m.recall / s;
  };
  r.class0.f1 = f1(r.class0, "f1_0");
  r.class1.f1 = f1(r.class1, "f1_1");

  const double n = static_cast<double>(c.total());
  r.accuracy = static_cast<double>(c.tp + c.tn) / n;
  r.macro_precision = (r.class0.precision + r.class1.precision) / 2.0;
  r.macro_recall = (r.class0.recall + r.class1.recall) / 2.0;
  r.macro_f1 = (r.class0.f1 + r.class1.f1) / 2.0;

  const double s0 = static_cast<double>(r.class0.support);
  const double s1 = static_cast<double>(r.class1.support);
  r.weighted_precision = (s0 * r.class0.precision + s1 * r.class1.precision) / n;
  // support * (count/support) cancels, so the weighted recall mean reduces
  // to plain accuracy; computed that way to keep the identity exact
  r.weighted_recall = r.accuracy;
  r.weighted_f1 = (s0 * r.class0.f1 + s1 * r.class1.f1) / n;
  r.balanced_accuracy = r.macro_recall;
  return r;
}

MetricsReport classification_report(const std::vector<int>& predictions,
                                    const std::vector<int>& labels) {
  return report_from_confusion(confusion_matrix(predictions, labels));
}

std::string MetricsReport::to_json() const {
  detail::json o;
  auto cls = [](const ClassMetrics& m) {
    detail::json c;
    c["precision"] = m.precision;
    c["recall"] = m.recall;
    c["f1"] = m.f1;
    c["support"] = m.support;
    return c;
  };
  o["class_0"] = cls(class0);
  o["class_1"] = cls(class1);
  o["accuracy"] = accuracy;
  o["macro"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
  o["weighted"] =
      {{"precision", weighted_precision}, {"recall", weighted_recall}, {"f1", weighted_f1}};
  o["balanced_accuracy"] = balanced_accuracy;
  o["undefined"] = undefined;
  return o.dump();
}

MetricsReport MetricsReport::from_json_text(const std::string& text) {
  detail::json o = detail::parse_json(text, "metrics report");
  MetricsReport r;
  auto cls = [](const detail::json& c, const char* what) {
    ClassMetrics m;
    m.precision = detail::require(c, "precision", what).get<double>();
    m.recall = detail::require(c, "recall", what).get<double>();
    m.f1 = detail::require(c, "f1", what).get<double>();
    m.support = detail::require(c, "support", what).get<std::size_t>();
    return m;
  };
  r.class0 = cls(detail::require(o, "class_0", "report"), "class_0");
  r.class1 = cls(detail::require(o, "class_1", "report"), "class_1");
  r.accuracy = detail::require(o, "accuracy", "report").get<double>();
  const detail::json& ma = detail::require(o, "macro", "report");
  r.macro_precision = detail::require(ma, "precision", "macro").get<double>();
  r.macro_recall = detail::require(ma, "recall", "macro").get<double>();
  r.macro_f1 = detail::require(ma, "f1", "macro").get<double>();
  const detail::json& w = detail::require(o, "weighted", "report");
  r.weighted_precision = detail::require(w, "precision", "weighted").get<double>();
  r.weighted_recall = detail::require(w, "recall", "weighted").get<double>();
  r.weighted_f1 = detail::require(w, "f1", "weighted").get<double>();
  r.balanced_accuracy = detail::require(o, "balanced_accuracy", "report").get<double>();
  r.undefined = detail::require(o, "undefined", "report").get<std::vector<std::string>>();
  return r;
}

std::string MetricsReport::to_table() const {
  char line[128];
  std::string out;
  out += "              precision    recall  f1-score   support\n\n";
  auto row = [&](const char* name, const ClassMetrics& m) {
    std::snprintf(line, sizeof line, "%12s %10.3f %9.3f %9.3f %9zu\n", name, m.precision,
                  m.recall, m.f1, m.support);
    out += line;
  };
  row("0", class0);
  row("1", class1);
  out += "\n";
  const std::size_t n = class0.support + class1.support;
  std::snprintf(line, sizeof line, "%12s %10s %9s %9.3f %9zu\n", "accuracy", "", "", accuracy, n);
  out += line;
  std::snprintf(line, sizeof line, "%12s %10.3f %9.3f %9.3f %9zu\n", "macro avg", macro_precision,
                macro_recall, macro_f1, n);
  out += line;
  std::snprintf(line, sizeof line, "%12s %10.3f %9.3f %9.3f %9zu\n", "weighted avg",
                weighted_precision, weighted_recall, weighted_f1, n);
  out += line;
  std::snprintf(line, sizeof line, "\nbalanced accuracy %.3f\n", balanced_accuracy);
  out += line;
  return out;
}

}  // namespace mieo
