#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mieo/dataset.hpp"
#include "mieo/metrics.hpp"
#include "mieo/nn.hpp"
#include "mieo/schema.hpp"

namespace mieo {

// Which representation the classifier consumes: the 2F-wide
// [zero-filled values ; null mask] block, or an encoder embedding.
enum class InputMode { raw_masked, embedding };

struct ClassifierConfig {
  std::vector<int> hidden_widths{64, 32, 16};  // exactly three
  double leaky_slope = 0.01;
  // Loss weight on positive rows; empty means negatives/positives ratio of
  // the training labels.
  std::optional<double> pos_weight;
  double lr = 1e-3;
  int epochs = 40;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;

  void validate() const;
  std::string to_json() const;
  static ClassifierConfig from_json_text(const std::string& text);
};

struct ClassifierModel {
  Network network;  // three hidden Linear->BN->LeakyReLU, then Linear(1)
  InputMode input_mode = InputMode::raw_masked;
  ClassifierConfig config;
  double pos_weight_used = 1.0;  // the resolved value training ran with

  // raw_masked models carry their featurization; embedding models leave the
  // schema null and consume precomputed embeddings.
  std::shared_ptr<const FeatureSchema> schema;
  StandardizationStats standardization;

  Eigen::Index input_dim() const { return network.input_dim(); }

  std::string to_json() const;
  static ClassifierModel from_json_text(const std::string& text);
};

// Single-sample positive-weighted cross entropy. The probability is clamped
// to [1e-7, 1-1e-7] before the logs; the weight multiplies the positive term
// only. Batch losses are plain means of this.
double weighted_bce(double p, int t, double pos_weight);

// Negatives-to-positives ratio of the labelled rows. Errors when either
// class is missing.
double auto_pos_weight(const std::vector<Label>& labels);

// Loss closure over a one-unit linear output: mean weighted BCE of the
// sigmoid, with its gradient. Targets are 0/1.
LossFn weighted_bce_loss(const Eigen::VectorXd& targets, double pos_weight);

// [zero-filled standardized values ; 0/1 observedness], the classifier-side
// twin of the autoencoder input with augmentation off.
Eigen::MatrixXd raw_masked_features(const TabularDataset& ds, const StandardizationStats& stats);

struct ClassifierEpoch {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_balanced_accuracy = 0.0;
};
struct ClassifierHistory {
  std::vector<ClassifierEpoch> epochs;
};

// Minibatch Adam on the weighted BCE. Labels must be 0/1 with both classes
// present in training; batches of size 1 are skipped. A zero-row validation
// set records zeros in the history.
ClassifierModel train_classifier(const ClassifierConfig& config, InputMode mode,
                                 const Eigen::MatrixXd& features, const std::vector<Label>& labels,
                                 const Eigen::MatrixXd& val_features,
                                 const std::vector<Label>& val_labels,
                                 ClassifierHistory* history_out = nullptr);

// Raw-mode convenience: fits standardization on the training rows, stores it
// in the model, and trains on the masked-feature block.
ClassifierModel train_classifier_raw(const ClassifierConfig& config, const TabularDataset& train,
                                     const TabularDataset& validation,
                                     ClassifierHistory* history_out = nullptr);

struct Prediction {
  Eigen::VectorXd probabilities;
  std::vector<int> labels;  // probability >= decision_threshold
};

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& features);

// Featurizes raw rows through the model's stored standardization; only valid
// for raw_masked models.
Prediction predict_raw(const ClassifierModel& model, const TabularDataset& ds);

// Report for predictions against the dataset's labels; rows must be
// labelled.
MetricsReport evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                  const std::vector<Label>& labels);

// Worst relative gradient error of the full classifier (network + weighted
// BCE head) against central finite differences.
double classifier_gradient_check(ClassifierModel& model, const Eigen::MatrixXd& features,
                                 const std::vector<Label>& labels, double eps,
                                 int samples_per_tensor, std::uint64_t seed);

}  // namespace mieo
