#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mieo/dataset.hpp"
#include "mieo/nn.hpp"
#include "mieo/rng.hpp"
#include "mieo/schema.hpp"

namespace mieo {

// Autoencoder hyperparameters. Width lists left empty resolve to a geometric
// ramp: encoder 2F -> embedding_dim, decoder embedding_dim -> F, four layers
// each. Explicit lists must have exactly four entries and end on the mandated
// endpoint.
struct MieoConfig {
  int embedding_dim = 16;
  std::vector<int> encoder_widths;  // last = embedding_dim
  std::vector<int> decoder_widths;  // last = F
  double w_bin = 1.0;
  double w_cont = 1.0;
  double aug_mask_prob = 0.0;
  double leaky_slope = 0.01;
  double lr = 1e-3;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // Drops BN+activation on the embedding layer, leaving it purely linear.
  bool plain_embedding = false;

  void validate(const FeatureSchema& schema) const;
  std::vector<Eigen::Index> resolved_encoder_widths(const FeatureSchema& schema) const;
  std::vector<Eigen::Index> resolved_decoder_widths(const FeatureSchema& schema) const;

  std::string to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static MieoConfig from_json_text(const std::string& text);
};

// Composite reconstruction loss. total = w_bin*bce_part + w_cont*mse_part
// by construction; each part is a mean over the observed entries of its kind
// and contributes 0 when that kind has no observed entry.
struct LossBreakdown {
  double total = 0.0;
  double bce_part = 0.0;
  double mse_part = 0.0;
  std::size_t n_bin_observed = 0;
  std::size_t n_cont_observed = 0;
};

struct MieoModel {
  Network encoder;  // input 2F (values + mask channel), output embedding_dim
  Network decoder;  // output F, linear; binary positions get a sigmoid head
  std::shared_ptr<const FeatureSchema> schema;
  StandardizationStats standardization;  // fitted on the labelled training split
  MieoConfig config;

  Eigen::Index feature_count() const { return static_cast<Eigen::Index>(schema->size()); }
  Eigen::Index embedding_dim() const { return config.embedding_dim; }

  std::string to_json() const;
  static MieoModel from_json_text(const std::string& text);
};

// Fresh untrained model with seeded initialization. The standardization slot
// starts empty; train-side callers fill it before encode/impute make sense.
MieoModel build_mieo(const MieoConfig& config, std::shared_ptr<const FeatureSchema> schema,
                     std::uint64_t seed);

struct MaskedInput {
  Eigen::VectorXd input;      // length 2F: zero-filled values then 0/1 mask
  MaskVector effective_mask;  // observed minus augmentation drops
};

// Builds the network input for one standardized row. Augmentation draws one
// bernoulli per observed entry in column order; aug_mask_prob 0 draws
// nothing. Entries absent in observed_mask can never come back.
MaskedInput make_masked_input(const Eigen::VectorXd& values, const MaskVector& observed_mask,
                              double aug_mask_prob, RandomStream& rng);

// Loss for one output row against the original values under the original
// observedness. Binary outputs are clamped to [1e-7, 1-1e-7] before the log.
LossBreakdown mieo_loss(const FeatureSchema& schema, const Eigen::VectorXd& output,
                        const Eigen::VectorXd& target, const MaskVector& target_mask, double w_bin,
                        double w_cont);

// Pooled batch loss plus the gradient w.r.t. the decoder's linear output.
// Means are taken over all observed entries of the batch, so rows with more
// observed cells weigh proportionally. Gradients vanish at unobserved
// positions and inside the clamp region.
struct BatchLoss {
  LossBreakdown breakdown;
  Eigen::MatrixXd d_linear;
};
BatchLoss mieo_loss_batch(const FeatureSchema& schema, const Eigen::MatrixXd& linear_out,
                          const Eigen::MatrixXd& target, const MaskMatrix& target_mask,
                          double w_bin, double w_cont, bool want_gradient);

struct MieoEpoch {
  LossBreakdown train;       // pooled over the epoch's processed batches
  LossBreakdown validation;  // inference-mode pass; zeros when no val pool
};
struct MieoHistory {
  std::vector<MieoEpoch> epochs;
};

// Minibatch Adam over encoder and decoder jointly. Pools must already carry
// standardized values (model.standardization applied); the loss target is the
// original row under its original null mask while the input sees fresh
// augmentation masks every epoch. Batches of size 1 are skipped.
MieoHistory train_mieo(MieoModel& model, const TabularDataset& train_pool,
                       const TabularDataset& val_pool);

// One-stop fit: standardization from labelled_train, train pool =
// labelled_train plus optional unlabelled rows, optional validation pool for
// the history. All inputs in raw units.
MieoModel fit_mieo(const MieoConfig& config, const TabularDataset& labelled_train,
                   const TabularDataset* unlabelled, const TabularDataset* validation,
                   MieoHistory* history_out = nullptr);

// Embedding of one raw-unit row; standardizes internally, no augmentation.
Eigen::VectorXd encode(const MieoModel& model, const Eigen::VectorXd& values,
                       const MaskVector& observed_mask);

// Row-per-row embeddings for a raw-unit dataset.
Eigen::MatrixXd encode_dataset(const MieoModel& model, const TabularDataset& ds);

struct ImputedRow {
  // Observed cells pass through untouched. Absent binary cells carry the
  // sigmoid probability, absent continuous cells the de-standardized output.
  Eigen::VectorXd values;
  // Same, with absent binary cells thresholded to 0/1 at 0.5.
  Eigen::VectorXd thresholded;
};
ImputedRow impute(const MieoModel& model, const Eigen::VectorXd& values,
                  const MaskVector& observed_mask);

// Filled copies of every row, same two variants as ImputedRow. Labels are
// untouched; callers keep them from the source dataset.
struct ImputedData {
  Eigen::MatrixXd values;
  Eigen::MatrixXd thresholded;
};
ImputedData impute_dataset(const MieoModel& model, const TabularDataset& ds);

// Inference-mode reconstruction quality of raw-unit rows under the model's
// loss weights, against the rows' own observedness.
LossBreakdown reconstruction_loss(const MieoModel& model, const TabularDataset& ds);

// Worst relative error of the analytic gradient of the full pipeline
// (masked input -> encoder -> decoder -> composite masked loss) against
// central finite differences. Rows arrive standardized; runs the network in
// training mode with frozen running statistics.
double mieo_gradient_check(MieoModel& model, const Eigen::MatrixXd& standardized_values,
                           const MaskMatrix& observed_mask, double eps, int samples_per_tensor,
                           std::uint64_t seed);

}  // namespace mieo
