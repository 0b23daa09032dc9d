#include "mieo/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "mieo/error.hpp"
#include "mieo/rng.hpp"

namespace mieo {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::VectorXd to_targets(const std::vector<Label>& labels, const char* what) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::unlabelled)
      fail_validation(std::string(what) + ": unlabelled row in a labelled set");
    t[static_cast<Eigen::Index>(i)] = labels[i] == Label::positive ? 1.0 : 0.0;
  }
  return t;
}

}  // namespace

// ---- config ---------------------------------------------------------------

void ClassifierConfig::validate() const {
  if (hidden_widths.size() != 3) fail_validation("classifier needs exactly 3 hidden widths");
  for (int w : hidden_widths)
    if (w < 1) fail_validation("hidden widths must be positive");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail_validation("leaky_slope must lie in (0,1)");
  if (pos_weight && !(*pos_weight > 0.0)) fail_validation("pos_weight must be positive");
  if (!(lr > 0.0)) fail_validation("lr must be positive");
  if (epochs < 0) fail_validation("epochs must be nonnegative");
  if (batch_size < 2) fail_validation("batch_size must be at least 2");
  if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
    fail_validation("decision_threshold must lie in [0,1]");
}

std::string ClassifierConfig::to_json() const {
  detail::json o;
  o["hidden_widths"] = hidden_widths;
  o["leaky_slope"] = leaky_slope;
  if (pos_weight)
    o["pos_weight"] = *pos_weight;
  else
    o["pos_weight"] = "auto";
  o["lr"] = lr;
  o["epochs"] = epochs;
  o["batch_size"] = batch_size;
  o["seed"] = seed;
  o["decision_threshold"] = decision_threshold;
  return o.dump();
}

ClassifierConfig ClassifierConfig::from_json_text(const std::string& text) {
  detail::json j = detail::parse_json(text, "classifier config");
  if (!j.is_object()) fail_validation("classifier config: expected an object");
  ClassifierConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "hidden_widths")
      c.hidden_widths = value.get<std::vector<int>>();
    else if (key == "leaky_slope")
      c.leaky_slope = value.get<double>();
    else if (key == "pos_weight") {
      if (value.is_string()) {
        if (value.get<std::string>() != "auto")
          fail_validation("classifier config: pos_weight must be a number or \"auto\"");
        c.pos_weight.reset();
      } else {
        c.pos_weight = value.get<double>();
      }
    } else if (key == "lr")
      c.lr = value.get<double>();
    else if (key == "epochs")
      c.epochs = value.get<int>();
    else if (key == "batch_size")
      c.batch_size = value.get<int>();
    else if (key == "seed")
      c.seed = value.get<std::uint64_t>();
    else if (key == "decision_threshold")
      c.decision_threshold = value.get<double>();
    else
      fail_validation("classifier config: unknown field '" + key + "'");
  }
  return c;
}

// ---- loss -----------------------------------------------------------------

double weighted_bce(double p, int t, double pos_weight) {
  if (t != 0 && t != 1) fail_validation("weighted_bce: target must be 0 or 1");
  if (!(pos_weight > 0.0)) fail_validation("weighted_bce: pos_weight must be positive");
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(pos_weight * static_cast<double>(t) * std::log(pc) +
           (1.0 - static_cast<double>(t)) * std::log(1.0 - pc));
}

double auto_pos_weight(const std::vector<Label>& labels) {
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) {
    if (l == Label::positive) ++pos;
    if (l == Label::negative) ++neg;
  }
  if (pos == 0 || neg == 0) fail_validation("auto pos_weight needs both classes present");
  return static_cast<double>(neg) / static_cast<double>(pos);
}

LossFn weighted_bce_loss(const Eigen::VectorXd& targets, double pos_weight) {
  if (!(pos_weight > 0.0)) fail_validation("weighted_bce_loss: pos_weight must be positive");
  return [targets, pos_weight](const Eigen::MatrixXd& z) {
    if (z.cols() != 1 || z.rows() != targets.size())
      fail_validation("weighted_bce_loss: expected one output column per target");
    const Eigen::Index b = z.rows();
    double sum = 0.0;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(b, 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const double t = targets[i];
      const double p = sigmoid(z(i, 0));
      const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
      const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      sum += -(pos_weight * t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
      // fused sigmoid gradient, flat where the clamp bites
      if (!clamped) grad(i, 0) = (-pos_weight * t * (1.0 - p) + (1.0 - t) * p);
    }
    const double scale = 1.0 / static_cast<double>(b);
    return std::make_pair(sum * scale, Eigen::MatrixXd(grad * scale));
  };
}

// ---- featurization --------------------------------------------------------

Eigen::MatrixXd raw_masked_features(const TabularDataset& ds, const StandardizationStats& stats) {
  if (stats.empty()) fail_validation("raw features need fitted standardization statistics");
  if (!(stats.schema() == ds.schema())) fail_validation("raw features: schema mismatch");
  const Eigen::Index n = ds.rows(), f = ds.cols();
  Eigen::MatrixXd x(n, 2 * f);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < f; ++j) {
      if (ds.is_observed(r, j)) {
        x(r, j) = stats.standardize_cell(static_cast<std::size_t>(j), ds.values()(r, j));
        x(r, f + j) = 1.0;
      } else {
        x(r, j) = 0.0;
        x(r, f + j) = 0.0;
      }
    }
  }
  return x;
}

// ---- training -------------------------------------------------------------

ClassifierModel train_classifier(const ClassifierConfig& config, InputMode mode,
                                 const Eigen::MatrixXd& features, const std::vector<Label>& labels,
                                 const Eigen::MatrixXd& val_features,
                                 const std::vector<Label>& val_labels,
                                 ClassifierHistory* history_out) {
  config.validate();
  const Eigen::Index n = features.rows();
  if (n == 0) fail_validation("classifier training set is empty");
  if (labels.size() != static_cast<std::size_t>(n))
    fail_validation("classifier: feature/label row count mismatch");
  if (val_features.rows() != static_cast<Eigen::Index>(val_labels.size()))
    fail_validation("classifier: validation feature/label row count mismatch");
  if (config.epochs > 0 && n < 2)
    fail_validation("classifier training needs at least 2 rows to form a batch");

  Eigen::VectorXd targets = to_targets(labels, "classifier");
  const double pos_weight = config.pos_weight ? *config.pos_weight : auto_pos_weight(labels);
  {
    // single-class training data cannot drive the weighted loss sensibly
    std::size_t pos = 0;
    for (Label l : labels)
      if (l == Label::positive) ++pos;
    if (pos == 0 || pos == labels.size())
      fail_validation("classifier training data holds a single class");
  }

  ClassifierModel model;
  model.input_mode = mode;
  model.config = config;
  model.pos_weight_used = pos_weight;

  std::vector<LayerSpec> specs;
  Eigen::Index prev = features.cols();
  for (int w : config.hidden_widths) {
    LayerSpec s;
    s.in_dim = prev;
    s.out_dim = w;
    s.batchnorm = true;
    s.activation = Activation::leaky_relu;
    s.leaky_slope = config.leaky_slope;
    specs.push_back(s);
    prev = w;
  }
  LayerSpec out;
  out.in_dim = prev;
  out.out_dim = 1;
  out.batchnorm = false;
  out.activation = Activation::identity;  // sigmoid lives in the loss/predict head
  specs.push_back(out);
  model.network = Network(specs, derive_seed(config.seed, 1));

  Eigen::VectorXd val_targets;
  if (val_features.rows() > 0) val_targets = to_targets(val_labels, "classifier validation");

  RandomStream shuffle_rng(derive_seed(config.seed, 3));
  std::vector<ParamRef> params = trainable_parameters(model.network);
  AdamState adam(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  ClassifierHistory history;
  history.epochs.reserve(static_cast<std::size_t>(config.epochs));
  const Eigen::Index bsz = config.batch_size;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(perm);
    double loss_sum = 0.0;
    Eigen::Index rows_seen = 0;

    for (Eigen::Index start = 0; start < n; start += bsz) {
      const Eigen::Index cur = std::min<Eigen::Index>(bsz, n - start);
      if (cur < 2) continue;  // batchnorm is undefined on single rows

      Eigen::MatrixXd x(cur, features.cols());
      Eigen::VectorXd t(cur);
      for (Eigen::Index i = 0; i < cur; ++i) {
        const Eigen::Index row = perm[static_cast<std::size_t>(start + i)];
        x.row(i) = features.row(row);
        t[i] = targets[row];
      }

      ForwardTrace fwd = model.network.forward(x, RunMode::training);
      auto [value, d_out] = weighted_bce_loss(t, pos_weight)(fwd.output());
      if (!std::isfinite(value))
        fail_runtime("classifier: non-finite loss at epoch " + std::to_string(epoch) +
                     ", batch starting at row " + std::to_string(start));
      loss_sum += value * static_cast<double>(cur);
      rows_seen += cur;

      Gradients grads = model.network.backward(fwd, d_out);
      std::vector<ParamRef> grad_refs = gradient_refs(grads);
      adam.step(params, grad_refs, adam_cfg);
    }

    ClassifierEpoch entry;
    entry.train_loss = rows_seen > 0 ? loss_sum / static_cast<double>(rows_seen) : 0.0;
    if (val_features.rows() > 0) {
      ForwardTrace fwd = model.network.infer(val_features);
      entry.val_loss = weighted_bce_loss(val_targets, pos_weight)(fwd.output()).first;
      if (!std::isfinite(entry.val_loss))
        fail_runtime("classifier: non-finite validation loss at epoch " + std::to_string(epoch));
      std::vector<int> preds(static_cast<std::size_t>(val_features.rows()));
      std::vector<int> truth(static_cast<std::size_t>(val_features.rows()));
      for (Eigen::Index i = 0; i < val_features.rows(); ++i) {
        preds[static_cast<std::size_t>(i)] =
            sigmoid(fwd.output()(i, 0)) >= config.decision_threshold ? 1 : 0;
        truth[static_cast<std::size_t>(i)] = val_targets[i] == 1.0 ? 1 : 0;
      }
      entry.val_balanced_accuracy = classification_report(preds, truth).balanced_accuracy;
    }
    history.epochs.push_back(entry);
  }

  if (history_out) *history_out = std::move(history);
  return model;
}

ClassifierModel train_classifier_raw(const ClassifierConfig& config, const TabularDataset& train,
                                     const TabularDataset& validation,
                                     ClassifierHistory* history_out) {
  if (train.rows() == 0) fail_validation("classifier training set is empty");
  StandardizationStats stats = StandardizationStats::fit(train);
  Eigen::MatrixXd x = raw_masked_features(train, stats);
  Eigen::MatrixXd xv;
  std::vector<Label> yv;
  if (validation.rows() > 0) {
    if (!(train.schema() == validation.schema()))
      fail_validation("classifier: train/validation schema mismatch");
    xv = raw_masked_features(validation, stats);
    yv = validation.labels();
  } else {
    xv = Eigen::MatrixXd(0, x.cols());
  }
  ClassifierModel model = train_classifier(config, InputMode::raw_masked, x, train.labels(), xv,
                                           yv, history_out);
  model.schema = train.schema_ptr();
  model.standardization = std::move(stats);
  return model;
}

// ---- inference ------------------------------------------------------------

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.network.input_dim())
    fail_validation("predict: feature width does not match the model");
  Prediction out;
  out.probabilities.resize(features.rows());
  out.labels.resize(static_cast<std::size_t>(features.rows()));
  if (features.rows() == 0) return out;
  ForwardTrace fwd = model.network.infer(features);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double p = sigmoid(fwd.output()(i, 0));
    out.probabilities[i] = p;
    out.labels[static_cast<std::size_t>(i)] = p >= model.config.decision_threshold ? 1 : 0;
  }
  return out;
}

Prediction predict_raw(const ClassifierModel& model, const TabularDataset& ds) {
  if (model.input_mode != InputMode::raw_masked)
    fail_validation("predict_raw: model does not consume raw rows");
  if (!model.schema) fail_validation("predict_raw: model carries no schema");
  if (!(*model.schema == ds.schema())) fail_validation("predict_raw: schema mismatch");
  return predict(model, raw_masked_features(ds, model.standardization));
}

MetricsReport evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                  const std::vector<Label>& labels) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size()))
    fail_validation("evaluate: feature/label row count mismatch");
  Prediction pred = predict(model, features);
  std::vector<int> truth(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::unlabelled) fail_validation("evaluate: unlabelled row");
    truth[i] = labels[i] == Label::positive ? 1 : 0;
  }
  return classification_report(pred.labels, truth);
}

double classifier_gradient_check(ClassifierModel& model, const Eigen::MatrixXd& features,
                                 const std::vector<Label>& labels, double eps,
                                 int samples_per_tensor, std::uint64_t seed) {
  if (features.rows() < 2) fail_validation("gradient check needs at least 2 rows");
  Eigen::VectorXd targets = to_targets(labels, "gradient check");
  LossFn loss = weighted_bce_loss(targets, model.pos_weight_used);
  return gradient_check(model.network, loss, features, eps, samples_per_tensor, seed,
                        RunMode::training);
}

// ---- serialization --------------------------------------------------------

std::string ClassifierModel::to_json() const {
  detail::json o;
  o["format_version"] = 1;
  o["kind"] = "classifier";
  o["input_mode"] = input_mode == InputMode::raw_masked ? "raw_masked" : "embedding";
  o["config"] = detail::parse_json(config.to_json(), "config");
  o["pos_weight_used"] = pos_weight_used;
  o["network"] = detail::parse_json(network_to_json(network), "network");
  if (input_mode == InputMode::raw_masked) {
    if (!schema) fail_validation("raw classifier has no schema to serialize");
    o["schema"] = detail::parse_json(schema->to_json(), "schema");
    o["standardization"] = detail::parse_json(standardization.to_json(), "standardization");
  }
  return o.dump();
}

ClassifierModel ClassifierModel::from_json_text(const std::string& text) {
  detail::json o = detail::parse_json(text, "classifier model");
  if (detail::require(o, "format_version", "classifier model").get<int>() != 1)
    fail_validation("classifier model: unsupported format version");
  if (detail::require(o, "kind", "classifier model").get<std::string>() != "classifier")
    fail_validation("classifier model: wrong model kind");

  ClassifierModel m;
  const std::string mode = detail::require(o, "input_mode", "classifier model").get<std::string>();
  if (mode == "raw_masked")
    m.input_mode = InputMode::raw_masked;
  else if (mode == "embedding")
    m.input_mode = InputMode::embedding;
  else
    fail_validation("classifier model: unknown input mode '" + mode + "'");
  m.config =
      ClassifierConfig::from_json_text(detail::require(o, "config", "classifier model").dump());
  m.config.validate();
  m.pos_weight_used = detail::require(o, "pos_weight_used", "classifier model").get<double>();
  m.network = network_from_json_text(detail::require(o, "network", "classifier model").dump());
  if (m.network.output_dim() != 1) fail_validation("classifier model: output width must be 1");
  if (m.input_mode == InputMode::raw_masked) {
    auto schema = std::make_shared<const FeatureSchema>(
        FeatureSchema::from_json_text(detail::require(o, "schema", "classifier model").dump()));
    m.schema = schema;
    m.standardization = StandardizationStats::from_json_text(
        schema, detail::require(o, "standardization", "classifier model").dump());
    if (m.network.input_dim() != 2 * static_cast<Eigen::Index>(schema->size()))
      fail_validation("classifier model: input width does not match the schema");
  }
  return m;
}

}  // namespace mieo
