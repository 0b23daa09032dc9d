#include "mieo/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "mieo/error.hpp"

namespace mieo {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// four widths interpolating geometrically, the last pinned to `to`
std::vector<Eigen::Index> geometric_ramp(Eigen::Index from, Eigen::Index to) {
  std::vector<Eigen::Index> w(4);
  const double la = std::log(static_cast<double>(from));
  const double lb = std::log(static_cast<double>(to));
  for (int k = 1; k <= 4; ++k) {
    const double t = static_cast<double>(k) / 4.0;
    w[static_cast<std::size_t>(k - 1)] =
        std::max<Eigen::Index>(1, std::llround(std::exp(la + t * (lb - la))));
  }
  w[3] = to;
  return w;
}

void check_widths(const std::vector<int>& widths, Eigen::Index required_last, const char* which) {
  if (widths.empty()) return;
  if (widths.size() != 4) fail_validation(std::string(which) + " widths need exactly 4 entries");
  for (int w : widths)
    if (w < 1) fail_validation(std::string(which) + " widths must be positive");
  if (widths.back() != required_last)
    fail_validation(std::string(which) + " widths must end at " + std::to_string(required_last));
}

std::vector<Eigen::Index> as_index(const std::vector<int>& v) {
  std::vector<Eigen::Index> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

void check_same_schema(const FeatureSchema& a, const FeatureSchema& b, const char* what) {
  if (!(a == b)) fail_validation(std::string(what) + ": schema mismatch");
}

}  // namespace

// ---- config ---------------------------------------------------------------

void MieoConfig::validate(const FeatureSchema& schema) const {
  if (embedding_dim < 1) fail_validation("embedding_dim must be at least 1");
  if (!(w_bin >= 0.0) || !(w_cont >= 0.0)) fail_validation("loss weights must be nonnegative");
  if (!(w_bin + w_cont > 0.0)) fail_validation("loss weights must not both be zero");
  if (!(aug_mask_prob >= 0.0 && aug_mask_prob < 1.0))
    fail_validation("aug_mask_prob must lie in [0,1)");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail_validation("leaky_slope must lie in (0,1)");
  if (!(lr > 0.0)) fail_validation("lr must be positive");
  if (epochs < 0) fail_validation("epochs must be nonnegative");
  if (batch_size < 2) fail_validation("batch_size must be at least 2");
  check_widths(encoder_widths, embedding_dim, "encoder");
  check_widths(decoder_widths, static_cast<Eigen::Index>(schema.size()), "decoder");
}

std::vector<Eigen::Index> MieoConfig::resolved_encoder_widths(const FeatureSchema& schema) const {
  if (!encoder_widths.empty()) return as_index(encoder_widths);
  return geometric_ramp(2 * static_cast<Eigen::Index>(schema.size()), embedding_dim);
}

std::vector<Eigen::Index> MieoConfig::resolved_decoder_widths(const FeatureSchema& schema) const {
  if (!decoder_widths.empty()) return as_index(decoder_widths);
  return geometric_ramp(embedding_dim, static_cast<Eigen::Index>(schema.size()));
}

std::string MieoConfig::to_json() const {
  detail::json o;
  o["embedding_dim"] = embedding_dim;
  o["encoder_widths"] = encoder_widths;
  o["decoder_widths"] = decoder_widths;
  o["w_bin"] = w_bin;
  o["w_cont"] = w_cont;
  o["aug_mask_prob"] = aug_mask_prob;
  o["leaky_slope"] = leaky_slope;
  o["lr"] = lr;
  o["epochs"] = epochs;
  o["batch_size"] = batch_size;
  o["seed"] = seed;
  o["plain_embedding"] = plain_embedding;
  return o.dump();
}

MieoConfig MieoConfig::from_json_text(const std::string& text) {
  detail::json j = detail::parse_json(text, "mieo config");
  if (!j.is_object()) fail_validation("mieo config: expected an object");
  MieoConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "embedding_dim")
      c.embedding_dim = value.get<int>();
    else if (key == "encoder_widths")
      c.encoder_widths = value.get<std::vector<int>>();
    else if (key == "decoder_widths")
      c.decoder_widths = value.get<std::vector<int>>();
    else if (key == "w_bin")
      c.w_bin = value.get<double>();
    else if (key == "w_cont")
      c.w_cont = value.get<double>();
    else if (key == "aug_mask_prob")
      c.aug_mask_prob = value.get<double>();
    else if (key == "leaky_slope")
      c.leaky_slope = value.get<double>();
    else if (key == "lr")
      c.lr = value.get<double>();
    else if (key == "epochs")
      c.epochs = value.get<int>();
    else if (key == "batch_size")
      c.batch_size = value.get<int>();
    else if (key == "seed")
      c.seed = value.get<std::uint64_t>();
    else if (key == "plain_embedding")
      c.plain_embedding = value.get<bool>();
    else
      fail_validation("mieo config: unknown field '" + key + "'");
  }
  return c;
}

// ---- construction ---------------------------------------------------------

MieoModel build_mieo(const MieoConfig& config, std::shared_ptr<const FeatureSchema> schema,
                     std::uint64_t seed) {
  if (!schema) fail_validation("build_mieo: null schema");
  config.validate(*schema);
  const Eigen::Index f = static_cast<Eigen::Index>(schema->size());

  const auto enc_w = config.resolved_encoder_widths(*schema);
  const auto dec_w = config.resolved_decoder_widths(*schema);

  std::vector<LayerSpec> enc;
  Eigen::Index prev = 2 * f;
  for (std::size_t k = 0; k < 4; ++k) {
    LayerSpec s;
    s.in_dim = prev;
    s.out_dim = enc_w[k];
    const bool embedding_layer = k == 3;
    if (embedding_layer && config.plain_embedding) {
      s.batchnorm = false;
      s.activation = Activation::identity;
    } else {
      s.batchnorm = true;
      s.activation = Activation::leaky_relu;
      s.leaky_slope = config.leaky_slope;
    }
    enc.push_back(s);
    prev = s.out_dim;
  }

  std::vector<LayerSpec> dec;
  prev = config.embedding_dim;
  for (std::size_t k = 0; k < 4; ++k) {
    LayerSpec s;
    s.in_dim = prev;
    s.out_dim = dec_w[k];
    if (k == 3) {  // linear output; sigmoid applies per binary position later
      s.batchnorm = false;
      s.activation = Activation::identity;
    } else {
      s.batchnorm = true;
      s.activation = Activation::leaky_relu;
      s.leaky_slope = config.leaky_slope;
    }
    dec.push_back(s);
    prev = s.out_dim;
  }

  MieoModel model;
  model.encoder = Network(enc, derive_seed(seed, 1));
  model.decoder = Network(dec, derive_seed(seed, 2));
  model.schema = std::move(schema);
  model.config = config;
  return model;
}

// ---- masked input ---------------------------------------------------------

MaskedInput make_masked_input(const Eigen::VectorXd& values, const MaskVector& observed_mask,
                              double aug_mask_prob, RandomStream& rng) {
  const Eigen::Index f = values.size();
  if (observed_mask.size() != f) fail_validation("make_masked_input: mask length mismatch");
  if (!(aug_mask_prob >= 0.0 && aug_mask_prob < 1.0))
    fail_validation("aug_mask_prob must lie in [0,1)");
  MaskedInput out;
  out.effective_mask = observed_mask;
  if (aug_mask_prob > 0.0) {
    // one draw per observed entry, column order; absent entries draw nothing
    for (Eigen::Index j = 0; j < f; ++j)
      if (observed_mask[j] && rng.bernoulli(aug_mask_prob)) out.effective_mask[j] = false;
  }
  out.input.resize(2 * f);
  for (Eigen::Index j = 0; j < f; ++j) {
    if (out.effective_mask[j]) {
      if (!std::isfinite(values[j]))
        fail_validation("make_masked_input: non-finite value at an observed entry");
      out.input[j] = values[j];
      out.input[f + j] = 1.0;
    } else {
      out.input[j] = 0.0;
      out.input[f + j] = 0.0;
    }
  }
  return out;
}

// ---- loss -----------------------------------------------------------------

BatchLoss mieo_loss_batch(const FeatureSchema& schema, const Eigen::MatrixXd& linear_out,
                          const Eigen::MatrixXd& target, const MaskMatrix& target_mask,
                          double w_bin, double w_cont, bool want_gradient) {
  const Eigen::Index b = linear_out.rows();
  const Eigen::Index f = static_cast<Eigen::Index>(schema.size());
  if (linear_out.cols() != f) fail_validation("loss: output width does not match schema");
  if (target.rows() != b || target.cols() != f) fail_validation("loss: target shape mismatch");
  if (target_mask.rows() != b || target_mask.cols() != f)
    fail_validation("loss: mask shape mismatch");
  if (!(w_bin >= 0.0) || !(w_cont >= 0.0)) fail_validation("loss weights must be nonnegative");

  BatchLoss out;
  if (want_gradient) out.d_linear = Eigen::MatrixXd::Zero(b, f);

  double bce_sum = 0.0, mse_sum = 0.0;
  std::size_t n_bin = 0, n_cont = 0;
  for (Eigen::Index r = 0; r < b; ++r) {
    for (Eigen::Index j = 0; j < f; ++j) {
      if (!target_mask(r, j)) continue;
      const double t = target(r, j);
      if (!std::isfinite(t)) fail_validation("loss: non-finite target at an observed entry");
      const double z = linear_out(r, j);
      if (schema.is_binary(static_cast<std::size_t>(j))) {
        const double p = sigmoid(z);
        const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        bce_sum += -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
        ++n_bin;
        // fused sigmoid+BCE gradient; flat inside the clamp region
        if (want_gradient && !clamped) out.d_linear(r, j) = p - t;
      } else {
        const double diff = z - t;
        mse_sum += diff * diff;
        ++n_cont;
        if (want_gradient) out.d_linear(r, j) = 2.0 * diff;
      }
    }
  }

  LossBreakdown& bd = out.breakdown;
  bd.n_bin_observed = n_bin;
  bd.n_cont_observed = n_cont;
  bd.bce_part = n_bin ? bce_sum / static_cast<double>(n_bin) : 0.0;
  bd.mse_part = n_cont ? mse_sum / static_cast<double>(n_cont) : 0.0;
  bd.total = w_bin * bd.bce_part + w_cont * bd.mse_part;

  if (want_gradient) {
    const double bin_scale = n_bin ? w_bin / static_cast<double>(n_bin) : 0.0;
    const double cont_scale = n_cont ? w_cont / static_cast<double>(n_cont) : 0.0;
    for (Eigen::Index r = 0; r < b; ++r)
      for (Eigen::Index j = 0; j < f; ++j)
        if (target_mask(r, j))
          out.d_linear(r, j) *=
              schema.is_binary(static_cast<std::size_t>(j)) ? bin_scale : cont_scale;
  }
  return out;
}

LossBreakdown mieo_loss(const FeatureSchema& schema, const Eigen::VectorXd& output,
                        const Eigen::VectorXd& target, const MaskVector& target_mask, double w_bin,
                        double w_cont) {
  const Eigen::Index f = static_cast<Eigen::Index>(schema.size());
  if (output.size() != f || target.size() != f || target_mask.size() != f)
    fail_validation("loss: row length does not match schema");
  // the row form takes post-sigmoid probabilities at binary positions; map
  // them back to logits so the pooled form's sigmoid reproduces them
  Eigen::MatrixXd z(1, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    double v = output[j];
    if (schema.is_binary(static_cast<std::size_t>(j))) {
      if (!(v > 0.0 && v < 1.0)) v = std::clamp(v, kProbClamp, 1.0 - kProbClamp);
      z(0, j) = std::log(v / (1.0 - v));
    } else {
      z(0, j) = v;
    }
  }
  Eigen::MatrixXd t(1, f);
  for (Eigen::Index j = 0; j < f; ++j) t(0, j) = target_mask[j] ? target[j] : 0.0;
  MaskMatrix m(1, f);
  m.row(0) = target_mask.transpose();
  return mieo_loss_batch(schema, z, t, m, w_bin, w_cont, false).breakdown;
}

// ---- training -------------------------------------------------------------

namespace {

struct PooledLoss {
  double bce_sum = 0.0;
  double mse_sum = 0.0;
  std::size_t n_bin = 0;
  std::size_t n_cont = 0;

  void add(const LossBreakdown& bd) {
    bce_sum += bd.bce_part * static_cast<double>(bd.n_bin_observed);
    mse_sum += bd.mse_part * static_cast<double>(bd.n_cont_observed);
    n_bin += bd.n_bin_observed;
    n_cont += bd.n_cont_observed;
  }

  LossBreakdown finish(double w_bin, double w_cont) const {
    LossBreakdown bd;
    bd.n_bin_observed = n_bin;
    bd.n_cont_observed = n_cont;
    bd.bce_part = n_bin ? bce_sum / static_cast<double>(n_bin) : 0.0;
    bd.mse_part = n_cont ? mse_sum / static_cast<double>(n_cont) : 0.0;
    bd.total = w_bin * bd.bce_part + w_cont * bd.mse_part;
    return bd;
  }
};

// rows of standardized values with zeros at unobserved cells
Eigen::MatrixXd zero_filled(const Eigen::MatrixXd& values, const MaskMatrix& mask) {
  Eigen::MatrixXd out = values;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      if (!mask(r, c)) out(r, c) = 0.0;
  return out;
}

Eigen::MatrixXd plain_inputs(const Eigen::MatrixXd& values, const MaskMatrix& mask) {
  const Eigen::Index n = values.rows(), f = values.cols();
  Eigen::MatrixXd x(n, 2 * f);
  RandomStream unused(0);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::VectorXd vals = values.row(r).transpose();
    MaskVector obs = mask.row(r).transpose();
    x.row(r) = make_masked_input(vals, obs, 0.0, unused).input.transpose();
  }
  return x;
}

}  // namespace

MieoHistory train_mieo(MieoModel& model, const TabularDataset& train_pool,
                       const TabularDataset& val_pool) {
  const MieoConfig& cfg = model.config;
  if (!model.schema) fail_validation("train_mieo: model has no schema");
  cfg.validate(*model.schema);
  check_same_schema(*model.schema, train_pool.schema(), "train_mieo");
  if (val_pool.rows() > 0) check_same_schema(*model.schema, val_pool.schema(), "train_mieo");

  const Eigen::Index n = train_pool.rows();
  if (n == 0) fail_validation("train_mieo: empty training pool");
  if (cfg.epochs > 0 && n < 2)
    fail_validation("train_mieo: need at least 2 rows to form a batch");

  const Eigen::Index f = model.feature_count();
  const Eigen::MatrixXd& values = train_pool.values();
  const MaskMatrix mask = null_mask(train_pool);
  const Eigen::MatrixXd target = zero_filled(values, mask);

  // validation inputs carry no augmentation, so they are fixed across epochs
  Eigen::MatrixXd val_x, val_target;
  MaskMatrix val_mask;
  if (val_pool.rows() > 0) {
    val_mask = null_mask(val_pool);
    val_x = plain_inputs(val_pool.values(), val_mask);
    val_target = zero_filled(val_pool.values(), val_mask);
  }

  RandomStream shuffle_rng(derive_seed(cfg.seed, 3));
  RandomStream aug_rng(derive_seed(cfg.seed, 4));

  std::vector<ParamRef> params = trainable_parameters(model.encoder);
  {
    std::vector<ParamRef> dec_params = trainable_parameters(model.decoder);
    params.insert(params.end(), dec_params.begin(), dec_params.end());
  }
  AdamState adam(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  MieoHistory history;
  history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
  const Eigen::Index bsz = cfg.batch_size;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(perm);
    PooledLoss epoch_loss;

    for (Eigen::Index start = 0; start < n; start += bsz) {
      const Eigen::Index cur = std::min<Eigen::Index>(bsz, n - start);
      if (cur < 2) continue;  // batchnorm is undefined on single rows

      Eigen::MatrixXd x(cur, 2 * f), t(cur, f);
      MaskMatrix m(cur, f);
      for (Eigen::Index i = 0; i < cur; ++i) {
        const Eigen::Index row = perm[static_cast<std::size_t>(start + i)];
        Eigen::VectorXd vals = values.row(row).transpose();
        MaskVector obs = mask.row(row).transpose();
        x.row(i) = make_masked_input(vals, obs, cfg.aug_mask_prob, aug_rng).input.transpose();
        t.row(i) = target.row(row);
        m.row(i) = mask.row(row);
      }

      ForwardTrace enc_fwd = model.encoder.forward(x, RunMode::training);
      ForwardTrace dec_fwd = model.decoder.forward(enc_fwd.output(), RunMode::training);
      BatchLoss loss =
          mieo_loss_batch(*model.schema, dec_fwd.output(), t, m, cfg.w_bin, cfg.w_cont, true);
      if (!std::isfinite(loss.breakdown.total))
        fail_runtime("train_mieo: non-finite loss at epoch " + std::to_string(epoch) +
                     ", batch starting at row " + std::to_string(start));
      epoch_loss.add(loss.breakdown);

      Gradients dec_grads = model.decoder.backward(dec_fwd, loss.d_linear);
      Gradients enc_grads = model.encoder.backward(enc_fwd, dec_grads.input);
      std::vector<ParamRef> grads = gradient_refs(enc_grads);
      {
        std::vector<ParamRef> dec_refs = gradient_refs(dec_grads);
        grads.insert(grads.end(), dec_refs.begin(), dec_refs.end());
      }
      adam.step(params, grads, adam_cfg);
    }

    MieoEpoch entry;
    entry.train = epoch_loss.finish(cfg.w_bin, cfg.w_cont);
    if (val_pool.rows() > 0) {
      ForwardTrace enc_fwd = model.encoder.infer(val_x);
      ForwardTrace dec_fwd = model.decoder.infer(enc_fwd.output());
      entry.validation = mieo_loss_batch(*model.schema, dec_fwd.output(), val_target, val_mask,
                                         cfg.w_bin, cfg.w_cont, false)
                             .breakdown;
      if (!std::isfinite(entry.validation.total))
        fail_runtime("train_mieo: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    history.epochs.push_back(entry);
  }
  return history;
}

MieoModel fit_mieo(const MieoConfig& config, const TabularDataset& labelled_train,
                   const TabularDataset* unlabelled, const TabularDataset* validation,
                   MieoHistory* history_out) {
  if (labelled_train.rows() == 0) fail_validation("fit_mieo: empty training split");
  config.validate(labelled_train.schema());

  MieoModel model = build_mieo(config, labelled_train.schema_ptr(), config.seed);
  model.standardization = StandardizationStats::fit(labelled_train);

  TabularDataset pool = model.standardization.apply(labelled_train);
  if (unlabelled && unlabelled->rows() > 0) {
    check_same_schema(labelled_train.schema(), unlabelled->schema(), "fit_mieo");
    pool = TabularDataset::concat(pool, model.standardization.apply(*unlabelled));
  }

  TabularDataset val_std;
  if (validation && validation->rows() > 0) {
    check_same_schema(labelled_train.schema(), validation->schema(), "fit_mieo");
    val_std = model.standardization.apply(*validation);
  } else {
    val_std = TabularDataset(labelled_train.schema_ptr(),
                             Eigen::MatrixXd(0, model.feature_count()), {});
  }

  MieoHistory history = train_mieo(model, pool, val_std);
  if (history_out) *history_out = std::move(history);
  return model;
}

// ---- inference ------------------------------------------------------------

namespace {

Eigen::VectorXd standardize_row(const MieoModel& model, const Eigen::VectorXd& values,
                                const MaskVector& observed_mask) {
  const Eigen::Index f = model.feature_count();
  if (values.size() != f || observed_mask.size() != f)
    fail_validation("row length does not match the model schema");
  if (model.standardization.empty())
    fail_validation("model carries no standardization statistics");
  Eigen::VectorXd out(f);
  for (Eigen::Index j = 0; j < f; ++j)
    out[j] = observed_mask[j]
                 ? model.standardization.standardize_cell(static_cast<std::size_t>(j), values[j])
                 : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// decoder's linear outputs for raw-unit rows, one inference pass
Eigen::MatrixXd decode_rows(const MieoModel& model, const Eigen::MatrixXd& values,
                            const MaskMatrix& mask, Eigen::MatrixXd* embeddings_out) {
  const Eigen::Index n = values.rows(), f = values.cols();
  Eigen::MatrixXd x(n, 2 * f);
  RandomStream unused(0);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::VectorXd std_vals =
        standardize_row(model, values.row(r).transpose(), mask.row(r).transpose());
    x.row(r) = make_masked_input(std_vals, mask.row(r).transpose(), 0.0, unused).input.transpose();
  }
  ForwardTrace enc_fwd = model.encoder.infer(x);
  if (embeddings_out) *embeddings_out = enc_fwd.output();
  ForwardTrace dec_fwd = model.decoder.infer(enc_fwd.output());
  return dec_fwd.output();
}

}  // namespace

Eigen::VectorXd encode(const MieoModel& model, const Eigen::VectorXd& values,
                       const MaskVector& observed_mask) {
  Eigen::VectorXd std_vals = standardize_row(model, values, observed_mask);
  RandomStream unused(0);
  MaskedInput mi = make_masked_input(std_vals, observed_mask, 0.0, unused);
  ForwardTrace enc_fwd = model.encoder.infer(mi.input.transpose());
  return enc_fwd.output().row(0).transpose();
}

Eigen::MatrixXd encode_dataset(const MieoModel& model, const TabularDataset& ds) {
  check_same_schema(*model.schema, ds.schema(), "encode");
  if (ds.rows() == 0) return Eigen::MatrixXd(0, model.embedding_dim());
  const MaskMatrix mask = null_mask(ds);
  Eigen::MatrixXd embeddings;
  decode_rows(model, ds.values(), mask, &embeddings);
  return embeddings;
}

ImputedRow impute(const MieoModel& model, const Eigen::VectorXd& values,
                  const MaskVector& observed_mask) {
  const Eigen::Index f = model.feature_count();
  if (values.size() != f || observed_mask.size() != f)
    fail_validation("row length does not match the model schema");
  MaskMatrix mask(1, f);
  mask.row(0) = observed_mask.transpose();
  Eigen::MatrixXd vals(1, f);
  vals.row(0) = values.transpose();
  Eigen::MatrixXd z = decode_rows(model, vals, mask, nullptr);

  ImputedRow out;
  out.values.resize(f);
  out.thresholded.resize(f);
  for (Eigen::Index j = 0; j < f; ++j) {
    if (observed_mask[j]) {
      out.values[j] = values[j];
      out.thresholded[j] = values[j];
    } else if (model.schema->is_binary(static_cast<std::size_t>(j))) {
      const double p = sigmoid(z(0, j));
      out.values[j] = p;
      out.thresholded[j] = p >= 0.5 ? 1.0 : 0.0;
    } else {
      const double v =
          model.standardization.destandardize_cell(static_cast<std::size_t>(j), z(0, j));
      out.values[j] = v;
      out.thresholded[j] = v;
    }
  }
  return out;
}

ImputedData impute_dataset(const MieoModel& model, const TabularDataset& ds) {
  check_same_schema(*model.schema, ds.schema(), "impute");
  const Eigen::Index n = ds.rows(), f = ds.cols();
  ImputedData out;
  out.values.resize(n, f);
  out.thresholded.resize(n, f);
  if (n == 0) return out;
  const MaskMatrix mask = null_mask(ds);
  Eigen::MatrixXd z = decode_rows(model, ds.values(), mask, nullptr);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < f; ++j) {
      if (mask(r, j)) {
        out.values(r, j) = ds.values()(r, j);
        out.thresholded(r, j) = ds.values()(r, j);
      } else if (model.schema->is_binary(static_cast<std::size_t>(j))) {
        const double p = sigmoid(z(r, j));
        out.values(r, j) = p;
        out.thresholded(r, j) = p >= 0.5 ? 1.0 : 0.0;
      } else {
        const double v =
            model.standardization.destandardize_cell(static_cast<std::size_t>(j), z(r, j));
        out.values(r, j) = v;
        out.thresholded(r, j) = v;
      }
    }
  }
  return out;
}

LossBreakdown reconstruction_loss(const MieoModel& model, const TabularDataset& ds) {
  check_same_schema(*model.schema, ds.schema(), "reconstruction");
  if (ds.rows() == 0) fail_validation("reconstruction: empty dataset");
  if (model.standardization.empty())
    fail_validation("model carries no standardization statistics");
  TabularDataset std_ds = model.standardization.apply(ds);
  const MaskMatrix mask = null_mask(std_ds);
  Eigen::MatrixXd x = plain_inputs(std_ds.values(), mask);
  Eigen::MatrixXd target = zero_filled(std_ds.values(), mask);
  ForwardTrace enc_fwd = model.encoder.infer(x);
  ForwardTrace dec_fwd = model.decoder.infer(enc_fwd.output());
  return mieo_loss_batch(*model.schema, dec_fwd.output(), target, mask, model.config.w_bin,
                         model.config.w_cont, false)
      .breakdown;
}

// ---- gradient verification ------------------------------------------------

double mieo_gradient_check(MieoModel& model, const Eigen::MatrixXd& standardized_values,
                           const MaskMatrix& observed_mask, double eps, int samples_per_tensor,
                           std::uint64_t seed) {
  const Eigen::Index n = standardized_values.rows();
  const Eigen::Index f = model.feature_count();
  if (n < 2) fail_validation("gradient check needs at least 2 rows");
  if (standardized_values.cols() != f || observed_mask.rows() != n || observed_mask.cols() != f)
    fail_validation("gradient check: shape mismatch");

  // masked inputs are drawn once and then held fixed through every evaluation
  RandomStream aug_rng(derive_seed(seed, 7));
  Eigen::MatrixXd x(n, 2 * f);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::VectorXd vals = standardized_values.row(r).transpose();
    MaskVector obs = observed_mask.row(r).transpose();
    for (Eigen::Index j = 0; j < f; ++j)
      if (!obs[j]) vals[j] = 0.0;
    x.row(r) = make_masked_input(vals, obs, model.config.aug_mask_prob, aug_rng).input.transpose();
  }
  Eigen::MatrixXd target = zero_filled(standardized_values, observed_mask);

  const double w_bin = model.config.w_bin, w_cont = model.config.w_cont;
  ForwardTrace enc_fwd = model.encoder.forward(x, RunMode::training, false);
  ForwardTrace dec_fwd = model.decoder.forward(enc_fwd.output(), RunMode::training, false);
  BatchLoss loss =
      mieo_loss_batch(*model.schema, dec_fwd.output(), target, observed_mask, w_bin, w_cont, true);
  Gradients dec_grads = model.decoder.backward(dec_fwd, loss.d_linear);
  Gradients enc_grads = model.encoder.backward(enc_fwd, dec_grads.input);

  std::vector<ParamRef> params = trainable_parameters(model.encoder);
  {
    std::vector<ParamRef> dec_params = trainable_parameters(model.decoder);
    params.insert(params.end(), dec_params.begin(), dec_params.end());
  }
  std::vector<ParamRef> analytic = gradient_refs(enc_grads);
  {
    std::vector<ParamRef> dec_refs = gradient_refs(dec_grads);
    analytic.insert(analytic.end(), dec_refs.begin(), dec_refs.end());
  }

  auto eval = [&]() {
    ForwardTrace e = model.encoder.forward(x, RunMode::training, false);
    ForwardTrace d = model.decoder.forward(e.output(), RunMode::training, false);
    return mieo_loss_batch(*model.schema, d.output(), target, observed_mask, w_bin, w_cont, false)
        .breakdown.total;
  };
  return finite_difference_check(params, analytic, eval, eps, samples_per_tensor,
                                 derive_seed(seed, 8));
}

// ---- serialization --------------------------------------------------------

std::string MieoModel::to_json() const {
  if (!schema) fail_validation("model has no schema");
  if (standardization.empty()) fail_validation("model carries no standardization statistics");
  detail::json o;
  o["format_version"] = 1;
  o["kind"] = "mieo";
  o["schema"] = detail::parse_json(schema->to_json(), "schema");
  o["standardization"] = detail::parse_json(standardization.to_json(), "standardization");
  o["config"] = detail::parse_json(config.to_json(), "config");
  detail::json head = detail::json::array();
  for (std::size_t j = 0; j < schema->size(); ++j) head.push_back(schema->is_binary(j) ? 1 : 0);
  o["binary_head"] = std::move(head);
  o["encoder"] = detail::parse_json(network_to_json(encoder), "encoder");
  o["decoder"] = detail::parse_json(network_to_json(decoder), "decoder");
  return o.dump();
}

MieoModel MieoModel::from_json_text(const std::string& text) {
  detail::json o = detail::parse_json(text, "mieo model");
  if (detail::require(o, "format_version", "mieo model").get<int>() != 1)
    fail_validation("mieo model: unsupported format version");
  if (detail::require(o, "kind", "mieo model").get<std::string>() != "mieo")
    fail_validation("mieo model: wrong model kind");

  MieoModel m;
  auto schema = std::make_shared<const FeatureSchema>(
      FeatureSchema::from_json_text(detail::require(o, "schema", "mieo model").dump()));
  m.schema = schema;
  m.standardization = StandardizationStats::from_json_text(
      schema, detail::require(o, "standardization", "mieo model").dump());
  m.config =
      MieoConfig::from_json_text(detail::require(o, "config", "mieo model").dump());
  m.config.validate(*schema);
  m.encoder = network_from_json_text(detail::require(o, "encoder", "mieo model").dump());
  m.decoder = network_from_json_text(detail::require(o, "decoder", "mieo model").dump());

  const Eigen::Index f = static_cast<Eigen::Index>(schema->size());
  const detail::json& head = detail::require(o, "binary_head", "mieo model");
  if (static_cast<Eigen::Index>(head.size()) != f)
    fail_validation("mieo model: binary head map length mismatch");
  for (std::size_t j = 0; j < schema->size(); ++j)
    if (head[j].get<int>() != (schema->is_binary(j) ? 1 : 0))
      fail_validation("mieo model: binary head map contradicts the schema");
  if (m.encoder.input_dim() != 2 * f) fail_validation("mieo model: encoder input width mismatch");
  if (m.encoder.output_dim() != m.config.embedding_dim)
    fail_validation("mieo model: embedding width mismatch");
  if (m.decoder.input_dim() != m.config.embedding_dim)
    fail_validation("mieo model: decoder input width mismatch");
  if (m.decoder.output_dim() != f) fail_validation("mieo model: decoder output width mismatch");
  return m;
}

}  // namespace mieo
