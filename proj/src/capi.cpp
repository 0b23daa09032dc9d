#include "mieo.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json_util.hpp"
#include "mieo/autoencoder.hpp"
#include "mieo/classifier.hpp"
#include "mieo/csv.hpp"
#include "mieo/dataset.hpp"
#include "mieo/error.hpp"
#include "mieo/metrics.hpp"
#include "mieo/schema.hpp"
#include "mieo/search.hpp"
#include "mieo/synth.hpp"

struct mieo_schema {
  std::shared_ptr<const mieo::FeatureSchema> ptr;
};
struct mieo_dataset {
  mieo::TabularDataset ds;
};
struct mieo_encoder {
  mieo::MieoModel model;
};
struct mieo_classifier {
  mieo::ClassifierModel model;
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* msg) {
  try {
    g_last_error = msg ? msg : "unknown failure";
  } catch (...) {
    // an allocation failure while recording one; the old text stays
  }
}

// maps exceptions onto status codes; the body must not return normally
// without meaning success
template <typename Fn>
mieo_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return MIEO_OK;
  } catch (const mieo::Error& e) {
    set_error(e.what());
    return static_cast<mieo_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    set_error(e.what());
    return MIEO_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown failure");
    return MIEO_ERR_RUNTIME;
  }
}

void need(const void* p, const char* what) {
  if (!p) mieo::fail_usage(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) mieo::fail_usage("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) mieo::fail_runtime("read failed: " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) mieo::fail_usage("cannot write file: " + path);
  out << content;
  if (!out) mieo::fail_runtime("write failed: " + path);
}

mieo::detail::json loss_to_obj(const mieo::LossBreakdown& b) {
  mieo::detail::json o;
  o["total"] = b.total;
  o["bce_part"] = b.bce_part;
  o["mse_part"] = b.mse_part;
  o["n_bin_observed"] = b.n_bin_observed;
  o["n_cont_observed"] = b.n_cont_observed;
  return o;
}

std::string mieo_history_json(const mieo::MieoHistory& h) {
  mieo::detail::json arr = mieo::detail::json::array();
  for (const mieo::MieoEpoch& e : h.epochs) {
    mieo::detail::json o;
    o["train"] = loss_to_obj(e.train);
    o["validation"] = loss_to_obj(e.validation);
    arr.push_back(std::move(o));
  }
  mieo::detail::json root;
  root["epochs"] = std::move(arr);
  return root.dump();
}

std::string clf_history_json(const mieo::ClassifierHistory& h) {
  mieo::detail::json arr = mieo::detail::json::array();
  for (const mieo::ClassifierEpoch& e : h.epochs) {
    mieo::detail::json o;
    o["train_loss"] = e.train_loss;
    o["val_loss"] = e.val_loss;
    o["val_balanced_accuracy"] = e.val_balanced_accuracy;
    arr.push_back(std::move(o));
  }
  mieo::detail::json root;
  root["epochs"] = std::move(arr);
  return root.dump();
}

// embedding column names e00.., widened past two digits when needed
std::vector<std::string> embedding_names(Eigen::Index dim) {
  std::size_t width = std::to_string(dim > 0 ? dim - 1 : 0).size();
  if (width < 2) width = 2;
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::string digits = std::to_string(j);
    names.push_back("e" + std::string(width - digits.size(), '0') + digits);
  }
  return names;
}

std::vector<int> truth_labels(const mieo::TabularDataset& ds) {
  std::vector<int> out(ds.labels().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (ds.labels()[i] == mieo::Label::unlabelled)
      mieo::fail_validation("evaluation needs labelled rows; row " + std::to_string(i) +
                            " has no label");
    out[i] = ds.labels()[i] == mieo::Label::positive ? 1 : 0;
  }
  return out;
}

mieo::Prediction predict_any(const mieo::ClassifierModel& model, const mieo_encoder* e,
                             const mieo::TabularDataset& ds) {
  if (model.input_mode == mieo::InputMode::raw_masked) return predict_raw(model, ds);
  need(e, "encoder (embedding-mode classifier)");
  return predict(model, encode_dataset(e->model, ds));
}

}  // namespace

extern "C" {

const char* mieo_version(void) { return "0.1.0"; }

const char* mieo_last_error(void) { return g_last_error.c_str(); }

void mieo_string_free(char* s) { std::free(s); }

/* ---- schema ---- */

mieo_status mieo_schema_from_json(const char* json_text, mieo_schema** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    auto schema = std::make_shared<mieo::FeatureSchema>(
        mieo::FeatureSchema::from_json_text(json_text));
    *out = new mieo_schema{std::move(schema)};
  });
}

mieo_status mieo_schema_to_json(const mieo_schema* s, char** json_out) {
  return guarded([&] {
    need(s, "schema");
    need(json_out, "json_out");
    *json_out = dup_string(s->ptr->to_json());
  });
}

mieo_status mieo_schema_infer_csv(const char* csv_path, mieo_schema** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(out, "out");
    auto schema = std::make_shared<mieo::FeatureSchema>(mieo::infer_schema_csv(csv_path));
    *out = new mieo_schema{std::move(schema)};
  });
}

mieo_status mieo_schema_feature_count(const mieo_schema* s, size_t* out) {
  return guarded([&] {
    need(s, "schema");
    need(out, "out");
    *out = s->ptr->size();
  });
}

void mieo_schema_free(mieo_schema* s) { delete s; }

/* ---- datasets ---- */

mieo_status mieo_dataset_load_csv(const char* csv_path, const mieo_schema* s, mieo_dataset** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(s, "schema");
    need(out, "out");
    *out = new mieo_dataset{mieo::load_csv(csv_path, *s->ptr)};
  });
}

mieo_status mieo_dataset_save_csv(const mieo_dataset* d, const char* csv_path) {
  return guarded([&] {
    need(d, "dataset");
    need(csv_path, "csv_path");
    mieo::save_csv(d->ds, csv_path);
  });
}

mieo_status mieo_dataset_shape(const mieo_dataset* d, size_t* rows_out, size_t* cols_out) {
  return guarded([&] {
    need(d, "dataset");
    need(rows_out, "rows_out");
    need(cols_out, "cols_out");
    *rows_out = static_cast<size_t>(d->ds.rows());
    *cols_out = static_cast<size_t>(d->ds.cols());
  });
}

mieo_status mieo_dataset_label_counts(const mieo_dataset* d, size_t* negative_out,
                                      size_t* positive_out, size_t* unlabelled_out) {
  return guarded([&] {
    need(d, "dataset");
    need(negative_out, "negative_out");
    need(positive_out, "positive_out");
    need(unlabelled_out, "unlabelled_out");
    *negative_out = d->ds.count_label(mieo::Label::negative);
    *positive_out = d->ds.count_label(mieo::Label::positive);
    *unlabelled_out = d->ds.count_label(mieo::Label::unlabelled);
  });
}

mieo_status mieo_dataset_schema(const mieo_dataset* d, mieo_schema** out) {
  return guarded([&] {
    need(d, "dataset");
    need(out, "out");
    *out = new mieo_schema{d->ds.schema_ptr()};
  });
}

mieo_status mieo_dataset_preprocess(const mieo_dataset* d, const char* bounds_json,
                                    mieo_dataset** out) {
  return guarded([&] {
    need(d, "dataset");
    need(bounds_json, "bounds_json");
    need(out, "out");
    mieo::detail::json spec = mieo::detail::parse_json(bounds_json, "bounds");
    if (!spec.is_object()) mieo::fail_validation("bounds: expected an object");
    std::map<std::string, mieo::ValueBounds> bounds;
    for (const auto& [name, range] : spec.items()) {
      if (!range.is_object()) mieo::fail_validation("bounds: range of '" + name + "' must be an object");
      mieo::ValueBounds vb;
      vb.low = mieo::detail::require(range, "low", "bounds '" + name + "'").get<double>();
      vb.high = mieo::detail::require(range, "high", "bounds '" + name + "'").get<double>();
      bounds.emplace(name, vb);
    }
    *out = new mieo_dataset{mieo::preprocess(d->ds, bounds)};
  });
}

mieo_status mieo_dataset_split(const mieo_dataset* d, uint64_t seed, mieo_dataset** train_out,
                               mieo_dataset** validation_out, mieo_dataset** test_out,
                               mieo_dataset** unlabelled_out) {
  return guarded([&] {
    need(d, "dataset");
    need(train_out, "train_out");
    need(validation_out, "validation_out");
    need(test_out, "test_out");
    need(unlabelled_out, "unlabelled_out");
    mieo::SplitResult parts = mieo::split(d->ds, seed);
    *train_out = new mieo_dataset{std::move(parts.train)};
    *validation_out = new mieo_dataset{std::move(parts.validation)};
    *test_out = new mieo_dataset{std::move(parts.test)};
    *unlabelled_out = new mieo_dataset{std::move(parts.unlabelled)};
  });
}

mieo_status mieo_dataset_concat(const mieo_dataset* a, const mieo_dataset* b, mieo_dataset** out) {
  return guarded([&] {
    need(a, "first dataset");
    need(b, "second dataset");
    need(out, "out");
    *out = new mieo_dataset{mieo::TabularDataset::concat(a->ds, b->ds)};
  });
}

void mieo_dataset_free(mieo_dataset* d) { delete d; }

/* ---- synthetic data ---- */

mieo_status mieo_synth_paper_like_spec(size_t n_rows, char** spec_json_out) {
  return guarded([&] {
    need(spec_json_out, "spec_json_out");
    mieo::SynthSpec spec = n_rows == 0 ? mieo::SynthSpec::paper_like()
                                       : mieo::SynthSpec::paper_like(n_rows);
    *spec_json_out = dup_string(spec.to_json());
  });
}

mieo_status mieo_synth_generate(const char* spec_json, uint64_t seed, mieo_dataset** masked_out,
                                mieo_dataset** truth_out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(masked_out, "masked_out");
    mieo::SynthSpec spec = mieo::SynthSpec::from_json_text(spec_json);
    mieo::SynthResult r = mieo::generate(spec, seed);
    *masked_out = new mieo_dataset{std::move(r.masked)};
    if (truth_out) *truth_out = new mieo_dataset{std::move(r.truth)};
  });
}

mieo_status mieo_synth_bayes_reference(const char* spec_json, size_t n_mc, uint64_t seed,
                                       double* out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    mieo::SynthSpec spec = mieo::SynthSpec::from_json_text(spec_json);
    *out = mieo::bayes_reference(spec, n_mc, seed);
  });
}

/* ---- encoder ---- */

mieo_status mieo_encoder_train(const char* config_json, const mieo_dataset* train,
                               const mieo_dataset* unlabelled, const mieo_dataset* validation,
                               char** history_json_out, mieo_encoder** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(train, "train");
    need(out, "out");
    mieo::MieoConfig config = mieo::MieoConfig::from_json_text(config_json);
    mieo::MieoHistory history;
    mieo::MieoModel model =
        mieo::fit_mieo(config, train->ds, unlabelled ? &unlabelled->ds : nullptr,
                       validation ? &validation->ds : nullptr,
                       history_json_out ? &history : nullptr);
    if (history_json_out) *history_json_out = dup_string(mieo_history_json(history));
    *out = new mieo_encoder{std::move(model)};
  });
}

mieo_status mieo_encoder_save(const mieo_encoder* e, const char* path) {
  return guarded([&] {
    need(e, "encoder");
    need(path, "path");
    write_file(path, e->model.to_json() + "\n");
  });
}

mieo_status mieo_encoder_load(const char* path, mieo_encoder** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mieo_encoder{mieo::MieoModel::from_json_text(read_file(path))};
  });
}

mieo_status mieo_encoder_embedding_dim(const mieo_encoder* e, size_t* out) {
  return guarded([&] {
    need(e, "encoder");
    need(out, "out");
    *out = static_cast<size_t>(e->model.embedding_dim());
  });
}

mieo_status mieo_encoder_schema(const mieo_encoder* e, mieo_schema** out) {
  return guarded([&] {
    need(e, "encoder");
    need(out, "out");
    *out = new mieo_schema{e->model.schema};
  });
}

mieo_status mieo_encoder_encode_csv(const mieo_encoder* e, const mieo_dataset* d,
                                    const char* csv_path, int with_labels) {
  return guarded([&] {
    need(e, "encoder");
    need(d, "dataset");
    need(csv_path, "csv_path");
    Eigen::MatrixXd emb = mieo::encode_dataset(e->model, d->ds);
    const std::vector<mieo::Label>* labels = with_labels ? &d->ds.labels() : nullptr;
    mieo::save_matrix_csv(csv_path, embedding_names(emb.cols()), emb, labels);
  });
}

mieo_status mieo_encoder_impute_csv(const mieo_encoder* e, const mieo_dataset* d,
                                    const char* csv_path, int thresholded) {
  return guarded([&] {
    need(e, "encoder");
    need(d, "dataset");
    need(csv_path, "csv_path");
    mieo::ImputedData imp = mieo::impute_dataset(e->model, d->ds);
    const mieo::FeatureSchema& schema = d->ds.schema();
    std::vector<std::string> names;
    names.reserve(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) names.push_back(schema.at(j).name);
    const Eigen::MatrixXd& values = thresholded ? imp.thresholded : imp.values;
    mieo::save_matrix_csv(csv_path, names, values, &d->ds.labels());
  });
}

mieo_status mieo_encoder_reconstruction(const mieo_encoder* e, const mieo_dataset* d,
                                        char** loss_json_out) {
  return guarded([&] {
    need(e, "encoder");
    need(d, "dataset");
    need(loss_json_out, "loss_json_out");
    *loss_json_out = dup_string(loss_to_obj(mieo::reconstruction_loss(e->model, d->ds)).dump());
  });
}

void mieo_encoder_free(mieo_encoder* e) { delete e; }

/* ---- classifier ---- */

mieo_status mieo_classifier_train_raw(const char* config_json, const mieo_dataset* train,
                                      const mieo_dataset* validation, char** history_json_out,
                                      mieo_classifier** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(train, "train");
    need(out, "out");
    mieo::ClassifierConfig config = mieo::ClassifierConfig::from_json_text(config_json);
    mieo::TabularDataset empty_val(train->ds.schema_ptr(),
                                   Eigen::MatrixXd(0, train->ds.cols()), {});
    mieo::ClassifierHistory history;
    mieo::ClassifierModel model = mieo::train_classifier_raw(
        config, train->ds, validation ? validation->ds : empty_val,
        history_json_out ? &history : nullptr);
    if (history_json_out) *history_json_out = dup_string(clf_history_json(history));
    *out = new mieo_classifier{std::move(model)};
  });
}

mieo_status mieo_classifier_train_embedding(const char* config_json, const mieo_encoder* e,
                                            const mieo_dataset* train,
                                            const mieo_dataset* validation,
                                            char** history_json_out, mieo_classifier** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(e, "encoder");
    need(train, "train");
    need(out, "out");
    mieo::ClassifierConfig config = mieo::ClassifierConfig::from_json_text(config_json);
    Eigen::MatrixXd features = mieo::encode_dataset(e->model, train->ds);
    Eigen::MatrixXd val_features(0, features.cols());
    std::vector<mieo::Label> val_labels;
    if (validation) {
      val_features = mieo::encode_dataset(e->model, validation->ds);
      val_labels = validation->ds.labels();
    }
    mieo::ClassifierHistory history;
    mieo::ClassifierModel model = mieo::train_classifier(
        config, mieo::InputMode::embedding, features, train->ds.labels(), val_features,
        val_labels, history_json_out ? &history : nullptr);
    if (history_json_out) *history_json_out = dup_string(clf_history_json(history));
    *out = new mieo_classifier{std::move(model)};
  });
}

mieo_status mieo_classifier_save(const mieo_classifier* c, const char* path) {
  return guarded([&] {
    need(c, "classifier");
    need(path, "path");
    write_file(path, c->model.to_json() + "\n");
  });
}

mieo_status mieo_classifier_load(const char* path, mieo_classifier** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mieo_classifier{mieo::ClassifierModel::from_json_text(read_file(path))};
  });
}

mieo_status mieo_classifier_is_raw(const mieo_classifier* c, int* out) {
  return guarded([&] {
    need(c, "classifier");
    need(out, "out");
    *out = c->model.input_mode == mieo::InputMode::raw_masked ? 1 : 0;
  });
}

mieo_status mieo_classifier_schema(const mieo_classifier* c, mieo_schema** out) {
  return guarded([&] {
    need(c, "classifier");
    need(out, "out");
    if (!c->model.schema)
      mieo::fail_validation("embedding-mode classifier carries no featurization schema");
    *out = new mieo_schema{c->model.schema};
  });
}

mieo_status mieo_classifier_evaluate(const mieo_classifier* c, const mieo_encoder* e,
                                     const mieo_dataset* d, char** report_json_out) {
  return guarded([&] {
    need(c, "classifier");
    need(d, "dataset");
    need(report_json_out, "report_json_out");
    mieo::Prediction pred = predict_any(c->model, e, d->ds);
    mieo::MetricsReport report = mieo::classification_report(pred.labels, truth_labels(d->ds));
    *report_json_out = dup_string(report.to_json());
  });
}

mieo_status mieo_classifier_predict_csv(const mieo_classifier* c, const mieo_encoder* e,
                                        const mieo_dataset* d, const char* csv_path) {
  return guarded([&] {
    need(c, "classifier");
    need(d, "dataset");
    need(csv_path, "csv_path");
    mieo::Prediction pred = predict_any(c->model, e, d->ds);
    Eigen::MatrixXd table(pred.probabilities.size(), 2);
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      table(i, 0) = pred.probabilities(i);
      table(i, 1) = pred.labels[static_cast<std::size_t>(i)];
    }
    mieo::save_matrix_csv(csv_path, {"probability", "prediction"}, table);
  });
}

void mieo_classifier_free(mieo_classifier* c) { delete c; }

/* ---- reporting ---- */

mieo_status mieo_report_render(const char* report_json, char** table_out) {
  return guarded([&] {
    need(report_json, "report_json");
    need(table_out, "table_out");
    *table_out = dup_string(mieo::MetricsReport::from_json_text(report_json).to_table());
  });
}

/* ---- grid search ---- */

mieo_status mieo_grid_search(const char* mieo_grid_json, const char* clf_grid_json,
                             const mieo_dataset* train, const mieo_dataset* validation,
                             const mieo_dataset* unlabelled, uint64_t seed, int threads,
                             size_t max_trials, char** trials_json_out, size_t* best_index_out,
                             mieo_encoder** best_encoder_out,
                             mieo_classifier** best_classifier_out) {
  return guarded([&] {
    need(mieo_grid_json, "mieo_grid_json");
    need(clf_grid_json, "clf_grid_json");
    need(train, "train");
    need(validation, "validation");
    mieo::SearchResult r = mieo::deferred_select(mieo_grid_json, clf_grid_json, train->ds,
                                                 validation->ds,
                                                 unlabelled ? &unlabelled->ds : nullptr, seed,
                                                 threads, max_trials);
    if (trials_json_out) *trials_json_out = dup_string(mieo::trials_to_json(r.trials));
    if (best_index_out) *best_index_out = r.best_trial;
    if (best_encoder_out) *best_encoder_out = new mieo_encoder{std::move(r.best_mieo)};
    if (best_classifier_out)
      *best_classifier_out = new mieo_classifier{std::move(r.best_classifier)};
  });
}

/* ---- files ---- */

mieo_status mieo_file_digest(const char* path, char** hex_out) {
  return guarded([&] {
    need(path, "path");
    need(hex_out, "hex_out");
    *hex_out = dup_string(mieo::file_digest(path));
  });
}

}  // extern "C"
