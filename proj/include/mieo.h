#ifndef MIEO_H
#define MIEO_H

/* C interface to the masked-input encoding library. Every object lives
 * behind an opaque handle; every fallible call returns a status code and
 * leaves a message readable through mieo_last_error on failure. Strings
 * handed out through char** parameters are heap copies; release them with
 * mieo_string_free. Handles are released with their matching _free call.
 * NULL is never a valid handle argument unless a parameter says otherwise. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mieo_status {
  MIEO_OK = 0,
  MIEO_ERR_USAGE = 1,      /* missing files, null arguments, malformed requests */
  MIEO_ERR_VALIDATION = 2, /* well-formed input breaking a documented precondition */
  MIEO_ERR_RUNTIME = 3     /* I/O failures, non-finite losses, resource limits */
} mieo_status;

typedef struct mieo_schema mieo_schema;
typedef struct mieo_dataset mieo_dataset;
typedef struct mieo_encoder mieo_encoder;
typedef struct mieo_classifier mieo_classifier;

const char* mieo_version(void);

/* Message for the calling thread's most recent failure. Stable until the
 * next failing call on the same thread. Never NULL. */
const char* mieo_last_error(void);

void mieo_string_free(char* s);

/* ---- feature schema ---------------------------------------------------- */

mieo_status mieo_schema_from_json(const char* json_text, mieo_schema** out);
mieo_status mieo_schema_to_json(const mieo_schema* s, char** json_out);

/* Header plus content inspection of a data CSV; a trailing label column is
 * recognized and excluded. */
mieo_status mieo_schema_infer_csv(const char* csv_path, mieo_schema** out);

mieo_status mieo_schema_feature_count(const mieo_schema* s, size_t* out);
void mieo_schema_free(mieo_schema* s);

/* ---- datasets ----------------------------------------------------------- */

mieo_status mieo_dataset_load_csv(const char* csv_path, const mieo_schema* s, mieo_dataset** out);
mieo_status mieo_dataset_save_csv(const mieo_dataset* d, const char* csv_path);
mieo_status mieo_dataset_shape(const mieo_dataset* d, size_t* rows_out, size_t* cols_out);
mieo_status mieo_dataset_label_counts(const mieo_dataset* d, size_t* negative_out,
                                      size_t* positive_out, size_t* unlabelled_out);
mieo_status mieo_dataset_schema(const mieo_dataset* d, mieo_schema** out);

/* bounds_json: {"column_name": {"low": a, "high": b}, ...}; continuous cells
 * outside their range become absent. Returns a new dataset. */
mieo_status mieo_dataset_preprocess(const mieo_dataset* d, const char* bounds_json,
                                    mieo_dataset** out);

/* Stratified 64/16/20 split of the labelled rows; unlabelled rows come back
 * as their own pool. Deterministic per seed. */
mieo_status mieo_dataset_split(const mieo_dataset* d, uint64_t seed, mieo_dataset** train_out,
                               mieo_dataset** validation_out, mieo_dataset** test_out,
                               mieo_dataset** unlabelled_out);

/* Row concatenation of two datasets sharing a schema. */
mieo_status mieo_dataset_concat(const mieo_dataset* a, const mieo_dataset* b, mieo_dataset** out);

void mieo_dataset_free(mieo_dataset* d);

/* ---- synthetic data ------------------------------------------------------ */

/* Generator spec shaped like the clinical cohort: 46 binary + 22 continuous
 * features, correlated, ~3% missing, ~25% positive, half unlabelled. */
mieo_status mieo_synth_paper_like_spec(size_t n_rows, char** spec_json_out);

/* truth_out may be NULL; when given it receives the complete, fully
 * labelled counterpart of the masked dataset. */
mieo_status mieo_synth_generate(const char* spec_json, uint64_t seed, mieo_dataset** masked_out,
                                mieo_dataset** truth_out);

/* Monte-Carlo balanced accuracy of the Bayes rule on complete data; the
 * ceiling trained pipelines are measured against. */
mieo_status mieo_synth_bayes_reference(const char* spec_json, size_t n_mc, uint64_t seed,
                                       double* out);

/* ---- masked-input encoder ------------------------------------------------ */

/* Trains on the labelled training split plus an optional unlabelled pool.
 * unlabelled, validation and history_json_out may each be NULL; the history
 * logs per-epoch train/validation reconstruction losses. */
mieo_status mieo_encoder_train(const char* config_json, const mieo_dataset* train,
                               const mieo_dataset* unlabelled, const mieo_dataset* validation,
                               char** history_json_out, mieo_encoder** out);

mieo_status mieo_encoder_save(const mieo_encoder* e, const char* path);
mieo_status mieo_encoder_load(const char* path, mieo_encoder** out);
mieo_status mieo_encoder_embedding_dim(const mieo_encoder* e, size_t* out);
mieo_status mieo_encoder_schema(const mieo_encoder* e, mieo_schema** out);

/* Embeddings of every row, written as e00..eNN columns. with_labels nonzero
 * appends the dataset's label column. */
mieo_status mieo_encoder_encode_csv(const mieo_encoder* e, const mieo_dataset* d,
                                    const char* csv_path, int with_labels);

/* Missing cells filled by the decoder, observed cells passed through.
 * thresholded nonzero rounds binary columns at 0.5 instead of leaving
 * probabilities. */
mieo_status mieo_encoder_impute_csv(const mieo_encoder* e, const mieo_dataset* d,
                                    const char* csv_path, int thresholded);

/* Reconstruction quality of raw rows under the model's loss weights. */
mieo_status mieo_encoder_reconstruction(const mieo_encoder* e, const mieo_dataset* d,
                                        char** loss_json_out);

void mieo_encoder_free(mieo_encoder* e);

/* ---- downstream classifier ---------------------------------------------- */

/* Raw mode consumes standardized values plus observation mask directly.
 * validation and history_json_out may be NULL. */
mieo_status mieo_classifier_train_raw(const char* config_json, const mieo_dataset* train,
                                      const mieo_dataset* validation, char** history_json_out,
                                      mieo_classifier** out);

/* Embedding mode consumes the encoder's representation of each row. */
mieo_status mieo_classifier_train_embedding(const char* config_json, const mieo_encoder* e,
                                            const mieo_dataset* train,
                                            const mieo_dataset* validation,
                                            char** history_json_out, mieo_classifier** out);

mieo_status mieo_classifier_save(const mieo_classifier* c, const char* path);
mieo_status mieo_classifier_load(const char* path, mieo_classifier** out);

/* Nonzero when the classifier consumes raw masked rows rather than
 * embeddings. */
mieo_status mieo_classifier_is_raw(const mieo_classifier* c, int* out);

/* Featurization schema of a raw-mode classifier; embedding-mode models
 * carry none and fail validation. */
mieo_status mieo_classifier_schema(const mieo_classifier* c, mieo_schema** out);

/* Full classification report as JSON. e is required for embedding-mode
 * classifiers and ignored (may be NULL) for raw ones. Every row must carry
 * a label. */
mieo_status mieo_classifier_evaluate(const mieo_classifier* c, const mieo_encoder* e,
                                     const mieo_dataset* d, char** report_json_out);

/* Per-row probability and decision, written as probability,label columns. */
mieo_status mieo_classifier_predict_csv(const mieo_classifier* c, const mieo_encoder* e,
                                        const mieo_dataset* d, const char* csv_path);

void mieo_classifier_free(mieo_classifier* c);

/* ---- reporting ----------------------------------------------------------- */

/* Plain-text table (per-class precision/recall/F1/support, accuracy, macro
 * and weighted averages, balanced accuracy) from a report's JSON. */
mieo_status mieo_report_render(const char* report_json, char** table_out);

/* ---- grid search --------------------------------------------------------- */

/* Deferred selection over the cartesian products of the two grids: every
 * encoder trains on train+unlabelled, every classifier trains on the encoded
 * training rows, and pairs are ranked by validation balanced accuracy.
 * Grids are {"base": {...}, "axes": {"name": [v, ...], ...}} or, for an
 * explicit candidate list, {"base": {...}, "points": [{...}, ...]}.
 * threads <= 0 picks the hardware count; max_trials 0 means no cap. Outputs
 * other than trials_json_out may be NULL when the caller only wants the
 * table. */
mieo_status mieo_grid_search(const char* mieo_grid_json, const char* clf_grid_json,
                             const mieo_dataset* train, const mieo_dataset* validation,
                             const mieo_dataset* unlabelled, uint64_t seed, int threads,
                             size_t max_trials, char** trials_json_out, size_t* best_index_out,
                             mieo_encoder** best_encoder_out,
                             mieo_classifier** best_classifier_out);

/* ---- files --------------------------------------------------------------- */

/* FNV-1a 64 digest of a file's bytes as 16 lowercase hex characters. */
mieo_status mieo_file_digest(const char* path, char** hex_out);

#ifdef __cplusplus
}
#endif

#endif /* MIEO_H */
