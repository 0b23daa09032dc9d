// Command-line front end over the shared library's C surface. Every
// artifact-producing run writes a manifest.json next to its outputs with the
// resolved config, seed and input digests; re-running a command with the
// same inputs reproduces every output byte for byte.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <mieo.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void die(mieo_status st) {
  std::cerr << "error: " << mieo_last_error() << '\n';
  std::exit(static_cast<int>(st));
}

[[noreturn]] void die_usage(const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  std::exit(1);
}

void check(mieo_status st) {
  if (st != MIEO_OK) die(st);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  mieo_string_free(s);
  return out;
}

struct SchemaDel {
  void operator()(mieo_schema* p) const { mieo_schema_free(p); }
};
struct DatasetDel {
  void operator()(mieo_dataset* p) const { mieo_dataset_free(p); }
};
struct EncoderDel {
  void operator()(mieo_encoder* p) const { mieo_encoder_free(p); }
};
struct ClassifierDel {
  void operator()(mieo_classifier* p) const { mieo_classifier_free(p); }
};
using Schema = std::unique_ptr<mieo_schema, SchemaDel>;
using Dataset = std::unique_ptr<mieo_dataset, DatasetDel>;
using Encoder = std::unique_ptr<mieo_encoder, EncoderDel>;
using Classifier = std::unique_ptr<mieo_classifier, ClassifierDel>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die_usage("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die_usage("cannot write file: " + path.string());
  out << content;
  if (!out) {
    std::cerr << "error: write failed: " << path.string() << '\n';
    std::exit(3);
  }
}

json parse_or_die(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "error: invalid JSON in " << what << '\n';
    std::exit(2);
  }
  return j;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json j = parse_or_die(read_text(path), path);
  if (!j.is_object()) {
    std::cerr << "error: config must be a JSON object: " << path << '\n';
    std::exit(2);
  }
  return j;
}

// Schema precedence: explicit file, otherwise inference from the data CSV.
Schema resolve_schema(const std::string& schema_path, const std::string& csv_path) {
  mieo_schema* s = nullptr;
  if (!schema_path.empty())
    check(mieo_schema_from_json(read_text(schema_path).c_str(), &s));
  else
    check(mieo_schema_infer_csv(csv_path.c_str(), &s));
  return Schema(s);
}

Dataset load_dataset(const std::string& path, const mieo_schema* s) {
  mieo_dataset* d = nullptr;
  check(mieo_dataset_load_csv(path.c_str(), s, &d));
  return Dataset(d);
}

Encoder load_encoder(const std::string& path) {
  mieo_encoder* e = nullptr;
  check(mieo_encoder_load(path.c_str(), &e));
  return Encoder(e);
}

Classifier load_classifier(const std::string& path) {
  mieo_classifier* c = nullptr;
  check(mieo_classifier_load(path.c_str(), &c));
  return Classifier(c);
}

Schema encoder_schema(const mieo_encoder* e) {
  mieo_schema* s = nullptr;
  check(mieo_encoder_schema(e, &s));
  return Schema(s);
}

struct Manifest {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;

  void add_input(const std::string& name, const std::string& path) {
    char* digest = nullptr;
    check(mieo_file_digest(path.c_str(), &digest));
    inputs[name] = json{{"path", path}, {"digest", take_string(digest)}};
  }

  // Output names stay relative so a replay into a fresh directory produces
  // an identical manifest.
  void write(const fs::path& out_dir) const {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["seed"] = seed;
    m["version"] = mieo_version();
    write_text(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) die_usage("cannot create output directory: " + out_dir);
  return p;
}

int env_threads() {
  const char* env = std::getenv("MIEO_THREADS");
  if (!env || !*env) return 0;  // 0: the library picks the hardware count
  return std::atoi(env);
}

// ---- synth-gen -------------------------------------------------------------

struct SynthGenArgs {
  std::string spec_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  std::size_t bayes_mc = 0;
  bool truth = false;
  bool rows_given = false;
};

void run_synth_gen(const SynthGenArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Manifest man;
  man.command = "synth-gen";
  man.seed = a.seed;

  std::string spec_json;
  if (!a.spec_path.empty()) {
    if (a.rows_given) die_usage("--rows applies only to the built-in generator spec");
    spec_json = read_text(a.spec_path);
    man.add_input("spec", a.spec_path);
  } else {
    char* s = nullptr;
    check(mieo_synth_paper_like_spec(a.rows, &s));
    spec_json = take_string(s);
  }
  man.config = parse_or_die(spec_json, "generator spec");

  mieo_dataset* masked = nullptr;
  mieo_dataset* truth = nullptr;
  check(mieo_synth_generate(spec_json.c_str(), a.seed, &masked, a.truth ? &truth : nullptr));
  Dataset dm(masked), dt(truth);

  check(mieo_dataset_save_csv(dm.get(), (out / "data.csv").string().c_str()));
  man.outputs.push_back("data.csv");
  if (a.truth) {
    check(mieo_dataset_save_csv(dt.get(), (out / "truth.csv").string().c_str()));
    man.outputs.push_back("truth.csv");
  }
  if (a.bayes_mc > 0) {
    double ref = 0.0;
    check(mieo_synth_bayes_reference(spec_json.c_str(), a.bayes_mc, a.seed, &ref));
    json rj;
    rj["bayes_balanced_accuracy"] = ref;
    rj["n_mc"] = a.bayes_mc;
    write_text(out / "reference.json", rj.dump(2) + "\n");
    man.outputs.push_back("reference.json");
    man.config["bayes_mc"] = a.bayes_mc;
  }
  man.write(out);

  size_t rows = 0, cols = 0;
  check(mieo_dataset_shape(dm.get(), &rows, &cols));
  std::cout << "wrote " << rows << " rows x " << cols << " features to "
            << (out / "data.csv").string() << '\n';
}

// ---- split -----------------------------------------------------------------

struct SplitArgs {
  std::string data_path, schema_path, out_dir;
  std::uint64_t seed = 0;
};

void run_split(const SplitArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Schema schema = resolve_schema(a.schema_path, a.data_path);
  Dataset data = load_dataset(a.data_path, schema.get());

  mieo_dataset *tr = nullptr, *va = nullptr, *te = nullptr, *un = nullptr;
  check(mieo_dataset_split(data.get(), a.seed, &tr, &va, &te, &un));
  Dataset train(tr), validation(va), test(te), unlabelled(un);

  Manifest man;
  man.command = "split";
  man.seed = a.seed;
  man.add_input("data", a.data_path);
  if (!a.schema_path.empty()) man.add_input("schema", a.schema_path);

  const std::pair<const char*, mieo_dataset*> parts[] = {
      {"train.csv", train.get()},
      {"validation.csv", validation.get()},
      {"test.csv", test.get()},
      {"unlabelled.csv", unlabelled.get()},
  };
  for (const auto& [name, ds] : parts) {
    check(mieo_dataset_save_csv(ds, (out / name).string().c_str()));
    man.outputs.push_back(name);
    size_t rows = 0, cols = 0;
    check(mieo_dataset_shape(ds, &rows, &cols));
    std::cout << name << ": " << rows << " rows\n";
  }
  man.write(out);
}

// ---- train-mieo ------------------------------------------------------------

struct TrainMieoArgs {
  std::string data_path, unlabelled_path, validation_path, schema_path, config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::optional<int> embedding_dim, epochs, batch_size;
  std::optional<double> w_bin, w_cont, aug_mask_prob, lr;
};

void run_train_mieo(const TrainMieoArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  json cfg = load_config_file(a.config_path);
  if (a.embedding_dim) cfg["embedding_dim"] = *a.embedding_dim;
  if (a.epochs) cfg["epochs"] = *a.epochs;
  if (a.batch_size) cfg["batch_size"] = *a.batch_size;
  if (a.w_bin) cfg["w_bin"] = *a.w_bin;
  if (a.w_cont) cfg["w_cont"] = *a.w_cont;
  if (a.aug_mask_prob) cfg["aug_mask_prob"] = *a.aug_mask_prob;
  if (a.lr) cfg["lr"] = *a.lr;
  if (a.seed_given) cfg["seed"] = a.seed;
  if (!cfg.contains("seed")) cfg["seed"] = 0;

  Schema schema = resolve_schema(a.schema_path, a.data_path);
  Dataset train = load_dataset(a.data_path, schema.get());
  Dataset unlabelled, validation;
  if (!a.unlabelled_path.empty()) unlabelled = load_dataset(a.unlabelled_path, schema.get());
  if (!a.validation_path.empty()) validation = load_dataset(a.validation_path, schema.get());

  char* history = nullptr;
  mieo_encoder* enc = nullptr;
  check(mieo_encoder_train(cfg.dump().c_str(), train.get(), unlabelled.get(), validation.get(),
                           &history, &enc));
  Encoder encoder(enc);

  check(mieo_encoder_save(encoder.get(), (out / "model.json").string().c_str()));
  write_text(out / "history.json", take_string(history) + "\n");

  Manifest man;
  man.command = "train-mieo";
  man.seed = cfg["seed"].get<std::uint64_t>();
  man.config = cfg;
  man.add_input("data", a.data_path);
  if (!a.unlabelled_path.empty()) man.add_input("unlabelled", a.unlabelled_path);
  if (!a.validation_path.empty()) man.add_input("validation", a.validation_path);
  if (!a.schema_path.empty()) man.add_input("schema", a.schema_path);
  man.outputs = {"model.json", "history.json"};
  man.write(out);

  size_t dim = 0;
  check(mieo_encoder_embedding_dim(encoder.get(), &dim));
  std::cout << "trained encoder with embedding dimension " << dim << '\n';
}

// ---- train-clf -------------------------------------------------------------

struct TrainClfArgs {
  std::string data_path, validation_path, encoder_path, schema_path, config_path, out_dir;
  std::string pos_weight;  // "auto" or a number
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::optional<int> epochs, batch_size;
  std::optional<double> lr, threshold;
};

void run_train_clf(const TrainClfArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  json cfg = load_config_file(a.config_path);
  if (a.epochs) cfg["epochs"] = *a.epochs;
  if (a.batch_size) cfg["batch_size"] = *a.batch_size;
  if (a.lr) cfg["lr"] = *a.lr;
  if (a.threshold) cfg["decision_threshold"] = *a.threshold;
  if (!a.pos_weight.empty()) {
    if (a.pos_weight == "auto") {
      cfg["pos_weight"] = "auto";
    } else {
      try {
        std::size_t used = 0;
        double w = std::stod(a.pos_weight, &used);
        if (used != a.pos_weight.size()) throw std::invalid_argument("");
        cfg["pos_weight"] = w;
      } catch (...) {
        die_usage("--pos-weight takes a number or 'auto'");
      }
    }
  }
  if (a.seed_given) cfg["seed"] = a.seed;
  if (!cfg.contains("seed")) cfg["seed"] = 0;

  char* history = nullptr;
  mieo_classifier* clf = nullptr;
  Manifest man;
  man.command = "train-clf";

  if (!a.encoder_path.empty()) {
    Encoder encoder = load_encoder(a.encoder_path);
    Schema schema = encoder_schema(encoder.get());
    Dataset train = load_dataset(a.data_path, schema.get());
    Dataset validation;
    if (!a.validation_path.empty()) validation = load_dataset(a.validation_path, schema.get());
    check(mieo_classifier_train_embedding(cfg.dump().c_str(), encoder.get(), train.get(),
                                          validation.get(), &history, &clf));
    man.add_input("encoder", a.encoder_path);
  } else {
    Schema schema = resolve_schema(a.schema_path, a.data_path);
    Dataset train = load_dataset(a.data_path, schema.get());
    Dataset validation;
    if (!a.validation_path.empty()) validation = load_dataset(a.validation_path, schema.get());
    check(mieo_classifier_train_raw(cfg.dump().c_str(), train.get(), validation.get(), &history,
                                    &clf));
    if (!a.schema_path.empty()) man.add_input("schema", a.schema_path);
  }
  Classifier classifier(clf);

  check(mieo_classifier_save(classifier.get(), (out / "model.json").string().c_str()));
  write_text(out / "history.json", take_string(history) + "\n");

  man.seed = cfg["seed"].get<std::uint64_t>();
  man.config = cfg;
  man.add_input("data", a.data_path);
  if (!a.validation_path.empty()) man.add_input("validation", a.validation_path);
  man.outputs = {"model.json", "history.json"};
  man.write(out);

  std::cout << "trained " << (a.encoder_path.empty() ? "raw-input" : "embedding") <<
      " classifier\n";
}

// ---- encode ----------------------------------------------------------------

struct EncodeArgs {
  std::string encoder_path, data_path, out_dir;
  bool with_labels = false;
};

void run_encode(const EncodeArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Encoder encoder = load_encoder(a.encoder_path);
  Schema schema = encoder_schema(encoder.get());
  Dataset data = load_dataset(a.data_path, schema.get());

  check(mieo_encoder_encode_csv(encoder.get(), data.get(),
                                (out / "embeddings.csv").string().c_str(),
                                a.with_labels ? 1 : 0));

  Manifest man;
  man.command = "encode";
  man.config = json{{"with_labels", a.with_labels}};
  man.add_input("encoder", a.encoder_path);
  man.add_input("data", a.data_path);
  man.outputs = {"embeddings.csv"};
  man.write(out);

  size_t rows = 0, cols = 0, dim = 0;
  check(mieo_dataset_shape(data.get(), &rows, &cols));
  check(mieo_encoder_embedding_dim(encoder.get(), &dim));
  std::cout << "encoded " << rows << " rows to dimension " << dim << '\n';
}

// ---- impute ----------------------------------------------------------------

struct ImputeArgs {
  std::string encoder_path, data_path, out_dir;
  bool thresholded = false;
};

void run_impute(const ImputeArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Encoder encoder = load_encoder(a.encoder_path);
  Schema schema = encoder_schema(encoder.get());
  Dataset data = load_dataset(a.data_path, schema.get());

  check(mieo_encoder_impute_csv(encoder.get(), data.get(),
                                (out / "imputed.csv").string().c_str(),
                                a.thresholded ? 1 : 0));

  Manifest man;
  man.command = "impute";
  man.config = json{{"thresholded", a.thresholded}};
  man.add_input("encoder", a.encoder_path);
  man.add_input("data", a.data_path);
  man.outputs = {"imputed.csv"};
  man.write(out);

  size_t rows = 0, cols = 0;
  check(mieo_dataset_shape(data.get(), &rows, &cols));
  std::cout << "imputed " << rows << " rows\n";
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string classifier_path, encoder_path, data_path, out_dir;
  bool predictions = false;
};

void run_evaluate(const EvaluateArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Classifier classifier = load_classifier(a.classifier_path);
  int is_raw = 0;
  check(mieo_classifier_is_raw(classifier.get(), &is_raw));

  Encoder encoder;
  Schema schema;
  if (is_raw) {
    mieo_schema* s = nullptr;
    check(mieo_classifier_schema(classifier.get(), &s));
    schema.reset(s);
  } else {
    if (a.encoder_path.empty())
      die_usage("this classifier consumes embeddings; pass its encoder via --encoder");
    encoder = load_encoder(a.encoder_path);
    schema = encoder_schema(encoder.get());
  }
  Dataset data = load_dataset(a.data_path, schema.get());

  char* report_raw = nullptr;
  check(mieo_classifier_evaluate(classifier.get(), encoder.get(), data.get(), &report_raw));
  std::string report = take_string(report_raw);
  write_text(out / "report.json", report + "\n");

  Manifest man;
  man.command = "evaluate";
  man.config = json{{"predictions", a.predictions}};
  man.add_input("classifier", a.classifier_path);
  if (!a.encoder_path.empty()) man.add_input("encoder", a.encoder_path);
  man.add_input("data", a.data_path);
  man.outputs = {"report.json"};
  if (a.predictions) {
    check(mieo_classifier_predict_csv(classifier.get(), encoder.get(), data.get(),
                                      (out / "predictions.csv").string().c_str()));
    man.outputs.push_back("predictions.csv");
  }
  man.write(out);

  char* table = nullptr;
  check(mieo_report_render(report.c_str(), &table));
  std::cout << take_string(table);
}

// ---- grid-search -----------------------------------------------------------

struct GridSearchArgs {
  std::string data_path, unlabelled_path, schema_path, mieo_grid_path, clf_grid_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool threads_given = false;
  std::size_t max_trials = 0;
};

void run_grid_search(const GridSearchArgs& a) {
  fs::path out = prepare_out_dir(a.out_dir);
  Schema schema = resolve_schema(a.schema_path, a.data_path);
  Dataset data = load_dataset(a.data_path, schema.get());

  mieo_dataset *tr = nullptr, *va = nullptr, *te = nullptr, *un = nullptr;
  check(mieo_dataset_split(data.get(), a.seed, &tr, &va, &te, &un));
  Dataset train(tr), validation(va), test(te), pool(un);

  if (!a.unlabelled_path.empty()) {
    Dataset extra = load_dataset(a.unlabelled_path, schema.get());
    mieo_dataset* merged = nullptr;
    check(mieo_dataset_concat(pool.get(), extra.get(), &merged));
    pool.reset(merged);
  }

  std::string mieo_grid = read_text(a.mieo_grid_path);
  std::string clf_grid = read_text(a.clf_grid_path);
  const int threads = a.threads_given ? a.threads : env_threads();

  char* trials = nullptr;
  size_t best_index = 0;
  mieo_encoder* best_enc = nullptr;
  mieo_classifier* best_clf = nullptr;
  check(mieo_grid_search(mieo_grid.c_str(), clf_grid.c_str(), train.get(), validation.get(),
                         pool.get(), a.seed, threads, a.max_trials, &trials, &best_index,
                         &best_enc, &best_clf));
  Encoder encoder(best_enc);
  Classifier classifier(best_clf);

  write_text(out / "trials.json", take_string(trials) + "\n");
  check(mieo_encoder_save(encoder.get(), (out / "best_mieo.model").string().c_str()));
  check(mieo_classifier_save(classifier.get(), (out / "best_clf.model").string().c_str()));

  // the winner's validation report plus the one and only test-set evaluation
  char* val_report_raw = nullptr;
  check(mieo_classifier_evaluate(classifier.get(), encoder.get(), validation.get(),
                                 &val_report_raw));
  std::string val_report = take_string(val_report_raw);
  char* test_report_raw = nullptr;
  check(mieo_classifier_evaluate(classifier.get(), encoder.get(), test.get(), &test_report_raw));
  std::string test_report = take_string(test_report_raw);

  json report;
  report["validation"] = parse_or_die(val_report, "validation report");
  report["test"] = parse_or_die(test_report, "test report");
  write_text(out / "report.json", report.dump(2) + "\n");

  Manifest man;
  man.command = "grid-search";
  man.seed = a.seed;
  man.config = json{{"mieo_grid", parse_or_die(mieo_grid, a.mieo_grid_path)},
                    {"clf_grid", parse_or_die(clf_grid, a.clf_grid_path)},
                    {"threads", threads},
                    {"max_trials", a.max_trials}};
  man.add_input("data", a.data_path);
  if (!a.unlabelled_path.empty()) man.add_input("unlabelled", a.unlabelled_path);
  if (!a.schema_path.empty()) man.add_input("schema", a.schema_path);
  man.add_input("mieo_grid", a.mieo_grid_path);
  man.add_input("clf_grid", a.clf_grid_path);
  man.outputs = {"trials.json", "best_mieo.model", "best_clf.model", "report.json"};
  man.write(out);

  std::cerr << "best trial index: " << best_index << '\n';
  char* table = nullptr;
  check(mieo_report_render(val_report.c_str(), &table));
  std::cout << "validation\n" << take_string(table) << '\n';
  check(mieo_report_render(test_report.c_str(), &table));
  std::cout << "test\n" << take_string(table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masked-input encoding pipeline for mixed tabular data"};
  app.require_subcommand(1);

  SynthGenArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth-gen", "generate a synthetic dataset");
  synth_cmd->add_option("--spec", synth.spec_path, "generator spec JSON file");
  auto* rows_opt = synth_cmd->add_option("--rows", synth.rows, "row count for the built-in spec");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_flag("--truth", synth.truth, "also write the complete unmasked table");
  synth_cmd->add_option("--bayes-mc", synth.bayes_mc,
                        "Monte-Carlo sample count for the Bayes reference");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
  synth_cmd->callback([&] {
    synth.rows_given = rows_opt->count() > 0;
    run_synth_gen(synth);
  });

  SplitArgs split;
  CLI::App* split_cmd = app.add_subcommand("split", "stratified train/validation/test split");
  split_cmd->add_option("--data", split.data_path, "input CSV")->required();
  split_cmd->add_option("--schema", split.schema_path, "schema JSON file (default: inferred)");
  split_cmd->add_option("--seed", split.seed, "shuffle seed");
  split_cmd->add_option("--out-dir", split.out_dir, "output directory")->required();
  split_cmd->callback([&] { run_split(split); });

  TrainMieoArgs tm;
  CLI::App* tm_cmd = app.add_subcommand("train-mieo", "train the masked-input encoder");
  tm_cmd->add_option("--data", tm.data_path, "labelled training CSV")->required();
  tm_cmd->add_option("--unlabelled", tm.unlabelled_path, "unlabelled pool CSV");
  tm_cmd->add_option("--validation", tm.validation_path, "validation CSV for the loss history");
  tm_cmd->add_option("--schema", tm.schema_path, "schema JSON file (default: inferred)");
  tm_cmd->add_option("--config", tm.config_path, "encoder config JSON file");
  tm_cmd->add_option("--embedding-dim", tm.embedding_dim, "embedding dimension");
  tm_cmd->add_option("--epochs", tm.epochs, "training epochs");
  tm_cmd->add_option("--batch-size", tm.batch_size, "minibatch size");
  tm_cmd->add_option("--w-bin", tm.w_bin, "binary reconstruction weight");
  tm_cmd->add_option("--w-cont", tm.w_cont, "continuous reconstruction weight");
  tm_cmd->add_option("--aug-mask-prob", tm.aug_mask_prob, "augmentation masking probability");
  tm_cmd->add_option("--lr", tm.lr, "learning rate");
  auto* tm_seed = tm_cmd->add_option("--seed", tm.seed, "training seed (overrides config)");
  tm_cmd->add_option("--out-dir", tm.out_dir, "output directory")->required();
  tm_cmd->callback([&] {
    tm.seed_given = tm_seed->count() > 0;
    run_train_mieo(tm);
  });

  TrainClfArgs tc;
  CLI::App* tc_cmd = app.add_subcommand("train-clf", "train the outcome classifier");
  tc_cmd->add_option("--data", tc.data_path, "labelled training CSV")->required();
  tc_cmd->add_option("--validation", tc.validation_path, "validation CSV for the history");
  tc_cmd->add_option("--encoder", tc.encoder_path,
                     "encoder model file; embeddings replace raw inputs when given");
  tc_cmd->add_option("--schema", tc.schema_path,
                     "schema JSON file for raw mode (default: inferred)");
  tc_cmd->add_option("--config", tc.config_path, "classifier config JSON file");
  tc_cmd->add_option("--epochs", tc.epochs, "training epochs");
  tc_cmd->add_option("--batch-size", tc.batch_size, "minibatch size");
  tc_cmd->add_option("--lr", tc.lr, "learning rate");
  tc_cmd->add_option("--pos-weight", tc.pos_weight, "positive-class loss weight or 'auto'");
  tc_cmd->add_option("--threshold", tc.threshold, "decision threshold");
  auto* tc_seed = tc_cmd->add_option("--seed", tc.seed, "training seed (overrides config)");
  tc_cmd->add_option("--out-dir", tc.out_dir, "output directory")->required();
  tc_cmd->callback([&] {
    tc.seed_given = tc_seed->count() > 0;
    run_train_clf(tc);
  });

  EncodeArgs enc;
  CLI::App* enc_cmd = app.add_subcommand("encode", "write embeddings for a dataset");
  enc_cmd->add_option("--encoder", enc.encoder_path, "encoder model file")->required();
  enc_cmd->add_option("--data", enc.data_path, "input CSV")->required();
  enc_cmd->add_flag("--with-labels", enc.with_labels, "append the label column");
  enc_cmd->add_option("--out-dir", enc.out_dir, "output directory")->required();
  enc_cmd->callback([&] { run_encode(enc); });

  ImputeArgs imp;
  CLI::App* imp_cmd = app.add_subcommand("impute", "fill missing cells from the decoder");
  imp_cmd->add_option("--encoder", imp.encoder_path, "encoder model file")->required();
  imp_cmd->add_option("--data", imp.data_path, "input CSV")->required();
  imp_cmd->add_flag("--thresholded", imp.thresholded, "round binary columns at 0.5");
  imp_cmd->add_option("--out-dir", imp.out_dir, "output directory")->required();
  imp_cmd->callback([&] { run_impute(imp); });

  EvaluateArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "classification report on labelled data");
  ev_cmd->add_option("--classifier", ev.classifier_path, "classifier model file")->required();
  ev_cmd->add_option("--encoder", ev.encoder_path,
                     "encoder model file (embedding-mode classifiers)");
  ev_cmd->add_option("--data", ev.data_path, "labelled CSV")->required();
  ev_cmd->add_flag("--predictions", ev.predictions, "also write per-row predictions");
  ev_cmd->add_option("--out-dir", ev.out_dir, "output directory")->required();
  ev_cmd->callback([&] { run_evaluate(ev); });

  GridSearchArgs gs;
  CLI::App* gs_cmd = app.add_subcommand("grid-search",
                                        "deferred selection over encoder/classifier grids");
  gs_cmd->add_option("--data", gs.data_path, "labelled CSV; split internally by --seed")
      ->required();
  gs_cmd->add_option("--unlabelled", gs.unlabelled_path, "extra unlabelled pool CSV");
  gs_cmd->add_option("--schema", gs.schema_path, "schema JSON file (default: inferred)");
  gs_cmd->add_option("--mieo-grid", gs.mieo_grid_path, "encoder grid JSON file")->required();
  gs_cmd->add_option("--clf-grid", gs.clf_grid_path, "classifier grid JSON file")->required();
  gs_cmd->add_option("--seed", gs.seed, "split and search seed");
  auto* gs_threads = gs_cmd->add_option(
      "--threads", gs.threads, "worker threads (default: MIEO_THREADS, then hardware)");
  gs_cmd->add_option("--max-trials", gs.max_trials, "keep only the first pairs in grid order");
  gs_cmd->add_option("--out-dir", gs.out_dir, "output directory")->required();
  gs_cmd->callback([&] {
    gs.threads_given = gs_threads->count() > 0;
    run_grid_search(gs);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  return 0;
}
