#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mieo/csv.hpp"
#include "mieo/dataset.hpp"
#include "mieo/error.hpp"
#include "mieo/rng.hpp"
#include "mieo/schema.hpp"

using namespace mieo;

namespace {

namespace fs = std::filesystem;

// Fresh scratch directory per process run, removed on exit.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mieo_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

TempDir& scratch() {
  static TempDir d;
  return d;
}

std::string write_file(const std::string& name, const std::string& text) {
  std::string p = scratch().file(name);
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

FeatureSchema bbc_schema() {
  return FeatureSchema({{"a", ColumnKind::binary}, {"b", ColumnKind::binary}, {"c", ColumnKind::continuous}});
}

double nan_v() { return std::numeric_limits<double>::quiet_NaN(); }

// Labelled single-column dataset with the row index as its value, so split
// membership can be traced back exactly.
TabularDataset indexed_dataset(std::size_t n0, std::size_t n1, std::size_t nu = 0) {
  FeatureSchema schema({{"x", ColumnKind::continuous}});
  const std::size_t n = n0 + n1 + nu;
  Eigen::MatrixXd values(n, 1);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    values(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    labels[i] = i < n0 ? Label::negative : (i < n0 + n1 ? Label::positive : Label::unlabelled);
  }
  return TabularDataset(schema, values, labels);
}

std::multiset<double> values_of(const TabularDataset& ds) {
  std::multiset<double> s;
  for (Eigen::Index i = 0; i < ds.rows(); ++i) s.insert(ds.values()(i, 0));
  return s;
}

}  // namespace

TEST_CASE("csv row with an empty field loads as an absent cell") {
  std::string p = write_file("basic.csv", "a,b,c\n1,,2.3\n");
  TabularDataset ds = load_csv(p, bbc_schema());
  REQUIRE(ds.rows() == 1);
  CHECK(ds.values()(0, 0) == 1.0);
  CHECK(!ds.is_observed(0, 1));
  CHECK(ds.values()(0, 2) == 2.3);
  CHECK(ds.labels()[0] == Label::unlabelled);
}

TEST_CASE("csv binary cell outside 0/1 is rejected naming the cell") {
  std::string p = write_file("bad_binary.csv", "a,b,c\n1,2,0.5\n");
  try {
    load_csv(p, bbc_schema());
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::validation);
    std::string msg = e.what();
    CHECK(msg.find("b") != std::string::npos);  // column name
    CHECK(msg.find("2") != std::string::npos);  // row or offending value
  }
}

TEST_CASE("csv label column distinguishes labelled from unlabelled rows") {
  std::string p = write_file("labels.csv",
                             "a,b,c,label\n"
                             "1,0,1.5,1\n"
                             "0,0,2.5,0\n"
                             "1,1,,0\n"
                             "0,1,4.5,\n"
                             "1,0,5.5,1\n");
  TabularDataset ds = load_csv(p, bbc_schema());
  REQUIRE(ds.rows() == 5);
  CHECK(ds.labelled_count() == 4);
  CHECK(ds.count_label(Label::unlabelled) == 1);
  CHECK(ds.labels()[3] == Label::unlabelled);
  CHECK(ds.labels()[0] == Label::positive);
  CHECK(ds.labels()[2] == Label::negative);
}

TEST_CASE("csv header mismatch and malformed numbers are rejected") {
  std::string wrong = write_file("wrong_header.csv", "a,z,c\n1,0,2.0\n");
  CHECK_THROWS_AS(load_csv(wrong, bbc_schema()), Error);

  std::string bad = write_file("bad_number.csv", "a,b,c\n1,0,zap\n");
  try {
    load_csv(bad, bbc_schema());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("c") != std::string::npos);
  }

  // only the empty string encodes null
  std::string na = write_file("na.csv", "a,b,c\n1,0,NA\n");
  CHECK_THROWS_AS(load_csv(na, bbc_schema()), Error);
}

TEST_CASE("follow-up records map onto outcome labels") {
  std::vector<FollowupRecord> records = {
      {EventType::cvd, 3.0, 3.0},
      {EventType::none, 0.0, 10.0},
      {EventType::other_death, 5.0, 5.0},
      {EventType::cvd, 9.0, 9.0},
  };
  std::vector<Label> labels = derive_labels(records, 8.0);
  REQUIRE(labels.size() == 4);
  CHECK(labels[0] == Label::positive);    // event inside the horizon
  CHECK(labels[1] == Label::negative);    // survived past the horizon
  CHECK(labels[2] == Label::unlabelled);  // non-cvd death inside the horizon
  CHECK(labels[3] == Label::negative);    // event after the horizon, follow-up past it
}

TEST_CASE("every follow-up record gets exactly one label") {
  RandomStream rng(17);
  std::vector<FollowupRecord> records;
  for (int i = 0; i < 500; ++i) {
    FollowupRecord r;
    const double roll = rng.uniform();
    r.event_type = roll < 0.4 ? EventType::none : (roll < 0.7 ? EventType::cvd : EventType::other_death);
    r.followup_years = rng.uniform(0.0, 16.0);
    r.event_time_years = r.event_type == EventType::none ? 0.0 : r.followup_years;
    records.push_back(r);
  }
  std::vector<Label> labels = derive_labels(records, 8.0);
  REQUIRE(labels.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FollowupRecord& r = records[i];
    const bool is1 = r.event_type == EventType::cvd && r.event_time_years <= 8.0;
    const bool is0 = !is1 && r.followup_years > 8.0;
    Label expect = is1 ? Label::positive : (is0 ? Label::negative : Label::unlabelled);
    CHECK(labels[i] == expect);
  }
}

TEST_CASE("follow-up invariant violations are validation errors") {
  // event recorded after the end of follow-up
  std::vector<FollowupRecord> bad = {{EventType::cvd, 6.0, 4.0}};
  CHECK_THROWS_AS(derive_labels(bad, 8.0), Error);
  CHECK_THROWS_AS(derive_labels({}, -1.0), Error);
}

TEST_CASE("follow-up csv loads event types and empty event times") {
  std::string p = write_file("followup.csv",
                             "event_type,event_time_years,followup_years\n"
                             "cvd,3,3\n"
                             "none,,10\n"
                             "other_death,5,5\n");
  std::vector<FollowupRecord> records = load_followup_csv(p);
  REQUIRE(records.size() == 3);
  CHECK(records[0].event_type == EventType::cvd);
  CHECK(records[0].event_time_years == 3.0);
  CHECK(records[1].event_type == EventType::none);
  CHECK(records[2].event_type == EventType::other_death);
  std::vector<Label> labels = derive_labels(records);
  CHECK(labels == std::vector<Label>{Label::positive, Label::negative, Label::unlabelled});
}

TEST_CASE("out-of-bounds continuous cells become absent") {
  FeatureSchema schema({{"flag", ColumnKind::binary}, {"sbp", ColumnKind::continuous}});
  Eigen::MatrixXd values(3, 2);
  values << 1, 9999, 0, 150, 1, nan_v();
  TabularDataset ds(schema, values, {Label::positive, Label::negative, Label::unlabelled});

  std::map<std::string, ValueBounds> bounds{{"sbp", {0.0, 300.0}}};
  TabularDataset out = preprocess(ds, bounds);
  CHECK(!out.is_observed(0, 1));       // 9999 outside (0, 300)
  CHECK(out.values()(1, 1) == 150.0);  // in range, untouched
  CHECK(!out.is_observed(2, 1));       // absent stays absent
  CHECK(out.values()(0, 0) == 1.0);    // binary column untouched
  CHECK(out.labels() == ds.labels());

  // missingness can only increase
  MaskMatrix before = null_mask(ds), after = null_mask(out);
  for (Eigen::Index i = 0; i < before.rows(); ++i)
    for (Eigen::Index j = 0; j < before.cols(); ++j)
      if (after(i, j)) CHECK(before(i, j));
}

TEST_CASE("preprocess with no bounds is the identity") {
  FeatureSchema schema({{"x", ColumnKind::continuous}});
  Eigen::MatrixXd values(2, 1);
  values << 5.0, nan_v();
  TabularDataset ds(schema, values, {Label::positive, Label::negative});
  TabularDataset out = preprocess(ds, {});
  CHECK(out.values()(0, 0) == 5.0);
  CHECK(!out.is_observed(1, 0));
}

TEST_CASE("preprocess rejects bounds on a binary column and is idempotent") {
  FeatureSchema schema({{"flag", ColumnKind::binary}, {"x", ColumnKind::continuous}});
  Eigen::MatrixXd values(2, 2);
  values << 1, -3, 0, 7;
  TabularDataset ds(schema, values, {Label::positive, Label::negative});
  CHECK_THROWS_AS(preprocess(ds, {{"flag", {0.0, 1.0}}}), Error);

  std::map<std::string, ValueBounds> bounds{{"x", {0.0, 5.0}}};
  TabularDataset once = preprocess(ds, bounds);
  TabularDataset twice = preprocess(once, bounds);
  CHECK(null_mask(once).rows() == null_mask(twice).rows());
  for (Eigen::Index i = 0; i < once.rows(); ++i)
    for (Eigen::Index j = 0; j < once.cols(); ++j) {
      CHECK(once.is_observed(i, j) == twice.is_observed(i, j));
      if (once.is_observed(i, j)) CHECK(once.values()(i, j) == twice.values()(i, j));
    }
}

TEST_CASE("two observed values 2 and 4 standardize to mean 3 and std 1") {
  FeatureSchema schema({{"x", ColumnKind::continuous}});
  Eigen::MatrixXd values(3, 1);
  values << 2.0, 4.0, nan_v();
  TabularDataset ds(schema, values, {Label::negative, Label::positive, Label::unlabelled});
  StandardizationStats stats = StandardizationStats::fit(ds);
  CHECK(stats.mean(0) == 3.0);
  CHECK(stats.stddev(0) == 1.0);  // population std of {2, 4}
  TabularDataset out = stats.apply(ds);
  CHECK(out.values()(0, 0) == -1.0);
  CHECK(out.values()(1, 0) == 1.0);
  CHECK(!out.is_observed(2, 0));
}

TEST_CASE("constant columns get std clamped to 1 and map to zero offsets") {
  FeatureSchema schema({{"x", ColumnKind::continuous}});
  Eigen::MatrixXd values(3, 1);
  values << 5.0, 5.0, 5.0;
  TabularDataset ds(schema, values, {Label::negative, Label::positive, Label::negative});
  StandardizationStats stats = StandardizationStats::fit(ds);
  CHECK(stats.stddev(0) == 1.0);
  TabularDataset out = stats.apply(ds);
  CHECK(out.values()(0, 0) == 0.0);
  CHECK(out.values()(2, 0) == 0.0);
}

TEST_CASE("standardizing the fitting set itself centers every column") {
  RandomStream rng(23);
  FeatureSchema schema({{"flag", ColumnKind::binary},
                        {"u", ColumnKind::continuous},
                        {"v", ColumnKind::continuous}});
  Eigen::MatrixXd values(200, 3);
  std::vector<Label> labels(200, Label::negative);
  for (int i = 0; i < 200; ++i) {
    values(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    values(i, 1) = rng.bernoulli(0.2) ? nan_v() : rng.uniform(-40.0, 170.0);
    values(i, 2) = rng.normal() * 9.0 + 3.0;
  }
  TabularDataset ds(schema, values, labels);
  StandardizationStats stats = StandardizationStats::fit(ds);
  TabularDataset out = stats.apply(ds);

  // recompute per-column moments after the transform
  for (int j = 1; j < 3; ++j) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < 200; ++i)
      if (out.is_observed(i, j)) {
        sum += out.values()(i, j);
        sumsq += out.values()(i, j) * out.values()(i, j);
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }

  // binary column untouched, inverse transform recovers the originals
  TabularDataset back = stats.invert(out);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(out.is_observed(i, j) == ds.is_observed(i, j));
      if (ds.is_observed(i, j)) CHECK(std::abs(back.values()(i, j) - values(i, j)) < 1e-9);
    }
  for (int i = 0; i < 200; ++i)
    if (ds.is_observed(i, 0)) CHECK(out.values()(i, 0) == values(i, 0));
}

TEST_CASE("standardization stats serialize and re-apply identically") {
  FeatureSchema schema({{"x", ColumnKind::continuous}, {"y", ColumnKind::continuous}});
  Eigen::MatrixXd values(4, 2);
  values << 1, 10, 2, 20, 3, 30, 4, nan_v();
  TabularDataset ds(schema, values, std::vector<Label>(4, Label::negative));
  StandardizationStats stats = StandardizationStats::fit(ds);
  StandardizationStats back =
      StandardizationStats::from_json_text(ds.schema_ptr(), stats.to_json());
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(back.mean(j) == stats.mean(j));
    CHECK(back.stddev(j) == stats.stddev(j));
  }
}

TEST_CASE("a 100-row 80/20 dataset sends 16 and 4 rows per class to test") {
  TabularDataset ds = indexed_dataset(80, 20);
  SplitResult parts = split(ds, 3);
  CHECK(parts.test.rows() == 20);
  CHECK(parts.test.count_label(Label::negative) == 16);
  CHECK(parts.test.count_label(Label::positive) == 4);
  CHECK(parts.validation.rows() == 16);
  CHECK(parts.train.rows() == 64);
  CHECK(parts.unlabelled.rows() == 0);
}

TEST_CASE("a 3769-row labelled dataset splits into 2412/603/754") {
  TabularDataset ds = indexed_dataset(2900, 869);
  SplitResult parts = split(ds, 11);
  CHECK(parts.test.rows() == 754);
  CHECK(parts.validation.rows() == 603);
  CHECK(parts.train.rows() == 2412);
}

TEST_CASE("split parts are disjoint, exhaustive and within one row per stratum") {
  TabularDataset ds = indexed_dataset(137, 61, 23);
  SplitResult parts = split(ds, 5);

  CHECK(parts.unlabelled.rows() == 23);
  for (Label l : parts.unlabelled.labels()) CHECK(l == Label::unlabelled);

  std::multiset<double> all = values_of(parts.train);
  for (double v : values_of(parts.validation)) all.insert(v);
  for (double v : values_of(parts.test)) all.insert(v);
  CHECK(all.size() == 198);
  CHECK(all == values_of(ds.labelled_rows()));  // disjoint and exhaustive

  const double fracs[3] = {0.64, 0.16, 0.20};
  const TabularDataset* sets[3] = {&parts.train, &parts.validation, &parts.test};
  for (int s = 0; s < 3; ++s) {
    const double exp0 = 137.0 * fracs[s], exp1 = 61.0 * fracs[s];
    CHECK(std::abs(static_cast<double>(sets[s]->count_label(Label::negative)) - exp0) <= 1.0);
    CHECK(std::abs(static_cast<double>(sets[s]->count_label(Label::positive)) - exp1) <= 1.0);
  }
}

TEST_CASE("the same seed reproduces the same split") {
  TabularDataset ds = indexed_dataset(90, 30, 10);
  SplitResult a = split(ds, 42);
  SplitResult b = split(ds, 42);
  CHECK(values_of(a.train) == values_of(b.train));
  CHECK(values_of(a.validation) == values_of(b.validation));
  CHECK(values_of(a.test) == values_of(b.test));
  SplitResult c = split(ds, 43);
  CHECK(values_of(a.train) != values_of(c.train));
}

TEST_CASE("splitting needs at least one labelled row per class") {
  TabularDataset ds = indexed_dataset(50, 0, 5);
  CHECK_THROWS_AS(split(ds, 1), Error);
}

TEST_CASE("the null mask marks exactly the observed cells") {
  FeatureSchema schema({{"a", ColumnKind::binary},
                        {"b", ColumnKind::continuous},
                        {"c", ColumnKind::continuous}});
  Eigen::MatrixXd values(1, 3);
  values << 1.0, nan_v(), 0.25;
  TabularDataset ds(schema, values, {Label::positive});
  MaskMatrix m = null_mask(ds);
  CHECK(m(0, 0));
  CHECK(!m(0, 1));
  CHECK(m(0, 2));

  Eigen::MatrixXd full = Eigen::MatrixXd::Ones(4, 3);
  TabularDataset ds2(schema, full, std::vector<Label>(4, Label::negative));
  CHECK(null_mask(ds2).all());
}

TEST_CASE("the null mask false share matches the missing share") {
  RandomStream rng(31);
  FeatureSchema schema({{"x", ColumnKind::continuous}, {"y", ColumnKind::continuous}});
  Eigen::MatrixXd values(500, 2);
  std::size_t missing = 0;
  for (int i = 0; i < 500; ++i)
    for (int j = 0; j < 2; ++j) {
      if (rng.bernoulli(0.0298)) {
        values(i, j) = nan_v();
        ++missing;
      } else {
        values(i, j) = rng.normal();
      }
    }
  TabularDataset ds(schema, values, std::vector<Label>(500, Label::negative));
  MaskMatrix m = null_mask(ds);
  std::size_t falses = static_cast<std::size_t>(m.size()) - static_cast<std::size_t>(m.count());
  CHECK(falses == missing);
}

TEST_CASE("csv save and load round-trips values, masks and labels bit-exactly") {
  RandomStream rng(67);
  FeatureSchema schema({{"flag", ColumnKind::binary},
                        {"u", ColumnKind::continuous},
                        {"v", ColumnKind::continuous}});
  Eigen::MatrixXd values(60, 3);
  std::vector<Label> labels(60);
  for (int i = 0; i < 60; ++i) {
    values(i, 0) = rng.bernoulli(0.1) ? nan_v() : (rng.bernoulli(0.5) ? 1.0 : 0.0);
    values(i, 1) = rng.bernoulli(0.1) ? nan_v() : rng.normal() * 1e-3;
    values(i, 2) = rng.bernoulli(0.1) ? nan_v() : rng.uniform(1.0, 3.0) / 3.0;
    const double roll = rng.uniform();
    labels[i] = roll < 0.4 ? Label::negative : (roll < 0.7 ? Label::positive : Label::unlabelled);
  }
  TabularDataset ds(schema, values, labels);
  std::string p = scratch().file("roundtrip.csv");
  save_csv(ds, p);
  TabularDataset back = load_csv(p, schema);
  REQUIRE(back.rows() == 60);
  CHECK(back.labels() == labels);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(back.is_observed(i, j) == ds.is_observed(i, j));
      if (ds.is_observed(i, j)) CHECK(back.values()(i, j) == values(i, j));
    }

  // an identical second save produces byte-identical content
  std::string p2 = scratch().file("roundtrip2.csv");
  save_csv(back, p2);
  CHECK(file_digest(p) == file_digest(p2));
}

TEST_CASE("schema inference types 0/1 columns binary and excludes the label") {
  std::string p = write_file("infer.csv",
                             "a,b,c,label\n"
                             "1,0,2.5,1\n"
                             "0,,1.5,\n"
                             "1,1,0,0\n");
  FeatureSchema schema = infer_schema_csv(p);
  REQUIRE(schema.size() == 3);
  CHECK(schema.at(0).name == "a");
  CHECK(schema.is_binary(0));
  CHECK(schema.is_binary(1));
  CHECK(!schema.is_binary(2));  // contains 2.5
}

TEST_CASE("matrix csv writer emits headers, empty nulls and optional labels") {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, nan_v(), 1.5, 2.5;
  std::string p = scratch().file("matrix.csv");
  std::vector<Label> labels{Label::positive, Label::unlabelled};
  save_matrix_csv(p, {"e0", "e1"}, m, &labels);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == "e0,e1,label");
  std::getline(in, line);
  CHECK(line == "0.5,,1");
  std::getline(in, line);
  CHECK(line == "1.5,2.5,");
  CHECK_THROWS_AS(save_matrix_csv(p, {"only_one"}, m, nullptr), Error);
}

TEST_CASE("dataset concat stacks rows and keeps labels in order") {
  TabularDataset a = indexed_dataset(2, 1);
  TabularDataset b = indexed_dataset(1, 0, 2);
  TabularDataset c = TabularDataset::concat(a, b);
  CHECK(c.rows() == 6);
  CHECK(c.labels()[0] == Label::negative);
  CHECK(c.labels()[2] == Label::positive);
  CHECK(c.labels()[4] == Label::unlabelled);
  CHECK(c.values()(3, 0) == 0.0);  // b's first row follows a's last
}
