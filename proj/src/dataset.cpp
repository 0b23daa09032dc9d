#include "mieo/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "mieo/error.hpp"
#include "mieo/rng.hpp"
#include "json_util.hpp"

namespace mieo {

namespace {

void validate_dataset(const FeatureSchema& schema, const Eigen::MatrixXd& values,
                      const std::vector<Label>& labels) {
  if (values.cols() != static_cast<Eigen::Index>(schema.size()))
    fail_validation("dataset has " + std::to_string(values.cols()) + " columns, schema expects " +
                    std::to_string(schema.size()));
  if (static_cast<Eigen::Index>(labels.size()) != values.rows())
    fail_validation("label vector length does not match row count");
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (!schema.is_binary(static_cast<std::size_t>(j))) continue;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      double v = values(i, j);
      if (!std::isnan(v) && v != 0.0 && v != 1.0)
        fail_validation("binary cell out of {0,1} at row " + std::to_string(i) + ", column '" +
                        schema.at(static_cast<std::size_t>(j)).name + "'");
    }
  }
}

}  // namespace

TabularDataset::TabularDataset(FeatureSchema schema, Eigen::MatrixXd values,
                               std::vector<Label> labels)
    : TabularDataset(std::make_shared<const FeatureSchema>(std::move(schema)), std::move(values),
                     std::move(labels)) {}

TabularDataset::TabularDataset(std::shared_ptr<const FeatureSchema> schema, Eigen::MatrixXd values,
                               std::vector<Label> labels)
    : schema_(std::move(schema)), values_(std::move(values)), labels_(std::move(labels)) {
  if (!schema_) fail_validation("dataset without a schema");
  validate_dataset(*schema_, values_, labels_);
}

std::size_t TabularDataset::count_label(Label l) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
}

TabularDataset TabularDataset::select_rows(const std::vector<Eigen::Index>& idx) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(idx.size()), cols());
  std::vector<Label> l(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= rows()) fail_validation("row index out of range");
    v.row(static_cast<Eigen::Index>(k)) = values_.row(idx[k]);
    l[k] = labels_[static_cast<std::size_t>(idx[k])];
  }
  return TabularDataset(schema_, std::move(v), std::move(l));
}

TabularDataset TabularDataset::labelled_rows() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < rows(); ++i)
    if (labels_[static_cast<std::size_t>(i)] != Label::unlabelled) idx.push_back(i);
  return select_rows(idx);
}

TabularDataset TabularDataset::unlabelled_rows() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < rows(); ++i)
    if (labels_[static_cast<std::size_t>(i)] == Label::unlabelled) idx.push_back(i);
  return select_rows(idx);
}

TabularDataset TabularDataset::concat(const TabularDataset& a, const TabularDataset& b) {
  if (a.schema() != b.schema()) fail_validation("concat: schema mismatch");
  Eigen::MatrixXd v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.values();
  v.bottomRows(b.rows()) = b.values();
  std::vector<Label> l = a.labels();
  l.insert(l.end(), b.labels().begin(), b.labels().end());
  return TabularDataset(a.schema_ptr(), std::move(v), std::move(l));
}

MaskMatrix null_mask(const TabularDataset& ds) {
  MaskMatrix m(ds.rows(), ds.cols());
  for (Eigen::Index i = 0; i < ds.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.cols(); ++j) m(i, j) = ds.is_observed(i, j);
  return m;
}

// ---- outcome labelling ----------------------------------------------------

std::vector<Label> derive_labels(const std::vector<FollowupRecord>& records,
                                 double horizon_years) {
  if (!(horizon_years > 0.0)) fail_validation("horizon must be positive");
  std::vector<Label> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FollowupRecord& r = records[i];
    if (r.event_time_years < 0.0 || r.followup_years < 0.0 ||
        (r.event_type != EventType::none && r.event_time_years > r.followup_years))
      fail_validation("invalid follow-up record at row " + std::to_string(i));
    if (r.event_type == EventType::cvd && r.event_time_years <= horizon_years)
      out.push_back(Label::positive);
    else if (r.followup_years > horizon_years)
      out.push_back(Label::negative);
    else
      out.push_back(Label::unlabelled);
  }
  return out;
}

// ---- cleaning -------------------------------------------------------------

TabularDataset preprocess(const TabularDataset& ds,
                          const std::map<std::string, ValueBounds>& bounds) {
  std::vector<std::pair<Eigen::Index, ValueBounds>> resolved;
  for (const auto& [name, b] : bounds) {
    int j = ds.schema().index_of(name);
    if (j < 0) fail_validation("bounds for unknown column '" + name + "'");
    if (ds.schema().is_binary(static_cast<std::size_t>(j)))
      fail_validation("bounds on binary column '" + name + "'");
    if (!(b.low < b.high)) fail_validation("bounds for '" + name + "' need low < high");
    resolved.emplace_back(j, b);
  }
  Eigen::MatrixXd v = ds.values();
  for (const auto& [j, b] : resolved) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double x = v(i, j);
      if (!std::isnan(x) && (x < b.low || x > b.high))
        v(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return TabularDataset(ds.schema_ptr(), std::move(v), ds.labels());
}

// ---- standardization ------------------------------------------------------

StandardizationStats StandardizationStats::fit(const TabularDataset& train) {
  StandardizationStats s;
  s.schema_ = train.schema_ptr();
  const std::size_t f = train.schema().size();
  s.mean_.assign(f, 0.0);
  s.std_.assign(f, 1.0);
  for (std::size_t j = 0; j < f; ++j) {
    if (train.schema().is_binary(j)) continue;
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < train.rows(); ++i) {
      double v = train.values()(i, static_cast<Eigen::Index>(j));
      if (std::isnan(v)) continue;
      sum += v;
      sum2 += v * v;
      ++n;
    }
    if (n == 0) continue;  // no observed cells: identity transform
    double mean = sum / static_cast<double>(n);
    double var = sum2 / static_cast<double>(n) - mean * mean;
    s.mean_[j] = mean;
    s.std_[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

double StandardizationStats::standardize_cell(std::size_t j, double v) const {
  return (v - mean_[j]) / std_[j];
}

double StandardizationStats::destandardize_cell(std::size_t j, double v) const {
  return v * std_[j] + mean_[j];
}

TabularDataset StandardizationStats::apply(const TabularDataset& ds) const {
  if (ds.schema() != *schema_) fail_validation("standardization: schema mismatch");
  Eigen::MatrixXd v = ds.values();
  for (std::size_t j = 0; j < schema_->size(); ++j) {
    if (schema_->is_binary(j)) continue;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double& x = v(i, static_cast<Eigen::Index>(j));
      if (!std::isnan(x)) x = standardize_cell(j, x);
    }
  }
  return TabularDataset(ds.schema_ptr(), std::move(v), ds.labels());
}

TabularDataset StandardizationStats::invert(const TabularDataset& ds) const {
  if (ds.schema() != *schema_) fail_validation("standardization: schema mismatch");
  Eigen::MatrixXd v = ds.values();
  for (std::size_t j = 0; j < schema_->size(); ++j) {
    if (schema_->is_binary(j)) continue;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double& x = v(i, static_cast<Eigen::Index>(j));
      if (!std::isnan(x)) x = destandardize_cell(j, x);
    }
  }
  return TabularDataset(ds.schema_ptr(), std::move(v), ds.labels());
}

std::string StandardizationStats::to_json() const {
  detail::json cols = detail::json::array();
  for (std::size_t j = 0; j < schema_->size(); ++j) {
    if (schema_->is_binary(j)) continue;
    cols.push_back({{"name", schema_->at(j).name}, {"mean", mean_[j]}, {"std", std_[j]}});
  }
  return detail::json{{"columns", cols}}.dump();
}

StandardizationStats StandardizationStats::from_json_text(
    std::shared_ptr<const FeatureSchema> schema, const std::string& text) {
  detail::json j = detail::parse_json(text, "standardization stats");
  StandardizationStats s;
  s.schema_ = std::move(schema);
  s.mean_.assign(s.schema_->size(), 0.0);
  s.std_.assign(s.schema_->size(), 1.0);
  for (const auto& c : detail::require(j, "columns", "standardization stats")) {
    std::string name = detail::require(c, "name", "standardization column").get<std::string>();
    int idx = s.schema_->index_of(name);
    if (idx < 0) fail_validation("standardization stats for unknown column '" + name + "'");
    if (s.schema_->is_binary(static_cast<std::size_t>(idx)))
      fail_validation("standardization stats on binary column '" + name + "'");
    s.mean_[static_cast<std::size_t>(idx)] = detail::require(c, "mean", name).get<double>();
    double sd = detail::require(c, "std", name).get<double>();
    if (!(sd > 0.0)) fail_validation("standardization std must be positive for '" + name + "'");
    s.std_[static_cast<std::size_t>(idx)] = sd;
  }
  return s;
}

// ---- splitting ------------------------------------------------------------

namespace {

// Allocates `total` slots across strata proportionally to their sizes using
// largest remainders; exact integer arithmetic, ties to the lower stratum.
std::vector<std::size_t> allocate_quota(const std::vector<std::size_t>& counts, std::size_t total) {
  std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> quota(counts.size(), 0);
  if (n == 0) return quota;
  std::vector<std::pair<std::size_t, std::size_t>> rem;  // (remainder, stratum)
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    quota[c] = counts[c] * total / n;
    assigned += quota[c];
    rem.emplace_back(counts[c] * total % n, c);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) quota[rem[k].second] += 1;
  return quota;
}

std::size_t rounded_fraction(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

}  // namespace

SplitResult split(const TabularDataset& ds, std::uint64_t seed) {
  std::vector<Eigen::Index> class_idx[2];
  std::vector<Eigen::Index> unlabelled_idx;
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    switch (ds.labels()[static_cast<std::size_t>(i)]) {
      case Label::negative: class_idx[0].push_back(i); break;
      case Label::positive: class_idx[1].push_back(i); break;
      case Label::unlabelled: unlabelled_idx.push_back(i); break;
    }
  }
  if (class_idx[0].empty() || class_idx[1].empty())
    fail_validation("split: both classes must appear among labelled rows");

  RandomStream rng(seed);
  rng.shuffle(class_idx[0]);
  rng.shuffle(class_idx[1]);

  const std::size_t n0 = class_idx[0].size(), n1 = class_idx[1].size();
  const std::size_t n_labelled = n0 + n1;
  const std::size_t n_test = rounded_fraction(n_labelled, 0.20);
  std::vector<std::size_t> test_q = allocate_quota({n0, n1}, n_test);
  const std::size_t n_dev = n_labelled - n_test;
  const std::size_t n_val = rounded_fraction(n_dev, 0.20);
  std::vector<std::size_t> val_q = allocate_quota({n0 - test_q[0], n1 - test_q[1]}, n_val);

  std::vector<Eigen::Index> train_idx, val_idx, test_idx;
  for (int c = 0; c < 2; ++c) {
    const auto& idx = class_idx[c];
    std::size_t t = test_q[static_cast<std::size_t>(c)];
    std::size_t v = val_q[static_cast<std::size_t>(c)];
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t));
    val_idx.insert(val_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(t),
                   idx.begin() + static_cast<std::ptrdiff_t>(t + v));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(t + v), idx.end());
  }
  // Keep original row order inside each part so the partition is a function
  // of the seed only, not of the class layout.
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  SplitResult out{ds.select_rows(train_idx), ds.select_rows(val_idx), ds.select_rows(test_idx),
                  ds.select_rows(unlabelled_idx)};
  return out;
}

}  // namespace mieo
