#include "mieo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mieo/error.hpp"
#include "mieo/rng.hpp"
#include "json_util.hpp"

namespace mieo {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

// Inverse standard normal CDF by bisection; called once per binary feature
// at generation setup, so speed is irrelevant and monotonicity is exact.
double norm_ppf(double p) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (norm_cdf(mid) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double loading_residual(const std::vector<double>& lambda) {
  double s2 = 0.0;
  for (double l : lambda) s2 += l * l;
  if (s2 > 1.0 + 1e-12) fail_validation("factor loading norm exceeds 1");
  return std::sqrt(std::max(0.0, 1.0 - s2));
}

// One latent-standardized draw for a feature: correlated part plus residual.
double factor_draw(const std::vector<double>& lambda, double residual,
                   const std::vector<double>& z, RandomStream& rng) {
  double u = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) u += lambda[k] * z[k];
  return u + residual * rng.normal();
}

}  // namespace

void SynthSpec::validate() const {
  if (feature_count() == 0) fail_validation("synth spec needs at least one feature");
  for (double p : bernoulli_p)
    if (!(p >= 0.0 && p <= 1.0)) fail_validation("bernoulli_p outside [0,1]");
  for (const auto& g : gauss_params)
    if (!(g.std > 0.0)) fail_validation("gaussian std must be positive");
  if (label_weights.size() != feature_count())
    fail_validation("label_weights length must equal the feature count");
  if (miss_rates.size() != feature_count())
    fail_validation("miss_rates length must equal the feature count");
  for (double m : miss_rates)
    if (!(m >= 0.0 && m <= 1.0)) fail_validation("miss rate outside [0,1]");
  if (!(unlabelled_frac >= 0.0 && unlabelled_frac <= 1.0))
    fail_validation("unlabelled_frac outside [0,1]");
  if (factors.enabled()) {
    if (factors.binary_loadings.size() != binary_count() ||
        factors.continuous_loadings.size() != continuous_count())
      fail_validation("factor loadings must cover every feature");
    for (const auto& l : factors.binary_loadings)
      if (l.size() != factors.dim) fail_validation("binary loading dimension mismatch");
    for (const auto& l : factors.continuous_loadings)
      if (l.size() != factors.dim) fail_validation("continuous loading dimension mismatch");
    for (const auto& l : factors.binary_loadings) loading_residual(l);
    for (const auto& l : factors.continuous_loadings) loading_residual(l);
  }
}

FeatureSchema SynthSpec::make_schema() const {
  std::vector<Column> cols;
  char buf[16];
  for (std::size_t j = 0; j < binary_count(); ++j) {
    std::snprintf(buf, sizeof(buf), "b%02zu", j + 1);
    cols.push_back({buf, ColumnKind::binary});
  }
  for (std::size_t j = 0; j < continuous_count(); ++j) {
    std::snprintf(buf, sizeof(buf), "c%02zu", j + 1);
    cols.push_back({buf, ColumnKind::continuous});
  }
  return FeatureSchema(std::move(cols));
}

SynthResult generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t fb = spec.binary_count(), fc = spec.continuous_count();
  const std::size_t f = fb + fc;
  const Eigen::Index n = static_cast<Eigen::Index>(spec.n_rows);

  std::vector<double> bin_threshold(fb);
  for (std::size_t j = 0; j < fb; ++j) bin_threshold[j] = norm_ppf(spec.bernoulli_p[j]);
  std::vector<double> bin_residual(fb, 0.0), cont_residual(fc, 0.0);
  if (spec.factors.enabled()) {
    for (std::size_t j = 0; j < fb; ++j)
      bin_residual[j] = loading_residual(spec.factors.binary_loadings[j]);
    for (std::size_t j = 0; j < fc; ++j)
      cont_residual[j] = loading_residual(spec.factors.continuous_loadings[j]);
  }

  RandomStream rng(seed);
  Eigen::MatrixXd truth(n, static_cast<Eigen::Index>(f));
  std::vector<Label> truth_labels(spec.n_rows);
  std::vector<double> z(spec.factors.dim);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < spec.factors.dim; ++k) z[k] = rng.normal();
    double score = spec.label_intercept;
    for (std::size_t j = 0; j < fb; ++j) {
      double v;
      if (spec.factors.enabled()) {
        double u = factor_draw(spec.factors.binary_loadings[j], bin_residual[j], z, rng);
        v = u < bin_threshold[j] ? 1.0 : 0.0;
      } else {
        v = rng.bernoulli(spec.bernoulli_p[j]) ? 1.0 : 0.0;
      }
      truth(i, static_cast<Eigen::Index>(j)) = v;
      score += spec.label_weights[j] * v;
    }
    for (std::size_t j = 0; j < fc; ++j) {
      const GaussParams& g = spec.gauss_params[j];
      double u = spec.factors.enabled()
                     ? factor_draw(spec.factors.continuous_loadings[j], cont_residual[j], z, rng)
                     : rng.normal();
      double v = g.mean + g.std * u;
      truth(i, static_cast<Eigen::Index>(fb + j)) = v;
      score += spec.label_weights[fb + j] * v;
    }
    truth_labels[static_cast<std::size_t>(i)] =
        rng.bernoulli(sigmoid(score)) ? Label::positive : Label::negative;
  }

  // MCAR pass, row-major cell order.
  Eigen::MatrixXd masked = truth;
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j)
      if (rng.bernoulli(spec.miss_rates[j]))
        masked(i, static_cast<Eigen::Index>(j)) = std::numeric_limits<double>::quiet_NaN();

  // Exact unlabelled fraction: strip the first round(frac*n) rows of a
  // seeded permutation.
  std::vector<Label> masked_labels = truth_labels;
  std::size_t n_strip =
      static_cast<std::size_t>(std::llround(spec.unlabelled_frac * static_cast<double>(spec.n_rows)));
  std::vector<std::size_t> order(spec.n_rows);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  for (std::size_t k = 0; k < n_strip; ++k) masked_labels[order[k]] = Label::unlabelled;

  auto schema = std::make_shared<const FeatureSchema>(spec.make_schema());
  return SynthResult{TabularDataset(schema, std::move(masked), std::move(masked_labels)),
                     TabularDataset(schema, std::move(truth), std::move(truth_labels))};
}

double bayes_reference(const SynthSpec& spec, std::size_t n_mc, std::uint64_t seed) {
  spec.validate();
  if (n_mc < 10000) fail_validation("bayes_reference needs n_mc >= 10000");
  SynthSpec complete = spec;
  complete.n_rows = n_mc;
  std::fill(complete.miss_rates.begin(), complete.miss_rates.end(), 0.0);
  complete.unlabelled_frac = 0.0;
  SynthResult r = generate(complete, seed);

  const std::size_t f = spec.feature_count();
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (Eigen::Index i = 0; i < r.truth.rows(); ++i) {
    double score = spec.label_intercept;
    for (std::size_t j = 0; j < f; ++j)
      score += spec.label_weights[j] * r.truth.values()(i, static_cast<Eigen::Index>(j));
    bool pred = score >= 0.0;
    bool actual = r.truth.labels()[static_cast<std::size_t>(i)] == Label::positive;
    if (actual) (pred ? tp : fn)++;
    else (pred ? fp : tn)++;
  }
  if (tp + fn == 0 || tn + fp == 0)
    fail_validation("bayes_reference: a class never occurred in the Monte-Carlo sample");
  double recall1 = static_cast<double>(tp) / static_cast<double>(tp + fn);
  double recall0 = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return 0.5 * (recall0 + recall1);
}

// ---- JSON -----------------------------------------------------------------

std::string SynthSpec::to_json() const {
  detail::json j;
  j["n_rows"] = n_rows;
  j["bernoulli_p"] = bernoulli_p;
  detail::json gauss = detail::json::array();
  for (const auto& g : gauss_params) gauss.push_back({{"mean", g.mean}, {"std", g.std}});
  j["gauss_params"] = gauss;
  j["label_weights"] = label_weights;
  j["label_intercept"] = label_intercept;
  j["miss_rates"] = miss_rates;
  j["unlabelled_frac"] = unlabelled_frac;
  if (factors.enabled()) {
    j["factors"] = {{"dim", factors.dim},
                    {"binary_loadings", factors.binary_loadings},
                    {"continuous_loadings", factors.continuous_loadings}};
  }
  return j.dump(2);
}

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  detail::json j = detail::parse_json(text, "synth spec");
  SynthSpec s;
  s.n_rows = detail::require(j, "n_rows", "synth spec").get<std::size_t>();
  s.bernoulli_p = detail::require(j, "bernoulli_p", "synth spec").get<std::vector<double>>();
  for (const auto& g : detail::require(j, "gauss_params", "synth spec")) {
    s.gauss_params.push_back(GaussParams{detail::require(g, "mean", "gauss_params").get<double>(),
                                         detail::require(g, "std", "gauss_params").get<double>()});
  }
  s.label_weights = detail::require(j, "label_weights", "synth spec").get<std::vector<double>>();
  s.label_intercept = j.value("label_intercept", 0.0);
  s.miss_rates = detail::require(j, "miss_rates", "synth spec").get<std::vector<double>>();
  s.unlabelled_frac = j.value("unlabelled_frac", 0.0);
  if (j.contains("factors")) {
    const auto& fj = j["factors"];
    s.factors.dim = detail::require(fj, "dim", "factors").get<std::size_t>();
    s.factors.binary_loadings =
        detail::require(fj, "binary_loadings", "factors").get<std::vector<std::vector<double>>>();
    s.factors.continuous_loadings = detail::require(fj, "continuous_loadings", "factors")
                                        .get<std::vector<std::vector<double>>>();
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::paper_like(std::size_t n_rows) {
  SynthSpec s;
  s.n_rows = n_rows;
  const std::size_t fb = 46, fc = 22;
  s.bernoulli_p.resize(fb);
  for (std::size_t j = 0; j < fb; ++j) s.bernoulli_p[j] = 0.15 + 0.5 * ((j * 7) % 11) / 10.0;
  s.gauss_params.resize(fc);
  for (std::size_t j = 0; j < fc; ++j)
    s.gauss_params[j] = GaussParams{10.0 + 6.0 * static_cast<double>(j), 1.0 + 0.4 * static_cast<double>(j % 5)};

  // Missingness: most columns complete, a few around 5%, two above 50%.
  s.miss_rates.assign(fb + fc, 0.0);
  for (std::size_t j = 0; j < 14; ++j) s.miss_rates[2 + 3 * j] = 0.05;   // 14 binary columns
  for (std::size_t j = 0; j < 6; ++j) s.miss_rates[fb + 2 * j] = 0.05;   // 6 continuous columns
  s.miss_rates[fb + 13] = 0.55;
  s.miss_rates[fb + 17] = 0.55;

  // Latent factors tie features together so a missing cell stays predictable
  // from the rest of its row.
  s.factors.dim = 4;
  s.factors.binary_loadings.assign(fb, std::vector<double>(4, 0.0));
  for (std::size_t j = 0; j < fb; ++j) s.factors.binary_loadings[j][j % 4] = 0.65;
  s.factors.continuous_loadings.assign(fc, std::vector<double>(4, 0.0));
  for (std::size_t j = 0; j < fc; ++j) {
    s.factors.continuous_loadings[j][j % 4] = 0.7;
    s.factors.continuous_loadings[j][(j + 1) % 4] = 0.35;
  }

  // Label signal through a handful of features of both kinds; intercept
  // tuned for roughly a quarter positive rows.
  s.label_weights.assign(fb + fc, 0.0);
  s.label_weights[0] = 1.1;
  s.label_weights[5] = -0.9;
  s.label_weights[12] = 0.8;
  s.label_weights[23] = 0.7;
  s.label_weights[31] = -0.6;
  for (std::size_t j = 0; j < 8; ++j) {
    const std::size_t c = fb + 2 * j;
    const GaussParams& g = s.gauss_params[2 * j];
    // weight expressed against the standardized value: w * (x - mean) / std
    double w = (j % 2 == 0 ? 1.0 : -1.0) * (0.9 - 0.07 * static_cast<double>(j));
    s.label_weights[c] = w / g.std;
    s.label_intercept -= w * g.mean / g.std;
  }
  s.label_intercept += -1.95 - (1.1 * s.bernoulli_p[0] - 0.9 * s.bernoulli_p[5] +
                                0.8 * s.bernoulli_p[12] + 0.7 * s.bernoulli_p[23] -
                                0.6 * s.bernoulli_p[31]);
  s.unlabelled_frac = 0.5;
  s.validate();
  return s;
}

}  // namespace mieo
