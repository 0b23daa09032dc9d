#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mieo/dataset.hpp"

namespace mieo {

struct GaussParams {
  double mean = 0.0;
  double std = 1.0;
};

// Optional shared latent factors. Each feature carries a loading vector with
// Euclidean norm <= 1; the residual variance tops the feature up to its
// nominal marginal, so marginals stay exactly Bernoulli(p) / N(mean, std^2)
// while features become correlated. Empty loadings mean independent features.
struct LatentFactors {
  std::size_t dim = 0;
  std::vector<std::vector<double>> binary_loadings;      // F_b rows of `dim`
  std::vector<std::vector<double>> continuous_loadings;  // F_c rows of `dim`

  bool enabled() const { return dim > 0; }
};

// Generative model for desk-scale datasets: binary features first, then
// continuous ones; a logistic labelling rule on the complete row; MCAR
// missingness per feature; a fixed fraction of rows stripped of labels.
struct SynthSpec {
  std::size_t n_rows = 0;
  std::vector<double> bernoulli_p;        // per binary feature
  std::vector<GaussParams> gauss_params;  // per continuous feature
  std::vector<double> label_weights;      // length F, binary block first
  double label_intercept = 0.0;
  std::vector<double> miss_rates;         // length F
  double unlabelled_frac = 0.0;
  LatentFactors factors;

  std::size_t binary_count() const { return bernoulli_p.size(); }
  std::size_t continuous_count() const { return gauss_params.size(); }
  std::size_t feature_count() const { return binary_count() + continuous_count(); }

  void validate() const;
  FeatureSchema make_schema() const;  // b01..., c01...

  std::string to_json() const;
  static SynthSpec from_json_text(const std::string& text);

  // Shape mirror of the clinical cohort: 46 binary + 22 continuous features,
  // ~3% missing overall with two columns above 50%, ~25% positive labels,
  // half the rows unlabelled. Correlated features so missing cells remain
  // predictable.
  static SynthSpec paper_like(std::size_t n_rows = 8000);
};

struct SynthResult {
  TabularDataset masked;  // missing cells + stripped labels
  TabularDataset truth;   // complete values, every label present
};

SynthResult generate(const SynthSpec& spec, std::uint64_t seed);

// Monte-Carlo estimate of the balanced accuracy of the Bayes rule
// (predict 1 iff the logistic score is >= 0) on complete data. This is the
// ceiling trained pipelines are measured against.
double bayes_reference(const SynthSpec& spec, std::size_t n_mc, std::uint64_t seed);

}  // namespace mieo
