#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace mieo {

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.1;

enum class Activation { leaky_relu, identity };

struct LayerSpec {
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  bool batchnorm = false;
  Activation activation = Activation::identity;
  double leaky_slope = 0.01;
};

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

struct LayerParams {
  LayerSpec spec;
  Eigen::MatrixXd weight;  // out_dim x in_dim
  Eigen::VectorXd bias;    // out_dim
  // batchnorm state, sized out_dim when spec.batchnorm
  Eigen::VectorXd bn_gamma, bn_beta, bn_running_mean, bn_running_var;
};

enum class RunMode { training, inference };

// Rows are samples; masking is resolved before a batch is formed, so a batch
// never contains NaN.
using Batch = Eigen::MatrixXd;

struct LayerTrace {
  Eigen::MatrixXd input;   // B x in
  Eigen::MatrixXd linear;  // B x out, before batchnorm
  // training-mode batchnorm internals (empty otherwise)
  Eigen::MatrixXd xhat;
  Eigen::VectorXd batch_mean, batch_var;
  Eigen::MatrixXd preact;  // activation input
  Eigen::MatrixXd output;  // B x out
};

struct ForwardTrace {
  RunMode mode = RunMode::inference;
  std::vector<LayerTrace> layers;
  const Eigen::MatrixXd& output() const { return layers.back().output; }
};

struct LayerGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias, bn_gamma, bn_beta;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Eigen::MatrixXd input;  // dLoss/dInput, for chaining networks
};

// Standalone batchnorm step, shared by Network and exposed for tests.
// Training mode normalizes with batch statistics (B >= 2 required) and, when
// update_running is set, folds them into the running estimates; inference
// mode normalizes with the running estimates. xhat/mean/var outputs are
// filled in training mode when requested.
Eigen::MatrixXd batchnorm_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& beta, Eigen::VectorXd& running_mean,
                                  Eigen::VectorXd& running_var, RunMode mode, bool update_running,
                                  Eigen::MatrixXd* xhat_out = nullptr,
                                  Eigen::VectorXd* mean_out = nullptr,
                                  Eigen::VectorXd* var_out = nullptr);

// Layered dense network. One training loop owns a Network exclusively;
// inference on a const Network is safe from any number of threads.
class Network {
public:
  Network() = default;

  // Kaiming-uniform weights (variance 2/fan_in), zero biases, identity
  // batchnorm; deterministic given seed.
  Network(std::vector<LayerSpec> specs, std::uint64_t seed);

  Eigen::Index input_dim() const { return layers_.front().spec.in_dim; }
  Eigen::Index output_dim() const { return layers_.back().spec.out_dim; }
  std::size_t layer_count() const { return layers_.size(); }

  const std::vector<LayerParams>& layers() const { return layers_; }
  std::vector<LayerParams>& layers() { return layers_; }

  // Training mode with update_running_stats folds batch statistics into the
  // running estimates, which is the only mutation forward ever performs.
  ForwardTrace forward(const Batch& x, RunMode mode, bool update_running_stats = true);

  // Inference without mutation; safe on a shared const model.
  ForwardTrace infer(const Batch& x) const;

  // Exact gradients for every parameter plus the input, given the trace of
  // the forward pass the output gradient refers to.
  Gradients backward(const ForwardTrace& trace, const Eigen::MatrixXd& output_grad) const;

  Gradients zero_gradients() const;

private:
  std::vector<LayerParams> layers_;
};

// ---- parameter views ------------------------------------------------------

// Contiguous view over one trainable tensor. Eigen dense storage is
// contiguous, so a (data, size) pair is enough for the optimizer and the
// finite-difference driver.
struct ParamRef {
  double* data = nullptr;
  Eigen::Index size = 0;
};

// Order: per layer weight, bias, then gamma, beta for batchnorm layers.
std::vector<ParamRef> trainable_parameters(Network& net);
std::vector<ParamRef> gradient_refs(Gradients& grads);

// ---- Adam -----------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
public:
  AdamState() = default;
  explicit AdamState(const std::vector<ParamRef>& params);

  // In-place bias-corrected update; increments the step counter once.
  void step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
            const AdamConfig& cfg);

  std::uint64_t steps() const { return t_; }

private:
  std::vector<Eigen::VectorXd> m_, v_;
  std::uint64_t t_ = 0;
};

// ---- gradient verification ------------------------------------------------

// Maps network output to (scalar loss, dLoss/dOutput).
using LossFn = std::function<std::pair<double, Eigen::MatrixXd>(const Eigen::MatrixXd&)>;

// Central-difference comparison for an arbitrary parameterized scalar
// function: perturbs sampled entries of each tensor and compares against the
// supplied analytic gradients. Returns the worst relative error, with the
// denominator floored at 1e-4 so near-zero pairs compare absolutely at the
// scale the difference quotient can actually resolve.
double finite_difference_check(const std::vector<ParamRef>& params,
                               const std::vector<ParamRef>& analytic,
                               const std::function<double()>& loss_value, double eps,
                               int samples_per_tensor, std::uint64_t seed);

// Convenience wrapper: analytic gradients via backward, numeric via repeated
// forwards with frozen running statistics (batchnorm keeps a fixed mode).
double gradient_check(Network& net, const LossFn& loss, const Batch& batch, double eps,
                      int samples_per_tensor = 100, std::uint64_t seed = 0,
                      RunMode mode = RunMode::training);

// ---- serialization --------------------------------------------------------

// Versioned JSON holding layer specs, weights, biases, and BN parameters
// with their running statistics. Doubles round-trip exactly.
std::string network_to_json(const Network& net);
Network network_from_json_text(const std::string& text);

}  // namespace mieo
