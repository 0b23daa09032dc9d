#include "mieo/nn.hpp"

#include <cmath>

#include "json_util.hpp"
#include "mieo/error.hpp"
#include "mieo/rng.hpp"

namespace mieo {

namespace {

void check_chain(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) fail_validation("network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (specs[l].in_dim < 1 || specs[l].out_dim < 1)
      fail_validation("layer " + std::to_string(l) + " has non-positive dimensions");
    if (specs[l].activation == Activation::leaky_relu &&
        !(specs[l].leaky_slope > 0.0 && specs[l].leaky_slope < 1.0))
      fail_validation("leaky slope must lie in (0,1)");
    if (l > 0 && specs[l].in_dim != specs[l - 1].out_dim)
      fail_validation("layer " + std::to_string(l) + " input dim " +
                      std::to_string(specs[l].in_dim) + " does not chain with previous output " +
                      std::to_string(specs[l - 1].out_dim));
  }
}

}  // namespace

Eigen::MatrixXd batchnorm_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& gamma,
                                  const Eigen::VectorXd& beta, Eigen::VectorXd& running_mean,
                                  Eigen::VectorXd& running_var, RunMode mode, bool update_running,
                                  Eigen::MatrixXd* xhat_out, Eigen::VectorXd* mean_out,
                                  Eigen::VectorXd* var_out) {
  const Eigen::Index b = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d || running_mean.size() != d || running_var.size() != d)
    fail_validation("batchnorm: parameter width mismatch");
  Eigen::MatrixXd out(b, d);
  if (mode == RunMode::training) {
    if (b < 2) fail_validation("batchnorm in training mode needs a batch of at least 2");
    Eigen::MatrixXd xhat(b, d);
    Eigen::VectorXd mean(d), var(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double mu = x.col(k).mean();
      const Eigen::ArrayXd centered = x.col(k).array() - mu;
      const double v = centered.square().sum() / static_cast<double>(b);
      const double inv_std = 1.0 / std::sqrt(v + kBnEpsilon);
      mean(k) = mu;
      var(k) = v;
      xhat.col(k) = (centered * inv_std).matrix();
      out.col(k) = (gamma(k) * xhat.col(k).array() + beta(k)).matrix();
    }
    if (update_running) {
      // the running variance tracks the unbiased batch estimate
      const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
      running_mean = (1.0 - kBnMomentum) * running_mean + kBnMomentum * mean;
      running_var = (1.0 - kBnMomentum) * running_var + (kBnMomentum * unbias) * var;
    }
    if (xhat_out) *xhat_out = std::move(xhat);
    if (mean_out) *mean_out = std::move(mean);
    if (var_out) *var_out = std::move(var);
    return out;
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    const double inv_std = 1.0 / std::sqrt(running_var(k) + kBnEpsilon);
    out.col(k) =
        (gamma(k) * ((x.col(k).array() - running_mean(k)) * inv_std) + beta(k)).matrix();
  }
  return out;
}

Network::Network(std::vector<LayerSpec> specs, std::uint64_t seed) {
  check_chain(specs);
  RandomStream rng(seed);
  layers_.reserve(specs.size());
  for (const LayerSpec& spec : specs) {
    LayerParams p;
    p.spec = spec;
    p.weight.resize(spec.out_dim, spec.in_dim);
    // Kaiming uniform: variance 2/fan_in
    double bound = std::sqrt(6.0 / static_cast<double>(spec.in_dim));
    for (Eigen::Index r = 0; r < spec.out_dim; ++r)
      for (Eigen::Index c = 0; c < spec.in_dim; ++c) p.weight(r, c) = rng.uniform(-bound, bound);
    p.bias = Eigen::VectorXd::Zero(spec.out_dim);
    if (spec.batchnorm) {
      p.bn_gamma = Eigen::VectorXd::Ones(spec.out_dim);
      p.bn_beta = Eigen::VectorXd::Zero(spec.out_dim);
      p.bn_running_mean = Eigen::VectorXd::Zero(spec.out_dim);
      p.bn_running_var = Eigen::VectorXd::Ones(spec.out_dim);
    }
    layers_.push_back(std::move(p));
  }
}

ForwardTrace Network::forward(const Batch& x, RunMode mode, bool update_running_stats) {
  if (x.cols() != input_dim())
    fail_validation("forward: batch width " + std::to_string(x.cols()) +
                    " does not match input dim " + std::to_string(input_dim()));
  if (x.rows() < 1) fail_validation("forward: empty batch");
  ForwardTrace trace;
  trace.mode = mode;
  trace.layers.resize(layers_.size());
  const Eigen::MatrixXd* cur = &x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerParams& p = layers_[l];
    LayerTrace& t = trace.layers[l];
    t.input = *cur;
    t.linear = (t.input * p.weight.transpose()).rowwise() + p.bias.transpose();
    if (p.spec.batchnorm) {
      const bool training = mode == RunMode::training;
      t.preact = batchnorm_forward(t.linear, p.bn_gamma, p.bn_beta, p.bn_running_mean,
                                   p.bn_running_var, mode, training && update_running_stats,
                                   training ? &t.xhat : nullptr,
                                   training ? &t.batch_mean : nullptr,
                                   training ? &t.batch_var : nullptr);
    } else {
      t.preact = t.linear;
    }
    if (p.spec.activation == Activation::leaky_relu) {
      double slope = p.spec.leaky_slope;
      t.output = t.preact.unaryExpr([slope](double v) { return v >= 0.0 ? v : slope * v; });
    } else {
      t.output = t.preact;
    }
    cur = &t.output;
  }
  return trace;
}

ForwardTrace Network::infer(const Batch& x) const {
  // inference with updates disabled touches no model state
  return const_cast<Network*>(this)->forward(x, RunMode::inference, false);
}

Gradients Network::backward(const ForwardTrace& trace, const Eigen::MatrixXd& output_grad) const {
  if (trace.layers.size() != layers_.size()) fail_validation("backward: stale forward trace");
  if (output_grad.rows() != trace.output().rows() || output_grad.cols() != trace.output().cols())
    fail_validation("backward: output gradient shape mismatch");

  Gradients grads;
  grads.layers.resize(layers_.size());
  Eigen::MatrixXd d = output_grad;  // gradient w.r.t. current layer output
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerParams& p = layers_[li];
    const LayerTrace& t = trace.layers[li];
    LayerGrads& g = grads.layers[li];
    const Eigen::Index b = t.input.rows();
    const Eigen::Index width = t.linear.cols();

    Eigen::MatrixXd d_pre;
    if (p.spec.activation == Activation::leaky_relu) {
      double slope = p.spec.leaky_slope;
      d_pre = d.cwiseProduct(
          t.preact.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; }));
    } else {
      d_pre = d;
    }

    Eigen::MatrixXd d_lin;
    if (p.spec.batchnorm) {
      g.bn_gamma.resize(width);
      g.bn_beta.resize(width);
      d_lin.resize(b, width);
      if (trace.mode == RunMode::training) {
        if (t.xhat.size() == 0) fail_validation("backward: forward trace lacks batchnorm cache");
        const double invb = 1.0 / static_cast<double>(b);
        for (Eigen::Index k = 0; k < width; ++k) {
          const Eigen::ArrayXd dp = d_pre.col(k).array();
          const Eigen::ArrayXd xh = t.xhat.col(k).array();
          g.bn_gamma(k) = (dp * xh).sum();
          g.bn_beta(k) = dp.sum();
          const double inv_std = 1.0 / std::sqrt(t.batch_var(k) + kBnEpsilon);
          const Eigen::ArrayXd d_xhat = dp * p.bn_gamma(k);
          const Eigen::ArrayXd centered = t.linear.col(k).array() - t.batch_mean(k);
          // batch mean and variance both depend on every row
          const double d_var =
              (d_xhat * centered).sum() * (-0.5) * inv_std * inv_std * inv_std;
          const double d_mean =
              -inv_std * d_xhat.sum() + d_var * (-2.0 * invb) * centered.sum();
          d_lin.col(k) =
              (d_xhat * inv_std + centered * (2.0 * invb * d_var) + d_mean * invb).matrix();
        }
      } else {
        for (Eigen::Index k = 0; k < width; ++k) {
          const double inv_std = 1.0 / std::sqrt(p.bn_running_var(k) + kBnEpsilon);
          const Eigen::ArrayXd xh =
              (t.linear.col(k).array() - p.bn_running_mean(k)) * inv_std;
          const Eigen::ArrayXd dp = d_pre.col(k).array();
          g.bn_gamma(k) = (dp * xh).sum();
          g.bn_beta(k) = dp.sum();
          d_lin.col(k) = (dp * (p.bn_gamma(k) * inv_std)).matrix();
        }
      }
    } else {
      d_lin = std::move(d_pre);
    }

    g.weight = d_lin.transpose() * t.input;
    g.bias = d_lin.colwise().sum().transpose();
    d = d_lin * p.weight;
  }
  grads.input = std::move(d);
  return grads;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  g.layers.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerParams& p = layers_[l];
    g.layers[l].weight = Eigen::MatrixXd::Zero(p.spec.out_dim, p.spec.in_dim);
    g.layers[l].bias = Eigen::VectorXd::Zero(p.spec.out_dim);
    if (p.spec.batchnorm) {
      g.layers[l].bn_gamma = Eigen::VectorXd::Zero(p.spec.out_dim);
      g.layers[l].bn_beta = Eigen::VectorXd::Zero(p.spec.out_dim);
    }
  }
  return g;
}

// ---- parameter views ------------------------------------------------------

std::vector<ParamRef> trainable_parameters(Network& net) {
  std::vector<ParamRef> out;
  for (LayerParams& p : net.layers()) {
    out.push_back({p.weight.data(), p.weight.size()});
    out.push_back({p.bias.data(), p.bias.size()});
    if (p.spec.batchnorm) {
      out.push_back({p.bn_gamma.data(), p.bn_gamma.size()});
      out.push_back({p.bn_beta.data(), p.bn_beta.size()});
    }
  }
  return out;
}

std::vector<ParamRef> gradient_refs(Gradients& grads) {
  std::vector<ParamRef> out;
  for (LayerGrads& g : grads.layers) {
    out.push_back({g.weight.data(), g.weight.size()});
    out.push_back({g.bias.data(), g.bias.size()});
    if (g.bn_gamma.size() > 0) {
      out.push_back({g.bn_gamma.data(), g.bn_gamma.size()});
      out.push_back({g.bn_beta.data(), g.bn_beta.size()});
    }
  }
  return out;
}

// ---- Adam -----------------------------------------------------------------

AdamState::AdamState(const std::vector<ParamRef>& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamRef& p : params) {
    m_.push_back(Eigen::VectorXd::Zero(p.size));
    v_.push_back(Eigen::VectorXd::Zero(p.size));
  }
}

void AdamState::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
                     const AdamConfig& cfg) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail_validation("adam: parameter/gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size != m_[k].size() || grads[k].size != m_[k].size())
      fail_validation("adam: tensor shape mismatch");
    Eigen::Map<Eigen::VectorXd> p(params[k].data, params[k].size);
    Eigen::Map<const Eigen::VectorXd> g(grads[k].data, grads[k].size);
    m_[k] = cfg.beta1 * m_[k] + (1.0 - cfg.beta1) * g;
    v_[k] = cfg.beta2 * v_[k] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.array() -= cfg.lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg.epsilon);
  }
}

// ---- gradient verification ------------------------------------------------

double finite_difference_check(const std::vector<ParamRef>& params,
                               const std::vector<ParamRef>& analytic,
                               const std::function<double()>& loss_value, double eps,
                               int samples_per_tensor, std::uint64_t seed) {
  if (params.size() != analytic.size())
    fail_validation("gradient check: parameter/gradient count mismatch");
  if (samples_per_tensor < 1) fail_validation("gradient check: need at least one sample");
  RandomStream rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Eigen::Index n = params[k].size;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    if (n > samples_per_tensor) {
      // partial Fisher-Yates; the first samples_per_tensor slots end up sampled
      for (int i = 0; i < samples_per_tensor; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        rng.index(static_cast<std::size_t>(n) - static_cast<std::size_t>(i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
      }
      idx.resize(static_cast<std::size_t>(samples_per_tensor));
    }
    for (Eigen::Index i : idx) {
      double& slot = params[k].data[i];
      const double saved = slot;
      slot = saved + eps;
      double up = loss_value();
      slot = saved - eps;
      double down = loss_value();
      slot = saved;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[k].data[i];
      // The floor is the absolute scale a float64 central difference on an
      // O(1) loss can resolve: roundoff of ~1e-13 in each evaluation divided
      // by 2*eps leaves ~1e-9 of noise, so near-zero pairs below 1e-4 carry
      // no usable relative signal.
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

double gradient_check(Network& net, const LossFn& loss, const Batch& batch, double eps,
                      int samples_per_tensor, std::uint64_t seed, RunMode mode) {
  ForwardTrace trace = net.forward(batch, mode, false);
  auto [value, d_out] = loss(trace.output());
  (void)value;
  Gradients grads = net.backward(trace, d_out);

  std::vector<ParamRef> params = trainable_parameters(net);
  std::vector<ParamRef> analytic = gradient_refs(grads);
  auto eval = [&]() {
    ForwardTrace t = net.forward(batch, mode, false);
    return loss(t.output()).first;
  };
  return finite_difference_check(params, analytic, eval, eps, samples_per_tensor, seed);
}

// ---- serialization --------------------------------------------------------

std::string network_to_json(const Network& net) {
  using detail::json;
  json layers = json::array();
  for (const LayerParams& p : net.layers()) {
    json o;
    o["in_dim"] = p.spec.in_dim;
    o["out_dim"] = p.spec.out_dim;
    o["batchnorm"] = p.spec.batchnorm;
    o["activation"] = p.spec.activation == Activation::leaky_relu ? "leaky_relu" : "identity";
    o["leaky_slope"] = p.spec.leaky_slope;
    o["weight"] = detail::matrix_to_json(p.weight);
    o["bias"] = detail::vector_to_json(p.bias);
    if (p.spec.batchnorm) {
      o["bn_gamma"] = detail::vector_to_json(p.bn_gamma);
      o["bn_beta"] = detail::vector_to_json(p.bn_beta);
      o["bn_running_mean"] = detail::vector_to_json(p.bn_running_mean);
      o["bn_running_var"] = detail::vector_to_json(p.bn_running_var);
    }
    layers.push_back(std::move(o));
  }
  json root;
  root["format_version"] = 1;
  root["layers"] = std::move(layers);
  return root.dump();
}

Network network_from_json_text(const std::string& text) {
  using detail::json;
  json root = detail::parse_json(text, "network");
  if (detail::require(root, "format_version", "network").get<int>() != 1)
    fail_validation("network: unsupported format version");
  const json& layers = detail::require(root, "layers", "network");
  if (!layers.is_array() || layers.empty()) fail_validation("network: empty layer list");

  std::vector<LayerSpec> specs;
  for (const json& o : layers) {
    LayerSpec s;
    s.in_dim = detail::require(o, "in_dim", "layer").get<Eigen::Index>();
    s.out_dim = detail::require(o, "out_dim", "layer").get<Eigen::Index>();
    s.batchnorm = detail::require(o, "batchnorm", "layer").get<bool>();
    std::string act = detail::require(o, "activation", "layer").get<std::string>();
    if (act == "leaky_relu")
      s.activation = Activation::leaky_relu;
    else if (act == "identity")
      s.activation = Activation::identity;
    else
      fail_validation("layer: unknown activation '" + act + "'");
    s.leaky_slope = detail::require(o, "leaky_slope", "layer").get<double>();
    specs.push_back(s);
  }

  Network net(specs, 0);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const json& o = layers[l];
    LayerParams& p = net.layers()[l];
    Eigen::MatrixXd w = detail::matrix_from_json(detail::require(o, "weight", "layer"), "weight");
    if (w.rows() != p.spec.out_dim || w.cols() != p.spec.in_dim)
      fail_validation("layer: weight shape mismatch");
    p.weight = std::move(w);
    Eigen::VectorXd b = detail::vector_from_json(detail::require(o, "bias", "layer"), "bias");
    if (b.size() != p.spec.out_dim) fail_validation("layer: bias length mismatch");
    p.bias = std::move(b);
    if (p.spec.batchnorm) {
      auto bn_vector = [&](const char* key) {
        Eigen::VectorXd v = detail::vector_from_json(detail::require(o, key, "layer"), key);
        if (v.size() != p.spec.out_dim)
          fail_validation(std::string("layer: ") + key + " length mismatch");
        return v;
      };
      p.bn_gamma = bn_vector("bn_gamma");
      p.bn_beta = bn_vector("bn_beta");
      p.bn_running_mean = bn_vector("bn_running_mean");
      p.bn_running_var = bn_vector("bn_running_var");
    }
  }
  return net;
}

}  // namespace mieo
