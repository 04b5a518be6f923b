#include "recourse/mlp.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "recourse/errors.hpp"

namespace recourse {

std::string_view to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "relu";
}

std::string_view to_string(OutputHead h) {
  return h == OutputHead::linear_score ? "linear_score" : "sigmoid_probability";
}

std::string_view to_string(LossKind k) {
  return k == LossKind::squared_error ? "squared_error" : "binary_cross_entropy";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation: " + std::string(s));
}

OutputHead output_head_from_string(std::string_view s) {
  if (s == "linear_score") return OutputHead::linear_score;
  if (s == "sigmoid_probability") return OutputHead::sigmoid_probability;
  throw ConfigError("unknown output head: " + std::string(s));
}

LossKind loss_from_string(std::string_view s) {
  if (s == "squared_error") return LossKind::squared_error;
  if (s == "binary_cross_entropy") return LossKind::binary_cross_entropy;
  throw ConfigError("unknown loss: " + std::string(s));
}

namespace {

double activate(Activation a, double z) {
  return a == Activation::tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// Derivative expressed through pre-activation z and activation value h.
// relu'(0) is taken as 0.
double activate_derivative(Activation a, double z, double h) {
  return a == Activation::tanh ? 1.0 - h * h : (z > 0.0 ? 1.0 : 0.0);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

std::size_t parameter_count(std::span<const std::size_t> layer_dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
  }
  return n;
}

MlpModel::MlpModel(std::vector<std::size_t> layer_dims, Activation hidden,
                   OutputHead head)
    : dims_(std::move(layer_dims)), hidden_(hidden), head_(head) {
  if (dims_.size() < 2) throw ShapeError("an MLP needs at least two layer dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("layer dims must be positive");
  }
  if (dims_.back() != 1) throw ShapeError("the output layer must have width 1");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weight_offset_.push_back(offset);
    offset += dims_[l] * dims_[l + 1];
    bias_offset_.push_back(offset);
    offset += dims_[l + 1];
  }
  params_.assign(offset, 0.0);
}

MlpModel MlpModel::initialized(std::vector<std::size_t> layer_dims,
                               Activation hidden, OutputHead head,
                               std::uint64_t seed) {
  MlpModel model(std::move(layer_dims), hidden, head);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const double fan_in = static_cast<double>(model.dims_[l]);
    const double fan_out = static_cast<double>(model.dims_[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : model.weights(l)) w = dist(rng);
  }
  return model;
}

std::span<const double> MlpModel::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(
      weight_offset_.at(layer), dims_[layer] * dims_[layer + 1]);
}

std::span<const double> MlpModel::bias(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset_.at(layer),
                                                  dims_[layer + 1]);
}

std::span<double> MlpModel::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(weight_offset_.at(layer),
                                            dims_[layer] * dims_[layer + 1]);
}

std::span<double> MlpModel::bias(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset_.at(layer),
                                            dims_[layer + 1]);
}

void MlpModel::check_input(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(input_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ShapeError("input contains a non-finite value");
  }
}

MlpModel::Trace MlpModel::run(std::span<const double> x) const {
  Trace t;
  t.pre.resize(layer_count());
  t.post.resize(layer_count() + 1);
  t.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const auto w = weights(l);
    const auto b = bias(l);
    const auto& prev = t.post[l];
    auto& z = t.pre[l];
    z.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      z[o] = std::inner_product(row, row + in, prev.data(), b[o]);
    }
    auto& h = t.post[l + 1];
    if (l + 1 == layer_count()) {
      h = z;
    } else {
      h.resize(out);
      for (std::size_t o = 0; o < out; ++o) h[o] = activate(hidden_, z[o]);
    }
  }
  return t;
}

double MlpModel::output_from_logit(double z) const {
  return head_ == OutputHead::linear_score ? z : sigmoid(z);
}

double MlpModel::forward(std::span<const double> x) const {
  return output_from_logit(logit(x));
}

double MlpModel::logit(std::span<const double> x) const {
  check_input(x);
  return run(x).pre.back()[0];
}

std::vector<double> MlpModel::backprop(const Trace& trace, double seed,
                                       std::span<double> weight_grad) const {
  std::vector<double> delta{seed};  // d/d(pre-activation) of the current layer
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const auto w = weights(l);
    const auto& prev = trace.post[l];
    if (!weight_grad.empty()) {
      double* gw = weight_grad.data() + weight_offset_[l];
      double* gb = weight_grad.data() + bias_offset_[l];
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * prev[i];
        gb[o] += delta[o];
      }
    }
    std::vector<double> upstream(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) upstream[i] += row[i] * delta[o];
    }
    if (l > 0) {
      const auto& z = trace.pre[l - 1];
      for (std::size_t i = 0; i < in; ++i) {
        upstream[i] *= activate_derivative(hidden_, z[i], prev[i]);
      }
    }
    delta = std::move(upstream);
  }
  return delta;
}

std::vector<double> MlpModel::gradient_wrt_input(std::span<const double> x) const {
  check_input(x);
  const Trace t = run(x);
  double seed = 1.0;
  if (head_ == OutputHead::sigmoid_probability) {
    const double p = sigmoid(t.pre.back()[0]);
    seed = p * (1.0 - p);
  }
  return backprop(t, seed, {});
}

namespace {

void check_batch(const MlpModel& model, std::span<const LabeledSample> batch,
                 const LossSpec& loss) {
  if (batch.empty()) throw ShapeError("empty batch");
  if (loss.regularizer_weight < 0.0) {
    throw ConfigError("regularizer weight must be nonnegative");
  }
  if (loss.loss == LossKind::binary_cross_entropy &&
      model.output_head() != OutputHead::sigmoid_probability) {
    throw ConfigError("binary cross-entropy requires the sigmoid head");
  }
  for (const auto& s : batch) {
    if (!std::isfinite(s.y)) throw ShapeError("non-finite label");
  }
}

double regularizer(const MlpModel& model, double strength) {
  double r = 0.0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (double w : model.weights(l)) r += w * w;
  }
  return strength * r;
}

}  // namespace

WeightGradient gradient_wrt_weights(const MlpModel& model,
                                    std::span<const LabeledSample> batch,
                                    const LossSpec& loss) {
  check_batch(model, batch, loss);
  WeightGradient out;
  out.grad.assign(model.parameter_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch) {
    model.check_input(s.x);
    const auto trace = model.run(s.x);
    const double z = trace.pre.back()[0];
    double seed = 0.0;  // d(loss)/d(logit)
    if (loss.loss == LossKind::binary_cross_entropy) {
      total += softplus(z) - s.y * z;
      seed = sigmoid(z) - s.y;
    } else {
      const double f = model.output_from_logit(z);
      const double r = f - s.y;
      total += r * r;
      seed = 2.0 * r;
      if (model.output_head() == OutputHead::sigmoid_probability) {
        seed *= f * (1.0 - f);
      }
    }
    model.backprop(trace, seed * inv_n, out.grad);
  }
  out.loss = total * inv_n + regularizer(model, loss.regularizer_weight);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const auto w = model.weights(l);
    double* g = out.grad.data() + model.weight_offset_[l];
    for (std::size_t i = 0; i < w.size(); ++i) {
      g[i] += 2.0 * loss.regularizer_weight * w[i];
    }
  }
  return out;
}

double dataset_loss(const MlpModel& model, std::span<const LabeledSample> data,
                    const LossSpec& loss) {
  check_batch(model, data, loss);
  double total = 0.0;
  for (const auto& s : data) {
    const double z = model.logit(s.x);
    if (loss.loss == LossKind::binary_cross_entropy) {
      total += softplus(z) - s.y * z;
    } else {
      const double r = (model.output_head() == OutputHead::linear_score
                            ? z
                            : sigmoid(z)) -
                       s.y;
      total += r * r;
    }
  }
  return total / static_cast<double>(data.size()) +
         regularizer(model, loss.regularizer_weight);
}

}  // namespace recourse
