#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recourse/score_model.hpp"

namespace recourse {

enum class Activation { tanh, relu };
enum class OutputHead { linear_score, sigmoid_probability };
enum class LossKind { squared_error, binary_cross_entropy };

std::string_view to_string(Activation a);
std::string_view to_string(OutputHead h);
std::string_view to_string(LossKind k);
Activation activation_from_string(std::string_view s);
OutputHead output_head_from_string(std::string_view s);
LossKind loss_from_string(std::string_view s);

// Training loss: mean per-sample loss plus regularizer_weight * sum of
// squared weight-matrix entries (biases are not decayed).
struct LossSpec {
  LossKind loss = LossKind::squared_error;
  double regularizer_weight = 1e-4;
};

struct LabeledSample {
  std::vector<double> x;
  double y = 0.0;
};

struct WeightGradient {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as MlpModel::parameters()
};

// Fully-connected feed-forward network with a single scalar output.
//
// Parameters are stored flat, layer by layer: the weight matrix in row-major
// order (out x in) followed by the bias vector. Hidden layers apply the
// hidden activation; the last layer is either an identity (score) or a
// logistic sigmoid (probability).
class MlpModel final : public ScoreModel {
 public:
  // All parameters zero.
  MlpModel(std::vector<std::size_t> layer_dims, Activation hidden,
           OutputHead head);

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpModel initialized(std::vector<std::size_t> layer_dims,
                              Activation hidden, OutputHead head,
                              std::uint64_t seed);

  std::size_t input_dim() const override { return dims_.front(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  OutputHead output_head() const { return head_; }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  // Views into one layer's block of the flat parameter vector.
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);

  double forward(std::span<const double> x) const;
  // Output-layer pre-activation; equals forward() for the linear head.
  double logit(std::span<const double> x) const;
  std::vector<double> gradient_wrt_input(std::span<const double> x) const;

  double score(std::span<const double> x) const override { return forward(x); }
  std::vector<double> score_gradient(std::span<const double> x) const override {
    return gradient_wrt_input(x);
  }

  bool operator==(const MlpModel& other) const {
    return dims_ == other.dims_ && hidden_ == other.hidden_ &&
           head_ == other.head_ && params_ == other.params_;
  }

 private:
  struct Trace {
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post[0] is the input
  };

  void check_input(std::span<const double> x) const;
  Trace run(std::span<const double> x) const;
  double output_from_logit(double z) const;
  // Backpropagates d(output-quantity)/d(logit) = seed through all layers.
  // Accumulates weight gradients into `weight_grad` when non-empty and
  // returns the gradient with respect to the input.
  std::vector<double> backprop(const Trace& trace, double seed,
                               std::span<double> weight_grad) const;

  std::vector<std::size_t> dims_;
  Activation hidden_;
  OutputHead head_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;

  friend WeightGradient gradient_wrt_weights(const MlpModel&,
                                             std::span<const LabeledSample>,
                                             const LossSpec&);
};

// Mean loss over `batch` plus the regularizer, and its gradient with respect
// to every parameter. Binary cross-entropy requires the sigmoid head.
WeightGradient gradient_wrt_weights(const MlpModel& model,
                                    std::span<const LabeledSample> batch,
                                    const LossSpec& loss);

// Loss value only (same definition as gradient_wrt_weights).
double dataset_loss(const MlpModel& model, std::span<const LabeledSample> data,
                    const LossSpec& loss);

// Parameter count for a layer shape without building a model.
std::size_t parameter_count(std::span<const std::size_t> layer_dims);

}  // namespace recourse
