#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace recourse {

// A differentiable scalar score over a fixed-length input. Counterfactual
// search only needs this much of a model, so it works for trained networks
// and for closed-form fixtures alike. Implementations must be safe to call
// concurrently from const methods.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::size_t input_dim() const = 0;
  virtual double score(std::span<const double> x) const = 0;
  virtual std::vector<double> score_gradient(std::span<const double> x) const = 0;
};

// Wraps a closed-form score and its analytic gradient.
class FunctionModel final : public ScoreModel {
 public:
  using Score = std::function<double(std::span<const double>)>;
  using Gradient = std::function<std::vector<double>(std::span<const double>)>;

  FunctionModel(std::size_t input_dim, Score score, Gradient gradient)
      : dim_(input_dim), score_(std::move(score)), gradient_(std::move(gradient)) {}

  std::size_t input_dim() const override { return dim_; }
  double score(std::span<const double> x) const override { return score_(x); }
  std::vector<double> score_gradient(std::span<const double> x) const override {
    return gradient_(x);
  }

 private:
  std::size_t dim_;
  Score score_;
  Gradient gradient_;
};

}  // namespace recourse
