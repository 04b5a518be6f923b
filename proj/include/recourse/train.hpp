#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "recourse/adam.hpp"
#include "recourse/mlp.hpp"

namespace recourse {

struct TrainConfig {
  LossSpec loss;
  std::size_t epochs = 500;
  std::size_t batch_size = 0;  // 0 = full batch
  AdamConfig adam{.step_size = 0.01};
  std::uint64_t rng_seed = 7;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  // loss_trace[0] is the loss of the initial model; loss_trace[e] the loss
  // after epoch e, all over the full training set.
  std::vector<double> loss_trace;
};

// Minimizes the regularized training loss with ADAM. Minibatch order is
// shuffled from rng_seed, so the result is a pure function of the inputs.
// Throws ShapeError on an empty dataset and TrainingError on a non-finite loss.
TrainResult train(MlpModel model, std::span<const LabeledSample> data,
                  const TrainConfig& config);

}  // namespace recourse
