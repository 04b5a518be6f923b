#include "recourse/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "recourse/errors.hpp"

namespace recourse {

void TrainConfig::validate() const {
  adam.validate();
  if (loss.regularizer_weight < 0.0) {
    throw ConfigError("regularizer weight must be nonnegative");
  }
}

namespace {

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw TrainingError("training diverged: loss is " + std::to_string(loss) +
                        " after epoch " + std::to_string(epoch) +
                        "; lower the step size or check input scaling");
  }
}

}  // namespace

TrainResult train(MlpModel model, std::span<const LabeledSample> data,
                  const TrainConfig& config) {
  if (data.empty()) throw ShapeError("cannot train on an empty dataset");
  config.validate();

  TrainResult result{std::move(model), {}};
  MlpModel& m = result.model;
  result.loss_trace.reserve(config.epochs + 1);
  result.loss_trace.push_back(dataset_loss(m, data, config.loss));
  check_finite(result.loss_trace.back(), 0);

  const std::size_t batch =
      config.batch_size == 0 ? data.size() : std::min(config.batch_size, data.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.rng_seed);
  AdamState state(m.parameter_count());
  std::vector<LabeledSample> scratch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < data.size()) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < data.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, data.size());
      WeightGradient g;
      if (batch == data.size()) {
        g = gradient_wrt_weights(m, data, config.loss);
      } else {
        scratch.clear();
        for (std::size_t i = start; i < stop; ++i) scratch.push_back(data[order[i]]);
        g = gradient_wrt_weights(m, scratch, config.loss);
      }
      check_finite(g.loss, epoch);
      adam_step(state, m.parameters(), g.grad, config.adam);
    }
    result.loss_trace.push_back(dataset_loss(m, data, config.loss));
    check_finite(result.loss_trace.back(), epoch);
  }
  return result;
}

}  // namespace recourse
