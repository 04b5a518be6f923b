#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace recourse {

struct AdamConfig {
  double step_size = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws ConfigError unless step_size > 0, 0 <= beta < 1, epsilon > 0.
  void validate() const;
};

// First/second moment estimates for one parameter vector.
struct AdamState {
  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
};

// One bias-corrected ADAM update (Kingma & Ba, Algorithm 1):
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - a * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, const AdamConfig& config);

}  // namespace recourse
