#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace recourse {

// Per-feature robust and classical scale statistics over a point set.
struct FeatureStats {
  std::vector<double> median;
  std::vector<double> mad;     // median absolute deviation from the median
  std::vector<double> stddev;  // population standard deviation
  std::vector<double> min;
  std::vector<double> max;
  std::size_t fitted_on = 0;

  std::size_t size() const { return median.size(); }
};

// Median with the even-length convention (mean of the two middle values).
double median_of(std::vector<double> values);

// Fits stats column-wise over `rows` (each row one point). Throws DataError
// when empty or ragged.
FeatureStats fit_stats(std::span<const std::vector<double>> rows);

enum class DistanceKind {
  unnormalized_sq_euclidean,    // sum (x_k - x'_k)^2
  std_normalized_sq_euclidean,  // sum (x_k - x'_k)^2 / std_k
  mad_weighted_l1,              // sum |x_k - x'_k| / MAD_k
};

std::string_view to_string(DistanceKind k);
// Accepts the enum names and the short CLI aliases l2, l2norm, l1mad.
DistanceKind distance_kind_from_string(std::string_view s);

inline constexpr double kScaleFloorRelative = 1e-6;
inline constexpr double kScaleFloorAbsolute = 1e-9;

// A distance function with its fitted per-feature divisors.
//
// Divisors are floored at max(scale_k, 1e-6 * (max_k - min_k), 1e-9) so that
// constant and majority-binary columns (MAD = 0) keep a finite weight.
class DistanceSpec {
 public:
  // Unnormalized only; normalized kinds throw ConfigError without stats.
  explicit DistanceSpec(DistanceKind kind);
  DistanceSpec(DistanceKind kind, FeatureStats stats);

  DistanceKind kind() const { return kind_; }
  const std::optional<FeatureStats>& stats() const { return stats_; }
  // Effective (floored) divisor per feature; empty for the unnormalized kind.
  const std::vector<double>& divisors() const { return divisors_; }

  double operator()(std::span<const double> x, std::span<const double> x_prime) const;

  // Gradient with respect to x_prime. For the L1 kind the subgradient
  // sign(0) = 0 is used.
  std::vector<double> gradient(std::span<const double> x,
                               std::span<const double> x_prime) const;

 private:
  void check(std::span<const double> x, std::span<const double> x_prime) const;

  DistanceKind kind_;
  std::optional<FeatureStats> stats_;
  std::vector<double> divisors_;
};

inline double distance(const DistanceSpec& spec, std::span<const double> x,
                       std::span<const double> x_prime) {
  return spec(x, x_prime);
}

nlohmann::json stats_to_json(const FeatureStats& stats);
FeatureStats stats_from_json(const nlohmann::json& doc);

}  // namespace recourse
