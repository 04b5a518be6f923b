#include "recourse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "recourse/errors.hpp"

namespace recourse {

double median_of(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

FeatureStats fit_stats(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw DataError("cannot fit feature stats on an empty dataset");
  const std::size_t d = rows.front().size();
  FeatureStats s;
  s.fitted_on = rows.size();
  std::vector<double> column(rows.size());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (rows[j].size() != d) throw DataError("ragged rows in fit_stats", j + 1);
      column[j] = rows[j][k];
    }
    const double med = median_of(column);
    std::vector<double> deviation(column.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < column.size(); ++j) {
      deviation[j] = std::abs(column[j] - med);
      sum += column[j];
    }
    const double mean = sum / static_cast<double>(column.size());
    double sq = 0.0;
    for (double v : column) sq += (v - mean) * (v - mean);
    s.median.push_back(med);
    s.mad.push_back(median_of(std::move(deviation)));
    s.stddev.push_back(std::sqrt(sq / static_cast<double>(column.size())));
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    s.min.push_back(*lo);
    s.max.push_back(*hi);
  }
  return s;
}

std::string_view to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::unnormalized_sq_euclidean: return "unnormalized_sq_euclidean";
    case DistanceKind::std_normalized_sq_euclidean: return "std_normalized_sq_euclidean";
    case DistanceKind::mad_weighted_l1: return "mad_weighted_l1";
  }
  return "?";
}

DistanceKind distance_kind_from_string(std::string_view s) {
  if (s == "l2" || s == "unnormalized_sq_euclidean") {
    return DistanceKind::unnormalized_sq_euclidean;
  }
  if (s == "l2norm" || s == "std_normalized_sq_euclidean") {
    return DistanceKind::std_normalized_sq_euclidean;
  }
  if (s == "l1mad" || s == "mad_weighted_l1") return DistanceKind::mad_weighted_l1;
  throw ConfigError("unknown metric '" + std::string(s) +
                    "' (expected l2, l2norm or l1mad)");
}

DistanceSpec::DistanceSpec(DistanceKind kind) : kind_(kind) {
  if (kind != DistanceKind::unnormalized_sq_euclidean) {
    throw ConfigError(std::string(to_string(kind)) + " requires fitted feature stats");
  }
}

DistanceSpec::DistanceSpec(DistanceKind kind, FeatureStats stats)
    : kind_(kind), stats_(std::move(stats)) {
  if (kind_ == DistanceKind::unnormalized_sq_euclidean) return;
  const auto& scale =
      kind_ == DistanceKind::mad_weighted_l1 ? stats_->mad : stats_->stddev;
  if (scale.empty()) {
    throw ConfigError(std::string(to_string(kind_)) + " requires fitted feature stats");
  }
  for (std::size_t k = 0; k < scale.size(); ++k) {
    const double range = stats_->max[k] - stats_->min[k];
    divisors_.push_back(std::max({scale[k], kScaleFloorRelative * range,
                                  kScaleFloorAbsolute}));
  }
}

void DistanceSpec::check(std::span<const double> x,
                         std::span<const double> x_prime) const {
  if (x.size() != x_prime.size()) throw ShapeError("distance: length mismatch");
  if (!divisors_.empty() && divisors_.size() != x.size()) {
    throw ShapeError("distance: points do not match the fitted stats length");
  }
}

double DistanceSpec::operator()(std::span<const double> x,
                                std::span<const double> x_prime) const {
  check(x, x_prime);
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - x_prime[k];
    switch (kind_) {
      case DistanceKind::unnormalized_sq_euclidean: d += diff * diff; break;
      case DistanceKind::std_normalized_sq_euclidean: d += diff * diff / divisors_[k]; break;
      case DistanceKind::mad_weighted_l1: d += std::abs(diff) / divisors_[k]; break;
    }
  }
  return d;
}

std::vector<double> DistanceSpec::gradient(std::span<const double> x,
                                           std::span<const double> x_prime) const {
  check(x, x_prime);
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x_prime[k] - x[k];
    switch (kind_) {
      case DistanceKind::unnormalized_sq_euclidean: g[k] = 2.0 * diff; break;
      case DistanceKind::std_normalized_sq_euclidean: g[k] = 2.0 * diff / divisors_[k]; break;
      case DistanceKind::mad_weighted_l1:
        g[k] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / divisors_[k];
        break;
    }
  }
  return g;
}

nlohmann::json stats_to_json(const FeatureStats& s) {
  return {{"median", s.median}, {"mad", s.mad},   {"std", s.stddev},
          {"min", s.min},       {"max", s.max},   {"fitted_on", s.fitted_on}};
}

FeatureStats stats_from_json(const nlohmann::json& doc) {
  FeatureStats s;
  s.median = doc.at("median").get<std::vector<double>>();
  s.mad = doc.at("mad").get<std::vector<double>>();
  s.stddev = doc.at("std").get<std::vector<double>>();
  s.min = doc.at("min").get<std::vector<double>>();
  s.max = doc.at("max").get<std::vector<double>>();
  s.fitted_on = doc.at("fitted_on").get<std::size_t>();
  const std::size_t n = s.median.size();
  if (s.mad.size() != n || s.stddev.size() != n || s.min.size() != n ||
      s.max.size() != n) {
    throw DataError("feature stats arrays have different lengths");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (s.mad[k] < 0.0 || s.stddev[k] < 0.0) {
      throw DataError("feature stats contain a negative scale");
    }
    if (!(s.min[k] <= s.median[k] && s.median[k] <= s.max[k])) {
      throw DataError("feature stats violate min <= median <= max");
    }
  }
  return s;
}

}  // namespace recourse
