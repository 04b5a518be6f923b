#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace recourse {

enum class FeatureKind { continuous, categorical };
enum class TargetKind { score, probability };

struct Category {
  int code = 0;
  std::string label;
};

struct FeatureSpec {
  std::string name;                  // CSV column name
  std::string label;                 // human-readable, used in rendered text
  FeatureKind kind = FeatureKind::continuous;
  std::vector<Category> categories;  // categorical only; codes 0..n-1
  bool protected_attribute = false;
  std::string unit;

  bool is_categorical() const { return kind == FeatureKind::categorical; }
  const std::string& display_label() const { return label.empty() ? name : label; }
  bool valid_code(double value) const;
  // Label for a category code; throws NotFoundError for unknown codes.
  const std::string& category_label(int code) const;
};

struct TargetSpec {
  std::string name;
  TargetKind kind = TargetKind::score;
};

// Ordered feature set plus target description.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws ConfigError on duplicate names, non-contiguous category codes or an
  // empty feature list.
  FeatureSchema(std::vector<FeatureSpec> features, TargetSpec target);

  std::size_t size() const { return features_.size(); }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const FeatureSpec& feature(std::size_t k) const { return features_.at(k); }
  const TargetSpec& target() const { return target_; }

  std::optional<std::size_t> index_of(const std::string& name) const;
  // Throws NotFoundError naming the feature.
  std::size_t require_index(const std::string& name) const;

 private:
  std::vector<FeatureSpec> features_;
  TargetSpec target_;
};

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);
FeatureSchema load_schema_file(const std::string& path);

// Per-feature affine map between original units and the model's input space.
// Continuous features are z-scored; categorical features pass through as
// codes. Score targets are z-scored as well (0 = average score); probability
// targets are left alone.
class Standardization {
 public:
  Standardization() = default;
  Standardization(std::vector<double> mean, std::vector<double> scale,
                  double target_mean = 0.0, double target_scale = 1.0);

  // Identity transform of the given width.
  static Standardization identity(std::size_t n);
  // Fits on original-unit rows and labels.
  static Standardization fit(const FeatureSchema& schema,
                             std::span<const std::vector<double>> rows,
                             std::span<const double> labels);

  bool fitted() const { return !mean_.empty(); }
  std::size_t size() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }

  std::vector<double> standardize(std::span<const double> x) const;
  std::vector<double> destandardize(std::span<const double> z) const;
  double standardize_target(double y) const;
  double destandardize_target(double t) const;

 private:
  void require_fitted(std::size_t n) const;

  std::vector<double> mean_;
  std::vector<double> scale_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

nlohmann::json standardization_to_json(const Standardization& s);
Standardization standardization_from_json(const nlohmann::json& doc);

}  // namespace recourse
