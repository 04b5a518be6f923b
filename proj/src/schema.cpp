#include "recourse/schema.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "recourse/errors.hpp"

namespace recourse {

using nlohmann::json;

bool FeatureSpec::valid_code(double value) const {
  if (!is_categorical()) return false;
  const double r = std::round(value);
  return r == value && r >= 0.0 && r < static_cast<double>(categories.size());
}

const std::string& FeatureSpec::category_label(int code) const {
  for (const auto& c : categories) {
    if (c.code == code) return c.label;
  }
  throw NotFoundError("feature '" + name + "' has no category code " +
                      std::to_string(code));
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, TargetSpec target)
    : features_(std::move(features)), target_(std::move(target)) {
  if (features_.empty()) throw ConfigError("schema needs at least one feature");
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ConfigError("schema feature with an empty name");
    if (!seen.insert(f.name).second) {
      throw ConfigError("duplicate feature name '" + f.name + "'");
    }
    if (f.is_categorical()) {
      if (f.categories.empty()) {
        throw ConfigError("categorical feature '" + f.name + "' has no categories");
      }
      for (std::size_t i = 0; i < f.categories.size(); ++i) {
        if (f.categories[i].code != static_cast<int>(i)) {
          throw ConfigError("categorical feature '" + f.name +
                            "' must use contiguous codes starting at 0");
        }
      }
    } else if (!f.categories.empty()) {
      throw ConfigError("continuous feature '" + f.name + "' lists categories");
    }
  }
  if (seen.count(target_.name)) {
    throw ConfigError("target '" + target_.name + "' is also a feature");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (features_[k].name == name) return k;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::require_index(const std::string& name) const {
  if (auto k = index_of(name)) return *k;
  throw NotFoundError("unknown feature '" + name + "'");
}

json schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.features()) {
    json jf{{"name", f.name},
            {"label", f.label},
            {"kind", f.is_categorical() ? "categorical" : "continuous"},
            {"protected", f.protected_attribute},
            {"unit", f.unit}};
    if (f.is_categorical()) {
      json cats = json::array();
      for (const auto& c : f.categories) cats.push_back({{"code", c.code}, {"label", c.label}});
      jf["categories"] = std::move(cats);
    }
    features.push_back(std::move(jf));
  }
  return {{"features", std::move(features)},
          {"target",
           {{"name", schema.target().name},
            {"kind", schema.target().kind == TargetKind::score ? "score" : "probability"}}}};
}

FeatureSchema schema_from_json(const json& doc) {
  try {
    std::vector<FeatureSpec> features;
    for (const auto& jf : doc.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      f.label = jf.value("label", std::string{});
      const std::string kind = jf.value("kind", std::string{"continuous"});
      if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
      } else if (kind != "continuous") {
        throw ConfigError("feature '" + f.name + "' has unknown kind '" + kind + "'");
      }
      f.protected_attribute = jf.value("protected", false);
      f.unit = jf.value("unit", std::string{});
      if (jf.contains("categories")) {
        for (const auto& jc : jf.at("categories")) {
          f.categories.push_back({jc.at("code").get<int>(), jc.at("label").get<std::string>()});
        }
      }
      features.push_back(std::move(f));
    }
    TargetSpec target;
    target.name = doc.at("target").at("name").get<std::string>();
    const std::string tk = doc.at("target").value("kind", std::string{"score"});
    if (tk == "probability") {
      target.kind = TargetKind::probability;
    } else if (tk != "score") {
      throw ConfigError("unknown target kind '" + tk + "'");
    }
    return FeatureSchema(std::move(features), std::move(target));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
}

FeatureSchema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("schema file " + path + " is not valid JSON: " + e.what());
  }
  return schema_from_json(doc);
}

Standardization::Standardization(std::vector<double> mean, std::vector<double> scale,
                                 double target_mean, double target_scale)
    : mean_(std::move(mean)),
      scale_(std::move(scale)),
      target_mean_(target_mean),
      target_scale_(target_scale) {
  if (mean_.size() != scale_.size()) throw ShapeError("standardization size mismatch");
  for (double s : scale_) {
    if (!(s > 0.0)) throw ConfigError("standardization scales must be positive");
  }
  if (!(target_scale_ > 0.0)) throw ConfigError("target scale must be positive");
}

Standardization Standardization::identity(std::size_t n) {
  return Standardization(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

Standardization Standardization::fit(const FeatureSchema& schema,
                                     std::span<const std::vector<double>> rows,
                                     std::span<const double> labels) {
  if (rows.empty()) throw DataError("cannot fit standardization on zero rows");
  const std::size_t d = schema.size();
  const double n = static_cast<double>(rows.size());
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (std::size_t k = 0; k < d; ++k) {
    if (schema.feature(k).is_categorical()) continue;
    double sum = 0.0;
    for (const auto& r : rows) sum += r[k];
    const double m = sum / n;
    double sq = 0.0;
    for (const auto& r : rows) sq += (r[k] - m) * (r[k] - m);
    const double sd = std::sqrt(sq / n);
    mean[k] = m;
    scale[k] = sd > 0.0 ? sd : 1.0;
  }
  double tm = 0.0, ts = 1.0;
  if (schema.target().kind == TargetKind::score && !labels.empty()) {
    double sum = 0.0;
    for (double y : labels) sum += y;
    tm = sum / static_cast<double>(labels.size());
    double sq = 0.0;
    for (double y : labels) sq += (y - tm) * (y - tm);
    const double sd = std::sqrt(sq / static_cast<double>(labels.size()));
    ts = sd > 0.0 ? sd : 1.0;
  }
  return Standardization(std::move(mean), std::move(scale), tm, ts);
}

void Standardization::require_fitted(std::size_t n) const {
  if (!fitted()) throw ConfigError("standardization has not been fitted");
  if (n != mean_.size()) throw ShapeError("standardization: vector length mismatch");
}

std::vector<double> Standardization::standardize(std::span<const double> x) const {
  require_fitted(x.size());
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - mean_[k]) / scale_[k];
  return z;
}

std::vector<double> Standardization::destandardize(std::span<const double> z) const {
  require_fitted(z.size());
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) x[k] = mean_[k] + scale_[k] * z[k];
  return x;
}

double Standardization::standardize_target(double y) const {
  return (y - target_mean_) / target_scale_;
}

double Standardization::destandardize_target(double t) const {
  return target_mean_ + target_scale_ * t;
}

json standardization_to_json(const Standardization& s) {
  return {{"mean", s.mean()},
          {"scale", s.scale()},
          {"target_mean", s.target_mean()},
          {"target_scale", s.target_scale()}};
}

Standardization standardization_from_json(const json& doc) {
  return Standardization(doc.at("mean").get<std::vector<double>>(),
                         doc.at("scale").get<std::vector<double>>(),
                         doc.value("target_mean", 0.0), doc.value("target_scale", 1.0));
}

}  // namespace recourse
