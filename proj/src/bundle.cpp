#include "recourse/bundle.hpp"

#include <fstream>
#include <sstream>

#include "recourse/errors.hpp"
#include "recourse/model_io.hpp"

namespace recourse {

std::string ModelBundle::content_hash() const {
  return model_doc.at("content_hash").get<std::string>();
}

namespace {

void check_consistent(const ModelBundle& b) {
  const std::size_t n = b.schema.size();
  if (b.model.input_dim() != n) {
    throw ShapeError("model input width " + std::to_string(b.model.input_dim()) +
                     " does not match the schema (" + std::to_string(n) + " features)");
  }
  if (b.standardization.size() != n) {
    throw ShapeError("standardization width does not match the schema");
  }
  if (b.stats.size() != n) {
    throw ShapeError("feature stats width does not match the schema");
  }
  const bool probability = b.schema.target().kind == TargetKind::probability;
  const bool sigmoid = b.model.output_head() == OutputHead::sigmoid_probability;
  if (probability != sigmoid) {
    throw ConfigError("model output head does not match the schema target kind");
  }
}

}  // namespace

ModelBundle make_bundle(const MlpModel& model, const nlohmann::json& training_metadata,
                        nlohmann::json manifest, FeatureStats stats) {
  auto schema = schema_from_json(manifest.at("schema"));
  auto standardization = standardization_from_json(manifest.at("standardization"));
  ModelBundle b{model,
                model_to_json(model, training_metadata),
                std::move(manifest),
                std::move(schema),
                std::move(standardization),
                std::move(stats)};
  check_consistent(b);
  return b;
}

nlohmann::json bundle_to_json(const ModelBundle& bundle) {
  return {{"model", bundle.model_doc},
          {"manifest", bundle.manifest},
          {"stats", stats_to_json(bundle.stats)}};
}

ModelBundle bundle_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("model") || !doc.contains("manifest")) {
    throw ConfigError("model bundle needs 'model' and 'manifest' objects");
  }
  const auto& manifest = doc.at("manifest");
  if (!manifest.contains("schema") || !manifest.contains("standardization")) {
    throw ConfigError("bundle manifest needs 'schema' and 'standardization'");
  }
  const nlohmann::json* stats = nullptr;
  if (doc.contains("stats")) {
    stats = &doc.at("stats");
  } else if (manifest.contains("stats")) {
    stats = &manifest.at("stats");
  } else {
    throw ConfigError("model bundle carries no feature stats");
  }
  try {
    ModelBundle b{model_from_json(doc.at("model")),
                  doc.at("model"),
                  manifest,
                  schema_from_json(manifest.at("schema")),
                  standardization_from_json(manifest.at("standardization")),
                  stats_from_json(*stats)};
    check_consistent(b);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model bundle: ") + e.what());
  }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return bundle_from_json(doc);
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write model file " + path.string());
  out << bundle_to_json(bundle).dump(2) << '\n';
}

}  // namespace recourse
