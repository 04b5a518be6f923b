#pragma once

#include <filesystem>

#include "json.hpp"

#include "recourse/cf_search.hpp"
#include "recourse/metrics.hpp"
#include "recourse/mlp.hpp"
#include "recourse/schema.hpp"

namespace recourse {

// A trained model plus everything needed to query it in original units.
// On disk: {"model": <model document>, "manifest": <dataset manifest>,
// "stats": <FeatureStats>}. The manifest must carry "schema" and
// "standardization".
struct ModelBundle {
  MlpModel model;
  nlohmann::json model_doc;
  nlohmann::json manifest;
  FeatureSchema schema;
  Standardization standardization;
  FeatureStats stats;

  // The returned problem refers to `model`; keep the bundle alive.
  CfProblem problem() const { return CfProblem(model, schema, standardization, stats); }
  std::string content_hash() const;
};

ModelBundle make_bundle(const MlpModel& model, const nlohmann::json& training_metadata,
                        nlohmann::json manifest, FeatureStats stats);

nlohmann::json bundle_to_json(const ModelBundle& bundle);
// Verifies the model hash and that model, schema, standardization and
// stats agree in width. Throws IntegrityError or ShapeError/ConfigError.
ModelBundle bundle_from_json(const nlohmann::json& doc);

ModelBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);

}  // namespace recourse
