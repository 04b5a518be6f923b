#include "recourse/model_io.hpp"

#include "recourse/errors.hpp"
#include "recourse/hash.hpp"

namespace recourse {

using nlohmann::json;

std::string canonical_dump(const json& doc) { return doc.dump(); }

std::string model_content_hash(const json& doc) {
  json copy = doc;
  copy.erase("content_hash");
  return sha256_hex(canonical_dump(copy));
}

json model_to_json(const MlpModel& model, const json& training_metadata) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["layer_dims"] = model.layer_dims();
  doc["activation"] = to_string(model.hidden_activation());
  doc["output_head"] = to_string(model.output_head());
  json layers = json::array();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const auto w = model.weights(l);
    const auto b = model.bias(l);
    layers.push_back({{"weights", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  doc["layers"] = std::move(layers);
  doc["training"] = training_metadata;
  doc["content_hash"] = model_content_hash(doc);
  return doc;
}

MlpModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw ShapeError("model document must be a JSON object");
  if (!doc.contains("content_hash") ||
      doc.at("content_hash").get<std::string>() != model_content_hash(doc)) {
    throw IntegrityError("model content hash does not verify");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw ConfigError("unsupported model format_version " + std::to_string(version));
  }
  MlpModel model(doc.at("layer_dims").get<std::vector<std::size_t>>(),
                 activation_from_string(doc.at("activation").get<std::string>()),
                 output_head_from_string(doc.at("output_head").get<std::string>()));
  const json& layers = doc.at("layers");
  if (layers.size() != model.layer_count()) {
    throw ShapeError("model document has the wrong number of layers");
  }
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    auto dw = model.weights(l);
    auto db = model.bias(l);
    if (w.size() != dw.size() || b.size() != db.size()) {
      throw ShapeError("layer " + std::to_string(l) +
                       " parameter shape does not match layer_dims");
    }
    std::copy(w.begin(), w.end(), dw.begin());
    std::copy(b.begin(), b.end(), db.begin());
  }
  return model;
}

}  // namespace recourse
