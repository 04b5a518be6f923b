#pragma once

#include <string>

#include "json.hpp"

#include "recourse/mlp.hpp"

namespace recourse {

inline constexpr int kModelFormatVersion = 1;

// Canonical text of a JSON document: sorted keys, no whitespace. Hashes are
// always taken over this form.
std::string canonical_dump(const nlohmann::json& doc);

// Versioned model document:
//   {format_version, layer_dims, activation, output_head,
//    layers: [{weights: [...row-major...], bias: [...]}, ...],
//    training: <metadata>, content_hash}
// content_hash is the SHA-256 of the canonical document without that field.
nlohmann::json model_to_json(const MlpModel& model,
                             const nlohmann::json& training_metadata = nlohmann::json::object());

// Parses and checks a model document. Throws IntegrityError when the hash
// does not verify and ShapeError/ConfigError on malformed content.
MlpModel model_from_json(const nlohmann::json& doc);

// Recomputes the hash a document should carry.
std::string model_content_hash(const nlohmann::json& doc);

}  // namespace recourse
