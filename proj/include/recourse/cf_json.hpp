#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "recourse/bundle.hpp"
#include "recourse/cf_search.hpp"
#include "recourse/explain.hpp"

namespace recourse {

// A counterfactual request in wire form, resolved against a bundle.
//
//   {"x": [..] | {"GPA": 3.1, "race": "white", ...},
//    "target": 0.0,
//    "metric": "l1mad" | "l2norm" | "l2",
//    "locked": ["race"], "n_restarts": 4, "n_diverse": 1,
//    "tolerance": 0.01, "cap_to_training_range": false,
//    "clamp_categoricals": false, "seed": 0,
//    "outcome_phrase": "a score of {score}", "quotes": "ascii"}
//
// Only "x" and "target" are required.
struct CfRequest {
  CfQuery query;
  std::string outcome_template;
  RenderOptions render;
};

CfRequest request_from_json(const nlohmann::json& body, const ModelBundle& bundle);
nlohmann::json request_to_json(const CfRequest& request, const FeatureSchema& schema);

// Feature vector from an array or a name -> value object (categorical values
// may be given by label). Throws ConfigError/ShapeError on a mismatch.
std::vector<double> point_from_json(const nlohmann::json& x, const FeatureSchema& schema);

// Default phrase: "a score of {score}" for probability targets, otherwise
// "an average predicted score (0)" for target 0 and "a predicted score of
// {target}" elsewhere.
std::string default_outcome_template(const FeatureSchema& schema, double target);
// Substitutes {score} (achieved, two decimals) and {target}.
std::string outcome_phrase(const std::string& templ, double achieved, double target);

nlohmann::json counterfactual_to_json(const Counterfactual& cf);
nlohmann::json diagnostics_to_json(const RunDiagnostics& d);
nlohmann::json run_to_json(const SearchRun& run);

// Runs solve_diverse and renders the set. Non-convergence yields
// {"status": "not_converged", ...} with the best-effort run when available.
nlohmann::json answer_request(const CfRequest& request, const ModelBundle& bundle);

}  // namespace recourse
