#include "recourse/cf_json.hpp"

#include <cmath>
#include <cstdio>

#include "recourse/errors.hpp"

namespace recourse {

namespace {

double cell_value(const nlohmann::json& v, const FeatureSpec& f) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && f.is_categorical()) {
    for (const auto& c : f.categories) {
      if (c.label == v.get<std::string>()) return static_cast<double>(c.code);
    }
    throw ConfigError("'" + v.get<std::string>() + "' is not a category of '" + f.name + "'");
  }
  throw ConfigError("value for '" + f.name + "' must be a number");
}

template <typename T>
T get_or(const nlohmann::json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::vector<double> point_from_json(const nlohmann::json& x, const FeatureSchema& schema) {
  std::vector<double> out(schema.size());
  if (x.is_array()) {
    if (x.size() != schema.size()) {
      throw ShapeError("point has " + std::to_string(x.size()) + " values, schema has " +
                       std::to_string(schema.size()) + " features");
    }
    for (std::size_t k = 0; k < schema.size(); ++k) out[k] = cell_value(x[k], schema.feature(k));
    return out;
  }
  if (!x.is_object()) throw ConfigError("'x' must be an array or an object");
  for (const auto& [name, value] : x.items()) {
    if (!schema.index_of(name)) throw ConfigError("unknown feature '" + name + "'");
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto& f = schema.feature(k);
    if (!x.contains(f.name)) throw ConfigError("missing value for feature '" + f.name + "'");
    out[k] = cell_value(x.at(f.name), f);
  }
  return out;
}

std::string default_outcome_template(const FeatureSchema& schema, double target) {
  if (schema.target().kind == TargetKind::probability) return "a score of {score}";
  if (target == 0.0) return "an average predicted score (0)";
  return "a predicted score of {target}";
}

std::string outcome_phrase(const std::string& templ, double achieved, double target) {
  std::string s = templ;
  replace_all(s, "{score}", format_value(achieved, 2));
  replace_all(s, "{target}", compact(target));
  return s;
}

CfRequest request_from_json(const nlohmann::json& body, const ModelBundle& bundle) {
  if (!body.is_object()) throw ConfigError("request body must be a JSON object");
  if (!body.contains("x")) throw ConfigError("request needs 'x'");
  if (!body.contains("target") || !body.at("target").is_number()) {
    throw ConfigError("request needs a numeric 'target'");
  }
  CfRequest r;
  CfQuery& q = r.query;
  q.x_original = point_from_json(body.at("x"), bundle.schema);
  q.target_score = body.at("target").get<double>();
  const auto metric = get_or<std::string>(body, "metric", "l1mad");
  const auto kind = distance_kind_from_string(metric);
  q.distance = kind == DistanceKind::unnormalized_sq_euclidean ? DistanceSpec(kind)
                                                               : DistanceSpec(kind, bundle.stats);
  for (const auto& name : get_or<std::vector<std::string>>(body, "locked", {})) {
    q.locked_features.insert(name);
  }
  const auto n_restarts = get_or<long long>(body, "n_restarts", 4);
  const auto n_diverse = get_or<long long>(body, "n_diverse", 1);
  if (n_restarts <= 0 || n_diverse <= 0) {
    throw ConfigError("n_restarts and n_diverse must be positive");
  }
  q.n_restarts = static_cast<std::size_t>(n_restarts);
  q.n_diverse = static_cast<std::size_t>(n_diverse);
  q.tolerance_eps = get_or<double>(body, "tolerance", q.tolerance_eps);
  q.cap_to_training_range = get_or<bool>(body, "cap_to_training_range", false);
  q.clamp_categoricals = get_or<bool>(body, "clamp_categoricals", false);
  q.seed = get_or<std::uint64_t>(body, "seed", 0);

  r.outcome_template = get_or<std::string>(
      body, "outcome_phrase", default_outcome_template(bundle.schema, q.target_score));
  const auto quotes = get_or<std::string>(body, "quotes", "ascii");
  if (quotes == "ascii") {
    r.render.quotes = QuoteStyle::ascii;
  } else if (quotes == "typographic") {
    r.render.quotes = QuoteStyle::typographic;
  } else {
    throw ConfigError("quotes must be 'ascii' or 'typographic'");
  }
  r.render.subject_id = get_or<std::string>(body, "subject_id", "");
  r.render.metric = std::string(to_string(kind));
  return r;
}

nlohmann::json request_to_json(const CfRequest& request, const FeatureSchema& schema) {
  const CfQuery& q = request.query;
  nlohmann::json x = nlohmann::json::object();
  for (std::size_t k = 0; k < schema.size(); ++k) x[schema.feature(k).name] = q.x_original[k];
  return {{"x", std::move(x)},
          {"target", q.target_score},
          {"metric", to_string(q.distance.kind())},
          {"locked", q.locked_features},
          {"n_restarts", q.n_restarts},
          {"n_diverse", q.n_diverse},
          {"tolerance", q.tolerance_eps},
          {"cap_to_training_range", q.cap_to_training_range},
          {"clamp_categoricals", q.clamp_categoricals},
          {"seed", q.seed},
          {"outcome_phrase", request.outcome_template},
          {"quotes", request.render.quotes == QuoteStyle::ascii ? "ascii" : "typographic"},
          {"subject_id", request.render.subject_id}};
}

nlohmann::json counterfactual_to_json(const Counterfactual& cf) {
  nlohmann::json changed = nlohmann::json::array();
  for (const auto& c : cf.changed) {
    changed.push_back({{"feature", c.feature}, {"old", c.old_value}, {"new", c.new_value}});
  }
  return {{"x_prime", cf.x_prime},
          {"achieved_score", cf.achieved_score},
          {"distance", cf.distance_value},
          {"changed", std::move(changed)},
          {"restart_seed", cf.restart_seed},
          {"clamp_assignment", cf.clamp_assignment},
          {"rounds", cf.rounds},
          {"final_lambda", cf.final_lambda}};
}

nlohmann::json diagnostics_to_json(const RunDiagnostics& d) {
  return {{"converged", d.converged},
          {"rounds", d.rounds},
          {"lambda_trace", d.lambda_trace},
          {"gap_trace", d.gap_trace}};
}

nlohmann::json run_to_json(const SearchRun& run) {
  return {{"point", counterfactual_to_json(run.point)},
          {"diagnostics", diagnostics_to_json(run.diagnostics)}};
}

nlohmann::json answer_request(const CfRequest& request, const ModelBundle& bundle) {
  const CfProblem problem = bundle.problem();
  nlohmann::json out{{"query", request_to_json(request, bundle.schema)}};
  std::vector<Counterfactual> cfs;
  try {
    cfs = solve_diverse(problem, request.query);
  } catch (const NotConverged& e) {
    out["status"] = "not_converged";
    out["message"] = e.what();
    out["best_effort"] =
        e.best_effort() ? run_to_json(*e.best_effort()) : nlohmann::json(nullptr);
    out["counterfactuals"] = nlohmann::json::array();
    out["explanations"] = nlohmann::json::array();
    return out;
  }
  nlohmann::json points = nlohmann::json::array();
  nlohmann::json explanations = nlohmann::json::array();
  for (const auto& cf : cfs) {
    points.push_back(counterfactual_to_json(cf));
    auto e = render(cf, bundle.schema,
                    outcome_phrase(request.outcome_template, cf.achieved_score,
                                   request.query.target_score),
                    request.render);
    e.index = explanations.size() + 1;
    explanations.push_back(explanation_to_json(e));
  }
  const auto dep = dependence_flags(cfs, bundle.schema);
  out["status"] = "ok";
  out["counterfactuals"] = std::move(points);
  out["explanations"] = std::move(explanations);
  out["dependence"] = {{"flags", dep.flags}, {"caveat", dep.caveat}};
  return out;
}

}  // namespace recourse
