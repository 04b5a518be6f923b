#include "recourse/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "recourse/errors.hpp"

namespace recourse {

std::string format_value(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

namespace {

std::string quoted(const std::string& text, QuoteStyle style) {
  return style == QuoteStyle::ascii ? "'" + text + "'"
                                    : "\xE2\x80\x98" + text + "\xE2\x80\x99";
}

}  // namespace

Explanation render(const Counterfactual& cf, const FeatureSchema& schema,
                   const std::string& outcome_phrase, const RenderOptions& options) {
  Explanation e;
  e.subject_id = options.subject_id;
  e.outcome_phrase = outcome_phrase;
  e.distance_value = cf.distance_value;
  e.metric = options.metric;

  std::vector<std::string> clauses;
  for (const auto& change : cf.changed) {
    const auto index = schema.index_of(change.feature);
    if (!index) throw NotFoundError("explanation refers to unknown feature '" +
                                    change.feature + "'");
    const auto& f = schema.feature(*index);
    // A relaxed categorical coordinate that is not a code reads as a number.
    const bool labelled = f.is_categorical() && f.valid_code(change.new_value);
    ExplanationDelta d{f.name, f.display_label(), change.old_value, change.new_value,
                       f.unit, {}, labelled};
    if (labelled) {
      d.rendered = f.category_label(static_cast<int>(std::lround(change.new_value)));
      clauses.push_back("you were " + quoted(d.rendered, options.quotes));
    } else {
      d.rendered = format_value(change.new_value, options.decimals);
      clauses.push_back("your " + d.label + " was " + d.rendered);
    }
    e.deltas.push_back(std::move(d));
  }

  if (clauses.empty()) {
    e.statement = "No change needed: the current data already yields " + outcome_phrase + ".";
    return e;
  }
  std::string text = "If " + clauses.front();
  for (std::size_t i = 1; i < clauses.size(); ++i) {
    if (i + 1 < clauses.size()) {
      text += ", ";
    } else {
      text += e.deltas[i].categorical ? ", and " : " and ";
    }
    text += clauses[i];
  }
  e.statement = text + ", you would have " + outcome_phrase + ".";
  return e;
}

std::vector<Explanation> render_set(const std::vector<Counterfactual>& cfs,
                                    const FeatureSchema& schema,
                                    const std::string& outcome_phrase,
                                    const RenderOptions& options) {
  std::vector<std::size_t> order(cfs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cfs[a].distance_value < cfs[b].distance_value;
  });
  std::vector<Explanation> out;
  for (std::size_t i : order) {
    out.push_back(render(cfs[i], schema, outcome_phrase, options));
    out.back().index = out.size();
  }
  return out;
}

nlohmann::json explanation_to_json(const Explanation& e) {
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& d : e.deltas) {
    deltas.push_back({{"feature", d.feature},
                      {"label", d.label},
                      {"old", d.old_value},
                      {"new", d.new_value},
                      {"unit", d.unit},
                      {"rendered", d.rendered},
                      {"categorical", d.categorical}});
  }
  return {{"subject_id", e.subject_id},     {"index", e.index},
          {"statement", e.statement},       {"deltas", std::move(deltas)},
          {"outcome_phrase", e.outcome_phrase}, {"distance", e.distance_value},
          {"metric", e.metric}};
}

}  // namespace recourse
