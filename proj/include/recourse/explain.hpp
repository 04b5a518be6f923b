#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "recourse/cf_search.hpp"
#include "recourse/schema.hpp"

namespace recourse {

enum class QuoteStyle { ascii, typographic };

struct RenderOptions {
  int decimals = 1;
  QuoteStyle quotes = QuoteStyle::ascii;  // typographic uses U+2018/U+2019
  std::string subject_id;
  std::string metric;  // copied into the record
};

struct ExplanationDelta {
  std::string feature;
  std::string label;
  double old_value = 0.0;
  double new_value = 0.0;
  std::string unit;
  std::string rendered;  // the value text as it appears in the statement
  bool categorical = false;
};

struct Explanation {
  std::string subject_id;
  std::size_t index = 0;  // 1-based position within a rendered set
  std::string statement;
  std::vector<ExplanationDelta> deltas;
  std::string outcome_phrase;
  double distance_value = 0.0;
  std::string metric;
};

// "If your LSAT was 34.0, you would have <outcome>."
//
// Continuous changes read "your {label} was {value}", categorical ones
// "you were '{category}'". Clauses are separated by ", " except the last,
// which is joined with " and ", or ", and " when it is a categorical clause.
// A categorical value that is not a valid code (an unclamped relaxed run) is
// rendered like a continuous one.
// An empty change list yields the no-change sentence.
Explanation render(const Counterfactual& cf, const FeatureSchema& schema,
                   const std::string& outcome_phrase, const RenderOptions& options = {});

// One explanation per counterfactual, closest first (stable for ties),
// numbered from 1.
std::vector<Explanation> render_set(const std::vector<Counterfactual>& cfs,
                                    const FeatureSchema& schema,
                                    const std::string& outcome_phrase,
                                    const RenderOptions& options = {});

// Fixed-point text with `decimals` places; never prints "-0.0".
std::string format_value(double value, int decimals);

nlohmann::json explanation_to_json(const Explanation& e);

}  // namespace recourse
