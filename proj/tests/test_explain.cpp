#include <random>
#include <regex>
#include <string>
#include <vector>

#include "doctest.h"
#include "recourse/cf_json.hpp"
#include "recourse/cf_search.hpp"
#include "recourse/datasets.hpp"
#include "recourse/errors.hpp"
#include "recourse/explain.hpp"

using namespace recourse;

namespace {

Counterfactual cf_of(std::vector<FeatureChange> changes, double distance = 0.0) {
  Counterfactual cf;
  cf.changed = std::move(changes);
  cf.distance_value = distance;
  return cf;
}

const std::string kAverage = "an average predicted score (0)";

}  // namespace

TEST_CASE("one continuous change") {
  const auto e = render(cf_of({{"LSAT", 1, 30.0, 34.0}}), lsat_schema(), kAverage);
  CHECK(e.statement == "If your LSAT was 34.0, you would have an average predicted score (0).");
  REQUIRE(e.deltas.size() == 1);
  CHECK(e.deltas[0].rendered == "34.0");
  CHECK_FALSE(e.deltas[0].categorical);
}

TEST_CASE("continuous then categorical change") {
  const auto cf = cf_of({{"LSAT", 1, 30.0, 33.5}, {"race", 2, 1.0, 0.0}});
  CHECK(render(cf, lsat_schema(), kAverage).statement ==
        "If your LSAT was 33.5, and you were 'white', you would have an average predicted "
        "score (0).");
  CHECK(render(cf, lsat_schema(), kAverage, {.quotes = QuoteStyle::typographic}).statement ==
        "If your LSAT was 33.5, and you were \xE2\x80\x98white\xE2\x80\x99, you would have an "
        "average predicted score (0).");
}

TEST_CASE("two continuous changes") {
  const auto cf = cf_of({{"Glucose", 1, 120.0, 158.3}, {"Insulin", 4, 100.0, 160.5}});
  CHECK(render(cf, pima_schema(), "a score of 0.51").statement ==
        "If your Plasma glucose concentration was 158.3 and your 2-Hour serum insulin level "
        "was 160.5, you would have a score of 0.51.");
}

TEST_CASE("three clauses use commas before the last join") {
  const auto cf = cf_of({{"Glucose", 1, 120.0, 150.0},
                         {"BMI", 5, 30.0, 28.25},
                         {"Age", 7, 40.0, 39.0}});
  CHECK(render(cf, pima_schema(), "a score of 0.40").statement ==
        "If your Plasma glucose concentration was 150.0, your Body mass index was 28.2 and "
        "your Age was 39.0, you would have a score of 0.40.");
}

TEST_CASE("no change") {
  CHECK(render(cf_of({}), lsat_schema(), kAverage).statement ==
        "No change needed: the current data already yields an average predicted score (0).");
}

TEST_CASE("fractional categorical values read as numbers") {
  const auto e = render(cf_of({{"race", 2, 1.0, 0.6}}), lsat_schema(), kAverage);
  CHECK(e.statement == "If your race was 0.6, you would have an average predicted score (0).");
  CHECK_FALSE(e.deltas[0].categorical);
}

TEST_CASE("unknown feature in a change list") {
  CHECK_THROWS_AS(render(cf_of({{"SAT", 0, 1.0, 2.0}}), lsat_schema(), kAverage),
                  NotFoundError);
}

TEST_CASE("format_value never prints negative zero") {
  CHECK(format_value(-0.0, 1) == "0.0");
  CHECK(format_value(-0.04, 1) == "0.0");
  CHECK(format_value(-0.05001, 1) == "-0.1");
  CHECK(format_value(-0.0001, 3) == "0.000");
  CHECK(format_value(12.345, 2) == "12.35");
  CHECK(format_value(-7.0, 0) == "-7");
}

TEST_CASE("render_set orders by distance and numbers from 1") {
  const auto near = cf_of({{"LSAT", 1, 30.0, 32.0}}, 2.0);
  const auto far = cf_of({{"LSAT", 1, 30.0, 38.0}}, 8.0);
  const auto set = render_set({far, near}, lsat_schema(), kAverage, {.subject_id = "p1"});
  REQUIRE(set.size() == 2);
  CHECK(set[0].index == 1);
  CHECK(set[1].index == 2);
  CHECK(set[0].distance_value == 2.0);
  CHECK(set[0].subject_id == "p1");
  CHECK(render_set({}, lsat_schema(), kAverage).empty());

  const auto dup = render_set({near, near}, lsat_schema(), kAverage);
  REQUIRE(dup.size() == 2);
  CHECK(dup[0].statement == dup[1].statement);

  // Ties keep input order.
  const auto a = cf_of({{"LSAT", 1, 30.0, 31.0}}, 1.0);
  const auto b = cf_of({{"GPA", 0, 3.0, 3.5}}, 1.0);
  const auto tie = render_set({a, b}, lsat_schema(), kAverage);
  CHECK(tie[0].statement.find("LSAT") != std::string::npos);
}

TEST_CASE("rendered numbers round trip at the rendered precision") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  const auto schema = pima_schema();
  const std::regex number(R"(was (-?[0-9]+\.[0-9]+))");
  for (int c = 0; c < 500; ++c) {
    std::vector<FeatureChange> changes;
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (rng() % 3 == 0) changes.push_back({schema.feature(k).name, k, 0.0, u(rng)});
    }
    const auto e = render(cf_of(changes), schema, "x");
    std::vector<double> parsed;
    for (auto it = std::sregex_iterator(e.statement.begin(), e.statement.end(), number);
         it != std::sregex_iterator(); ++it) {
      parsed.push_back(std::stod((*it)[1]));
    }
    REQUIRE(parsed.size() == changes.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      CHECK(std::abs(parsed[i] - changes[i].new_value) <= 0.05 + 1e-9);
      CHECK(e.statement.find("-0.0,") == std::string::npos);
    }
    // Pure function of the inputs.
    CHECK(render(cf_of(changes), schema, "x").statement == e.statement);
  }
}

TEST_CASE("features below the change threshold are not mentioned") {
  const FunctionModel f(
      3, [](std::span<const double> x) { return x[1]; },
      [](std::span<const double>) { return std::vector<double>{0.0, 1.0, 0.0}; });
  const auto schema = lsat_schema();
  const CfProblem p(f, schema, Standardization::identity(3));
  CfQuery q;
  q.x_original = {3.0, 30.0, 1};
  q.target_score = 34.0;
  q.n_restarts = 4;
  q.n_diverse = 1;
  const auto set = solve_diverse(p, q);
  REQUIRE(set.size() == 1);
  const auto e = render(set[0], schema, kAverage);
  CHECK(e.statement.find("GPA") == std::string::npos);
  CHECK(e.statement.find("race") == std::string::npos);
  CHECK(e.statement.find("LSAT") != std::string::npos);
}

TEST_CASE("outcome phrases") {
  CHECK(default_outcome_template(lsat_schema(), 0.0) == kAverage);
  CHECK(default_outcome_template(lsat_schema(), 0.5) == "a predicted score of {target}");
  CHECK(default_outcome_template(pima_schema(), 0.5) == "a score of {score}");
  CHECK(outcome_phrase("a score of {score}", 0.5149, 0.5) == "a score of 0.51");
  CHECK(outcome_phrase("a predicted score of {target}", 0.0, 0.25) ==
        "a predicted score of 0.25");
  CHECK(outcome_phrase(kAverage, 0.003, 0.0) == kAverage);
}

TEST_CASE("explanation json") {
  auto e = render(cf_of({{"race", 2, 1.0, 0.0}}, 1.0), lsat_schema(), kAverage,
                  {.subject_id = "s", .metric = "l1mad"});
  const auto j = explanation_to_json(e);
  CHECK(j.at("statement") == e.statement);
  CHECK(j.at("metric") == "l1mad");
  CHECK(j.at("deltas")[0].at("rendered") == "white");
  CHECK(j.at("deltas")[0].at("categorical") == true);
  CHECK(j.at("distance") == 1.0);
}
