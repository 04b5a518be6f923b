#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "recourse/errors.hpp"
#include "recourse/local_approx.hpp"
#include "support.hpp"

using namespace recourse;

namespace {

double square(double x) { return x * x; }
double twice(double x) { return 2.0 * x; }

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("fit of x^2 in a narrow window recovers the derivative") {
  const auto fit = fit_local_linear(square, 1.0, 0.01);
  CHECK(std::abs(fit.slope - 2.0) < 1e-3);
  CHECK(fit.n_samples == 101);
  CHECK(fit.lo == doctest::Approx(0.99));
  CHECK(fit.hi == doctest::Approx(1.01));
  CHECK(fit.half_width() == doctest::Approx(0.01));
}

TEST_CASE("constant and affine functions") {
  const auto c = fit_local_linear([](double) { return 4.5; }, -3.0, 2.0);
  CHECK(std::abs(c.slope) < 1e-12);
  CHECK(c.intercept == doctest::Approx(4.5));
  CHECK(c.fit_rmse < 1e-12);

  const ScalarFn affine = [](double x) { return 3.0 * x + 1.0; };
  for (double w : {0.001, 0.5, 10.0, 1000.0}) {
    const auto f = fit_local_linear(affine, 2.0, w);
    CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.fit_rmse < 1e-6 * std::max(1.0, w));
  }
  for (const auto& f : scale_sweep(affine, 0.0, kDemoHalfWidths)) {
    CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-9));
  }
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(fit_local_linear(square, 0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(fit_local_linear(square, 0.0, -1.0), ConfigError);
  CHECK_THROWS_AS(fit_local_linear(square, 0.0, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(fit_local_linear([](double x) { return 1.0 / x; }, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(scale_sweep(square, 0.0, {1.0}), ConfigError);
}

TEST_CASE("demo function slopes change sign with the window") {
  const auto sweep = scale_sweep(demo_function, kDemoCenter, {0.3, 3.0});
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].slope * sweep[1].slope < 0.0);

  const auto same = scale_sweep(demo_function, kDemoCenter, {0.3, 0.3});
  CHECK(same[0].slope == same[1].slope);
  CHECK(same[0].intercept == same[1].intercept);

  // Narrowest default window tracks the analytic derivative.
  const auto narrow = fit_local_linear(demo_function, kDemoCenter, 0.01);
  CHECK(narrow.slope == doctest::Approx(demo_derivative(kDemoCenter)).epsilon(1e-3));
}

TEST_CASE("demo derivative matches central differences") {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const double h = 1e-5;
    const double fd = (demo_function(x + h) - demo_function(x - h)) / (2 * h);
    CHECK(demo_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fit error grows with the window on the demo function") {
  const auto sweep = scale_sweep(demo_function, kDemoCenter, kDemoHalfWidths);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(sweep[i].fit_rmse >= sweep[i - 1].fit_rmse);
  }
}

TEST_CASE("a tangent line misleads on x^2 where the search does not") {
  const auto fit = fit_local_linear(square, 2.0, 1e-3);
  CHECK(fit.slope == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(fit.intercept == doctest::Approx(-4.0).epsilon(1e-5));
  const auto c = surrogate_prediction_vs_counterfactual(square, twice, fit, 16.0);
  REQUIRE(c.surrogate_reachable);
  CHECK(c.x_lin == doctest::Approx(5.0).epsilon(1e-5));
  CHECK(c.surrogate_true_score == doctest::Approx(25.0).epsilon(1e-4));
  REQUIRE(c.cf_converged);
  CHECK(c.x_cf == doctest::Approx(4.0).epsilon(1e-2));
  CHECK(std::abs(c.cf_true_score - 16.0) <= 0.01);
}

TEST_CASE("both branches agree on a linear function") {
  const ScalarFn f = [](double x) { return 3.0 * x + 1.0; };
  const ScalarFn df = [](double) { return 3.0; };
  const auto fit = fit_local_linear(f, 0.0, 1.0);
  const auto c = surrogate_prediction_vs_counterfactual(f, df, fit, 7.0);
  REQUIRE(c.cf_converged);
  CHECK(c.x_lin == doctest::Approx(2.0));
  CHECK(std::abs(c.surrogate_true_score - 7.0) <= 0.01);
  CHECK(std::abs(c.x_cf - c.x_lin) <= 0.01 / 3.0 + 1e-9);
}

TEST_CASE("flat surrogate is unreachable while the search still answers") {
  // cos is flat around 0 to first order; a symmetric window gives slope 0.
  const ScalarFn f = [](double x) { return 10.0 * std::cos(x); };
  const ScalarFn df = [](double x) { return -10.0 * std::sin(x); };
  const auto fit = fit_local_linear(f, 0.0, 0.5);
  CHECK(std::abs(fit.slope) <= 1e-12);
  CfQuery tmpl;
  tmpl.n_restarts = 8;
  const auto c = surrogate_prediction_vs_counterfactual(f, df, fit, 5.0, tmpl);
  CHECK_FALSE(c.surrogate_reachable);
  REQUIRE(c.cf_converged);
  CHECK(std::abs(c.cf_true_score - 5.0) <= 0.01);
  CHECK(std::abs(std::abs(c.x_cf) - std::acos(0.5)) < 0.01);
  const auto j = comparison_to_json(c);
  CHECK(j.at("surrogate").at("reachable") == false);
}

TEST_CASE("unreachable target for the search") {
  const ScalarFn f = [](double x) { return std::tanh(x); };
  const ScalarFn df = [](double x) { return 1.0 - std::tanh(x) * std::tanh(x); };
  const auto fit = fit_local_linear(f, 0.0, 0.5);
  const auto c = surrogate_prediction_vs_counterfactual(f, df, fit, 3.0);
  CHECK(c.surrogate_reachable);
  CHECK_FALSE(c.cf_converged);
  REQUIRE(c.cf_run);
  CHECK(c.cf_true_score < 1.0);
}

TEST_CASE("plot data files") {
  testsupport::TempDir dir("plot");
  const auto sweep = scale_sweep(demo_function, kDemoCenter, kDemoHalfWidths);
  const auto cmp = surrogate_prediction_vs_counterfactual(demo_function, demo_derivative,
                                                          sweep.back(), -10.0);
  const auto files = write_plot_data(dir.path(), demo_function, -6.0, 6.0, 201, sweep, cmp);
  CHECK(line_count(files.curve) == 202);
  CHECK(line_count(files.fits) == 1 + 2 * sweep.size());
  CHECK(line_count(files.marker) >= 2);
  std::ifstream in(files.fits);
  std::string header;
  std::getline(in, header);
  CHECK(header == "half_width,lo,hi,slope,intercept,fit_rmse,sign,x,fit");
  const auto j = fit_to_json(sweep[0]);
  CHECK(j.at("slope") == sweep[0].slope);
}
