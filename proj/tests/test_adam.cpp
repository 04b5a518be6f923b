#include <cmath>
#include <vector>

#include "doctest.h"
#include "recourse/adam.hpp"
#include "recourse/errors.hpp"

using namespace recourse;

TEST_CASE("first step from zero moments moves by the step size") {
  AdamState s(1);
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  adam_step(s, p, g, AdamConfig{});
  CHECK(std::abs(p[0] - (-0.001)) < 1e-6);
  CHECK(s.step_count == 1);
  CHECK(s.first_moment[0] == doctest::Approx(0.1));
  CHECK(s.second_moment[0] == doctest::Approx(0.001));
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  AdamState s(3);
  std::vector<double> p{1.0, -2.0, 0.5};
  const auto before = p;
  adam_step(s, p, std::vector<double>{0.0, 0.0, 0.0}, AdamConfig{});
  CHECK(p == before);
}

TEST_CASE("two constant-gradient steps stay within the step size") {
  AdamState s(1);
  std::vector<double> p{0.0};
  const AdamConfig cfg{};
  double prev = p[0];
  for (int t = 0; t < 2; ++t) {
    adam_step(s, p, std::vector<double>{1.0}, cfg);
    const double delta = std::abs(p[0] - prev);
    CHECK(delta > 0.0);
    CHECK(delta <= cfg.step_size * 1.05);
    CHECK(delta == doctest::Approx(0.0009999999900000003).epsilon(1e-12));
    prev = p[0];
  }
}

TEST_CASE("bias correction with a sign change") {
  // g = 2 then g = -1; second delta worked out by hand from the update rule.
  AdamState s(1);
  std::vector<double> p{0.0};
  adam_step(s, p, std::vector<double>{2.0}, AdamConfig{});
  CHECK(p[0] == doctest::Approx(-0.001).epsilon(1e-6));
  const double after_first = p[0];
  adam_step(s, p, std::vector<double>{-1.0}, AdamConfig{});
  CHECK(p[0] - after_first == doctest::Approx(-0.0002663370379756847).epsilon(1e-9));
}

TEST_CASE("shape and config validation") {
  AdamState s(2);
  std::vector<double> p{0.0, 0.0};
  CHECK_THROWS_AS(adam_step(s, p, std::vector<double>{1.0}, AdamConfig{}), ShapeError);
  CHECK_THROWS_AS(AdamConfig{.step_size = 0.0}.validate(), ConfigError);
  CHECK_THROWS_AS(AdamConfig{.beta1 = 1.0}.validate(), ConfigError);
  CHECK_THROWS_AS(AdamConfig{.epsilon = 0.0}.validate(), ConfigError);
  CHECK_NOTHROW(AdamConfig{}.validate());
}
