#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "recourse/errors.hpp"
#include "recourse/mlp.hpp"

using namespace recourse;

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

MlpModel random_model(std::mt19937_64& rng, Activation act, OutputHead head) {
  std::uniform_int_distribution<std::size_t> width(1, 5);
  std::uniform_int_distribution<std::size_t> depth(1, 3);
  std::vector<std::size_t> dims{width(rng)};
  const std::size_t hidden = depth(rng);
  for (std::size_t i = 0; i < hidden; ++i) dims.push_back(width(rng));
  dims.push_back(1);
  auto model = MlpModel::initialized(dims, act, head, rng());
  // Nonzero biases so the relu kinks are not all at the origin.
  std::normal_distribution<double> n(0.0, 0.3);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (auto& b : model.bias(l)) b = n(rng);
  }
  return model;
}

// Distance from the nearest relu kink over all hidden pre-activations.
double kink_margin(const MlpModel& model, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < model.layer_count(); ++l) {
    const auto w = model.weights(l);
    const auto b = model.bias(l);
    std::vector<double> next(b.size());
    for (std::size_t o = 0; o < b.size(); ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < a.size(); ++i) s += w[o * a.size() + i] * a[i];
      margin = std::min(margin, std::abs(s));
      next[o] = std::max(0.0, s);
    }
    a = std::move(next);
  }
  return margin;
}

}  // namespace

TEST_CASE("identity row passes the first input through") {
  MlpModel m({2, 1}, Activation::tanh, OutputHead::linear_score);
  m.weights(0)[0] = 1.0;
  CHECK(m.forward(std::vector<double>{3.5, 9.9}) == 3.5);
}

TEST_CASE("non-finite and wrong-width inputs are rejected") {
  MlpModel m({2, 1}, Activation::tanh, OutputHead::linear_score);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.forward(std::vector<double>{nan, 0.0}), ShapeError);
  CHECK_THROWS_AS(m.forward(std::vector<double>{1.0}), ShapeError);
  CHECK_THROWS_AS(m.gradient_wrt_input(std::vector<double>{1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("malformed layer shapes") {
  CHECK_THROWS_AS(MlpModel({3}, Activation::tanh, OutputHead::linear_score), ShapeError);
  CHECK_THROWS_AS(MlpModel({3, 0, 1}, Activation::tanh, OutputHead::linear_score), ShapeError);
  CHECK_THROWS_AS(MlpModel({3, 2}, Activation::tanh, OutputHead::linear_score), ShapeError);
}

TEST_CASE("input gradient of simple fixtures") {
  MlpModel lin({2, 1}, Activation::tanh, OutputHead::linear_score);
  lin.weights(0)[0] = 2.0;
  lin.weights(0)[1] = 3.0;
  for (const auto& x : {std::vector<double>{0, 0}, std::vector<double>{-4, 7.5}}) {
    const auto g = lin.gradient_wrt_input(x);
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 3.0);
  }

  MlpModel sig({1, 1}, Activation::tanh, OutputHead::sigmoid_probability);
  sig.weights(0)[0] = 1.0;
  CHECK(sig.forward(std::vector<double>{0.0}) == doctest::Approx(0.5));
  CHECK(sig.gradient_wrt_input(std::vector<double>{0.0})[0] == doctest::Approx(0.25));
  CHECK(sig.logit(std::vector<double>{0.7}) == doctest::Approx(0.7));
}

TEST_CASE("weight gradient of a one-weight model") {
  MlpModel m({1, 1}, Activation::tanh, OutputHead::linear_score);
  m.weights(0)[0] = 1.0;
  const std::vector<LabeledSample> batch{{{1.0}, 0.0}};

  auto g = gradient_wrt_weights(m, batch, {LossKind::squared_error, 0.0});
  CHECK(g.loss == doctest::Approx(1.0));
  CHECK(g.grad[0] == doctest::Approx(2.0));
  CHECK(g.grad[1] == doctest::Approx(2.0));  // bias

  g = gradient_wrt_weights(m, batch, {LossKind::squared_error, 0.5});
  CHECK(g.loss == doctest::Approx(1.5));
  CHECK(g.grad[0] == doctest::Approx(3.0));
  CHECK(g.grad[1] == doctest::Approx(2.0));  // biases are not decayed

  CHECK_THROWS_AS(gradient_wrt_weights(m, {}, {}), ShapeError);
  CHECK_THROWS_AS(gradient_wrt_weights(m, batch, {LossKind::binary_cross_entropy, 0.0}),
                  ConfigError);
}

TEST_CASE("parameter counts") {
  const std::vector<std::size_t> two{3, 20, 20, 1};
  const std::vector<std::size_t> three{3, 20, 20, 20, 1};
  CHECK(parameter_count(two) == 521);
  CHECK(parameter_count(three) == 941);
  CHECK(MlpModel(three, Activation::tanh, OutputHead::linear_score).parameter_count() == 941);
  const std::vector<std::size_t> pima{8, 20, 20, 20, 1};
  CHECK(parameter_count(pima) == 1041);
}

TEST_CASE("parameter layout is weights then bias per layer") {
  MlpModel m({2, 3, 1}, Activation::tanh, OutputHead::linear_score);
  CHECK(m.weights(0).size() == 6);
  CHECK(m.bias(0).size() == 3);
  CHECK(m.weights(1).size() == 3);
  CHECK(m.bias(1).size() == 1);
  CHECK(m.weights(0).data() == m.parameters().data());
  CHECK(m.bias(0).data() == m.parameters().data() + 6);
  CHECK(m.weights(1).data() == m.parameters().data() + 9);
}

TEST_CASE("seeded initialization is pinned") {
  const auto m = MlpModel::initialized({3, 20, 20, 1}, Activation::tanh,
                                       OutputHead::linear_score, 7);
  const std::vector<double> z{-0.20816469025859491, 0.64272785414208167, 0.0};
  CHECK(m.forward(z) == doctest::Approx(-0.40060975645369445).epsilon(1e-12));
  CHECK(m == MlpModel::initialized({3, 20, 20, 1}, Activation::tanh,
                                   OutputHead::linear_score, 7));
  CHECK_FALSE(m == MlpModel::initialized({3, 20, 20, 1}, Activation::tanh,
                                         OutputHead::linear_score, 8));
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const double fan = static_cast<double>(m.layer_dims()[l] + m.layer_dims()[l + 1]);
    const double limit = std::sqrt(6.0 / fan);
    for (double w : m.weights(l)) CHECK(std::abs(w) <= limit);
    for (double b : m.bias(l)) CHECK(b == 0.0);
  }
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h = 1e-4;
  int checked = 0;
  for (int c = 0; c < 100; ++c) {
    const auto act = c % 2 ? Activation::relu : Activation::tanh;
    const auto head = c % 3 == 0 ? OutputHead::sigmoid_probability : OutputHead::linear_score;
    auto model = random_model(rng, act, head);
    std::vector<double> x(model.input_dim());
    for (auto& v : x) v = n(rng);
    // Skip points where a step of h could cross a relu kink.
    if (act == Activation::relu && kink_margin(model, x) < 1e-2) continue;
    ++checked;

    const auto g = model.gradient_wrt_input(x);
    for (std::size_t k = 0; k < x.size(); ++k) {
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (model.forward(xp) - model.forward(xm)) / (2 * h);
      CHECK(rel_err(g[k], fd) < 1e-4);
    }

    std::vector<LabeledSample> batch;
    for (int s = 0; s < 3; ++s) {
      LabeledSample ls{x, n(rng)};
      for (auto& v : ls.x) v += 0.1 * n(rng);
      if (head == OutputHead::sigmoid_probability) ls.y = s % 2;
      batch.push_back(std::move(ls));
    }
    if (act == Activation::relu) {
      bool near = false;
      for (const auto& s : batch) near = near || kink_margin(model, s.x) < 1e-2;
      if (near) continue;
    }
    const LossSpec loss{head == OutputHead::sigmoid_probability ? LossKind::binary_cross_entropy
                                                               : LossKind::squared_error,
                        0.01};
    const auto wg = gradient_wrt_weights(model, batch, loss);
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = dataset_loss(model, batch, loss);
      params[i] = saved - h;
      const double down = dataset_loss(model, batch, loss);
      params[i] = saved;
      CHECK(rel_err(wg.grad[i], (up - down) / (2 * h)) < 1e-4);
    }
  }
  CHECK(checked >= 60);
}
