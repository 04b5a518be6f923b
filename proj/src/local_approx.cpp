#include "recourse/local_approx.hpp"

#include <cmath>
#include <fstream>

#include "recourse/errors.hpp"
#include "recourse/score_model.hpp"

namespace recourse {

SurrogateFit fit_local_linear(const ScalarFn& f, double center, double half_width,
                              std::size_t n_samples) {
  if (!std::isfinite(center) || !std::isfinite(half_width) || !(half_width > 0.0)) {
    throw ConfigError("half_width must be a positive finite number");
  }
  if (n_samples < 2) throw ConfigError("a local fit needs at least two samples");

  SurrogateFit fit;
  fit.center = center;
  fit.lo = center - half_width;
  fit.hi = center + half_width;
  fit.n_samples = n_samples;

  std::vector<double> xs(n_samples), ys(n_samples);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n_samples - 1);
    xs[i] = fit.lo + t * (fit.hi - fit.lo);
    ys[i] = f(xs[i]);
    if (!std::isfinite(ys[i])) throw ConfigError("score function returned a non-finite value");
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n_samples);
  my /= static_cast<double>(n_samples);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("sample abscissae are all equal; window too narrow");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double r = ys[i] - fit.predict(xs[i]);
    sse += r * r;
  }
  fit.fit_rmse = std::sqrt(sse / static_cast<double>(n_samples));
  return fit;
}

std::vector<SurrogateFit> scale_sweep(const ScalarFn& f, double center,
                                      const std::vector<double>& half_widths,
                                      std::size_t n_samples) {
  if (half_widths.size() < 2) throw ConfigError("a scale sweep needs at least two widths");
  std::vector<SurrogateFit> out;
  out.reserve(half_widths.size());
  for (double h : half_widths) out.push_back(fit_local_linear(f, center, h, n_samples));
  return out;
}

double demo_function(double x) {
  return 40.0 * std::sin(3.0 * x) * std::exp(-0.1 * x * x) + 8.0 * x;
}

double demo_derivative(double x) {
  const double e = std::exp(-0.1 * x * x);
  return 40.0 * e * (3.0 * std::cos(3.0 * x) - 0.2 * x * std::sin(3.0 * x)) + 8.0;
}

SurrogateComparison surrogate_prediction_vs_counterfactual(const ScalarFn& f,
                                                           const ScalarFn& df,
                                                           const SurrogateFit& fit,
                                                           double target,
                                                           const CfQuery& query_template) {
  SurrogateComparison c;
  c.target = target;
  if (std::abs(fit.slope) > 1e-12) {
    c.surrogate_reachable = true;
    c.x_lin = (target - fit.intercept) / fit.slope;
    c.surrogate_true_score = f(c.x_lin);
  }

  const FunctionModel model(
      1, [&](std::span<const double> x) { return f(x[0]); },
      [&](std::span<const double> x) { return std::vector<double>{df(x[0])}; });
  const FeatureSchema schema({FeatureSpec{.name = "x", .label = "x"}},
                             TargetSpec{.name = "f", .kind = TargetKind::score});
  const CfProblem problem(model, schema, Standardization::identity(1));
  CfQuery q = query_template;
  q.x_original = {fit.center};
  q.target_score = target;
  q.distance = DistanceSpec(DistanceKind::unnormalized_sq_euclidean);
  q.locked_features.clear();
  q.n_diverse = 1;
  q.cap_to_training_range = false;
  q.clamp_categoricals = false;
  try {
    const auto cfs = solve_diverse(problem, q);
    c.cf_converged = true;
    c.x_cf = cfs.front().x_prime[0];
    c.cf_true_score = f(c.x_cf);
  } catch (const NotConverged& e) {
    c.cf_run = e.best_effort();
    if (c.cf_run) {
      c.x_cf = c.cf_run->point.x_prime[0];
      c.cf_true_score = f(c.x_cf);
    }
  }
  return c;
}

nlohmann::json fit_to_json(const SurrogateFit& fit) {
  return {{"center", fit.center},     {"lo", fit.lo},
          {"hi", fit.hi},             {"half_width", fit.half_width()},
          {"slope", fit.slope},       {"intercept", fit.intercept},
          {"fit_rmse", fit.fit_rmse}, {"n_samples", fit.n_samples},
          {"sign", fit.slope > 0 ? 1 : fit.slope < 0 ? -1 : 0}};
}

nlohmann::json comparison_to_json(const SurrogateComparison& c) {
  nlohmann::json out{{"target", c.target}};
  if (c.surrogate_reachable) {
    out["surrogate"] = {{"reachable", true},
                        {"x", c.x_lin},
                        {"true_score", c.surrogate_true_score},
                        {"miss", std::abs(c.surrogate_true_score - c.target)}};
  } else {
    out["surrogate"] = {{"reachable", false}, {"note", "unreachable per surrogate"}};
  }
  out["counterfactual"] = {{"converged", c.cf_converged},
                           {"x", c.x_cf},
                           {"true_score", c.cf_true_score},
                           {"miss", std::abs(c.cf_true_score - c.target)}};
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out.precision(17);
  return out;
}

}  // namespace

PlotFiles write_plot_data(const std::filesystem::path& dir, const ScalarFn& f, double x_min,
                          double x_max, std::size_t curve_points,
                          const std::vector<SurrogateFit>& fits,
                          const SurrogateComparison& comparison) {
  if (curve_points < 2 || !(x_max > x_min)) throw ConfigError("bad curve sampling range");
  std::filesystem::create_directories(dir);
  PlotFiles files{dir / "curve.csv", dir / "fits.csv", dir / "marker.csv"};

  auto curve = open_csv(files.curve);
  curve << "x,f\n";
  for (std::size_t i = 0; i < curve_points; ++i) {
    const double x = x_min + (x_max - x_min) * static_cast<double>(i) /
                                 static_cast<double>(curve_points - 1);
    curve << x << ',' << f(x) << '\n';
  }

  auto fit_csv = open_csv(files.fits);
  fit_csv << "half_width,lo,hi,slope,intercept,fit_rmse,sign,x,fit\n";
  for (const auto& fit : fits) {
    const int sign = fit.slope > 0 ? 1 : fit.slope < 0 ? -1 : 0;
    for (double x : {fit.lo, fit.hi}) {
      fit_csv << fit.half_width() << ',' << fit.lo << ',' << fit.hi << ',' << fit.slope << ','
              << fit.intercept << ',' << fit.fit_rmse << ',' << sign << ',' << x << ','
              << fit.predict(x) << '\n';
    }
  }

  auto marker = open_csv(files.marker);
  marker << "branch,x,true_score,target\n";
  if (comparison.surrogate_reachable) {
    marker << "surrogate," << comparison.x_lin << ',' << comparison.surrogate_true_score << ','
           << comparison.target << '\n';
  }
  if (comparison.cf_converged) {
    marker << "counterfactual," << comparison.x_cf << ',' << comparison.cf_true_score << ','
           << comparison.target << '\n';
  }
  return files;
}

}  // namespace recourse
