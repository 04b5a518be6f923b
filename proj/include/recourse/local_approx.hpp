#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "recourse/cf_search.hpp"

namespace recourse {

using ScalarFn = std::function<double(double)>;

struct SurrogateFit {
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double fit_rmse = 0.0;
  std::size_t n_samples = 0;

  double half_width() const { return 0.5 * (hi - lo); }
  double predict(double x) const { return slope * x + intercept; }
};

// Ordinary least squares line through n_samples evenly spaced points of
// [center - half_width, center + half_width], endpoints included.
SurrogateFit fit_local_linear(const ScalarFn& f, double center, double half_width,
                              std::size_t n_samples = 101);

// One fit per half-width, in the given order. Needs at least two widths.
std::vector<SurrogateFit> scale_sweep(const ScalarFn& f, double center,
                                      const std::vector<double>& half_widths,
                                      std::size_t n_samples = 101);

// f(x) = 40 sin(3x) exp(-0.1 x^2) + 8x
double demo_function(double x);
double demo_derivative(double x);
inline constexpr double kDemoCenter = 1.0;
inline const std::vector<double> kDemoHalfWidths{0.01, 0.1, 0.3, 1.0, 3.0};

struct SurrogateComparison {
  double target = 0.0;
  // Surrogate branch: empty when the fitted line is flat.
  bool surrogate_reachable = false;
  double x_lin = 0.0;
  double surrogate_true_score = 0.0;
  // Counterfactual branch.
  bool cf_converged = false;
  double x_cf = 0.0;
  double cf_true_score = 0.0;
  std::optional<SearchRun> cf_run;  // best effort, set only when not converged
};

// Compares the surrogate's answer to "which x reaches target?" with a 1-D
// counterfactual search on f itself started at fit.center. The search uses
// squared distance |x - center|^2 and `query_template` for its tolerance,
// restart and schedule settings (x_original and target are overwritten).
// Slopes with |slope| <= 1e-12 are treated as flat.
SurrogateComparison surrogate_prediction_vs_counterfactual(
    const ScalarFn& f, const ScalarFn& df, const SurrogateFit& fit, double target,
    const CfQuery& query_template = {});

nlohmann::json fit_to_json(const SurrogateFit& fit);
nlohmann::json comparison_to_json(const SurrogateComparison& c);

// Plot data:
//   curve.csv   x,f
//   fits.csv    half_width,lo,hi,slope,intercept,fit_rmse,sign,x,fit   (two rows per fit)
//   marker.csv  branch,x,true_score,target
struct PlotFiles {
  std::filesystem::path curve;
  std::filesystem::path fits;
  std::filesystem::path marker;
};
PlotFiles write_plot_data(const std::filesystem::path& dir, const ScalarFn& f, double x_min,
                          double x_max, std::size_t curve_points,
                          const std::vector<SurrogateFit>& fits,
                          const SurrogateComparison& comparison);

}  // namespace recourse
