#include "recourse/cf_search.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <tuple>

#include "recourse/adam.hpp"
#include "recourse/errors.hpp"

namespace recourse {

void LambdaSchedule::validate() const {
  if (!(lambda_init > 0.0)) throw ConfigError("lambda_init must be > 0");
  if (!(growth_factor > 1.0)) throw ConfigError("lambda growth_factor must be > 1");
  if (max_rounds == 0) throw ConfigError("max_rounds must be positive");
  if (inner_steps == 0) throw ConfigError("inner_steps must be positive");
}

CfProblem::CfProblem(const ScoreModel& model, FeatureSchema schema,
                     Standardization standardization,
                     std::optional<FeatureStats> training_range)
    : model_(&model),
      schema_(std::move(schema)),
      standardization_(std::move(standardization)),
      range_(std::move(training_range)) {
  if (model.input_dim() != schema_.size()) {
    throw ShapeError("model input width " + std::to_string(model.input_dim()) +
                     " does not match the schema (" + std::to_string(schema_.size()) +
                     " features)");
  }
  if (!standardization_.fitted()) {
    standardization_ = Standardization::identity(schema_.size());
  }
  if (standardization_.size() != schema_.size()) {
    throw ShapeError("standardization width does not match the schema");
  }
  if (range_ && range_->size() != schema_.size()) {
    throw ShapeError("training range width does not match the schema");
  }
}

double CfProblem::score(std::span<const double> x_original) const {
  return model_->score(standardization_.standardize(x_original));
}

double objective(const CfProblem& problem, std::span<const double> x_prime,
                 const CfQuery& query, double lambda) {
  if (x_prime.size() != problem.schema().size() ||
      query.x_original.size() != problem.schema().size()) {
    throw ShapeError("objective: point width does not match the schema");
  }
  const double gap = problem.score(x_prime) - query.target_score;
  return lambda * gap * gap + query.distance(query.x_original, x_prime);
}

std::uint64_t restart_seed(std::uint64_t query_seed, std::size_t index) {
  if (index == 0) return 0;
  // splitmix64 finalizer
  std::uint64_t z = query_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z == 0 ? 1 : z;
}

namespace {

void validate_query(const CfProblem& problem, const CfQuery& query) {
  const auto& schema = problem.schema();
  if (query.x_original.size() != schema.size()) {
    throw ShapeError("query point has " + std::to_string(query.x_original.size()) +
                     " features, schema has " + std::to_string(schema.size()));
  }
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const double v = query.x_original[k];
    if (!std::isfinite(v)) throw ShapeError("query point contains a non-finite value");
    const auto& f = schema.feature(k);
    if (f.is_categorical() && !f.valid_code(v)) {
      throw ConfigError("query value for '" + f.name + "' is not a valid category code");
    }
  }
  for (const auto& name : query.locked_features) {
    if (!schema.index_of(name)) {
      throw ConfigError("locked feature '" + name + "' is not in the schema");
    }
  }
  if (!std::isfinite(query.target_score)) throw ConfigError("target score must be finite");
  if (schema.target().kind == TargetKind::probability &&
      !(query.target_score > 0.0 && query.target_score < 1.0)) {
    throw ConfigError("a probability target must lie strictly inside (0, 1)");
  }
  if (!(query.tolerance_eps > 0.0)) throw ConfigError("tolerance_eps must be > 0");
  if (query.n_restarts == 0) throw ConfigError("n_restarts must be positive");
  if (query.cap_to_training_range && !problem.training_range()) {
    throw ConfigError("range capping requested but no training range is available");
  }
  if (query.distance.stats() &&
      query.distance.kind() != DistanceKind::unnormalized_sq_euclidean &&
      query.distance.divisors().size() != schema.size()) {
    throw ShapeError("distance stats width does not match the schema");
  }
  if (!(query.options.step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (query.options.init_noise < 0.0) throw ConfigError("init_noise must be >= 0");
  query.options.schedule.validate();
}

// Descent state for one run, in standardized coordinates.
class Descent {
 public:
  Descent(const CfProblem& problem, const CfQuery& query,
          const std::map<std::string, int>& assignment)
      : problem_(problem), query_(query), n_(problem.schema().size()) {
    const auto& st = problem.standardization();
    z_orig_ = st.standardize(query.x_original);
    frozen_.assign(n_, false);
    fixed_.assign(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      if (query.locked_features.count(problem.schema().feature(k).name)) {
        frozen_[k] = true;
        fixed_[k] = z_orig_[k];
      }
    }
    for (const auto& [name, code] : assignment) {
      const std::size_t k = problem.schema().require_index(name);
      const auto& f = problem.schema().feature(k);
      if (!f.is_categorical() || !f.valid_code(code)) {
        throw ConfigError("invalid clamp assignment for '" + name + "'");
      }
      frozen_[k] = true;
      const double code_d = static_cast<double>(code);
      fixed_[k] = st.standardize(with(k, code_d))[k];
    }
    lo_.assign(n_, -INFINITY);
    hi_.assign(n_, INFINITY);
    if (query.cap_to_training_range) {
      const auto& r = *problem.training_range();
      const auto lo = st.standardize(r.min);
      const auto hi = st.standardize(r.max);
      lo_ = lo;
      hi_ = hi;
    }
  }

  std::vector<double> start(std::uint64_t seed) const {
    std::vector<double> z = z_orig_;
    if (seed != 0 && query_.options.init_noise > 0.0) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> noise(0.0, query_.options.init_noise);
      for (std::size_t k = 0; k < n_; ++k) z[k] += noise(rng);
    }
    for (std::size_t k = 0; k < n_; ++k) {
      if (frozen_[k]) z[k] = fixed_[k];
    }
    project(z);
    return z;
  }

  bool starts_at_original(const std::vector<double>& z) const { return z == z_orig_; }

  double gap(const std::vector<double>& z) const {
    return std::abs(problem_.model().score(z) - query_.target_score);
  }

  // One round of ADAM on lambda (f - y')^2 + d with a linearly decaying step.
  void round(std::vector<double>& z, double lambda) const {
    const auto& st = problem_.standardization();
    const std::size_t steps = query_.options.schedule.inner_steps;
    AdamState state(n_);
    AdamConfig cfg{.step_size = query_.options.step_size};
    std::vector<double> grad(n_);
    for (std::size_t t = 0; t < steps; ++t) {
      const double f = problem_.model().score(z);
      const auto df = problem_.model().score_gradient(z);
      const auto x = st.destandardize(z);
      const auto dd = query_.distance.gradient(query_.x_original, x);
      const double pull = 2.0 * lambda * (f - query_.target_score);
      for (std::size_t k = 0; k < n_; ++k) {
        grad[k] = frozen_[k] ? 0.0 : pull * df[k] + dd[k] * st.scale()[k];
      }
      cfg.step_size = query_.options.step_size *
                      (1.0 - static_cast<double>(t) / static_cast<double>(steps));
      adam_step(state, z, grad, cfg);
      project(z);
    }
    snap_dust(z);
  }

  // A converged descent point sits inside the tolerance band, usually near
  // its middle. Pull it back toward x_i (with frozen coordinates held) to
  // the band edge; every supported distance shrinks along that segment.
  void tighten(std::vector<double>& z) const {
    const double tol = query_.tolerance_eps;
    if (gap(z) > tol) return;
    std::vector<double> anchor = z_orig_;
    project(anchor);
    auto at = [&](double t) {
      std::vector<double> p(n_);
      for (std::size_t k = 0; k < n_; ++k) p[k] = anchor[k] + t * (z[k] - anchor[k]);
      return p;
    };
    if (gap(anchor) <= tol) {
      z = std::move(anchor);
      return;
    }
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 60 && hi - lo > 1e-12; ++i) {
      const double mid = 0.5 * (lo + hi);
      (gap(at(mid)) <= tol ? hi : lo) = mid;
    }
    z = at(hi);
    snap_dust(z);
  }

  Counterfactual finish(const std::vector<double>& z, std::uint64_t seed,
                        const std::map<std::string, int>& assignment) const {
    const auto& schema = problem_.schema();
    const auto& st = problem_.standardization();
    Counterfactual cf;
    cf.restart_seed = seed;
    cf.clamp_assignment = assignment;
    const auto x = st.destandardize(z);
    cf.x_prime.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const bool changed = std::abs(z[k] - z_orig_[k]) > query_.options.change_threshold;
      if (frozen_[k] && !assignment.count(schema.feature(k).name)) {
        cf.x_prime[k] = query_.x_original[k];
      } else if (assignment.count(schema.feature(k).name)) {
        cf.x_prime[k] = assignment.at(schema.feature(k).name);
      } else {
        cf.x_prime[k] = (z[k] == z_orig_[k]) ? query_.x_original[k] : x[k];
      }
      if (changed) {
        cf.changed.push_back(
            {schema.feature(k).name, k, query_.x_original[k], cf.x_prime[k]});
      }
    }
    cf.achieved_score = problem_.score(cf.x_prime);
    cf.distance_value = query_.distance(query_.x_original, cf.x_prime);
    return cf;
  }

 private:
  std::vector<double> with(std::size_t k, double value) const {
    std::vector<double> x = query_.x_original;
    x[k] = value;
    return x;
  }

  void project(std::vector<double>& z) const {
    for (std::size_t k = 0; k < n_; ++k) {
      if (frozen_[k]) {
        z[k] = fixed_[k];
      } else {
        z[k] = std::clamp(z[k], lo_[k], hi_[k]);
      }
    }
  }

  // Coordinates that ended within change_threshold of the original are
  // optimizer dust from the non-smooth distance; reset them unless that
  // pushes a point that met the tolerance back outside it.
  void snap_dust(std::vector<double>& z) const {
    std::vector<double> snapped = z;
    bool any = false;
    for (std::size_t k = 0; k < n_; ++k) {
      if (!frozen_[k] && snapped[k] != z_orig_[k] &&
          std::abs(snapped[k] - z_orig_[k]) <= query_.options.change_threshold) {
        snapped[k] = z_orig_[k];
        any = true;
      }
    }
    if (!any) return;
    project(snapped);
    const double tol = query_.tolerance_eps;
    if (gap(snapped) <= tol || gap(z) > tol) z = std::move(snapped);
  }

  const CfProblem& problem_;
  const CfQuery& query_;
  std::size_t n_;
  std::vector<double> z_orig_;
  std::vector<bool> frozen_;
  std::vector<double> fixed_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

SearchRun run_descent(const CfProblem& problem, const CfQuery& query, std::uint64_t seed,
                      const std::map<std::string, int>& assignment) {
  const Descent descent(problem, query, assignment);
  std::vector<double> z = descent.start(seed);
  SearchRun run;
  const auto& schedule = query.options.schedule;
  const double tol = query.tolerance_eps;

  if (descent.starts_at_original(z) && descent.gap(z) <= tol) {
    // x_i already meets the target: it is its own closest world.
    run.point = descent.finish(z, seed, assignment);
    run.diagnostics.converged = std::abs(run.point.achieved_score - query.target_score) <= tol;
    return run;
  }

  double lambda = schedule.lambda_init;
  for (std::size_t r = 0; r < schedule.max_rounds; ++r) {
    descent.round(z, lambda);
    run.diagnostics.rounds = r + 1;
    run.diagnostics.lambda_trace.push_back(lambda);
    const double g = descent.gap(z);
    run.diagnostics.gap_trace.push_back(g);
    if (g <= tol) {
      descent.tighten(z);
      break;
    }
    lambda *= schedule.growth_factor;
  }
  run.point = descent.finish(z, seed, assignment);
  run.point.rounds = run.diagnostics.rounds;
  run.point.final_lambda =
      run.diagnostics.lambda_trace.empty() ? 0.0 : run.diagnostics.lambda_trace.back();
  // Acceptance is decided on the re-evaluated result, not the loop's view.
  run.diagnostics.converged = std::abs(run.point.achieved_score - query.target_score) <= tol;
  return run;
}

// Strict weak order used whenever runs compete: closer first, then fewer
// changes, then lower clamp codes, then lower seed.
bool better(const SearchRun& a, const SearchRun& b) {
  auto codes = [](const Counterfactual& c) {
    std::vector<int> v;
    for (const auto& [name, code] : c.clamp_assignment) v.push_back(code);
    return v;
  };
  return std::forward_as_tuple(a.point.distance_value, a.point.changed.size(),
                               codes(a.point), a.point.restart_seed) <
         std::forward_as_tuple(b.point.distance_value, b.point.changed.size(),
                               codes(b.point), b.point.restart_seed);
}

// Picks the best converged run, or the closest-to-target one if none
// converged.
SearchRun pick(std::vector<SearchRun> runs, double target) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].converged() && (!best || better(runs[i], runs[*best]))) best = i;
  }
  if (!best) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const double gi = std::abs(runs[i].point.achieved_score - target);
      if (!best || gi < std::abs(runs[*best].point.achieved_score - target)) best = i;
    }
  }
  return std::move(runs.at(*best));
}

template <typename Fn>
std::vector<SearchRun> run_restarts(const CfQuery& query, Fn&& fn) {
  std::vector<SearchRun> runs(query.n_restarts);
  if (query.options.parallel && query.n_restarts > 1) {
    std::vector<std::future<SearchRun>> futures;
    for (std::size_t r = 0; r < query.n_restarts; ++r) {
      futures.push_back(std::async(std::launch::async, [&fn, &query, r] {
        return fn(restart_seed(query.seed, r));
      }));
    }
    for (std::size_t r = 0; r < query.n_restarts; ++r) runs[r] = futures[r].get();
  } else {
    for (std::size_t r = 0; r < query.n_restarts; ++r) runs[r] = fn(restart_seed(query.seed, r));
  }
  return runs;
}

std::vector<std::map<std::string, int>> enumerate_assignments(const CfProblem& problem,
                                                              const CfQuery& query) {
  std::vector<std::size_t> free;
  std::size_t combos = 1;
  for (std::size_t k = 0; k < problem.schema().size(); ++k) {
    const auto& f = problem.schema().feature(k);
    if (f.is_categorical() && !query.locked_features.count(f.name)) {
      free.push_back(k);
      combos *= f.categories.size();
      if (combos > query.options.max_clamp_combinations) {
        throw ConfigError("clamping would need more than " +
                          std::to_string(query.options.max_clamp_combinations) +
                          " categorical combinations; lock some categorical features");
      }
    }
  }
  std::vector<std::map<std::string, int>> out;
  std::vector<int> digit(free.size(), 0);
  for (std::size_t c = 0; c < combos; ++c) {
    std::map<std::string, int> a;
    for (std::size_t i = 0; i < free.size(); ++i) {
      a[problem.schema().feature(free[i]).name] = digit[i];
    }
    out.push_back(std::move(a));
    for (std::size_t i = free.size(); i-- > 0;) {
      if (++digit[i] < static_cast<int>(problem.schema().feature(free[i]).categories.size())) {
        break;
      }
      digit[i] = 0;
    }
  }
  return out;
}

// All assignments for one restart seed; best converged across them.
SearchRun clamped_restart(const CfProblem& problem, const CfQuery& query,
                          const std::vector<std::map<std::string, int>>& assignments,
                          std::uint64_t seed) {
  std::vector<SearchRun> runs;
  for (const auto& a : assignments) runs.push_back(run_descent(problem, query, seed, a));
  return pick(std::move(runs), query.target_score);
}

}  // namespace

SearchRun solve_single(const CfProblem& problem, const CfQuery& query,
                       std::uint64_t restart_seed,
                       const std::map<std::string, int>& assignment) {
  validate_query(problem, query);
  return run_descent(problem, query, restart_seed, assignment);
}

ClampedResult solve_clamped(const CfProblem& problem, const CfQuery& query) {
  validate_query(problem, query);
  const auto assignments = enumerate_assignments(problem, query);
  ClampedResult result;
  for (const auto& a : assignments) {
    auto runs = run_restarts(query, [&](std::uint64_t seed) {
      return run_descent(problem, query, seed, a);
    });
    result.per_assignment.push_back(pick(std::move(runs), query.target_score));
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.per_assignment.size(); ++i) {
    const auto& run = result.per_assignment[i];
    if (run.converged() && (!best || better(run, result.per_assignment[*best]))) best = i;
  }
  if (!best) {
    throw NotConverged("no clamped run reached the target within tolerance",
                       pick(result.per_assignment, query.target_score));
  }
  result.best = result.per_assignment[*best];
  return result;
}

std::vector<Counterfactual> solve_diverse(const CfProblem& problem, const CfQuery& query) {
  validate_query(problem, query);
  if (query.n_diverse == 0) throw ConfigError("n_diverse must be positive");
  if (query.n_restarts < query.n_diverse) {
    throw ConfigError("n_restarts must be at least n_diverse");
  }
  std::vector<SearchRun> runs;
  if (query.clamp_categoricals) {
    const auto assignments = enumerate_assignments(problem, query);
    runs = run_restarts(query, [&](std::uint64_t seed) {
      return clamped_restart(problem, query, assignments, seed);
    });
  } else {
    runs = run_restarts(query, [&](std::uint64_t seed) {
      return run_descent(problem, query, seed, {});
    });
  }

  std::vector<SearchRun> converged;
  for (auto& run : runs) {
    if (run.converged()) converged.push_back(std::move(run));
  }
  if (converged.empty()) {
    throw NotConverged("no restart reached the target within tolerance",
                       pick(std::move(runs), query.target_score));
  }
  std::sort(converged.begin(), converged.end(), [](const SearchRun& a, const SearchRun& b) {
    return std::tie(a.point.distance_value, a.point.restart_seed) <
           std::tie(b.point.distance_value, b.point.restart_seed);
  });

  std::vector<Counterfactual> out;
  for (auto& run : converged) {
    const bool distinct = std::all_of(out.begin(), out.end(), [&](const Counterfactual& kept) {
      return query.distance(kept.x_prime, run.point.x_prime) > query.options.dedup_delta;
    });
    if (distinct) out.push_back(std::move(run.point));
    if (out.size() == query.n_diverse) break;
  }
  return out;
}

DependenceReport dependence_flags(const std::vector<Counterfactual>& cfs,
                                  const FeatureSchema& schema) {
  DependenceReport report;
  report.caveat = kDependenceCaveat;
  for (const auto& f : schema.features()) {
    if (!f.protected_attribute) continue;
    bool changed = false;
    for (const auto& cf : cfs) {
      for (const auto& c : cf.changed) changed = changed || c.feature == f.name;
    }
    report.flags[f.name] = changed;
  }
  return report;
}

}  // namespace recourse
