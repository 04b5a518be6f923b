#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "recourse/metrics.hpp"
#include "recourse/schema.hpp"
#include "recourse/score_model.hpp"

namespace recourse {

// Penalty schedule for the score-gap term: lambda starts at lambda_init and
// is multiplied by growth_factor after every round that ends outside the
// tolerance. Each round runs inner_steps ADAM iterations on x'.
struct LambdaSchedule {
  double lambda_init = 0.1;
  double growth_factor = 2.0;
  std::size_t max_rounds = 30;
  std::size_t inner_steps = 200;

  void validate() const;
};

struct SolverOptions {
  LambdaSchedule schedule;
  double step_size = 0.05;         // ADAM step on standardized features
  double init_noise = 0.5;         // restart noise, standardized units
  double change_threshold = 1e-3;  // standardized units
  double dedup_delta = 0.1;        // under the query distance
  std::size_t max_clamp_combinations = 32;
  bool parallel = false;           // run restarts on separate threads
};

struct CfQuery {
  std::vector<double> x_original;  // original units
  double target_score = 0.0;       // model output scale
  DistanceSpec distance{DistanceKind::unnormalized_sq_euclidean};
  std::set<std::string> locked_features;
  std::size_t n_restarts = 4;
  std::size_t n_diverse = 1;
  double tolerance_eps = 0.01;
  bool cap_to_training_range = false;
  // solve_diverse runs solve_clamped-style assignment enumeration per restart.
  bool clamp_categoricals = false;
  std::uint64_t seed = 0;
  SolverOptions options;
};

struct FeatureChange {
  std::string feature;
  std::size_t index = 0;
  double old_value = 0.0;  // original units
  double new_value = 0.0;
};

struct Counterfactual {
  std::vector<double> x_prime;  // original units
  double achieved_score = 0.0;
  double distance_value = 0.0;
  std::vector<FeatureChange> changed;
  std::uint64_t restart_seed = 0;
  std::map<std::string, int> clamp_assignment;
  // Convergence diagnostics of the run that produced this point.
  std::size_t rounds = 0;
  double final_lambda = 0.0;
};

struct RunDiagnostics {
  bool converged = false;
  std::size_t rounds = 0;
  std::vector<double> lambda_trace;  // lambda used in each round
  std::vector<double> gap_trace;     // |f(x') - y'| at the end of each round
};

struct SearchRun {
  Counterfactual point;  // best effort when not converged
  RunDiagnostics diagnostics;

  bool converged() const { return diagnostics.converged; }
};

class NotConverged : public std::runtime_error {
 public:
  NotConverged(const std::string& message, std::optional<SearchRun> best_effort)
      : std::runtime_error(message), best_effort_(std::move(best_effort)) {}

  const std::optional<SearchRun>& best_effort() const { return best_effort_; }

 private:
  std::optional<SearchRun> best_effort_;
};

// A trained score function together with the feature space it lives in.
// The model consumes standardized inputs; queries and results use original
// units. `training_range` (min/max per feature) enables range capping.
class CfProblem {
 public:
  CfProblem(const ScoreModel& model, FeatureSchema schema,
            Standardization standardization,
            std::optional<FeatureStats> training_range = std::nullopt);

  const ScoreModel& model() const { return *model_; }
  const FeatureSchema& schema() const { return schema_; }
  const Standardization& standardization() const { return standardization_; }
  const std::optional<FeatureStats>& training_range() const { return range_; }

  // Model score for an original-unit point.
  double score(std::span<const double> x_original) const;

 private:
  const ScoreModel* model_;
  FeatureSchema schema_;
  Standardization standardization_;
  std::optional<FeatureStats> range_;
};

// lambda * (f(x') - y')^2 + d(x_i, x'), x' in original units.
double objective(const CfProblem& problem, std::span<const double> x_prime,
                 const CfQuery& query, double lambda);

// Seed assigned to restart `index`: 0 for the restart started at x_i itself,
// a nonzero mix of the query seed otherwise.
std::uint64_t restart_seed(std::uint64_t query_seed, std::size_t index);

// One penalty-schedule descent started from x_i (restart_seed 0) or from x_i
// plus Gaussian noise drawn from restart_seed. `assignment` freezes the named
// categorical features at the given codes.
SearchRun solve_single(const CfProblem& problem, const CfQuery& query,
                       std::uint64_t restart_seed,
                       const std::map<std::string, int>& assignment = {});

struct ClampedResult {
  SearchRun best;
  // Best converged run per assignment, in enumeration order (odometer over
  // the free categorical features, lowest codes first). Runs that did not
  // converge are kept with converged() == false.
  std::vector<SearchRun> per_assignment;
};

// Hybrid search: one relaxed run per combination of the free categorical
// features' codes, each with those coordinates frozen; returns the closest
// converged run (ties: fewer changes, then lower codes). Throws ConfigError
// above max_clamp_combinations and NotConverged when no run converges.
ClampedResult solve_clamped(const CfProblem& problem, const CfQuery& query);

// Converged restarts sorted by (distance, restart_seed), greedily
// deduplicated so every pair is more than dedup_delta apart under the query
// distance, truncated to n_diverse. Throws NotConverged when no restart
// converges.
std::vector<Counterfactual> solve_diverse(const CfProblem& problem, const CfQuery& query);

struct DependenceReport {
  std::map<std::string, bool> flags;  // protected feature -> changed somewhere
  std::string caveat;
};

inline constexpr const char* kDependenceCaveat =
    "A protected attribute that changes in a counterfactual shows the decision "
    "depends on it. A protected attribute that never changes is NOT evidence "
    "that the decision is independent of it.";

DependenceReport dependence_flags(const std::vector<Counterfactual>& cfs,
                                  const FeatureSchema& schema);

}  // namespace recourse
