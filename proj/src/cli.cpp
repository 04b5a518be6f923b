#include "recourse/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "recourse/audit_service.hpp"
#include "recourse/bundle.hpp"
#include "recourse/cf_json.hpp"
#include "recourse/datasets.hpp"
#include "recourse/errors.hpp"
#include "recourse/hash.hpp"
#include "recourse/http_api.hpp"
#include "recourse/local_approx.hpp"
#include "recourse/metrics.hpp"
#include "recourse/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace recourse {

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Options registered on a subcommand, addressable by config-file key.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* option(const std::string& key, T& var, const std::string& desc) {
    CLI::Option* o = app_->add_option("--" + key, var, desc);
    remember(key, o, var);
    return o;
  }

  CLI::Option* flag(const std::string& key, bool& var, const std::string& desc) {
    CLI::Option* o = app_->add_flag("--" + key, var, desc);
    remember(key, o, var);
    return o;
  }

  // Fills every option not given on the command line from `cfg`.
  void apply(const json& cfg) {
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      auto it = slots_.find(key);
      if (it == slots_.end()) {
        std::string underscored = key;
        std::replace(underscored.begin(), underscored.end(), '_', '-');
        it = slots_.find(underscored);
      }
      if (it == slots_.end()) throw ConfigError("unknown config key '" + key + "'");
      if (it->second.option->count() > 0) continue;
      try {
        it->second.set(value);
      } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
      }
    }
  }

  json snapshot() const {
    json out = json::object();
    for (const auto& [key, slot] : slots_) out[key] = slot.get();
    return out;
  }

 private:
  struct Slot {
    CLI::Option* option;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };

  template <typename T>
  void remember(const std::string& key, CLI::Option* o, T& var) {
    slots_[key] = Slot{o, [&var](const json& j) { var = j.get<T>(); },
                       [&var]() -> json {
                         if constexpr (std::is_floating_point_v<T>) {
                           if (std::isnan(var)) return nullptr;
                         }
                         return var;
                       }};
  }

  CLI::App* app_;
  std::map<std::string, Slot> slots_;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// Shared bookkeeping for one command run.
struct Run {
  std::string command;
  Binder* binder = nullptr;
  std::string config_path;
  std::string manifest_path;
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::array();
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void input(const std::string& path) { inputs[path] = sha256_file(path); }
  void output(const fs::path& path) { outputs.push_back(path.string()); }

  void write_manifest() const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                            .count();
    json m{{"command", command},
           {"config", binder ? binder->snapshot() : json::object()},
           {"config_file", config_path},
           {"seeds", seeds},
           {"inputs", inputs},
           {"outputs", outputs},
           {"wall_time_seconds", wall}};
    write_text(manifest_path, m.dump(2) + "\n");
  }
};

std::string default_manifest(const std::string& command, const std::string& out) {
  if (!out.empty()) return out + ".manifest.json";
  return "recourse-" + command + ".manifest.json";
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string dataset = "lsat";
  std::string data;
  std::string schema;
  std::string data_dir;
  std::uint64_t seed = 7;
  std::size_t epochs = 0;
  std::vector<std::size_t> hidden;
  std::string activation = "tanh";
  double lr = kUnset;
  double l2 = 1e-4;
  std::size_t batch = 0;
  double split = 0.8;
  std::uint64_t split_seed = 2017;
  std::string out = "model.json";
};

struct Recipe {
  std::vector<std::size_t> hidden;
  std::size_t epochs;
  double lr;
  double split;
};

Recipe recipe_for(const std::string& dataset) {
  if (dataset == "xor") return {{8}, 2000, 0.05, 1.0};
  if (dataset == "two_moons_like") return {{20, 20}, 1000, 0.01, 0.8};
  // Three 20-wide hidden layers: 941 parameters on the 3-feature LSAT table.
  return {{20, 20, 20}, 1500, 0.01, 0.8};
}

fs::path data_dir_of(const std::string& flag) {
  return flag.empty() ? default_data_dir() : fs::path(flag);
}

// The evaluation rows a bundle was held out with.
Dataset reload_eval(const ModelBundle& bundle, const std::string& data_override,
                    const std::string& data_dir, Run& run) {
  const json& manifest = bundle.manifest;
  if (!manifest.contains("dataset_ref")) {
    throw ConfigError("model manifest does not record its dataset; pass explicit points");
  }
  const json& ref = manifest.at("dataset_ref");
  Dataset data;
  if (!data_override.empty()) {
    data = load_csv(data_override, bundle.schema);
    run.input(data_override);
  } else if (ref.contains("builtin")) {
    data = builtin(builtin_from_string(ref.at("builtin").get<std::string>()),
                   data_dir_of(data_dir));
    if (!data.sha256.empty() && data.source.size() > 0 && fs::exists(data.source)) {
      run.input(data.source);
    }
  } else {
    const std::string path = ref.at("csv").get<std::string>();
    data = load_csv(path, bundle.schema);
    run.input(path);
  }
  const std::string recorded = manifest.value("sha256", "");
  if (!recorded.empty() && data.sha256 != recorded) {
    throw DataError("dataset " + data.source + " differs from the one the model was trained on");
  }
  const double fraction = manifest.at("split").at("fraction").get<double>();
  if (fraction >= 1.0) return data;
  return split(data, fraction, manifest.at("split").at("seed").get<std::uint64_t>()).eval;
}

int cmd_train(const TrainArgs& a, Run& run, std::ostream& out) {
  Dataset data;
  json ref;
  if (!a.data.empty() || !a.schema.empty()) {
    if (a.data.empty() || a.schema.empty()) {
      throw ConfigError("--data and --schema must be given together");
    }
    const FeatureSchema schema = load_schema_file(a.schema);
    run.input(a.schema);
    data = load_csv(a.data, schema);
    run.input(a.data);
    ref = {{"csv", a.data}, {"schema", a.schema}};
  } else {
    data = builtin(builtin_from_string(a.dataset), data_dir_of(a.data_dir));
    if (!data.sha256.empty()) run.input(data.source);
    ref = {{"builtin", a.dataset}};
  }
  const Recipe r = recipe_for(a.data.empty() ? a.dataset : "");
  const std::vector<std::size_t> hidden = a.hidden.empty() ? r.hidden : a.hidden;
  const std::size_t epochs = a.epochs ? a.epochs : r.epochs;
  const double lr = std::isnan(a.lr) ? r.lr : a.lr;
  const double fraction = a.dataset == "xor" && a.data.empty() ? 1.0 : a.split;
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("--split must lie in (0, 1]");

  Dataset train_set = data;
  std::size_t eval_rows = 0;
  if (fraction < 1.0) {
    auto s = split(data, fraction, a.split_seed);
    train_set = std::move(s.train);
    eval_rows = s.eval.size();
  }

  const bool probability = data.schema.target().kind == TargetKind::probability;
  std::vector<std::size_t> dims{data.schema.size()};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  const auto head = probability ? OutputHead::sigmoid_probability : OutputHead::linear_score;
  const auto act = activation_from_string(a.activation);

  TrainConfig cfg;
  cfg.loss.loss = probability && a.dataset != "xor" ? LossKind::binary_cross_entropy
                                                    : LossKind::squared_error;
  cfg.loss.regularizer_weight = a.l2;
  cfg.epochs = epochs;
  cfg.batch_size = a.batch;
  cfg.adam.step_size = lr;
  cfg.rng_seed = a.seed;
  cfg.validate();

  const auto samples = train_set.training_samples();
  TrainResult result = train(MlpModel::initialized(dims, act, head, a.seed), samples, cfg);
  const FeatureStats stats = fit_stats(train_set.rows);

  json manifest = dataset_manifest(train_set, &stats);
  manifest["dataset_ref"] = ref;
  manifest["split"] = {{"fraction", fraction}, {"seed", a.split_seed}};
  manifest["eval_rows"] = eval_rows;
  const json meta{{"loss", to_string(cfg.loss.loss)},
                  {"regularizer_weight", cfg.loss.regularizer_weight},
                  {"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"step_size", cfg.adam.step_size},
                  {"seed", cfg.rng_seed},
                  {"initial_loss", result.loss_trace.front()},
                  {"final_loss", result.loss_trace.back()}};
  const ModelBundle bundle = make_bundle(result.model, meta, std::move(manifest), stats);
  run.seeds = {{"train", a.seed}, {"split", a.split_seed}};

  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  save_bundle(a.out, bundle);
  run.output(a.out);

  out << "dataset: " << (a.data.empty() ? a.dataset : a.data) << " (" << train_set.size()
      << " train / " << eval_rows << " eval rows)\n";
  out << "parameters: " << result.model.parameter_count() << '\n';
  out << "initial loss: " << result.loss_trace.front() << '\n';
  out << "final loss: " << result.loss_trace.back() << '\n';
  out << "model: " << a.out << '\n';
  return kExitOk;
}

// ---- explain ---------------------------------------------------------------

struct QueryArgs {
  std::string model;
  std::string data;
  std::string data_dir;
  double target = kUnset;
  std::string metric = "l1mad";
  bool clamp = false;
  bool cap = false;
  std::size_t restarts = 4;
  std::uint64_t seed = 0;
};

struct ExplainArgs {
  QueryArgs q;
  long long row = -1;
  std::string x;
  std::size_t diverse = 1;
  std::vector<std::string> lock;
  bool show_raw = false;
  std::string quotes = "ascii";
  std::string outcome;
  std::string out;
};

void add_query_options(Binder& b, QueryArgs& q) {
  b.option("model", q.model, "Model bundle written by `train`")->required();
  b.option("data", q.data, "CSV to draw rows from (default: the model's dataset)");
  b.option("data-dir", q.data_dir, "Directory with lsat.csv / pima.csv");
  b.option("target", q.target,
           "Desired model output (default 0 for scores, 0.5 for probabilities)");
  b.option("metric", q.metric, "Distance: l2 | l2norm | l1mad")
      ->check(CLI::IsMember({"l2", "l2norm", "l1mad", "unnormalized_sq_euclidean",
                             "std_normalized_sq_euclidean", "mad_weighted_l1"}));
  b.flag("clamp-categoricals", q.clamp, "One relaxed run per categorical assignment");
  b.flag("cap-range", q.cap, "Keep every feature inside its training range");
  b.option("restarts", q.restarts, "Restarts per query");
  b.option("seed", q.seed, "Query seed");
}

double default_target(const ModelBundle& bundle, double target) {
  if (!std::isnan(target)) return target;
  return bundle.schema.target().kind == TargetKind::probability ? 0.5 : 0.0;
}

json base_body(const QueryArgs& q, const ModelBundle& bundle, const std::vector<double>& x) {
  return {{"x", x},
          {"target", default_target(bundle, q.target)},
          {"metric", q.metric},
          {"n_restarts", q.restarts},
          {"clamp_categoricals", q.clamp},
          {"cap_to_training_range", q.cap},
          {"seed", q.seed}};
}

std::string raw_point(const FeatureSchema& schema, const std::vector<double>& x) {
  std::ostringstream s;
  for (std::size_t k = 0; k < x.size(); ++k) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x[k]);
    s << (k ? ", " : "") << schema.feature(k).name << '=' << buf;
    const auto& f = schema.feature(k);
    if (f.is_categorical() && !f.valid_code(x[k])) s << " (not a category)";
  }
  return s.str();
}

int cmd_explain(const ExplainArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  const ModelBundle bundle = load_bundle(a.q.model);
  run.input(a.q.model);
  if ((a.row >= 0) == !a.x.empty()) throw ConfigError("give exactly one of --row or --x");
  std::vector<double> x;
  if (a.row >= 0) {
    const Dataset eval = reload_eval(bundle, a.q.data, a.q.data_dir, run);
    if (static_cast<std::size_t>(a.row) >= eval.size()) {
      throw ConfigError("--row " + std::to_string(a.row) + " is outside the " +
                        std::to_string(eval.size()) + " evaluation rows");
    }
    x = eval.rows[static_cast<std::size_t>(a.row)];
  } else {
    json parsed;
    try {
      parsed = json::parse(a.x);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("--x is not valid JSON: ") + e.what());
    }
    x = point_from_json(parsed, bundle.schema);
  }
  json body = base_body(a.q, bundle, x);
  body["n_diverse"] = a.diverse;
  body["locked"] = a.lock;
  body["quotes"] = a.quotes;
  if (!a.outcome.empty()) body["outcome_phrase"] = a.outcome;
  run.seeds = {{"query", a.q.seed}};

  const CfRequest request = request_from_json(body, bundle);
  const json answer = answer_request(request, bundle);
  if (!a.out.empty()) {
    write_text(a.out, answer.dump(2) + "\n");
    run.output(a.out);
  }

  out << "current: " << raw_point(bundle.schema, x) << " -> score "
      << bundle.problem().score(x) << '\n';
  if (answer.at("status") != "ok") {
    err << "no counterfactual found: " << answer.at("message").get<std::string>() << '\n';
    if (answer.at("best_effort").is_object()) {
      const auto& be = answer.at("best_effort");
      err << "best effort: score " << be.at("point").at("achieved_score").get<double>()
          << " after " << be.at("diagnostics").at("rounds").get<std::size_t>() << " rounds\n";
    }
    return kExitNotConverged;
  }
  const auto& cfs = answer.at("counterfactuals");
  const auto& explanations = answer.at("explanations");
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    out << explanations[i].at("index").get<std::size_t>() << ". "
        << explanations[i].at("statement").get<std::string>() << '\n';
    if (a.show_raw) {
      out << "   raw x': "
          << raw_point(bundle.schema, cfs[i].at("x_prime").get<std::vector<double>>())
          << "  score " << cfs[i].at("achieved_score").get<double>() << "  distance "
          << cfs[i].at("distance").get<double>() << '\n';
    }
  }
  for (const auto& [name, flagged] : answer.at("dependence").at("flags").items()) {
    if (flagged.get<bool>()) {
      out << "note: protected attribute '" << name << "' changes; "
          << answer.at("dependence").at("caveat").get<std::string>() << '\n';
    }
  }
  return kExitOk;
}

// ---- tables ----------------------------------------------------------------

struct TablesArgs {
  QueryArgs q;
  std::size_t rows = 5;
  std::vector<std::string> metrics{"l2", "l2norm", "l1mad"};
  std::string csv;
  std::string out;
};

double median_count(std::vector<double> v) { return v.empty() ? kUnset : median_of(std::move(v)); }

int cmd_tables(const TablesArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  const ModelBundle bundle = load_bundle(a.q.model);
  run.input(a.q.model);
  if (a.metrics.empty()) throw ConfigError("--metrics needs at least one metric");
  for (const auto& m : a.metrics) distance_kind_from_string(m);
  run.seeds = {{"query", a.q.seed}};
  std::vector<std::vector<double>> rows;
  if (a.rows > 0) {
    const Dataset eval = reload_eval(bundle, a.q.data, a.q.data_dir, run);
    for (std::size_t i = 0; i < std::min(a.rows, eval.size()); ++i) rows.push_back(eval.rows[i]);
  }

  const FeatureSchema& schema = bundle.schema;
  std::ostringstream csv;
  csv << "metric,row,converged,changed_count,distance,score";
  for (const auto& f : schema.features()) csv << ',' << f.name;
  csv << '\n';
  json blocks = json::array();
  bool all_converged = true;
  std::ostringstream text;
  text << std::fixed;
  for (const auto& metric : a.metrics) {
    text << "== " << metric << " ==\n";
    text << std::setw(5) << "row" << std::setw(6) << "ok" << std::setw(9) << "changed"
         << std::setw(12) << "distance" << std::setw(10) << "score";
    for (const auto& f : schema.features()) text << std::setw(12) << f.name;
    text << '\n';
    std::vector<double> counts;
    json entries = json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      json body = base_body(a.q, bundle, rows[r]);
      body["metric"] = metric;
      const json answer = answer_request(request_from_json(body, bundle), bundle);
      const bool ok = answer.at("status") == "ok";
      all_converged = all_converged && ok;
      text << std::setw(5) << r << std::setw(6) << (ok ? "yes" : "no");
      csv << metric << ',' << r << ',' << (ok ? 1 : 0);
      if (ok) {
        const auto& cf = answer.at("counterfactuals").front();
        const auto n = cf.at("changed").size();
        counts.push_back(static_cast<double>(n));
        text << std::setw(9) << n << std::setprecision(4) << std::setw(12)
             << cf.at("distance").get<double>() << std::setw(10)
             << cf.at("achieved_score").get<double>();
        csv << ',' << n << ',' << std::setprecision(9) << cf.at("distance").get<double>() << ','
            << cf.at("achieved_score").get<double>();
        for (double v : cf.at("x_prime").get<std::vector<double>>()) {
          text << std::setprecision(3) << std::setw(12) << v;
          csv << ',' << std::setprecision(9) << v;
        }
        entries.push_back({{"row", r}, {"counterfactual", cf}});
      } else {
        text << std::setw(9) << "-";
        csv << ",,," << std::string(schema.size() - 1, ',');
        err << metric << " row " << r << ": " << answer.at("message").get<std::string>() << '\n';
        entries.push_back({{"row", r}, {"counterfactual", nullptr}});
      }
      text << '\n';
      csv << '\n';
    }
    const double med = median_count(counts);
    text << "median changed features: ";
    if (std::isnan(med)) {
      text << "n/a";
    } else {
      text << std::setprecision(1) << med;
    }
    text << "  (converged " << counts.size() << "/" << rows.size() << ")\n\n";
    blocks.push_back({{"metric", metric},
                      {"rows", std::move(entries)},
                      {"median_changed", std::isnan(med) ? json(nullptr) : json(med)},
                      {"converged", counts.size()}});
  }
  out << text.str();
  if (!a.csv.empty()) {
    write_text(a.csv, csv.str());
    run.output(a.csv);
  }
  if (!a.out.empty()) {
    write_text(a.out, json{{"blocks", blocks}}.dump(2) + "\n");
    run.output(a.out);
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

// ---- appendix1 -------------------------------------------------------------

struct Appendix1Args {
  std::string out_dir = "appendix1";
  double center = kDemoCenter;
  std::vector<double> widths = kDemoHalfWidths;
  double target = -10.0;
  double compare_width = 3.0;
  std::size_t samples = 101;
};

int cmd_appendix1(const Appendix1Args& a, Run& run, std::ostream& out) {
  const auto fits = scale_sweep(demo_function, a.center, a.widths, a.samples);
  const auto fit = fit_local_linear(demo_function, a.center, a.compare_width, a.samples);
  const auto cmp =
      surrogate_prediction_vs_counterfactual(demo_function, demo_derivative, fit, a.target);
  const double span = std::max(6.0, 2.0 * *std::max_element(a.widths.begin(), a.widths.end()));
  const auto files = write_plot_data(a.out_dir, demo_function, a.center - span, a.center + span,
                                     601, fits, cmp);

  json fit_docs = json::array();
  out << "demo function f(x) = 40 sin(3x) exp(-0.1 x^2) + 8x, center " << a.center << "\n";
  out << std::setw(12) << "half_width" << std::setw(12) << "slope" << std::setw(6) << "sign"
      << std::setw(12) << "rmse\n";
  for (const auto& f : fits) {
    char line[128];
    std::snprintf(line, sizeof line, "%12.3g%12.4f%6s%11.4f\n", f.half_width(), f.slope,
                  f.slope > 0 ? "+" : f.slope < 0 ? "-" : "0", f.fit_rmse);
    out << line;
    fit_docs.push_back(fit_to_json(f));
  }
  json pairs = json::array();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      if (fits[i].slope * fits[j].slope < 0) {
        pairs.push_back({fits[i].half_width(), fits[j].half_width()});
        out << "opposite-sign slopes: half-widths " << fits[i].half_width() << " and "
            << fits[j].half_width() << '\n';
      }
    }
  }
  out << "target " << a.target << ", surrogate fitted on half-width " << a.compare_width << ":\n";
  if (cmp.surrogate_reachable) {
    out << "  surrogate suggests x = " << cmp.x_lin << ", true score there "
        << cmp.surrogate_true_score << '\n';
  } else {
    out << "  unreachable per surrogate\n";
  }
  if (cmp.cf_converged) {
    out << "  counterfactual x = " << cmp.x_cf << ", true score " << cmp.cf_true_score << '\n';
  } else {
    out << "  counterfactual search did not converge\n";
  }

  const fs::path summary = fs::path(a.out_dir) / "summary.json";
  write_text(summary, json{{"center", a.center},
                           {"fits", fit_docs},
                           {"opposite_sign_pairs", pairs},
                           {"comparison_fit", fit_to_json(fit)},
                           {"comparison", comparison_to_json(cmp)}}
                          .dump(2) +
                          "\n");
  for (const auto& p : {files.curve, files.fits, files.marker, summary}) run.output(p);
  return kExitOk;
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string registry = "registry";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_restarts = 32;
  std::size_t max_diverse = 10;
  bool parallel = false;
};

int cmd_serve(const ServeArgs& a, Run& run, std::ostream& out) {
  AuditService service(ServiceConfig{a.registry, a.max_restarts, a.max_diverse, a.parallel});
  HttpApi api(service);
  const int port = api.bind(a.host, a.port);
  run.write_manifest();
  out << "listening on http://" << a.host << ':' << port << std::endl;
  api.listen();
  return kExitOk;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const DataError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NotFoundError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const IntegrityError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  } catch (...) {
    err << "internal error\n";
    return kExitInternalError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual explanations for small neural models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.footer("Environment: RECOURSE_DATA_DIR overrides the default data directory (" +
             default_data_dir().string() + ").");

  struct Command {
    CLI::App* app;
    std::unique_ptr<Binder> binder;
    std::string config;
    std::string manifest;
  };
  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& desc) -> Command& {
    CLI::App* sub = app.add_subcommand(name, desc);
    Command& c = commands[name];
    c.app = sub;
    c.binder = std::make_unique<Binder>(sub);
    sub->add_option("--config", c.config, "JSON file of option values (flags take precedence)");
    sub->add_option("--manifest", c.manifest, "Where to write the run manifest");
    return c;
  };

  TrainArgs ta;
  {
    Binder& b = *add("train", "Train a model and write a bundle").binder;
    b.option("dataset", ta.dataset, "lsat | pima | xor | two_moons_like");
    b.option("data", ta.data, "Custom CSV (needs --schema)");
    b.option("schema", ta.schema, "Schema JSON for --data");
    b.option("data-dir", ta.data_dir, "Directory with lsat.csv / pima.csv");
    b.option("seed", ta.seed, "Weight init and minibatch seed");
    b.option("epochs", ta.epochs, "Epochs (default per dataset)");
    b.option("hidden", ta.hidden, "Hidden widths, comma separated")->delimiter(',');
    b.option("activation", ta.activation, "tanh | relu");
    b.option("lr", ta.lr, "ADAM step size");
    b.option("l2", ta.l2, "Weight decay strength");
    b.option("batch", ta.batch, "Minibatch size, 0 = full batch");
    b.option("split", ta.split, "Training fraction; the rest is held out");
    b.option("split-seed", ta.split_seed, "Seed of the train/eval split");
    b.option("out", ta.out, "Model bundle path");
  }
  ExplainArgs ea;
  {
    Binder& b = *add("explain", "Counterfactual explanations for one point").binder;
    add_query_options(b, ea.q);
    b.option("row", ea.row, "Evaluation row index");
    b.option("x", ea.x, "Point as a JSON array or object");
    b.option("diverse", ea.diverse, "Number of diverse counterfactuals");
    b.option("lock", ea.lock, "Feature to hold fixed (repeatable)");
    b.flag("show-raw", ea.show_raw, "Print raw x' values");
    b.option("quotes", ea.quotes, "ascii | typographic")
        ->check(CLI::IsMember({"ascii", "typographic"}));
    b.option("outcome", ea.outcome, "Outcome phrase; {score} and {target} are substituted");
    b.option("out", ea.out, "Write the explanation set as JSON");
  }
  TablesArgs tba;
  {
    Binder& b = *add("tables", "Compare distance metrics over evaluation rows").binder;
    add_query_options(b, tba.q);
    b.option("rows", tba.rows, "Number of evaluation rows");
    b.option("metrics", tba.metrics, "Metrics, comma separated")->delimiter(',');
    b.option("csv", tba.csv, "Also write the table as CSV");
    b.option("out", tba.out, "Write the table as JSON");
  }
  Appendix1Args aa;
  {
    Binder& b = *add("appendix1", "Local linear surrogates versus counterfactuals").binder;
    b.option("out-dir", aa.out_dir, "Directory for plot CSVs and summary.json");
    b.option("center", aa.center, "Point the surrogates are fitted around");
    b.option("widths", aa.widths, "Half-widths, comma separated")->delimiter(',');
    b.option("target", aa.target, "Score to reach");
    b.option("compare-width", aa.compare_width, "Half-width of the compared surrogate");
    b.option("samples", aa.samples, "Samples per fit");
  }
  ServeArgs sa;
  {
    Binder& b = *add("serve", "Run the auditing HTTP service").binder;
    b.option("registry", sa.registry, "Registry and audit log directory");
    b.option("host", sa.host, "Bind address");
    b.option("port", sa.port, "Port (0 picks a free one)");
    b.option("max-restarts", sa.max_restarts, "Per-request restart cap");
    b.option("max-diverse", sa.max_diverse, "Per-request diverse-set cap");
    b.flag("parallel", sa.parallel, "Run restarts on separate threads");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  std::string name;
  for (auto& [n, c] : commands) {
    if (c.app->parsed()) name = n;
  }
  Command& c = commands.at(name);
  Run run;
  run.command = name;
  run.binder = c.binder.get();
  run.config_path = c.config;
  try {
    if (!c.config.empty()) {
      c.binder->apply(read_json_file(c.config));
      run.input(c.config);
    }
    std::string out_path;
    if (name == "train") out_path = ta.out;
    if (name == "explain") out_path = ea.out;
    if (name == "tables") out_path = tba.out;
    if (name == "appendix1") out_path = (fs::path(aa.out_dir) / "summary.json").string();
    run.manifest_path = c.manifest.empty() ? default_manifest(name, out_path) : c.manifest;

    int code = kExitOk;
    if (name == "train") code = cmd_train(ta, run, out);
    if (name == "explain") code = cmd_explain(ea, run, out, err);
    if (name == "tables") code = cmd_tables(tba, run, out, err);
    if (name == "appendix1") code = cmd_appendix1(aa, run, out);
    if (name == "serve") return cmd_serve(sa, run, out);
    run.write_manifest();
    return code;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace recourse
