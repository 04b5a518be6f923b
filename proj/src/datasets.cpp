#include "recourse/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "recourse/errors.hpp"
#include "recourse/hash.hpp"

#ifndef RECOURSE_DEFAULT_DATA_DIR
#define RECOURSE_DEFAULT_DATA_DIR "data"
#endif

namespace recourse {

using nlohmann::json;

std::vector<LabeledSample> Dataset::training_samples() const {
  std::vector<LabeledSample> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({standardization.standardize(rows[i]),
                   standardization.standardize_target(labels[i])});
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size() && std::isfinite(out);
}

double parse_feature_cell(const FeatureSpec& f, std::string_view cell, std::size_t row) {
  double value = 0.0;
  if (f.is_categorical()) {
    for (const auto& c : f.categories) {
      if (cell == c.label) return c.code;
    }
    if (!parse_number(cell, value)) {
      throw DataError("row " + std::to_string(row) + ", column '" + f.name +
                          "': '" + std::string(cell) + "' is not a category code or label",
                      row, f.name);
    }
    if (!f.valid_code(value)) {
      throw DataError("row " + std::to_string(row) + ", column '" + f.name +
                          "': invalid category code " + std::string(cell),
                      row, f.name);
    }
    return value;
  }
  if (!parse_number(cell, value)) {
    throw DataError("row " + std::to_string(row) + ", column '" + f.name + "': '" +
                        std::string(cell) + "' is not a finite number",
                    row, f.name);
  }
  return value;
}

}  // namespace

Dataset parse_csv(std::string_view text, const FeatureSchema& schema, std::string source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  auto blank = [](std::string_view l) { return trim(l).empty(); };
  auto header_it = std::find_if_not(lines.begin(), lines.end(), blank);
  if (header_it == lines.end()) throw DataError("CSV is empty: " + source);
  if (header_it->size() >= 3 && header_it->substr(0, 3) == "\xEF\xBB\xBF") {
    header_it->remove_prefix(3);
  }

  const auto header = split_line(*header_it);
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t c = 0; c < header.size(); ++c) column.emplace(std::string(header[c]), c);
  std::vector<std::size_t> feature_col;
  for (const auto& f : schema.features()) {
    const auto it = column.find(f.name);
    if (it == column.end()) throw DataError("missing column '" + f.name + "'", 0, f.name);
    feature_col.push_back(it->second);
  }
  const auto target_it = column.find(schema.target().name);
  if (target_it == column.end()) {
    throw DataError("missing target column '" + schema.target().name + "'", 0,
                    schema.target().name);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t row = 0;
  for (auto it = std::next(header_it); it != lines.end(); ++it) {
    if (blank(*it)) continue;
    ++row;
    const auto cells = split_line(*it);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(header.size()),
                      row);
    }
    std::vector<double> x(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k) {
      x[k] = parse_feature_cell(schema.feature(k), cells[feature_col[k]], row);
    }
    double y = 0.0;
    if (!parse_number(cells[target_it->second], y)) {
      throw DataError("row " + std::to_string(row) + ", column '" + schema.target().name +
                          "': target is not a finite number",
                      row, schema.target().name);
    }
    if (schema.target().kind == TargetKind::probability && (y < 0.0 || y > 1.0)) {
      throw DataError("row " + std::to_string(row) + ": probability target outside [0, 1]",
                      row, schema.target().name);
    }
    rows.push_back(std::move(x));
    labels.push_back(y);
  }
  if (rows.empty()) throw DataError("no rows in " + source);

  Dataset d = make_dataset(schema, std::move(rows), std::move(labels), std::move(source));
  d.sha256 = sha256_hex(text);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_csv(text, schema, path.string());
}

Dataset make_dataset(FeatureSchema schema, std::vector<std::vector<double>> rows,
                     std::vector<double> labels, std::string source) {
  if (rows.empty()) throw DataError("no rows in " + source);
  if (rows.size() != labels.size()) throw DataError("row and label counts differ");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != schema.size()) {
      throw DataError("row " + std::to_string(i + 1) + " does not match the schema width",
                      i + 1);
    }
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const auto& f = schema.feature(k);
      if (f.is_categorical() && !f.valid_code(rows[i][k])) {
        throw DataError("row " + std::to_string(i + 1) + ", column '" + f.name +
                            "': invalid category code",
                        i + 1, f.name);
      }
    }
  }
  Dataset d;
  d.standardization = Standardization::fit(schema, rows, labels);
  d.schema = std::move(schema);
  d.rows = std::move(rows);
  d.labels = std::move(labels);
  d.source = std::move(source);
  return d;
}

DatasetSplit split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(data.size()))),
      1, data.size() - 1);

  auto take = [&](std::size_t from, std::size_t to) {
    Dataset d;
    d.schema = data.schema;
    d.sha256 = data.sha256;
    d.source = data.source;
    for (std::size_t i = from; i < to; ++i) {
      d.rows.push_back(data.rows[order[i]]);
      d.labels.push_back(data.labels[order[i]]);
    }
    return d;
  };
  DatasetSplit s{take(0, n_train), take(n_train, data.size())};
  s.train.standardization = Standardization::fit(s.train.schema, s.train.rows, s.train.labels);
  s.eval.standardization = s.train.standardization;
  return s;
}

BuiltinDataset builtin_from_string(std::string_view name) {
  if (name == "lsat") return BuiltinDataset::lsat;
  if (name == "pima") return BuiltinDataset::pima;
  if (name == "xor") return BuiltinDataset::xor_gate;
  if (name == "two_moons_like") return BuiltinDataset::two_moons_like;
  throw ConfigError("unknown builtin dataset '" + std::string(name) +
                    "' (expected lsat, pima, xor or two_moons_like)");
}

std::string_view to_string(BuiltinDataset which) {
  switch (which) {
    case BuiltinDataset::lsat: return "lsat";
    case BuiltinDataset::pima: return "pima";
    case BuiltinDataset::xor_gate: return "xor";
    case BuiltinDataset::two_moons_like: return "two_moons_like";
  }
  return "?";
}

FeatureSchema lsat_schema() {
  std::vector<FeatureSpec> f(3);
  f[0].name = "GPA";
  f[0].label = "GPA";
  f[0].unit = "grade points";
  f[1].name = "LSAT";
  f[1].label = "LSAT";
  f[1].unit = "exam points";
  f[2].name = "race";
  f[2].label = "race";
  f[2].kind = FeatureKind::categorical;
  f[2].categories = {{0, "white"}, {1, "black"}};
  f[2].protected_attribute = true;
  return FeatureSchema(std::move(f), {"FYA", TargetKind::score});
}

FeatureSchema pima_schema() {
  const std::vector<std::array<const char*, 3>> cols = {
      {"Pregnancies", "Number of pregnancies", "count"},
      {"Glucose", "Plasma glucose concentration", "mg/dL"},
      {"BloodPressure", "Diastolic blood pressure", "mm Hg"},
      {"SkinThickness", "Triceps skin fold thickness", "mm"},
      {"Insulin", "2-Hour serum insulin level", "mu U/ml"},
      {"BMI", "Body mass index", "kg/m^2"},
      {"DiabetesPedigreeFunction", "Diabetes pedigree function", ""},
      {"Age", "Age", "years"},
  };
  std::vector<FeatureSpec> f;
  for (const auto& [name, label, unit] : cols) {
    FeatureSpec spec;
    spec.name = name;
    spec.label = label;
    spec.unit = unit;
    f.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(f), {"Outcome", TargetKind::probability});
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("RECOURSE_DATA_DIR"); env && *env) return env;
  return RECOURSE_DEFAULT_DATA_DIR;
}

namespace {

Dataset xor_dataset() {
  std::vector<FeatureSpec> f(2);
  f[0].name = "x1";
  f[1].name = "x2";
  FeatureSchema schema(std::move(f), {"y", TargetKind::probability});
  return make_dataset(std::move(schema), {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0},
                      "xor");
}

Dataset two_moons_dataset() {
  std::vector<FeatureSpec> f(2);
  f[0].name = "x1";
  f[1].name = "x2";
  FeatureSchema schema(std::move(f), {"y", TargetKind::probability});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  constexpr int kPerMoon = 100;
  for (int i = 0; i < kPerMoon; ++i) {
    const double t = std::numbers::pi * i / (kPerMoon - 1);
    rows.push_back({std::cos(t) + noise(rng), std::sin(t) + noise(rng)});
    labels.push_back(0.0);
    rows.push_back({1.0 - std::cos(t) + noise(rng), 0.5 - std::sin(t) + noise(rng)});
    labels.push_back(1.0);
  }
  return make_dataset(std::move(schema), std::move(rows), std::move(labels),
                      "two_moons_like");
}

}  // namespace

Dataset builtin(BuiltinDataset which, const std::filesystem::path& data_dir) {
  switch (which) {
    case BuiltinDataset::xor_gate: return xor_dataset();
    case BuiltinDataset::two_moons_like: return two_moons_dataset();
    case BuiltinDataset::lsat:
    case BuiltinDataset::pima: break;
  }
  const std::string name(to_string(which));
  const auto path = data_dir / (name + ".csv");
  if (!std::filesystem::exists(path)) {
    throw DataError(
        "dataset file " + path.string() + " not found. Place a CSV with columns " +
        (which == BuiltinDataset::lsat
             ? std::string("GPA,LSAT,race,FYA (race coded 0=white, 1=black)")
             : std::string("Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,"
                           "DiabetesPedigreeFunction,Age,Outcome")) +
        " there, or point RECOURSE_DATA_DIR at a directory containing " + name +
        ".csv; data/generate_surrogate_data.py regenerates the bundled copies");
  }
  return load_csv(path, which == BuiltinDataset::lsat ? lsat_schema() : pima_schema());
}

json dataset_manifest(const Dataset& data, const FeatureStats* stats) {
  json m{{"schema", schema_to_json(data.schema)},
         {"row_count", data.size()},
         {"standardization", standardization_to_json(data.standardization)},
         {"sha256", data.sha256},
         {"source", data.source}};
  if (stats) m["stats"] = stats_to_json(*stats);
  return m;
}

}  // namespace recourse
