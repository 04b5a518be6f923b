#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "recourse/metrics.hpp"
#include "recourse/mlp.hpp"
#include "recourse/schema.hpp"

namespace recourse {

// Rows in original units plus the standardization fitted on them (or on the
// training half of a split).
struct Dataset {
  FeatureSchema schema;
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  Standardization standardization;
  std::string sha256;  // of the source bytes; empty for in-memory fixtures
  std::string source;  // path or builtin name

  std::size_t size() const { return rows.size(); }
  // Model-space samples: standardized inputs and standardized targets.
  std::vector<LabeledSample> training_samples() const;
};

// Reads a header-first CSV. Every schema feature and the target must appear
// in the header (extra columns are ignored). Categorical cells may hold the
// integer code or the category label. Throws DataError naming the row and
// column of the first bad cell; never returns a partial dataset.
Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);
Dataset parse_csv(std::string_view text, const FeatureSchema& schema,
                  std::string source = "<memory>");

// Builds a dataset from in-memory rows and fits its standardization.
Dataset make_dataset(FeatureSchema schema, std::vector<std::vector<double>> rows,
                     std::vector<double> labels, std::string source = "<memory>");

struct DatasetSplit {
  Dataset train;
  Dataset eval;
};

// Seeded shuffle split. Standardization is fitted on the training rows only
// and copied to the evaluation half.
DatasetSplit split(const Dataset& data, double train_fraction, std::uint64_t seed);

enum class BuiltinDataset { lsat, pima, xor_gate, two_moons_like };
BuiltinDataset builtin_from_string(std::string_view name);
std::string_view to_string(BuiltinDataset which);

FeatureSchema lsat_schema();
FeatureSchema pima_schema();

// Directory holding lsat.csv and pima.csv: $RECOURSE_DATA_DIR if set, else
// the compiled-in default.
std::filesystem::path default_data_dir();

// lsat/pima read <data_dir>/<name>.csv against the fixed schema and throw
// DataError with fetch instructions when the file is missing; xor and
// two_moons_like are generated in memory.
Dataset builtin(BuiltinDataset which,
                const std::filesystem::path& data_dir = default_data_dir());

// {schema, row_count, standardization, sha256, source[, stats]}
nlohmann::json dataset_manifest(const Dataset& data, const FeatureStats* stats = nullptr);

}  // namespace recourse
