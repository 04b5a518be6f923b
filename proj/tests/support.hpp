#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "recourse/bundle.hpp"
#include "recourse/cli.hpp"
#include "recourse/datasets.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("recourse-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = recourse::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

inline fs::path data_dir() { return RECOURSE_TEST_DATA_DIR; }

// Trains a builtin dataset through the CLI and loads the bundle.
inline recourse::ModelBundle train_builtin(const std::string& dataset, const TempDir& dir,
                                           const std::vector<std::string>& extra = {}) {
  const auto model = (dir / (dataset + ".json")).string();
  std::vector<std::string> args{"train",      "--dataset", dataset,
                                "--data-dir", data_dir().string(), "--seed",
                                "7",          "--out",     model};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = cli(args);
  if (r.code != 0) throw std::runtime_error("training " + dataset + " failed: " + r.err);
  return recourse::load_bundle(model);
}

// The held-out rows of a builtin bundle, in split order.
inline std::vector<std::vector<double>> eval_rows(const recourse::ModelBundle& bundle,
                                                  std::size_t n) {
  const auto& m = bundle.manifest;
  const auto data = recourse::builtin(
      recourse::builtin_from_string(m.at("dataset_ref").at("builtin").get<std::string>()),
      data_dir());
  const auto s = recourse::split(data, m.at("split").at("fraction").get<double>(),
                                 m.at("split").at("seed").get<std::uint64_t>());
  std::vector<std::vector<double>> rows(s.eval.rows.begin(),
                                        s.eval.rows.begin() +
                                            static_cast<long>(std::min(n, s.eval.size())));
  return rows;
}

}  // namespace testsupport
