#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "recourse/bundle.hpp"

namespace recourse {

struct ServiceConfig {
  std::filesystem::path data_dir;
  // Cost knobs: requests above these limits are rejected.
  std::size_t max_restarts = 32;
  std::size_t max_diverse = 10;
  bool parallel_restarts = false;
};

struct ModelRef {
  std::string model_id;
  int version = 0;
};

struct ReplayReport {
  std::size_t checked = 0;
  std::vector<std::int64_t> mismatched;  // record ids

  bool ok() const { return mismatched.empty(); }
};

// Versioned model registry plus append-only audit log, persisted under
// data_dir as
//   models/<model_id>/v<version>.json   immutable, written atomically
//   audit/<model_id>.jsonl              one record per line
// Thread-safe: registrations are exclusive, reads shared, and audit appends
// are serialized per model.
class AuditService {
 public:
  // Loads and verifies every archived model. Throws IntegrityError when an
  // archived file fails its hash.
  explicit AuditService(ServiceConfig config);

  // Payload: a model bundle ({"model", "manifest", "stats"}) with an optional
  // "model_id" (default: derived from the model hash). Returns the new ref.
  ModelRef register_model(const nlohmann::json& payload);

  nlohmann::json list_models() const;
  // The archived record, exactly as stored.
  nlohmann::json get_model(const std::string& model_id, int version) const;
  std::string get_model_text(const std::string& model_id, int version) const;

  // {"x": ...} -> {"model_id", "version", "score", "record_id"}
  nlohmann::json predict(const std::string& model_id, int version, const nlohmann::json& body);
  // Counterfactual request (see cf_json.hpp) -> explanation set.
  nlohmann::json counterfactuals(const std::string& model_id, int version,
                                 const nlohmann::json& body);

  // Records of (model_id, version) with record_id > after, oldest first.
  nlohmann::json audit(const std::string& model_id, int version, std::int64_t after = 0) const;

  // Recomputes every logged response of model_id from its archived inputs.
  ReplayReport replay(const std::string& model_id) const;

  const ServiceConfig& config() const { return config_; }

 private:
  struct Entry {
    ModelRef ref;
    std::string text;  // file bytes
    std::shared_ptr<const ModelBundle> bundle;
  };
  struct Log {
    std::mutex mutex;
    std::int64_t last_id = 0;
  };

  std::shared_ptr<const ModelBundle> lookup(const std::string& model_id, int version) const;
  nlohmann::json compute(const std::string& kind, const ModelBundle& bundle,
                         const nlohmann::json& body) const;
  nlohmann::json logged(const std::string& model_id, int version, const std::string& kind,
                        const nlohmann::json& body);
  Log& log_for(const std::string& model_id) const;
  std::filesystem::path audit_path(const std::string& model_id) const;
  std::vector<nlohmann::json> read_log(const std::string& model_id) const;

  ServiceConfig config_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::map<int, Entry>> models_;
  mutable std::mutex logs_mutex_;
  mutable std::map<std::string, std::unique_ptr<Log>> logs_;
};

// True for [A-Za-z0-9_.-]{1,64} without a leading dot.
bool valid_model_id(const std::string& id);

// UTC, second resolution: 2024-01-31T12:00:00Z
std::string utc_timestamp();

}  // namespace recourse
