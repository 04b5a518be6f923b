#include "recourse/audit_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "recourse/cf_json.hpp"
#include "recourse/errors.hpp"
#include "recourse/hash.hpp"
#include "recourse/model_io.hpp"

namespace fs = std::filesystem;

namespace recourse {

bool valid_model_id(const std::string& id) {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string bundle_hash(const nlohmann::json& bundle) {
  return sha256_hex(canonical_dump(bundle));
}

// Parses and verifies an archived record.
std::shared_ptr<const ModelBundle> verify_record(const nlohmann::json& record) {
  const auto& bundle = record.at("bundle");
  if (bundle_hash(bundle) != record.at("bundle_hash").get<std::string>()) {
    throw IntegrityError("archived bundle hash mismatch for " +
                         record.at("model_id").get<std::string>() + " v" +
                         std::to_string(record.at("version").get<int>()));
  }
  auto b = std::make_shared<ModelBundle>(bundle_from_json(bundle));
  if (b->content_hash() != record.at("content_hash").get<std::string>()) {
    throw IntegrityError("archived model hash mismatch");
  }
  return b;
}

int parse_version(const std::string& stem) {
  if (stem.size() < 2 || stem[0] != 'v') return 0;
  int v = 0;
  for (std::size_t i = 1; i < stem.size(); ++i) {
    if (stem[i] < '0' || stem[i] > '9' || v > 100000000) return 0;
    v = v * 10 + (stem[i] - '0');
  }
  return v;
}

}  // namespace

AuditService::AuditService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.data_dir.empty()) throw ConfigError("service data directory is not set");
  fs::create_directories(config_.data_dir / "models");
  fs::create_directories(config_.data_dir / "audit");
  for (const auto& dir : fs::directory_iterator(config_.data_dir / "models")) {
    if (!dir.is_directory()) continue;
    const std::string id = dir.path().filename().string();
    if (!valid_model_id(id)) continue;
    for (const auto& file : fs::directory_iterator(dir.path())) {
      if (file.path().extension() != ".json") continue;
      const int version = parse_version(file.path().stem().string());
      if (version <= 0) continue;
      Entry e{{id, version}, read_text(file.path()), nullptr};
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(e.text);
      } catch (const nlohmann::json::parse_error&) {
        throw IntegrityError("archived model " + file.path().string() + " is not valid JSON");
      }
      if (record.at("model_id") != id || record.at("version") != version) {
        throw IntegrityError("archived model " + file.path().string() +
                             " does not match its location");
      }
      e.bundle = verify_record(record);
      models_[id].emplace(version, std::move(e));
    }
  }
}

ModelRef AuditService::register_model(const nlohmann::json& payload) {
  if (!payload.is_object()) throw ConfigError("registration body must be a JSON object");
  nlohmann::json bundle_doc = payload;
  std::string id;
  if (bundle_doc.contains("model_id")) {
    if (!bundle_doc.at("model_id").is_string()) throw ConfigError("model_id must be a string");
    id = bundle_doc.at("model_id").get<std::string>();
    bundle_doc.erase("model_id");
    if (!valid_model_id(id)) throw ConfigError("invalid model_id '" + id + "'");
  }
  auto bundle = std::make_shared<ModelBundle>(bundle_from_json(bundle_doc));
  // Normalize to the three bundle fields so the archive holds exactly what
  // is served.
  bundle_doc = bundle_to_json(*bundle);
  if (id.empty()) id = "m" + bundle->content_hash().substr(0, 12);

  std::unique_lock lock(registry_mutex_);
  auto& versions = models_[id];
  const int version = versions.empty() ? 1 : versions.rbegin()->first + 1;
  const nlohmann::json record{{"model_id", id},
                              {"version", version},
                              {"created_at", utc_timestamp()},
                              {"content_hash", bundle->content_hash()},
                              {"bundle_hash", bundle_hash(bundle_doc)},
                              {"bundle", bundle_doc}};
  Entry e{{id, version}, canonical_dump(record) + "\n", bundle};
  fs::create_directories(config_.data_dir / "models" / id);
  write_atomic(config_.data_dir / "models" / id / ("v" + std::to_string(version) + ".json"),
               e.text);
  versions.emplace(version, std::move(e));
  return {id, version};
}

nlohmann::json AuditService::list_models() const {
  std::shared_lock lock(registry_mutex_);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, versions] : models_) {
    for (const auto& [version, e] : versions) {
      nlohmann::json features = nlohmann::json::array();
      for (const auto& f : e.bundle->schema.features()) features.push_back(f.name);
      out.push_back({{"model_id", id},
                     {"version", version},
                     {"content_hash", e.bundle->content_hash()},
                     {"features", std::move(features)},
                     {"target", e.bundle->schema.target().name}});
    }
  }
  return out;
}

std::string AuditService::get_model_text(const std::string& model_id, int version) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = models_.find(model_id);
  if (it == models_.end()) throw NotFoundError("unknown model '" + model_id + "'");
  const auto v = it->second.find(version);
  if (v == it->second.end()) {
    throw NotFoundError("model '" + model_id + "' has no version " + std::to_string(version));
  }
  return v->second.text;
}

nlohmann::json AuditService::get_model(const std::string& model_id, int version) const {
  return nlohmann::json::parse(get_model_text(model_id, version));
}

std::shared_ptr<const ModelBundle> AuditService::lookup(const std::string& model_id,
                                                        int version) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = models_.find(model_id);
  if (it == models_.end()) throw NotFoundError("unknown model '" + model_id + "'");
  const auto v = it->second.find(version);
  if (v == it->second.end()) {
    throw NotFoundError("model '" + model_id + "' has no version " + std::to_string(version));
  }
  return v->second.bundle;
}

nlohmann::json AuditService::compute(const std::string& kind, const ModelBundle& bundle,
                                     const nlohmann::json& body) const {
  if (!body.is_object()) throw ConfigError("request body must be a JSON object");
  if (kind == "predict") {
    if (!body.contains("x")) throw ConfigError("request needs 'x'");
    const auto x = point_from_json(body.at("x"), bundle.schema);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto& f = bundle.schema.feature(k);
      if (!std::isfinite(x[k])) throw ShapeError("non-finite value for '" + f.name + "'");
      if (f.is_categorical() && !f.valid_code(x[k])) {
        throw ConfigError("value for '" + f.name + "' is not a valid category code");
      }
    }
    const double score = bundle.problem().score(x);
    nlohmann::json out{{"score", score}};
    if (bundle.schema.target().kind == TargetKind::score) {
      out["score_original_units"] = bundle.standardization.destandardize_target(score);
    }
    return out;
  }
  CfRequest request = request_from_json(body, bundle);
  if (request.query.n_restarts > config_.max_restarts) {
    throw ConfigError("n_restarts exceeds the service limit of " +
                      std::to_string(config_.max_restarts));
  }
  if (request.query.n_diverse > config_.max_diverse) {
    throw ConfigError("n_diverse exceeds the service limit of " +
                      std::to_string(config_.max_diverse));
  }
  request.query.options.parallel = config_.parallel_restarts;
  return answer_request(request, bundle);
}

std::filesystem::path AuditService::audit_path(const std::string& model_id) const {
  return config_.data_dir / "audit" / (model_id + ".jsonl");
}

std::vector<nlohmann::json> AuditService::read_log(const std::string& model_id) const {
  std::vector<nlohmann::json> out;
  std::ifstream in(audit_path(model_id));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      throw IntegrityError("corrupt audit log line for " + model_id);
    }
  }
  return out;
}

AuditService::Log& AuditService::log_for(const std::string& model_id) const {
  std::lock_guard lock(logs_mutex_);
  auto& slot = logs_[model_id];
  if (!slot) {
    slot = std::make_unique<Log>();
    for (const auto& r : read_log(model_id)) {
      slot->last_id = std::max(slot->last_id, r.at("record_id").get<std::int64_t>());
    }
  }
  return *slot;
}

nlohmann::json AuditService::logged(const std::string& model_id, int version,
                                    const std::string& kind, const nlohmann::json& body) {
  const auto bundle = lookup(model_id, version);
  nlohmann::json response = compute(kind, *bundle, body);
  response["model_id"] = model_id;
  response["version"] = version;

  Log& log = log_for(model_id);
  std::lock_guard lock(log.mutex);
  const std::int64_t id = log.last_id + 1;
  response["record_id"] = id;
  const nlohmann::json record{{"record_id", id},     {"model_id", model_id},
                              {"version", version},  {"kind", kind},
                              {"request", body},     {"response", response},
                              {"timestamp", utc_timestamp()}};
  std::ofstream out(audit_path(model_id), std::ios::app | std::ios::binary);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed to append to the audit log of " + model_id);
  log.last_id = id;
  return response;
}

nlohmann::json AuditService::predict(const std::string& model_id, int version,
                                     const nlohmann::json& body) {
  return logged(model_id, version, "predict", body);
}

nlohmann::json AuditService::counterfactuals(const std::string& model_id, int version,
                                             const nlohmann::json& body) {
  return logged(model_id, version, "counterfactual", body);
}

nlohmann::json AuditService::audit(const std::string& model_id, int version,
                                   std::int64_t after) const {
  lookup(model_id, version);
  Log& log = log_for(model_id);
  std::lock_guard lock(log.mutex);
  nlohmann::json out = nlohmann::json::array();
  for (auto& r : read_log(model_id)) {
    if (r.at("version") == version && r.at("record_id").get<std::int64_t>() > after) {
      out.push_back(std::move(r));
    }
  }
  return out;
}

ReplayReport AuditService::replay(const std::string& model_id) const {
  Log& log = log_for(model_id);
  std::vector<nlohmann::json> records;
  {
    std::lock_guard lock(log.mutex);
    records = read_log(model_id);
  }
  ReplayReport report;
  for (const auto& r : records) {
    const int version = r.at("version").get<int>();
    nlohmann::json again = compute(r.at("kind").get<std::string>(),
                                   *lookup(model_id, version), r.at("request"));
    again["model_id"] = model_id;
    again["version"] = version;
    again["record_id"] = r.at("record_id");
    ++report.checked;
    if (canonical_dump(again) != canonical_dump(r.at("response"))) {
      report.mismatched.push_back(r.at("record_id").get<std::int64_t>());
    }
  }
  return report;
}

}  // namespace recourse
