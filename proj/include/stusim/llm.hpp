#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stusim/errors.hpp"
#include "stusim/records.hpp"
#include "stusim/text.hpp"

namespace stusim {

// ============================================================================
// Roles and requests
// ============================================================================

/// The nine model roles. judge exists for evaluation only; the other eight
/// carry the pipeline stages.
enum class ModelRole { desc, node, edge, local, global, pred, refine, value, judge };

inline std::string to_string(ModelRole role) {
  switch (role) {
    case ModelRole::desc: return "desc";
    case ModelRole::node: return "node";
    case ModelRole::edge: return "edge";
    case ModelRole::local: return "local";
    case ModelRole::global: return "global";
    case ModelRole::pred: return "pred";
    case ModelRole::refine: return "refine";
    case ModelRole::value: return "value";
    case ModelRole::judge: return "judge";
  }
  return "desc";
}

inline ModelRole model_role_from_string(const std::string& text) {
  if (text == "desc") return ModelRole::desc;
  if (text == "node") return ModelRole::node;
  if (text == "edge") return ModelRole::edge;
  if (text == "local") return ModelRole::local;
  if (text == "global") return ModelRole::global;
  if (text == "pred") return ModelRole::pred;
  if (text == "refine") return ModelRole::refine;
  if (text == "value") return ModelRole::value;
  if (text == "judge") return ModelRole::judge;
  throw FormatError("unknown model role '" + text + "'");
}

struct InvocationRequest {
  ModelRole role = ModelRole::desc;
  std::string prompt;
  double temperature = 0.0;
  int sample_count = 1;
};

/// Temperature 0 everywhere except refine; multi-sampling only on refine.
inline void validate_request(const InvocationRequest& request) {
  if (request.sample_count < 1)
    throw ContractError("sample_count must be >= 1 (role " + to_string(request.role) + ")");
  if (request.role != ModelRole::refine) {
    if (request.temperature != 0.0)
      throw ContractError("temperature must be 0 for role " + to_string(request.role));
    if (request.sample_count != 1)
      throw ContractError("sample_count > 1 is only allowed for role refine (got role " +
                          to_string(request.role) + ")");
  }
  if (request.temperature < 0.0) throw ContractError("temperature must be >= 0");
}

/// Where a call came from; recorded verbatim in the run log.
struct CallContext {
  std::string student_id;
  std::string stage;
};

struct InvocationLogEntry {
  std::uint64_t call_index = 0;
  std::string timestamp;  // ISO-8601 UTC
  std::string student_id;
  std::string stage;
  InvocationRequest request;
  std::vector<std::string> responses;
  std::string error;  // empty on success
};

inline std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

inline nlohmann::json log_entry_to_json(const InvocationLogEntry& entry) {
  nlohmann::json j{{"call_index", entry.call_index},
                   {"timestamp", entry.timestamp},
                   {"student_id", entry.student_id},
                   {"stage", entry.stage},
                   {"role", to_string(entry.request.role)},
                   {"temperature", entry.request.temperature},
                   {"sample_count", entry.request.sample_count},
                   {"prompt", entry.request.prompt},
                   {"responses", entry.responses}};
  if (!entry.error.empty()) j["error"] = entry.error;
  return j;
}

inline InvocationLogEntry log_entry_from_json(const nlohmann::json& j) {
  InvocationLogEntry entry;
  entry.call_index = j.at("call_index").get<std::uint64_t>();
  entry.timestamp = j.at("timestamp").get<std::string>();
  entry.student_id = j.at("student_id").get<std::string>();
  entry.stage = j.at("stage").get<std::string>();
  entry.request.role = model_role_from_string(j.at("role").get<std::string>());
  entry.request.temperature = j.at("temperature").get<double>();
  entry.request.sample_count = j.at("sample_count").get<int>();
  entry.request.prompt = j.at("prompt").get<std::string>();
  entry.responses = j.at("responses").get<std::vector<std::string>>();
  entry.error = j.value("error", std::string());
  return entry;
}

// ============================================================================
// Backends
// ============================================================================

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  /// Returns exactly request.sample_count completions or throws.
  virtual std::vector<std::string> complete(const InvocationRequest& request) = 0;

  /// Short descriptor for manifests ("scripted:<path>", "live:<model>").
  virtual std::string describe() const = 0;
};

/// Deterministic fixture-replay backend.
///
/// Each fixture entry is keyed by (role, match key). The match key is either
/// the FNV-1a 64 digest of the fully rendered prompt or an ordinal counting
/// that role's non-digest-matched calls. Digest entries are checked first.
/// With cycle_roles enabled, ordinal lookups wrap around per role, which lets
/// one compact fixture serve grids of configurations.
class ScriptedBackend final : public CompletionBackend {
 public:
  ScriptedBackend() = default;

  static std::shared_ptr<ScriptedBackend> from_fixture(const std::filesystem::path& path) {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->source_ = path.string();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("fixture file " + path.string() + ": " + e.what());
    }
    const nlohmann::json* entries = nullptr;
    if (j.is_array()) {
      entries = &j;
    } else if (j.is_object()) {
      backend->cycle_roles_ = j.value("cycle_roles", false);
      auto it = j.find("entries");
      if (it == j.end() || !it->is_array())
        throw FormatError("fixture file " + path.string() + ": missing 'entries' array");
      entries = &*it;
    } else {
      throw FormatError("fixture file " + path.string() + ": expected array or object");
    }
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const nlohmann::json& e = (*entries)[i];
      const std::string locus = "fixture file " + path.string() + ", entry " + std::to_string(i);
      if (!e.is_object()) throw FormatError(locus + ": expected an object");
      if (!e.contains("role") || !e.at("role").is_string())
        throw FormatError(locus + ": missing string field 'role'");
      const ModelRole role = model_role_from_string(e.at("role").get<std::string>());
      if (!e.contains("responses") || !e.at("responses").is_array())
        throw FormatError(locus + ": missing array field 'responses'");
      std::vector<std::string> responses;
      for (const nlohmann::json& r : e.at("responses")) {
        if (!r.is_string()) throw FormatError(locus + ": responses must be strings");
        responses.push_back(r.get<std::string>());
      }
      if (responses.empty()) throw FormatError(locus + ": responses must be non-empty");
      if (!e.contains("match") || !e.at("match").is_object())
        throw FormatError(locus + ": missing object field 'match'");
      const nlohmann::json& match = e.at("match");
      if (match.contains("digest")) {
        backend->add_digest(role, match.at("digest").get<std::string>(), std::move(responses));
      } else if (match.contains("ordinal")) {
        if (!match.at("ordinal").is_number_integer())
          throw FormatError(locus + ": match.ordinal must be an integer");
        backend->add_ordinal_at(role, match.at("ordinal").get<std::uint64_t>(),
                                std::move(responses));
      } else {
        throw FormatError(locus + ": match must contain 'digest' or 'ordinal'");
      }
    }
    return backend;
  }

  void add_digest(ModelRole role, const std::string& digest, std::vector<std::string> responses) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(role, digest);
    if (!digest_entries_.emplace(key, std::move(responses)).second)
      throw FormatError("duplicate fixture key (role " + to_string(role) + ", digest " + digest +
                        ")");
  }

  /// Convenience for tests: keys by the digest of the given prompt.
  void add_prompt(ModelRole role, const std::string& prompt, std::vector<std::string> responses) {
    add_digest(role, fnv1a64_hex(prompt), std::move(responses));
  }

  void add_ordinal_at(ModelRole role, std::uint64_t ordinal, std::vector<std::string> responses) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(role, ordinal);
    if (!ordinal_entries_.emplace(key, std::move(responses)).second)
      throw FormatError("duplicate fixture key (role " + to_string(role) + ", ordinal " +
                        std::to_string(ordinal) + ")");
  }

  /// Appends at the next unused ordinal for the role.
  void add_ordinal(ModelRole role, std::vector<std::string> responses) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::uint64_t next = 0;
    for (const auto& [key, value] : ordinal_entries_)
      if (key.first == role && key.second >= next) next = key.second + 1;
    ordinal_entries_.emplace(std::make_pair(role, next), std::move(responses));
  }

  void set_cycling(bool on) {
    std::lock_guard<std::mutex> lock(mutex_);
    cycle_roles_ = on;
  }

  std::vector<std::string> complete(const InvocationRequest& request) override {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string digest = fnv1a64_hex(request.prompt);
    auto by_digest = digest_entries_.find(std::make_pair(request.role, digest));
    if (by_digest != digest_entries_.end())
      return take(by_digest->second, request, digest);

    std::uint64_t role_count = 0;
    for (const auto& [key, value] : ordinal_entries_)
      if (key.first == request.role) ++role_count;
    std::uint64_t ordinal = next_ordinal_[request.role];
    if (cycle_roles_ && role_count > 0) ordinal %= role_count;
    auto by_ordinal = ordinal_entries_.find(std::make_pair(request.role, ordinal));
    if (by_ordinal == ordinal_entries_.end())
      throw ScriptedMissError("scripted backend has no entry for role " + to_string(request.role) +
                              " (prompt digest " + digest + ", ordinal " +
                              std::to_string(next_ordinal_[request.role]) + ")");
    ++next_ordinal_[request.role];
    return take(by_ordinal->second, request, digest);
  }

  std::string describe() const override {
    return source_.empty() ? std::string("scripted:<inline>") : "scripted:" + source_;
  }

 private:
  static std::vector<std::string> take(const std::vector<std::string>& responses,
                                       const InvocationRequest& request,
                                       const std::string& digest) {
    if (responses.size() < static_cast<std::size_t>(request.sample_count))
      throw ScriptedMissError("fixture entry for role " + to_string(request.role) + " (digest " +
                              digest + ") has " + std::to_string(responses.size()) +
                              " responses, request needs " +
                              std::to_string(request.sample_count));
    return {responses.begin(), responses.begin() + request.sample_count};
  }

  std::mutex mutex_;
  std::string source_;
  bool cycle_roles_ = false;
  std::map<std::pair<ModelRole, std::string>, std::vector<std::string>> digest_entries_;
  std::map<std::pair<ModelRole, std::uint64_t>, std::vector<std::string>> ordinal_entries_;
  std::map<ModelRole, std::uint64_t> next_ordinal_;
};

inline std::shared_ptr<ScriptedBackend> scripted_backend_from_fixture(
    const std::filesystem::path& path) {
  return ScriptedBackend::from_fixture(path);
}

// ============================================================================
// Gateway
// ============================================================================

struct GatewayOptions {
  int max_attempts = 3;              // transport errors only
  int backoff_initial_ms = 250;      // doubles per retry
};

/// The single choke point for model calls. Validates the role contract,
/// retries transport failures, and keeps the append-only invocation log.
/// Thread-safe; call_index assignment and log appends are serialized.
class LlmGateway {
 public:
  explicit LlmGateway(std::shared_ptr<CompletionBackend> backend, GatewayOptions options = {})
      : backend_(std::move(backend)), options_(options) {}

  std::vector<std::string> complete(const InvocationRequest& request, const CallContext& context) {
    validate_request(request);  // contract errors leave no log entry
    std::string failure;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      try {
        std::vector<std::string> responses = backend_->complete(request);
        if (responses.size() != static_cast<std::size_t>(request.sample_count))
          throw GatewayError("backend returned " + std::to_string(responses.size()) +
                             " responses, expected " + std::to_string(request.sample_count) +
                             " (role " + to_string(request.role) + ")");
        append_entry(request, context, responses, "");
        return responses;
      } catch (const TransportError& e) {
        failure = e.what();
        if (attempt == options_.max_attempts) break;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.backoff_initial_ms << (attempt - 1)));
      } catch (const GatewayError& e) {
        append_entry(request, context, {}, e.what());
        throw;
      }
    }
    const std::string message = "role " + to_string(request.role) + " failed after " +
                                std::to_string(options_.max_attempts) + " attempts: " + failure;
    append_entry(request, context, {}, message);
    throw GatewayError(message);
  }

  /// Rewrites the whole log in call_index order; idempotent, append-safe
  /// across stages because the in-memory log only grows.
  void flush_run_log(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::string content;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (const InvocationLogEntry& entry : log_) {
        content += log_entry_to_json(entry).dump();
        content += '\n';
      }
    }
    write_text_file(path, content);
  }

  std::vector<InvocationLogEntry> entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
  }

  /// Seeds the gateway with a previous stage's log so call_index keeps
  /// increasing across separate processes. Only valid before any complete().
  void preload_log(std::vector<InvocationLogEntry> entries) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!log_.empty()) throw ValidationError("preload_log requires an empty gateway log");
    log_ = std::move(entries);
    next_call_index_ = log_.empty() ? 0 : log_.back().call_index + 1;
  }

  static std::vector<InvocationLogEntry> load_run_log(const std::filesystem::path& path) {
    std::vector<InvocationLogEntry> entries;
    for (const std::string& line : split_lines(read_text_file(path))) {
      if (trim(line).empty()) continue;
      try {
        entries.push_back(log_entry_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("run log " + path.string() + ": " + e.what());
      }
    }
    return entries;
  }

  std::size_t call_count(ModelRole role) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t count = 0;
    for (const InvocationLogEntry& entry : log_)
      if (entry.request.role == role) ++count;
    return count;
  }

  const CompletionBackend& backend() const { return *backend_; }

 private:
  void append_entry(const InvocationRequest& request, const CallContext& context,
                    std::vector<std::string> responses, const std::string& error) {
    std::lock_guard<std::mutex> lock(mutex_);
    InvocationLogEntry entry;
    entry.call_index = next_call_index_++;
    entry.timestamp = utc_timestamp_now();
    entry.student_id = context.student_id;
    entry.stage = context.stage;
    entry.request = request;
    entry.responses = std::move(responses);
    entry.error = error;
    log_.push_back(std::move(entry));
  }

  mutable std::mutex mutex_;
  std::shared_ptr<CompletionBackend> backend_;
  GatewayOptions options_;
  std::vector<InvocationLogEntry> log_;
  std::uint64_t next_call_index_ = 0;
};

}  // namespace stusim
