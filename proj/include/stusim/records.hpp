#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stusim/errors.hpp"
#include "stusim/text.hpp"

namespace stusim {

enum class LanguageTag { python, java, cpp, other };

inline std::string to_string(LanguageTag tag) {
  switch (tag) {
    case LanguageTag::python: return "python";
    case LanguageTag::java: return "java";
    case LanguageTag::cpp: return "cpp";
    case LanguageTag::other: return "other";
  }
  return "other";
}

inline LanguageTag language_tag_from_string(const std::string& text) {
  if (text == "python") return LanguageTag::python;
  if (text == "java") return LanguageTag::java;
  if (text == "cpp") return LanguageTag::cpp;
  if (text == "other") return LanguageTag::other;
  throw FormatError("unknown language_tag '" + text + "'");
}

/// One solved programming task from a student's history.
struct LearningRecord {
  std::string record_id;
  int order_index = 0;
  std::string task_statement;
  std::string behavior;
  bool is_correct = false;
  std::string solution;
  LanguageTag language_tag = LanguageTag::other;
};

/// A student's records split positionally: the first M form the past used to
/// build the prototype, the next N are the simulation targets.
struct StudentProfile {
  std::string student_id;
  std::vector<LearningRecord> past_records;
  std::vector<LearningRecord> simulation_records;
};

/// Run-wide knobs. Defaults are the reference operating point.
struct PipelineConfig {
  int past_count = 40;             // M
  int simulation_count = 10;       // N
  int top_concepts = 5;            // p
  int max_iterations = 3;          // L
  int beam_width = 2;              // B
  double value_threshold = 0.9;    // delta
  int concept_cap = 15;
  int retrieval_count = 1;
  double refine_temperature = 0.7;
};

inline void to_json(nlohmann::json& j, const PipelineConfig& cfg) {
  j = nlohmann::json{{"M", cfg.past_count},
                     {"N", cfg.simulation_count},
                     {"p", cfg.top_concepts},
                     {"L", cfg.max_iterations},
                     {"B", cfg.beam_width},
                     {"delta", cfg.value_threshold},
                     {"concept_cap", cfg.concept_cap},
                     {"retrieval_count", cfg.retrieval_count},
                     {"refine_temperature", cfg.refine_temperature}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& cfg) {
  PipelineConfig defaults;
  cfg.past_count = j.value("M", defaults.past_count);
  cfg.simulation_count = j.value("N", defaults.simulation_count);
  cfg.top_concepts = j.value("p", defaults.top_concepts);
  cfg.max_iterations = j.value("L", defaults.max_iterations);
  cfg.beam_width = j.value("B", defaults.beam_width);
  cfg.value_threshold = j.value("delta", defaults.value_threshold);
  cfg.concept_cap = j.value("concept_cap", defaults.concept_cap);
  cfg.retrieval_count = j.value("retrieval_count", defaults.retrieval_count);
  cfg.refine_temperature = j.value("refine_temperature", defaults.refine_temperature);
}

inline void validate(const PipelineConfig& cfg) {
  if (cfg.past_count < 1) throw ValidationError("M must be >= 1");
  if (cfg.simulation_count < 1) throw ValidationError("N must be >= 1");
  if (cfg.top_concepts < 1) throw ValidationError("p must be >= 1");
  if (cfg.max_iterations < 1) throw ValidationError("L must be >= 1");
  if (cfg.beam_width < 1) throw ValidationError("B must be >= 1");
  if (cfg.value_threshold <= 0.0 || cfg.value_threshold > 1.0)
    throw ValidationError("delta must be in (0, 1]");
  if (cfg.concept_cap < 1) throw ValidationError("concept_cap must be >= 1");
  if (cfg.retrieval_count < 1) throw ValidationError("retrieval_count must be >= 1");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline PipelineConfig load_config_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config file " + path.string() + ": expected a JSON object");
  PipelineConfig cfg = j.get<PipelineConfig>();
  validate(cfg);
  return cfg;
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& locus) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(locus + ": missing field '" + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& locus) {
  const nlohmann::json& field = require_field(j, key, locus);
  if (!field.is_string()) throw FormatError(locus + ": field '" + key + "' must be a string");
  return field.get<std::string>();
}

inline LearningRecord parse_record(const nlohmann::json& j, const std::string& locus) {
  if (!j.is_object()) throw FormatError(locus + ": record must be an object");
  LearningRecord record;
  record.record_id = require_string(j, "record_id", locus);
  const nlohmann::json& order = require_field(j, "order_index", locus);
  if (!order.is_number_integer())
    throw FormatError(locus + ": field 'order_index' must be an integer");
  record.order_index = order.get<int>();
  record.task_statement = require_string(j, "task_statement", locus);
  record.behavior = require_string(j, "behavior", locus);
  const nlohmann::json& correct = require_field(j, "is_correct", locus);
  if (!correct.is_boolean()) throw FormatError(locus + ": field 'is_correct' must be a boolean");
  record.is_correct = correct.get<bool>();
  record.solution = require_string(j, "solution", locus);
  record.language_tag = language_tag_from_string(require_string(j, "language_tag", locus));
  return record;
}

}  // namespace detail

/// Parses, validates, orders by order_index, and splits a record file.
///
/// Errors are total: a malformed file never yields a partial profile.
/// Records beyond the first M+N (in order_index order) are ignored.
inline StudentProfile load_student_profile(const std::filesystem::path& path,
                                           const PipelineConfig& config) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("record file " + path.string() + ": " + e.what());
  }
  const std::string locus_file = "record file " + path.string();
  if (!j.is_object()) throw FormatError(locus_file + ": expected a JSON object");

  StudentProfile profile;
  profile.student_id = detail::require_string(j, "student_id", locus_file);
  if (trim(profile.student_id).empty())
    throw ValidationError(locus_file + ": student_id must be non-empty");

  const nlohmann::json& records = detail::require_field(j, "records", locus_file);
  if (!records.is_array()) throw FormatError(locus_file + ": field 'records' must be an array");

  std::vector<LearningRecord> all;
  all.reserve(records.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string locus = locus_file + ", records[" + std::to_string(i) + "]";
    LearningRecord record = detail::parse_record(records[i], locus);
    if (trim(record.record_id).empty())
      throw ValidationError(locus + ": record_id must be non-empty");
    if (trim(record.task_statement).empty())
      throw ValidationError(locus + " (" + record.record_id + "): task_statement must be non-empty");
    if (trim(record.solution).empty())
      throw ValidationError(locus + " (" + record.record_id + "): solution must be non-empty");
    if (!seen_ids.insert(record.record_id).second)
      throw ValidationError(locus_file + ": duplicate record_id '" + record.record_id + "'");
    all.push_back(std::move(record));
  }

  std::sort(all.begin(), all.end(), [](const LearningRecord& a, const LearningRecord& b) {
    return a.order_index < b.order_index;
  });
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].order_index != static_cast<int>(i))
      throw ValidationError(locus_file + ": order_index values must be exactly 0.." +
                            std::to_string(all.size() - 1) + " with no gaps or duplicates");
  }

  const std::size_t need = static_cast<std::size_t>(config.past_count) +
                           static_cast<std::size_t>(config.simulation_count);
  if (all.size() < need) throw InsufficientDataError(all.size(), need);

  profile.past_records.assign(all.begin(), all.begin() + config.past_count);
  profile.simulation_records.assign(all.begin() + config.past_count,
                                    all.begin() + static_cast<std::ptrdiff_t>(need));
  return profile;
}

/// Fraction of past records with is_correct == true; 0.5 when there are none.
inline double past_accuracy(const std::vector<LearningRecord>& past) {
  if (past.empty()) return 0.5;
  std::size_t correct = 0;
  for (const LearningRecord& r : past)
    if (r.is_correct) ++correct;
  return static_cast<double>(correct) / static_cast<double>(past.size());
}

}  // namespace stusim
