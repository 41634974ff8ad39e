#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stusim/errors.hpp"
#include "stusim/evaluate.hpp"
#include "stusim/graph.hpp"
#include "stusim/predict.hpp"
#include "stusim/records.hpp"
#include "stusim/simulate.hpp"

namespace stusim {

// ============================================================================
// Snapshot schemas
// ============================================================================
//
// Every artifact is a JSON object with a "kind" discriminator. Maps are
// emitted as arrays sorted by key, so snapshots are byte-deterministic.
// load(save(x)) yields a structurally equal value for every type.

inline void to_json(nlohmann::json& j, const LocalState& state) {
  j = nlohmann::json{{"record_id", state.record_id}, {"verdict", to_string(state.verdict)}};
}

inline void from_json(const nlohmann::json& j, LocalState& state) {
  state.record_id = j.at("record_id").get<std::string>();
  state.verdict = verdict_from_string(j.at("verdict").get<std::string>());
}

inline void to_json(nlohmann::json& j, const GlobalState& global) {
  j = nlohmann::json{{"summary", global.summary},
                     {"good_count", global.good_count},
                     {"bad_count", global.bad_count},
                     {"dominant", to_string(global.dominant)}};
}

inline void from_json(const nlohmann::json& j, GlobalState& global) {
  global.summary = j.at("summary").get<std::string>();
  global.good_count = j.at("good_count").get<int>();
  global.bad_count = j.at("bad_count").get<int>();
  global.dominant = dominance_from_string(j.at("dominant").get<std::string>());
}

inline void to_json(nlohmann::json& j, const ConceptNode& node) {
  j = nlohmann::json{{"canonical_name", node.canonical_name},
                     {"display_name", node.display_name},
                     {"state_library", node.state_library},
                     {"global_state", node.global_state ? nlohmann::json(*node.global_state)
                                                        : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, ConceptNode& node) {
  node.canonical_name = j.at("canonical_name").get<std::string>();
  node.display_name = j.at("display_name").get<std::string>();
  node.state_library = j.at("state_library").get<std::vector<LocalState>>();
  node.global_state.reset();
  if (!j.at("global_state").is_null())
    node.global_state = j.at("global_state").get<GlobalState>();
}

inline void to_json(nlohmann::json& j, const KnowledgeGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [name, node] : graph.nodes) nodes.push_back(node);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, edge] : graph.edges) {
    std::vector<std::string> library;
    library.reserve(edge.library.size());
    for (RelationType type : edge.library) library.push_back(to_string(type));
    edges.push_back(nlohmann::json{
        {"source", key.first},
        {"target", key.second},
        {"library", library},
        {"resolved", edge.resolved ? nlohmann::json(to_string(*edge.resolved))
                                   : nlohmann::json(nullptr)}});
  }
  j = nlohmann::json{{"kind", "knowledge_graph"},
                     {"student_id", graph.student_id},
                     {"nodes", nodes},
                     {"edges", edges}};
}

inline void from_json(const nlohmann::json& j, KnowledgeGraph& graph) {
  graph.student_id = j.at("student_id").get<std::string>();
  graph.nodes.clear();
  graph.edges.clear();
  for (const nlohmann::json& node_json : j.at("nodes")) {
    ConceptNode node = node_json.get<ConceptNode>();
    graph.nodes[node.canonical_name] = std::move(node);
  }
  for (const nlohmann::json& edge_json : j.at("edges")) {
    EdgeRecord edge;
    edge.endpoints = {edge_json.at("source").get<std::string>(),
                      edge_json.at("target").get<std::string>()};
    for (const nlohmann::json& type : edge_json.at("library"))
      edge.library.push_back(relation_type_from_string(type.get<std::string>()));
    edge.resolved.reset();
    if (!edge_json.at("resolved").is_null())
      edge.resolved = relation_type_from_string(edge_json.at("resolved").get<std::string>());
    graph.edges[edge.endpoints] = std::move(edge);
  }
}

inline void to_json(nlohmann::json& j, const BehaviorPrediction& prediction) {
  nlohmann::json matched = nlohmann::json::array();
  for (const auto& [name, score] : prediction.matched_concepts)
    matched.push_back(nlohmann::json{{"name", name}, {"score", score}});
  j = nlohmann::json{{"task_id", prediction.task_id},
                     {"predicted_correct", prediction.predicted_correct},
                     {"description", prediction.description},
                     {"matched_concepts", matched},
                     {"retrieved_record_ids", prediction.retrieved_record_ids},
                     {"predictor_tag", to_string(prediction.predictor_tag)}};
}

inline void from_json(const nlohmann::json& j, BehaviorPrediction& prediction) {
  prediction.task_id = j.at("task_id").get<std::string>();
  prediction.predicted_correct = j.at("predicted_correct").get<bool>();
  prediction.description = j.at("description").get<std::string>();
  prediction.matched_concepts.clear();
  for (const nlohmann::json& entry : j.at("matched_concepts"))
    prediction.matched_concepts.emplace_back(entry.at("name").get<std::string>(),
                                             entry.at("score").get<double>());
  prediction.retrieved_record_ids = j.at("retrieved_record_ids").get<std::vector<std::string>>();
  prediction.predictor_tag = predictor_tag_from_string(j.at("predictor_tag").get<std::string>());
}

struct PredictionSet {
  std::string student_id;
  std::vector<BehaviorPrediction> predictions;
};

inline void to_json(nlohmann::json& j, const PredictionSet& set) {
  j = nlohmann::json{{"kind", "prediction_set"},
                     {"student_id", set.student_id},
                     {"predictions", set.predictions}};
}

inline void from_json(const nlohmann::json& j, PredictionSet& set) {
  set.student_id = j.at("student_id").get<std::string>();
  set.predictions = j.at("predictions").get<std::vector<BehaviorPrediction>>();
}

inline void to_json(nlohmann::json& j, const SimulatedSolution& solution) {
  j = nlohmann::json{{"task_id", solution.task_id},
                     {"solution", solution.solution},
                     {"method_tag", to_string(solution.method_tag)},
                     {"iterations_used", solution.iterations_used},
                     {"score_trace", solution.score_trace},
                     {"final_score", solution.final_score ? nlohmann::json(*solution.final_score)
                                                          : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, SimulatedSolution& solution) {
  solution.task_id = j.at("task_id").get<std::string>();
  solution.solution = j.at("solution").get<std::string>();
  solution.method_tag = method_tag_from_string(j.at("method_tag").get<std::string>());
  solution.iterations_used = j.at("iterations_used").get<int>();
  solution.score_trace = j.at("score_trace").get<std::vector<std::vector<double>>>();
  solution.final_score.reset();
  if (!j.at("final_score").is_null()) solution.final_score = j.at("final_score").get<double>();
}

struct SolutionSet {
  std::string student_id;
  std::vector<SimulatedSolution> solutions;
};

inline void to_json(nlohmann::json& j, const SolutionSet& set) {
  j = nlohmann::json{{"kind", "solution_set"},
                     {"student_id", set.student_id},
                     {"solutions", set.solutions}};
}

inline void from_json(const nlohmann::json& j, SolutionSet& set) {
  set.student_id = j.at("student_id").get<std::string>();
  set.solutions = j.at("solutions").get<std::vector<SimulatedSolution>>();
}

namespace detail {

inline nlohmann::json optional_to_json(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

inline std::optional<double> optional_double_from_json(const nlohmann::json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const PerTaskRow& row) {
  j = nlohmann::json{{"task_id", row.task_id},
                     {"predicted_correct", row.predicted_correct},
                     {"truth_correct", row.truth_correct},
                     {"rouge_l", row.rouge_l},
                     {"bleu4", row.bleu4},
                     {"con1", row.con1 ? nlohmann::json(*row.con1) : nlohmann::json(nullptr)},
                     {"con2", row.con2 ? nlohmann::json(*row.con2) : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, PerTaskRow& row) {
  row.task_id = j.at("task_id").get<std::string>();
  row.predicted_correct = j.at("predicted_correct").get<bool>();
  row.truth_correct = j.at("truth_correct").get<bool>();
  row.rouge_l = j.at("rouge_l").get<double>();
  row.bleu4 = j.at("bleu4").get<double>();
  row.con1.reset();
  row.con2.reset();
  if (!j.at("con1").is_null()) row.con1 = j.at("con1").get<int>();
  if (!j.at("con2").is_null()) row.con2 = j.at("con2").get<int>();
}

inline void to_json(nlohmann::json& j, const EvalReport& report) {
  j = nlohmann::json{{"kind", "eval_report"},
                     {"student_id", report.student_id},
                     {"acc", report.acc},
                     {"con1_mean", detail::optional_to_json(report.con1_mean)},
                     {"con2_mean", detail::optional_to_json(report.con2_mean)},
                     {"cognitive_score", detail::optional_to_json(report.cognitive_score)},
                     {"rouge_l_mean", report.rouge_l_mean},
                     {"bleu4_mean", report.bleu4_mean},
                     {"per_task", report.per_task}};
}

inline void from_json(const nlohmann::json& j, EvalReport& report) {
  report.student_id = j.at("student_id").get<std::string>();
  report.acc = j.at("acc").get<double>();
  report.con1_mean = detail::optional_double_from_json(j.at("con1_mean"));
  report.con2_mean = detail::optional_double_from_json(j.at("con2_mean"));
  report.cognitive_score = detail::optional_double_from_json(j.at("cognitive_score"));
  report.rouge_l_mean = j.at("rouge_l_mean").get<double>();
  report.bleu4_mean = j.at("bleu4_mean").get<double>();
  report.per_task = j.at("per_task").get<std::vector<PerTaskRow>>();
}

struct BackendDescriptor {
  std::string type;    // "scripted" | "live"
  std::string detail;  // fixture path | model name
};

inline void to_json(nlohmann::json& j, const BackendDescriptor& backend) {
  j = nlohmann::json{{"type", backend.type}, {"detail", backend.detail}};
}

inline void from_json(const nlohmann::json& j, BackendDescriptor& backend) {
  backend.type = j.at("type").get<std::string>();
  backend.detail = j.at("detail").get<std::string>();
}

struct RunManifest {
  std::string run_id;
  PipelineConfig config;
  std::string predictor;
  std::string simulator;
  BackendDescriptor backend;
  std::vector<std::string> student_ids;
  std::map<std::string, std::string> artifact_paths;  // stage -> path relative to run dir
};

inline void to_json(nlohmann::json& j, const RunManifest& manifest) {
  j = nlohmann::json{{"kind", "run_manifest"},
                     {"run_id", manifest.run_id},
                     {"config", manifest.config},
                     {"predictor", manifest.predictor},
                     {"simulator", manifest.simulator},
                     {"backend", manifest.backend},
                     {"student_ids", manifest.student_ids},
                     {"artifact_paths", manifest.artifact_paths}};
}

inline void from_json(const nlohmann::json& j, RunManifest& manifest) {
  manifest.run_id = j.at("run_id").get<std::string>();
  manifest.config = j.at("config").get<PipelineConfig>();
  manifest.predictor = j.at("predictor").get<std::string>();
  manifest.simulator = j.at("simulator").get<std::string>();
  manifest.backend = j.at("backend").get<BackendDescriptor>();
  manifest.student_ids = j.at("student_ids").get<std::vector<std::string>>();
  manifest.artifact_paths = j.at("artifact_paths").get<std::map<std::string, std::string>>();
}

// ============================================================================
// Save / load
// ============================================================================

template <typename Artifact>
void save_artifact(const Artifact& artifact, const std::filesystem::path& path) {
  const nlohmann::json j = artifact;
  write_text_file(path, j.dump(2) + "\n");
}

template <typename Artifact>
Artifact load_artifact(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("artifact file " + path.string() + ": " + e.what());
  }
  const nlohmann::json expected = Artifact{};
  if (expected.is_object() && expected.contains("kind")) {
    const std::string kind = j.value("kind", std::string());
    if (kind != expected.at("kind").get<std::string>())
      throw FormatError("artifact file " + path.string() + ": expected kind '" +
                        expected.at("kind").get<std::string>() + "', found '" + kind + "'");
  }
  try {
    return j.get<Artifact>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("artifact file " + path.string() + ": " + e.what());
  }
}

}  // namespace stusim
