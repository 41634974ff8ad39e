#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/graph.hpp"
#include "stusim/llm.hpp"
#include "stusim/prompts.hpp"
#include "stusim/prototype.hpp"
#include "stusim/records.hpp"
#include "stusim/text.hpp"

namespace stusim {

// ============================================================================
// Similarity and retrieval
// ============================================================================

/// Cosine similarity of token-count vectors over lowercase alphanumeric
/// tokens. 0 when either side has no tokens. The default instantiation of
/// the pluggable similarity interface; an embedding backend can replace it.
inline double token_cosine_similarity(const std::string& text_a, const std::string& text_b) {
  std::map<std::string, int> counts_a;
  std::map<std::string, int> counts_b;
  for (const std::string& token : tokenize(text_a)) ++counts_a[token];
  for (const std::string& token : tokenize(text_b)) ++counts_b[token];
  if (counts_a.empty() || counts_b.empty()) return 0.0;
  double dot = 0.0;
  for (const auto& [token, count] : counts_a) {
    auto it = counts_b.find(token);
    if (it != counts_b.end()) dot += static_cast<double>(count) * it->second;
  }
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (const auto& [token, count] : counts_a) norm_a += static_cast<double>(count) * count;
  for (const auto& [token, count] : counts_b) norm_b += static_cast<double>(count) * count;
  if (dot == 0.0) return 0.0;
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

using SimilarityFn = std::function<double(const std::string&, const std::string&)>;

/// The p graph nodes most similar to the task description, scored against
/// canonical names. Ties break lexicographically by canonical_name. Returns
/// fewer than p only when the graph is smaller; empty graph yields empty.
inline std::vector<std::pair<std::string, double>> select_top_p(
    const KnowledgeGraph& graph, const std::string& task_description, int p,
    const SimilarityFn& similarity = token_cosine_similarity) {
  if (p < 1) throw ValidationError("p must be >= 1");
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(graph.nodes.size());
  for (const auto& [name, node] : graph.nodes)
    scored.emplace_back(name, similarity(task_description, name));
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > p) scored.resize(static_cast<std::size_t>(p));
  return scored;
}

/// Past records ranked by overlap between their concept sets and the top-p
/// concepts; ties go to the larger order_index (the more recent record).
inline std::vector<std::string> retrieve_record(
    const std::vector<LearningRecord>& past,
    const std::map<std::string, std::set<std::string>>& record_concepts,
    const std::vector<std::string>& top_concepts, int k) {
  if (past.empty()) throw ValidationError("retrieve_record requires a non-empty past list");
  if (k < 1) throw ValidationError("k must be >= 1");
  std::set<std::string> targets(top_concepts.begin(), top_concepts.end());

  struct Ranked {
    std::string record_id;
    int overlap;
    int order_index;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(past.size());
  for (const LearningRecord& record : past) {
    int overlap = 0;
    auto it = record_concepts.find(record.record_id);
    if (it != record_concepts.end())
      for (const std::string& name : it->second)
        if (targets.count(name)) ++overlap;
    ranked.push_back(Ranked{record.record_id, overlap, record.order_index});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return a.order_index > b.order_index;
  });
  std::vector<std::string> out;
  for (const Ranked& r : ranked) {
    if (static_cast<int>(out.size()) == k) break;
    out.push_back(r.record_id);
  }
  return out;
}

// ============================================================================
// Predictions
// ============================================================================

enum class PredictorTag { prototype, random, similarity, level, level_random, level_similarity };

inline std::string to_string(PredictorTag tag) {
  switch (tag) {
    case PredictorTag::prototype: return "prototype";
    case PredictorTag::random: return "random";
    case PredictorTag::similarity: return "similarity";
    case PredictorTag::level: return "level";
    case PredictorTag::level_random: return "level_random";
    case PredictorTag::level_similarity: return "level_similarity";
  }
  return "prototype";
}

inline PredictorTag predictor_tag_from_string(const std::string& text) {
  if (text == "prototype") return PredictorTag::prototype;
  if (text == "random") return PredictorTag::random;
  if (text == "similarity") return PredictorTag::similarity;
  if (text == "level") return PredictorTag::level;
  if (text == "level_random" || text == "level-random") return PredictorTag::level_random;
  if (text == "level_similarity" || text == "level-similarity")
    return PredictorTag::level_similarity;
  throw FormatError("unknown predictor '" + text + "'");
}

struct BehaviorPrediction {
  std::string task_id;
  bool predicted_correct = false;
  std::string description;  // natural-language behavior
  std::vector<std::pair<std::string, double>> matched_concepts;  // (canonical_name, score)
  std::vector<std::string> retrieved_record_ids;
  PredictorTag predictor_tag = PredictorTag::prototype;
};

/// Parses the pred-role contract: a VERDICT line containing correct or
/// incorrect, and free behavior text (BEHAVIOR-labeled when present).
inline std::pair<bool, std::string> parse_prediction(const std::string& response) {
  std::optional<bool> verdict;
  std::vector<std::string> lines = split_lines(response);
  std::size_t verdict_line = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string trimmed = trim(lines[i]);
    if (!starts_with_icase(trimmed, "verdict")) continue;
    const std::string rest = to_lower(trimmed);
    // "incorrect" contains "correct"; test it first.
    if (rest.find("incorrect") != std::string::npos) {
      verdict = false;
    } else if (rest.find("correct") != std::string::npos) {
      verdict = true;
    } else {
      throw PredictionParseError("VERDICT line has no correct/incorrect marker: '" + trimmed +
                                 "'");
    }
    verdict_line = i;
    break;
  }
  if (!verdict)
    throw PredictionParseError("pred response has no VERDICT line with a correct/incorrect marker");

  std::string description;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string trimmed = trim(lines[i]);
    if (!starts_with_icase(trimmed, "behavior")) continue;
    std::size_t start = std::string("behavior").size();
    if (start < trimmed.size() && trimmed[start] == ':') ++start;
    std::vector<std::string> parts{trim(trimmed.substr(start))};
    for (std::size_t j = i + 1; j < lines.size(); ++j) parts.push_back(lines[j]);
    description = trim(join(parts, "\n"));
    break;
  }
  if (description.empty()) {
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (i != verdict_line) rest.push_back(lines[i]);
    description = trim(join(rest, "\n"));
  }
  if (description.empty())
    description = *verdict ? "Expected to solve the task correctly."
                           : "Expected to attempt the task incorrectly.";
  return {*verdict, description};
}

/// Record block shared by pred and refine prompts.
inline std::string format_record(const LearningRecord& record) {
  return "Task: " + record.task_statement + "\nBehavior: " + record.behavior +
         "\nOutcome: " + (record.is_correct ? "correct" : "incorrect") + "\nSolution:\n" +
         record.solution;
}

/// Level baseline: past accuracy mapped linearly onto 1..5, round half-up.
inline int level_from_accuracy(double accuracy) {
  const int level = static_cast<int>(std::floor(1.0 + 4.0 * accuracy + 0.5));
  return std::clamp(level, 1, 5);
}

/// Predicts behavior for simulation tasks: the prototype predictor (concept
/// mapping onto the graph) plus the five baselines. One pred-role call per
/// prediction.
class BehaviorPredictor {
 public:
  BehaviorPredictor(LlmGateway& gateway, const PromptLibrary& prompts, PipelineConfig config,
                    SimilarityFn similarity = token_cosine_similarity)
      : gateway_(gateway),
        prompts_(prompts),
        config_(config),
        similarity_(std::move(similarity)) {}

  /// Prototype mapping: describe the task, select the top-p concepts, pull
  /// the max-overlap past record, then ask the pred role. An empty graph
  /// falls back to similarity retrieval with a warning (tag stays prototype).
  BehaviorPrediction predict_prototype(const LearningRecord& task, const KnowledgeGraph& graph,
                                       const std::vector<LearningRecord>& past,
                                       const CallContext& context) {
    if (past.empty()) throw ValidationError("predict_prototype requires a non-empty past list");
    const std::string description = describe_task(gateway_, prompts_, task.task_statement,
                                                  context);
    BehaviorPrediction prediction;
    prediction.task_id = task.record_id;
    prediction.predictor_tag = PredictorTag::prototype;

    std::vector<std::string> summaries;
    if (graph.empty()) {
      warnings_.push_back("graph for task " + task.record_id +
                          " is empty; falling back to similarity retrieval");
      prediction.retrieved_record_ids = {most_similar_record(task, past).record_id};
      summaries.push_back("(no cognitive prototype available)");
    } else {
      prediction.matched_concepts = select_top_p(graph, description, config_.top_concepts,
                                                 similarity_);
      std::vector<std::string> top_names;
      for (const auto& [name, score] : prediction.matched_concepts) {
        top_names.push_back(name);
        const ConceptNode& node = graph.nodes.at(name);
        summaries.push_back(name + ": " + (node.global_state ? node.global_state->summary
                                                             : "(no summary)"));
      }
      prediction.retrieved_record_ids = retrieve_record(past, record_concepts_map(graph),
                                                        top_names, config_.retrieval_count);
    }

    std::vector<std::string> numbered;
    for (std::size_t i = 0; i < summaries.size(); ++i)
      numbered.push_back(std::to_string(i + 1) + ". " + summaries[i]);
    InvocationRequest request;
    request.role = ModelRole::pred;
    request.prompt = prompts_.render(
        "pred", {{"task_statement", task.task_statement},
                 {"cognitive_states", join(numbered, "\n")},
                 {"retrieved_record", format_retrieved(past, prediction.retrieved_record_ids)}});
    const std::string response = gateway_.complete(request, context).front();
    const auto [correct, behavior] = parse_prediction(response);
    prediction.predicted_correct = correct;
    prediction.description = behavior;
    return prediction;
  }

  /// The Appendix D.2 baselines. rng_seed drives only the random variants.
  BehaviorPrediction predict_baseline(const LearningRecord& task,
                                      const std::vector<LearningRecord>& past, PredictorTag variant,
                                      std::uint64_t rng_seed, const CallContext& context) {
    if (past.empty()) throw ValidationError("predict_baseline requires a non-empty past list");
    if (variant == PredictorTag::prototype)
      throw ValidationError("prototype is not a baseline variant");

    BehaviorPrediction prediction;
    prediction.task_id = task.record_id;
    prediction.predictor_tag = variant;

    std::string template_name;
    std::map<std::string, std::string> values{{"task_statement", task.task_statement}};

    const bool wants_record = variant == PredictorTag::random ||
                              variant == PredictorTag::similarity ||
                              variant == PredictorTag::level_random ||
                              variant == PredictorTag::level_similarity;
    if (wants_record) {
      const LearningRecord& chosen =
          (variant == PredictorTag::random || variant == PredictorTag::level_random)
              ? random_record(past, rng_seed)
              : most_similar_record(task, past);
      prediction.retrieved_record_ids = {chosen.record_id};
      values["retrieved_record"] = format_record(chosen);
    }
    const bool wants_level = variant == PredictorTag::level ||
                             variant == PredictorTag::level_random ||
                             variant == PredictorTag::level_similarity;
    if (wants_level) values["level"] = std::to_string(level_from_accuracy(past_accuracy(past)));

    if (variant == PredictorTag::level) {
      template_name = "pred_level";
    } else if (wants_level) {
      template_name = "pred_level_record";
    } else {
      template_name = "pred_record";
    }

    InvocationRequest request;
    request.role = ModelRole::pred;
    request.prompt = prompts_.render(template_name, values);
    const std::string response = gateway_.complete(request, context).front();
    const auto [correct, behavior] = parse_prediction(response);
    prediction.predicted_correct = correct;
    prediction.description = behavior;
    return prediction;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  /// Uniform choice; gen() % n keeps the draw identical across platforms,
  /// unlike std::uniform_int_distribution.
  static const LearningRecord& random_record(const std::vector<LearningRecord>& past,
                                             std::uint64_t rng_seed) {
    std::mt19937_64 gen(rng_seed);
    return past[static_cast<std::size_t>(gen() % past.size())];
  }

  /// Argmax statement similarity; ties prefer the lexicographically smaller
  /// statement, then the more recent record.
  const LearningRecord& most_similar_record(const LearningRecord& task,
                                            const std::vector<LearningRecord>& past) const {
    const LearningRecord* best = &past.front();
    double best_score = similarity_(task.task_statement, past.front().task_statement);
    for (std::size_t i = 1; i < past.size(); ++i) {
      const double score = similarity_(task.task_statement, past[i].task_statement);
      if (score > best_score) {
        best = &past[i];
        best_score = score;
      } else if (score == best_score) {
        if (past[i].task_statement < best->task_statement ||
            (past[i].task_statement == best->task_statement &&
             past[i].order_index > best->order_index)) {
          best = &past[i];
        }
      }
    }
    return *best;
  }

  std::string format_retrieved(const std::vector<LearningRecord>& past,
                               const std::vector<std::string>& ids) const {
    std::vector<std::string> blocks;
    for (const std::string& id : ids)
      for (const LearningRecord& record : past)
        if (record.record_id == id) blocks.push_back(format_record(record));
    return blocks.empty() ? "(none)" : join(blocks, "\n\n");
  }

  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  PipelineConfig config_;
  SimilarityFn similarity_;
  std::vector<std::string> warnings_;
};

}  // namespace stusim
