#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/llm.hpp"
#include "stusim/predict.hpp"
#include "stusim/prompts.hpp"
#include "stusim/records.hpp"
#include "stusim/text.hpp"

namespace stusim {

enum class MethodTag { io, cot, refine };

inline std::string to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::io: return "io";
    case MethodTag::cot: return "cot";
    case MethodTag::refine: return "refine";
  }
  return "refine";
}

inline MethodTag method_tag_from_string(const std::string& text) {
  if (text == "io") return MethodTag::io;
  if (text == "cot") return MethodTag::cot;
  if (text == "refine") return MethodTag::refine;
  throw FormatError("unknown simulator '" + text + "'");
}

struct SimulatedSolution {
  std::string task_id;
  std::string solution;
  MethodTag method_tag = MethodTag::refine;
  int iterations_used = 0;
  std::vector<std::vector<double>> score_trace;  // per iteration, B candidate scores
  std::optional<double> final_score;             // max of last trace entry (refine only)
};

/// First fenced code block's contents; the whole trimmed text when no
/// complete fence exists.
inline std::string extract_code_block(const std::string& response) {
  const std::size_t open = response.find("```");
  if (open != std::string::npos) {
    std::size_t body = response.find('\n', open);
    if (body != std::string::npos) {
      ++body;
      const std::size_t close = response.find("```", body);
      if (close != std::string::npos) {
        std::string inner = response.substr(body, close - body);
        while (!inner.empty() && (inner.back() == '\n' || inner.back() == '\r')) inner.pop_back();
        return inner;
      }
    }
  }
  return trim(response);
}

/// First real number in [0,1] anywhere in the text.
inline std::optional<double> parse_value_score(const std::string& response) {
  static const std::regex number(R"(\d+(\.\d+)?)");
  auto begin = std::sregex_iterator(response.begin(), response.end(), number);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::string match = it->str();
    if (match.size() > 18) continue;  // stod would overflow
    const double value = std::stod(match);
    if (value >= 0.0 && value <= 1.0) return value;
  }
  return std::nullopt;
}

/// Generates simulated solutions: the beam-search refinement loop plus IO
/// and CoT baselines. All generation goes through the refine role; scoring
/// uses the value role.
class SolutionSimulator {
 public:
  SolutionSimulator(LlmGateway& gateway, const PromptLibrary& prompts, PipelineConfig config)
      : gateway_(gateway), prompts_(prompts), config_(config) {}

  /// Drafts the initial solution from the task, the predicted behavior, and
  /// an optional retrieved record; one refine call, sample_count 1.
  std::string initial_solution(const LearningRecord& task, const BehaviorPrediction& behavior,
                               const LearningRecord* retrieved, const CallContext& context) {
    if (trim(behavior.description).empty())
      throw ValidationError("initial_solution requires a non-empty behavior description");
    InvocationRequest request;
    request.role = ModelRole::refine;
    request.temperature = config_.refine_temperature;
    request.prompt = prompts_.render("refine_initial", prompt_values(task, behavior, retrieved));
    return extract_code_block(gateway_.complete(request, context).front());
  }

  /// One value-role call scoring a candidate against the predicted behavior.
  /// An unparseable score triggers one immediate re-ask; a second failure
  /// yields 0.0 with a warning.
  double value_score(const LearningRecord& task, const BehaviorPrediction& behavior,
                     const std::string& candidate, const CallContext& context) {
    if (trim(candidate).empty())
      throw ValidationError("value_score requires a non-empty candidate");
    InvocationRequest request;
    request.role = ModelRole::value;
    request.prompt = prompts_.render("value", {{"task_statement", task.task_statement},
                                               {"behavior", behavior.description},
                                               {"candidate", candidate}});
    for (int ask = 0; ask < 2; ++ask) {
      const std::string response = gateway_.complete(request, context).front();
      if (std::optional<double> score = parse_value_score(response)) return *score;
    }
    warnings_.push_back("value response for task " + task.record_id +
                        " had no in-range score twice; using 0.0");
    return 0.0;
  }

  /// The refinement loop. sc starts at 0, so at least one iteration runs
  /// even on a perfect initial draft. Each iteration draws B candidates as
  /// one refine-role request with sample_count = B, value-scores each, and
  /// keeps the argmax (ties to the lowest index). The loop exits once
  /// sc >= delta or l exceeds L. Call counts: refine = 1 + iterations_used,
  /// value = B * iterations_used.
  SimulatedSolution simulate_refine(const LearningRecord& task,
                                    const BehaviorPrediction& behavior,
                                    const LearningRecord* retrieved, const CallContext& context) {
    SimulatedSolution result;
    result.task_id = task.record_id;
    result.method_tag = MethodTag::refine;
    result.solution = initial_solution(task, behavior, retrieved, context);

    double sc = 0.0;
    try {
      for (int l = 1; l <= config_.max_iterations && sc < config_.value_threshold; ++l) {
        std::map<std::string, std::string> values = prompt_values(task, behavior, retrieved);
        values["current_solution"] = result.solution;
        InvocationRequest request;
        request.role = ModelRole::refine;
        request.temperature = config_.refine_temperature;
        request.sample_count = config_.beam_width;
        request.prompt = prompts_.render("refine_step", values);
        const std::vector<std::string> samples = gateway_.complete(request, context);

        std::vector<std::string> candidates;
        std::vector<double> scores;
        candidates.reserve(samples.size());
        scores.reserve(samples.size());
        for (const std::string& sample : samples) {
          candidates.push_back(extract_code_block(sample));
          scores.push_back(value_score(task, behavior, candidates.back(), context));
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
          if (scores[i] > scores[best]) best = i;

        result.score_trace.push_back(scores);
        result.solution = candidates[best];
        sc = scores[best];
      }
    } catch (const GatewayError& e) {
      throw GatewayError(std::string(e.what()) + " (refine loop aborted after " +
                         std::to_string(result.score_trace.size()) +
                         " completed iterations for task " + task.record_id + ")");
    }
    result.iterations_used = static_cast<int>(result.score_trace.size());
    result.final_score = sc;
    return result;
  }

  /// IO baseline: direct generation, no reasoning scaffold, no iterations.
  SimulatedSolution simulate_io(const LearningRecord& task, const BehaviorPrediction& behavior,
                                const LearningRecord* retrieved, const CallContext& context) {
    return single_shot(task, behavior, retrieved, context, MethodTag::io, "io");
  }

  /// CoT baseline: reasoning requested, only the final code kept.
  SimulatedSolution simulate_cot(const LearningRecord& task, const BehaviorPrediction& behavior,
                                 const LearningRecord* retrieved, const CallContext& context) {
    return single_shot(task, behavior, retrieved, context, MethodTag::cot, "cot");
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  SimulatedSolution single_shot(const LearningRecord& task, const BehaviorPrediction& behavior,
                                const LearningRecord* retrieved, const CallContext& context,
                                MethodTag tag, const std::string& template_name) {
    if (trim(behavior.description).empty())
      throw ValidationError("simulation requires a non-empty behavior description");
    InvocationRequest request;
    request.role = ModelRole::refine;
    request.temperature = config_.refine_temperature;
    request.prompt = prompts_.render(template_name, prompt_values(task, behavior, retrieved));
    SimulatedSolution result;
    result.task_id = task.record_id;
    result.method_tag = tag;
    result.solution = extract_code_block(gateway_.complete(request, context).front());
    return result;
  }

  std::map<std::string, std::string> prompt_values(const LearningRecord& task,
                                                   const BehaviorPrediction& behavior,
                                                   const LearningRecord* retrieved) const {
    return {{"task_statement", task.task_statement},
            {"behavior", behavior.description},
            {"retrieved_record", retrieved ? format_record(*retrieved) : "(none)"},
            {"language", to_string(task.language_tag)}};
  }

  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  PipelineConfig config_;
  std::vector<std::string> warnings_;
};

}  // namespace stusim
