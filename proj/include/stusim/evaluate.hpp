#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/llm.hpp"
#include "stusim/metrics.hpp"
#include "stusim/predict.hpp"
#include "stusim/prompts.hpp"
#include "stusim/records.hpp"
#include "stusim/simulate.hpp"

namespace stusim {

/// Fraction of tasks whose predicted correctness matches the truth.
/// Inputs must align one-to-one by task id.
inline double accuracy(const std::vector<BehaviorPrediction>& predictions,
                       const std::vector<LearningRecord>& truths) {
  if (predictions.empty()) throw AlignmentError("accuracy over empty lists is undefined");
  if (predictions.size() != truths.size())
    throw AlignmentError("accuracy inputs differ in length: " +
                         std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].task_id != truths[i].record_id)
      throw AlignmentError("accuracy inputs misaligned at index " + std::to_string(i) + ": '" +
                           predictions[i].task_id + "' vs '" + truths[i].record_id + "'");
    if (predictions[i].predicted_correct == truths[i].is_correct) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(predictions.size());
}

/// First integer 1..5 anywhere in the text ("4", "Score: 5/5", ...).
inline std::optional<int> parse_judge_score(const std::string& response) {
  static const std::regex number(R"(\d+)");
  auto begin = std::sregex_iterator(response.begin(), response.end(), number);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    if (it->str().size() > 2) continue;
    const int value = std::stoi(it->str());
    if (value >= 1 && value <= 5) return value;
  }
  return std::nullopt;
}

enum class JudgeKind { behavior, solution };

/// LLM-judge metrics: Con1 (behavior consistency), Con2 (solution
/// consistency), and the cognitive score. Unparseable answers get one
/// re-ask, then become absent with a warning.
class Judge {
 public:
  Judge(LlmGateway& gateway, const PromptLibrary& prompts)
      : gateway_(gateway), prompts_(prompts) {}

  std::optional<int> judge_consistency(const std::string& generated, const std::string& reference,
                                       JudgeKind kind, const CallContext& context) {
    if (trim(generated).empty() || trim(reference).empty())
      throw ValidationError("judge_consistency requires non-empty texts");
    InvocationRequest request;
    request.role = ModelRole::judge;
    request.prompt = prompts_.render(
        kind == JudgeKind::behavior ? "judge_behavior" : "judge_solution",
        {{"generated", generated}, {"reference", reference}});
    return ask_for_score(request, context,
                         kind == JudgeKind::behavior ? "Con1" : "Con2");
  }

  /// Mean 1..5 judged correctness across solutions; absent scores are
  /// excluded, all-absent is an error.
  double cognitive_score(const std::vector<std::string>& solutions, const CallContext& context) {
    if (solutions.empty()) throw ValidationError("cognitive_score requires at least one solution");
    double sum = 0.0;
    int present = 0;
    for (const std::string& solution : solutions) {
      InvocationRequest request;
      request.role = ModelRole::judge;
      request.prompt = prompts_.render("judge_cognitive", {{"solution", solution}});
      if (std::optional<int> score = ask_for_score(request, context, "cognitive")) {
        sum += *score;
        ++present;
      }
    }
    if (present == 0) throw Error("cognitive_score: every solution score was unparseable");
    return sum / present;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::optional<int> ask_for_score(const InvocationRequest& request, const CallContext& context,
                                   const std::string& metric) {
    for (int ask = 0; ask < 2; ++ask) {
      const std::string response = gateway_.complete(request, context).front();
      if (std::optional<int> score = parse_judge_score(response)) return score;
    }
    warnings_.push_back(metric + " judge response had no integer 1..5 twice; score absent");
    return std::nullopt;
  }

  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  std::vector<std::string> warnings_;
};

struct PerTaskRow {
  std::string task_id;
  bool predicted_correct = false;
  bool truth_correct = false;
  double rouge_l = 0.0;
  double bleu4 = 0.0;
  std::optional<int> con1;
  std::optional<int> con2;
};

struct EvalReport {
  std::string student_id;
  double acc = 0.0;
  std::optional<double> con1_mean;
  std::optional<double> con2_mean;
  std::optional<double> cognitive_score;
  double rouge_l_mean = 0.0;
  double bleu4_mean = 0.0;
  std::vector<PerTaskRow> per_task;
};

/// Scores one student: Acc plus per-task ROUGE-L/BLEU-4 always, judge
/// metrics only when a judge is supplied. Judge failures leave scores
/// absent; means run over present scores only.
inline EvalReport build_report(const std::string& student_id,
                               const std::vector<BehaviorPrediction>& predictions,
                               const std::vector<SimulatedSolution>& simulations,
                               const std::vector<LearningRecord>& truths, Judge* judge,
                               std::vector<std::string>* warnings = nullptr) {
  if (predictions.size() != simulations.size() || predictions.size() != truths.size())
    throw AlignmentError("report inputs differ in length");

  auto warn = [warnings](const std::string& message) {
    if (warnings) warnings->push_back(message);
  };

  EvalReport report;
  report.student_id = student_id;
  report.acc = accuracy(predictions, truths);

  const CallContext context{student_id, "evaluate"};
  double rouge_sum = 0.0;
  double bleu_sum = 0.0;
  double con1_sum = 0.0;
  double con2_sum = 0.0;
  int con1_present = 0;
  int con2_present = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (simulations[i].task_id != truths[i].record_id)
      throw AlignmentError("simulation/truth misaligned at index " + std::to_string(i));
    PerTaskRow row;
    row.task_id = truths[i].record_id;
    row.predicted_correct = predictions[i].predicted_correct;
    row.truth_correct = truths[i].is_correct;
    row.rouge_l = rouge_l(simulations[i].solution, truths[i].solution);
    row.bleu4 = bleu_4(simulations[i].solution, truths[i].solution);
    rouge_sum += row.rouge_l;
    bleu_sum += row.bleu4;

    if (judge) {
      if (trim(predictions[i].description).empty() || trim(truths[i].behavior).empty()) {
        warn("Con1 skipped for task " + row.task_id + ": empty behavior text");
      } else {
        row.con1 = judge->judge_consistency(predictions[i].description, truths[i].behavior,
                                            JudgeKind::behavior, context);
      }
      if (trim(simulations[i].solution).empty() || trim(truths[i].solution).empty()) {
        warn("Con2 skipped for task " + row.task_id + ": empty solution text");
      } else {
        row.con2 = judge->judge_consistency(simulations[i].solution, truths[i].solution,
                                            JudgeKind::solution, context);
      }
      if (row.con1) {
        con1_sum += *row.con1;
        ++con1_present;
      }
      if (row.con2) {
        con2_sum += *row.con2;
        ++con2_present;
      }
    }
    report.per_task.push_back(std::move(row));
  }

  report.rouge_l_mean = rouge_sum / static_cast<double>(truths.size());
  report.bleu4_mean = bleu_sum / static_cast<double>(truths.size());
  if (con1_present > 0) report.con1_mean = con1_sum / con1_present;
  if (con2_present > 0) report.con2_mean = con2_sum / con2_present;

  if (judge) {
    std::vector<std::string> solutions;
    solutions.reserve(simulations.size());
    for (const SimulatedSolution& simulation : simulations) solutions.push_back(simulation.solution);
    try {
      report.cognitive_score = judge->cognitive_score(solutions, context);
    } catch (const Error& e) {
      warn(std::string("cognitive score unavailable: ") + e.what());
    }
  }
  return report;
}

/// Cross-student aggregate: unweighted mean of per-student aggregates;
/// optional fields average over the students where they are present.
struct AggregateReport {
  double acc = 0.0;
  std::optional<double> con1_mean;
  std::optional<double> con2_mean;
  std::optional<double> cognitive_score;
  double rouge_l_mean = 0.0;
  double bleu4_mean = 0.0;
  int student_count = 0;
};

inline AggregateReport aggregate_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ValidationError("cannot aggregate zero reports");
  AggregateReport aggregate;
  aggregate.student_count = static_cast<int>(reports.size());
  double con1_sum = 0.0;
  double con2_sum = 0.0;
  double cog_sum = 0.0;
  int con1_present = 0;
  int con2_present = 0;
  int cog_present = 0;
  for (const EvalReport& report : reports) {
    aggregate.acc += report.acc;
    aggregate.rouge_l_mean += report.rouge_l_mean;
    aggregate.bleu4_mean += report.bleu4_mean;
    if (report.con1_mean) {
      con1_sum += *report.con1_mean;
      ++con1_present;
    }
    if (report.con2_mean) {
      con2_sum += *report.con2_mean;
      ++con2_present;
    }
    if (report.cognitive_score) {
      cog_sum += *report.cognitive_score;
      ++cog_present;
    }
  }
  const double n = static_cast<double>(reports.size());
  aggregate.acc /= n;
  aggregate.rouge_l_mean /= n;
  aggregate.bleu4_mean /= n;
  if (con1_present > 0) aggregate.con1_mean = con1_sum / con1_present;
  if (con2_present > 0) aggregate.con2_mean = con2_sum / con2_present;
  if (cog_present > 0) aggregate.cognitive_score = cog_sum / cog_present;
  return aggregate;
}

}  // namespace stusim
