#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "stusim/artifacts.hpp"
#include "stusim/errors.hpp"
#include "stusim/evaluate.hpp"
#include "stusim/llm.hpp"
#include "stusim/predict.hpp"
#include "stusim/prompts.hpp"
#include "stusim/prototype.hpp"
#include "stusim/records.hpp"
#include "stusim/simulate.hpp"
#include "stusim/text.hpp"

namespace stusim {

// ============================================================================
// Run options and directory layout
// ============================================================================

struct RunOptions {
  PipelineConfig config;
  PredictorTag predictor = PredictorTag::prototype;
  MethodTag simulator = MethodTag::refine;
  std::filesystem::path out_dir = "runs";
  std::string run_id;  // derived from the configuration when empty
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;
  bool judge_enabled = true;
  bool build_first = false;  // rebuild graphs even when a snapshot exists
};

/// One directory per stage under runs/<run_id>/.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path graphs;
  std::filesystem::path predictions;
  std::filesystem::path solutions;
  std::filesystem::path reports;
  std::filesystem::path log_dir;

  std::filesystem::path manifest_file() const { return root / "manifest.json"; }
  std::filesystem::path log_file() const { return log_dir / "run_log.jsonl"; }
};

inline RunPaths run_paths(const std::filesystem::path& out_dir, const std::string& run_id) {
  RunPaths paths;
  paths.root = out_dir / run_id;
  paths.graphs = paths.root / "graphs";
  paths.predictions = paths.root / "predictions";
  paths.solutions = paths.root / "solutions";
  paths.reports = paths.root / "reports";
  paths.log_dir = paths.root / "log";
  return paths;
}

inline void create_run_dirs(const RunPaths& paths) {
  for (const std::filesystem::path& dir :
       {paths.root, paths.graphs, paths.predictions, paths.solutions, paths.reports,
        paths.log_dir}) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

/// Stable run id derived from everything that shapes the outputs, so reruns
/// of the same configuration land on the same id while grid neighbours never
/// collide.
inline std::string derive_run_id(const RunOptions& options) {
  const nlohmann::json config = options.config;
  const std::string key = to_string(options.predictor) + "|" + to_string(options.simulator) + "|" +
                          std::to_string(options.seed) + "|" + config.dump() + "|" +
                          (options.judge_enabled ? "judge" : "nojudge");
  return "run-" + fnv1a64_hex(key).substr(0, 12);
}

/// Per-task seed: decorrelates tasks while keeping every draw reproducible
/// from the run seed alone.
inline std::uint64_t task_seed(std::uint64_t base_seed, const std::string& student_id,
                               const std::string& task_id) {
  return base_seed ^ fnv1a64(student_id + "/" + task_id);
}

// ============================================================================
// Per-student stages
// ============================================================================

inline KnowledgeGraph build_student_graph(LlmGateway& gateway, const PromptLibrary& prompts,
                                          const PipelineConfig& config,
                                          const StudentProfile& profile, bool strict,
                                          std::vector<std::string>* warnings = nullptr) {
  PrototypeBuilder builder(gateway, prompts, config, strict);
  KnowledgeGraph graph = builder.build(profile);
  if (warnings)
    warnings->insert(warnings->end(), builder.warnings().begin(), builder.warnings().end());
  return graph;
}

inline PredictionSet predict_student(LlmGateway& gateway, const PromptLibrary& prompts,
                                     const PipelineConfig& config, const StudentProfile& profile,
                                     const KnowledgeGraph* graph, PredictorTag predictor,
                                     std::uint64_t seed,
                                     std::vector<std::string>* warnings = nullptr) {
  if (predictor == PredictorTag::prototype && graph == nullptr)
    throw ValidationError("prototype predictor requires a built graph");
  BehaviorPredictor behavior_predictor(gateway, prompts, config);
  const CallContext context{profile.student_id, "predict"};
  PredictionSet set;
  set.student_id = profile.student_id;
  for (const LearningRecord& task : profile.simulation_records) {
    if (predictor == PredictorTag::prototype) {
      set.predictions.push_back(
          behavior_predictor.predict_prototype(task, *graph, profile.past_records, context));
    } else {
      set.predictions.push_back(behavior_predictor.predict_baseline(
          task, profile.past_records, predictor,
          task_seed(seed, profile.student_id, task.record_id), context));
    }
  }
  if (warnings)
    warnings->insert(warnings->end(), behavior_predictor.warnings().begin(),
                     behavior_predictor.warnings().end());
  return set;
}

inline SolutionSet simulate_student(LlmGateway& gateway, const PromptLibrary& prompts,
                                    const PipelineConfig& config, const StudentProfile& profile,
                                    const PredictionSet& predictions, MethodTag simulator,
                                    std::vector<std::string>* warnings = nullptr) {
  if (predictions.predictions.size() != profile.simulation_records.size())
    throw AlignmentError("prediction set does not cover the simulation records");
  SolutionSimulator solution_simulator(gateway, prompts, config);
  const CallContext context{profile.student_id, "simulate"};
  SolutionSet set;
  set.student_id = profile.student_id;
  for (std::size_t i = 0; i < profile.simulation_records.size(); ++i) {
    const LearningRecord& task = profile.simulation_records[i];
    const BehaviorPrediction& prediction = predictions.predictions[i];
    if (prediction.task_id != task.record_id)
      throw AlignmentError("prediction " + prediction.task_id + " does not match task " +
                           task.record_id);
    const LearningRecord* retrieved = nullptr;
    if (!prediction.retrieved_record_ids.empty()) {
      for (const LearningRecord& record : profile.past_records)
        if (record.record_id == prediction.retrieved_record_ids.front()) {
          retrieved = &record;
          break;
        }
    }
    switch (simulator) {
      case MethodTag::io:
        set.solutions.push_back(
            solution_simulator.simulate_io(task, prediction, retrieved, context));
        break;
      case MethodTag::cot:
        set.solutions.push_back(
            solution_simulator.simulate_cot(task, prediction, retrieved, context));
        break;
      case MethodTag::refine:
        set.solutions.push_back(
            solution_simulator.simulate_refine(task, prediction, retrieved, context));
        break;
    }
  }
  if (warnings)
    warnings->insert(warnings->end(), solution_simulator.warnings().begin(),
                     solution_simulator.warnings().end());
  return set;
}

inline EvalReport evaluate_student(LlmGateway& gateway, const PromptLibrary& prompts,
                                   const StudentProfile& profile, const PredictionSet& predictions,
                                   const SolutionSet& solutions, bool judge_enabled,
                                   std::vector<std::string>* warnings = nullptr) {
  std::optional<Judge> judge;
  if (judge_enabled) judge.emplace(gateway, prompts);
  EvalReport report =
      build_report(profile.student_id, predictions.predictions, solutions.solutions,
                   profile.simulation_records, judge ? &*judge : nullptr, warnings);
  if (judge && warnings)
    warnings->insert(warnings->end(), judge->warnings().begin(), judge->warnings().end());
  return report;
}

// ============================================================================
// Whole-run orchestration
// ============================================================================

struct StudentResult {
  std::string student_id;
  std::filesystem::path record_file;
  bool ok = false;
  std::string error;
  std::vector<std::string> warnings;
};

struct RunOutcome {
  RunManifest manifest;
  RunPaths paths;
  std::vector<StudentResult> results;
  bool all_ok = false;
};

/// Runs build (when the predictor needs it) -> predict -> simulate -> evaluate
/// for every record file, isolating per-student failures. --jobs K processes
/// up to K students concurrently; stages within a student stay sequential.
inline RunOutcome run_pipeline(LlmGateway& gateway, const PromptLibrary& prompts,
                               const std::vector<std::filesystem::path>& record_files,
                               const RunOptions& options, const BackendDescriptor& backend) {
  validate(options.config);
  if (record_files.empty()) throw ValidationError("no record files given");

  RunOutcome outcome;
  const std::string run_id = options.run_id.empty() ? derive_run_id(options) : options.run_id;
  outcome.paths = run_paths(options.out_dir, run_id);
  if (std::filesystem::exists(outcome.paths.manifest_file()))
    throw ValidationError("run_id '" + run_id + "' already used in " +
                          options.out_dir.string() + " (manifest exists)");
  create_run_dirs(outcome.paths);

  outcome.results.resize(record_files.size());
  const bool needs_graph = options.predictor == PredictorTag::prototype;

  auto process_student = [&](std::size_t index) {
    StudentResult& result = outcome.results[index];
    result.record_file = record_files[index];
    try {
      const StudentProfile profile = load_student_profile(record_files[index], options.config);
      result.student_id = profile.student_id;
      const std::string file_stem = profile.student_id;

      const KnowledgeGraph* graph_ptr = nullptr;
      KnowledgeGraph graph;
      if (needs_graph) {
        const std::filesystem::path graph_file = outcome.paths.graphs / (file_stem + ".json");
        if (!options.build_first && std::filesystem::exists(graph_file)) {
          graph = load_artifact<KnowledgeGraph>(graph_file);
        } else {
          graph = build_student_graph(gateway, prompts, options.config, profile, options.strict,
                                      &result.warnings);
          save_artifact(graph, graph_file);
        }
        graph_ptr = &graph;
      }

      const PredictionSet predictions =
          predict_student(gateway, prompts, options.config, profile, graph_ptr, options.predictor,
                          options.seed, &result.warnings);
      save_artifact(predictions, outcome.paths.predictions / (file_stem + ".json"));

      const SolutionSet solutions = simulate_student(gateway, prompts, options.config, profile,
                                                     predictions, options.simulator,
                                                     &result.warnings);
      save_artifact(solutions, outcome.paths.solutions / (file_stem + ".json"));

      const EvalReport report = evaluate_student(gateway, prompts, profile, predictions, solutions,
                                                 options.judge_enabled, &result.warnings);
      save_artifact(report, outcome.paths.reports / (file_stem + ".json"));
      result.ok = true;
    } catch (const std::exception& e) {
      result.ok = false;
      result.error = e.what();
      if (result.student_id.empty()) result.student_id = record_files[index].stem().string();
    }
  };

  if (options.jobs <= 1) {
    for (std::size_t i = 0; i < record_files.size(); ++i) process_student(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < record_files.size(); i = next.fetch_add(1))
        process_student(i);
    };
    std::vector<std::thread> threads;
    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(options.jobs), record_files.size());
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& thread : threads) thread.join();
  }

  gateway.flush_run_log(outcome.paths.log_file());

  RunManifest manifest;
  manifest.run_id = run_id;
  manifest.config = options.config;
  manifest.predictor = to_string(options.predictor);
  manifest.simulator = to_string(options.simulator);
  manifest.backend = backend;
  for (const StudentResult& result : outcome.results)
    if (result.ok) manifest.student_ids.push_back(result.student_id);
  if (needs_graph) manifest.artifact_paths["graphs"] = "graphs";
  manifest.artifact_paths["predictions"] = "predictions";
  manifest.artifact_paths["solutions"] = "solutions";
  manifest.artifact_paths["reports"] = "reports";
  manifest.artifact_paths["log"] = "log";
  save_artifact(manifest, outcome.paths.manifest_file());

  outcome.manifest = manifest;
  outcome.all_ok = true;
  for (const StudentResult& result : outcome.results)
    if (!result.ok) outcome.all_ok = false;
  return outcome;
}

// ============================================================================
// Report rendering
// ============================================================================

struct ReportRow {
  std::string predictor;
  std::string simulator;
  AggregateReport aggregate;
};

namespace detail {

inline std::string format_fixed(double value, int places) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", places, value);
  return buffer;
}

inline std::string format_optional(const std::optional<double>& value, int places) {
  return value ? format_fixed(*value, places) : std::string("-");
}

}  // namespace detail

/// Table 2-shaped grid: one row per (predictor, simulator) configuration.
inline std::string render_report_table(const std::vector<ReportRow>& rows) {
  static const std::vector<std::string> headers{"predictor", "simulator", "Acc",
                                                "Con1",      "Con2",      "ROUGE-L", "BLEU-4"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(headers);
  for (const ReportRow& row : rows) {
    cells.push_back({row.predictor, row.simulator, detail::format_fixed(row.aggregate.acc, 4),
                     detail::format_optional(row.aggregate.con1_mean, 4),
                     detail::format_optional(row.aggregate.con2_mean, 4),
                     detail::format_fixed(row.aggregate.rouge_l_mean, 4),
                     detail::format_fixed(row.aggregate.bleu4_mean, 4)});
  }
  std::vector<std::size_t> widths(headers.size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
  std::string out;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (std::size_t i = 0; i < cells[l].size(); ++i) {
      out += cells[l][i];
      if (i + 1 < cells[l].size())
        out += std::string(widths[i] - cells[l][i].size() + 2, ' ');
    }
    out += '\n';
    if (l == 0) {
      for (std::size_t i = 0; i < widths.size(); ++i) {
        out += std::string(widths[i], '-');
        if (i + 1 < widths.size()) out += "  ";
      }
      out += '\n';
    }
  }
  return out;
}

inline std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "predictor,simulator,acc,con1,con2,rouge_l,bleu4\n";
  for (const ReportRow& row : rows) {
    out += row.predictor + "," + row.simulator + "," + detail::format_fixed(row.aggregate.acc, 4) +
           "," + (row.aggregate.con1_mean ? detail::format_fixed(*row.aggregate.con1_mean, 4) : "") +
           "," + (row.aggregate.con2_mean ? detail::format_fixed(*row.aggregate.con2_mean, 4) : "") +
           "," + detail::format_fixed(row.aggregate.rouge_l_mean, 4) + "," +
           detail::format_fixed(row.aggregate.bleu4_mean, 4) + "\n";
  }
  return out;
}

/// Builds grid rows from run directories containing manifest + reports.
/// Conflicting run ids are an error (manifest invariant).
inline std::vector<ReportRow> collect_report_rows(
    const std::vector<std::filesystem::path>& run_dirs) {
  std::set<std::string> seen_run_ids;
  std::vector<ReportRow> rows;
  for (const std::filesystem::path& run_dir : run_dirs) {
    const RunManifest manifest = load_artifact<RunManifest>(run_dir / "manifest.json");
    if (!seen_run_ids.insert(manifest.run_id).second)
      throw ValidationError("conflicting run_id '" + manifest.run_id + "' across manifests");
    std::vector<EvalReport> reports;
    for (const std::string& student_id : manifest.student_ids) {
      auto it = manifest.artifact_paths.find("reports");
      if (it == manifest.artifact_paths.end())
        throw ValidationError("manifest " + manifest.run_id + " lists no reports stage");
      reports.push_back(
          load_artifact<EvalReport>(run_dir / it->second / (student_id + ".json")));
    }
    if (reports.empty())
      throw ValidationError("run " + manifest.run_id + " has no successful students to report");
    rows.push_back(ReportRow{manifest.predictor, manifest.simulator, aggregate_reports(reports)});
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.predictor != b.predictor) return a.predictor < b.predictor;
    return a.simulator < b.simulator;
  });
  return rows;
}

}  // namespace stusim
