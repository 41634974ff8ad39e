// stusim: build cognitive prototypes from student records, predict behavior
// on new tasks, simulate solutions, and evaluate the results.
//
// Subcommands: build, predict, simulate, evaluate, run, report.
// Exit codes: 0 success, 1 partial/runtime failure, 2 usage/validation error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stusim/live_backend.hpp"
#include "stusim/stusim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Setup-phase failure: bad flags, missing paths, malformed config.
struct UsageError : stusim::Error {
  using Error::Error;
};

struct GlobalArgs {
  std::string config_path;
  std::string backend = "scripted";
  std::string fixtures;
  std::string prompts_dir = "prompts";
  std::string out = "runs";
  std::string run_id;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict = false;

  // Hyperparameter overrides; flags win over the config file.
  std::optional<int> M, N, p, L, B;
  std::optional<double> delta;
  std::optional<int> concept_cap, retrieval_count;
};

stusim::PipelineConfig resolve_config(const GlobalArgs& args) {
  stusim::PipelineConfig config;
  if (!args.config_path.empty()) {
    if (!fs::exists(args.config_path))
      throw UsageError("config file not found: " + args.config_path);
    config = stusim::load_config_file(args.config_path);
  }
  if (args.M) config.past_count = *args.M;
  if (args.N) config.simulation_count = *args.N;
  if (args.p) config.top_concepts = *args.p;
  if (args.L) config.max_iterations = *args.L;
  if (args.B) config.beam_width = *args.B;
  if (args.delta) config.value_threshold = *args.delta;
  if (args.concept_cap) config.concept_cap = *args.concept_cap;
  if (args.retrieval_count) config.retrieval_count = *args.retrieval_count;
  try {
    stusim::validate(config);
  } catch (const stusim::Error& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return config;
}

std::pair<std::shared_ptr<stusim::CompletionBackend>, stusim::BackendDescriptor> make_backend(
    const GlobalArgs& args) {
  if (args.backend == "scripted") {
    if (args.fixtures.empty())
      throw UsageError("--backend scripted requires --fixtures PATH");
    if (!fs::exists(args.fixtures))
      throw UsageError("fixture file not found: " + args.fixtures);
    auto backend = stusim::scripted_backend_from_fixture(args.fixtures);
    return {backend, stusim::BackendDescriptor{"scripted", args.fixtures}};
  }
  if (args.backend == "live") {
    std::optional<stusim::LiveBackendConfig> config = stusim::live_config_from_env();
    if (!config)
      throw UsageError(
          "--backend live requires STUSIM_API_BASE (or OPENAI_BASE_URL) in the environment");
    auto backend = std::make_shared<stusim::LiveBackend>(*config);
    return {backend, stusim::BackendDescriptor{"live", config->model}};
  }
  throw UsageError("unknown backend '" + args.backend + "' (expected scripted or live)");
}

stusim::PromptLibrary load_prompts(const GlobalArgs& args) {
  try {
    return stusim::PromptLibrary::from_directory(args.prompts_dir);
  } catch (const stusim::Error& e) {
    throw UsageError(std::string("cannot load prompts: ") + e.what());
  }
}

std::vector<fs::path> check_record_files(const std::vector<std::string>& files) {
  if (files.empty()) throw UsageError("at least one record file is required");
  std::vector<fs::path> paths;
  for (const std::string& file : files) {
    if (!fs::exists(file)) throw UsageError("record file not found: " + file);
    paths.emplace_back(file);
  }
  return paths;
}

std::string require_run_id(const GlobalArgs& args, const char* command) {
  if (args.run_id.empty())
    throw UsageError(std::string(command) + " requires --run-id (stages compose by sharing one)");
  return args.run_id;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& warning : warnings) std::cerr << "warning: " << warning << "\n";
}

/// Continues a previous stage's run log when one exists, so call indices
/// stay strictly increasing across stage subcommands.
void preload_stage_log(stusim::LlmGateway& gateway, const stusim::RunPaths& paths) {
  if (fs::exists(paths.log_file()))
    gateway.preload_log(stusim::LlmGateway::load_run_log(paths.log_file()));
}

struct StageOutcome {
  bool any_failed = false;
};

/// Shared per-student loop for the stage commands: isolate failures,
/// print diagnostics, keep going.
template <typename Fn>
StageOutcome for_each_student(const std::vector<fs::path>& files, Fn&& fn) {
  StageOutcome outcome;
  for (const fs::path& file : files) {
    try {
      fn(file);
    } catch (const std::exception& e) {
      std::cerr << "error: " << file.string() << ": " << e.what() << "\n";
      outcome.any_failed = true;
    }
  }
  return outcome;
}

int cmd_build(const GlobalArgs& args, const std::vector<std::string>& files) {
  const stusim::PipelineConfig config = resolve_config(args);
  const std::vector<fs::path> record_files = check_record_files(files);
  auto [backend, descriptor] = make_backend(args);
  const stusim::PromptLibrary prompts = load_prompts(args);
  const std::string run_id = require_run_id(args, "build");

  const stusim::RunPaths paths = stusim::run_paths(args.out, run_id);
  stusim::create_run_dirs(paths);
  stusim::LlmGateway gateway(backend);
  preload_stage_log(gateway, paths);

  const StageOutcome outcome = for_each_student(record_files, [&](const fs::path& file) {
    const stusim::StudentProfile profile = stusim::load_student_profile(file, config);
    std::vector<std::string> warnings;
    const stusim::KnowledgeGraph graph =
        stusim::build_student_graph(gateway, prompts, config, profile, args.strict, &warnings);
    print_warnings(warnings);
    stusim::save_artifact(graph, paths.graphs / (profile.student_id + ".json"));
    std::cout << "built graph for " << profile.student_id << " (" << graph.nodes.size()
              << " nodes, " << graph.edges.size() << " edges)\n";
  });
  gateway.flush_run_log(paths.log_file());
  return outcome.any_failed ? kExitRuntime : kExitOk;
}

int cmd_predict(const GlobalArgs& args, const std::vector<std::string>& files,
                const std::string& predictor_name) {
  const stusim::PipelineConfig config = resolve_config(args);
  const std::vector<fs::path> record_files = check_record_files(files);
  const stusim::PredictorTag predictor = [&] {
    try {
      return stusim::predictor_tag_from_string(predictor_name);
    } catch (const stusim::Error& e) {
      throw UsageError(e.what());
    }
  }();
  auto [backend, descriptor] = make_backend(args);
  const stusim::PromptLibrary prompts = load_prompts(args);
  const std::string run_id = require_run_id(args, "predict");

  const stusim::RunPaths paths = stusim::run_paths(args.out, run_id);
  stusim::create_run_dirs(paths);
  stusim::LlmGateway gateway(backend);
  preload_stage_log(gateway, paths);

  const StageOutcome outcome = for_each_student(record_files, [&](const fs::path& file) {
    const stusim::StudentProfile profile = stusim::load_student_profile(file, config);
    stusim::KnowledgeGraph graph;
    const stusim::KnowledgeGraph* graph_ptr = nullptr;
    if (predictor == stusim::PredictorTag::prototype) {
      const fs::path graph_file = paths.graphs / (profile.student_id + ".json");
      if (!fs::exists(graph_file))
        throw stusim::IoError("no graph snapshot at " + graph_file.string() +
                              "; run the build stage first");
      graph = stusim::load_artifact<stusim::KnowledgeGraph>(graph_file);
      graph_ptr = &graph;
    }
    std::vector<std::string> warnings;
    const stusim::PredictionSet predictions = stusim::predict_student(
        gateway, prompts, config, profile, graph_ptr, predictor, args.seed, &warnings);
    print_warnings(warnings);
    stusim::save_artifact(predictions, paths.predictions / (profile.student_id + ".json"));
    std::cout << "predicted " << predictions.predictions.size() << " tasks for "
              << profile.student_id << "\n";
  });
  gateway.flush_run_log(paths.log_file());
  return outcome.any_failed ? kExitRuntime : kExitOk;
}

int cmd_simulate(const GlobalArgs& args, const std::vector<std::string>& files,
                 const std::string& simulator_name) {
  const stusim::PipelineConfig config = resolve_config(args);
  const std::vector<fs::path> record_files = check_record_files(files);
  const stusim::MethodTag simulator = [&] {
    try {
      return stusim::method_tag_from_string(simulator_name);
    } catch (const stusim::Error& e) {
      throw UsageError(e.what());
    }
  }();
  auto [backend, descriptor] = make_backend(args);
  const stusim::PromptLibrary prompts = load_prompts(args);
  const std::string run_id = require_run_id(args, "simulate");

  const stusim::RunPaths paths = stusim::run_paths(args.out, run_id);
  stusim::create_run_dirs(paths);
  stusim::LlmGateway gateway(backend);
  preload_stage_log(gateway, paths);

  const StageOutcome outcome = for_each_student(record_files, [&](const fs::path& file) {
    const stusim::StudentProfile profile = stusim::load_student_profile(file, config);
    const fs::path prediction_file = paths.predictions / (profile.student_id + ".json");
    if (!fs::exists(prediction_file))
      throw stusim::IoError("no prediction set at " + prediction_file.string() +
                            "; run the predict stage first");
    const auto predictions = stusim::load_artifact<stusim::PredictionSet>(prediction_file);
    std::vector<std::string> warnings;
    const stusim::SolutionSet solutions = stusim::simulate_student(
        gateway, prompts, config, profile, predictions, simulator, &warnings);
    print_warnings(warnings);
    stusim::save_artifact(solutions, paths.solutions / (profile.student_id + ".json"));
    std::cout << "simulated " << solutions.solutions.size() << " tasks for "
              << profile.student_id << "\n";
  });
  gateway.flush_run_log(paths.log_file());
  return outcome.any_failed ? kExitRuntime : kExitOk;
}

int cmd_evaluate(const GlobalArgs& args, const std::vector<std::string>& files, bool judge) {
  const stusim::PipelineConfig config = resolve_config(args);
  const std::vector<fs::path> record_files = check_record_files(files);
  auto [backend, descriptor] = make_backend(args);
  const stusim::PromptLibrary prompts = load_prompts(args);
  const std::string run_id = require_run_id(args, "evaluate");

  const stusim::RunPaths paths = stusim::run_paths(args.out, run_id);
  stusim::create_run_dirs(paths);
  stusim::LlmGateway gateway(backend);
  preload_stage_log(gateway, paths);

  const StageOutcome outcome = for_each_student(record_files, [&](const fs::path& file) {
    const stusim::StudentProfile profile = stusim::load_student_profile(file, config);
    const fs::path prediction_file = paths.predictions / (profile.student_id + ".json");
    const fs::path solution_file = paths.solutions / (profile.student_id + ".json");
    for (const fs::path& dependency : {prediction_file, solution_file})
      if (!fs::exists(dependency))
        throw stusim::IoError("missing stage artifact " + dependency.string());
    const auto predictions = stusim::load_artifact<stusim::PredictionSet>(prediction_file);
    const auto solutions = stusim::load_artifact<stusim::SolutionSet>(solution_file);
    std::vector<std::string> warnings;
    const stusim::EvalReport report =
        stusim::evaluate_student(gateway, prompts, profile, predictions, solutions, judge,
                                 &warnings);
    print_warnings(warnings);
    stusim::save_artifact(report, paths.reports / (profile.student_id + ".json"));
    std::cout << "evaluated " << profile.student_id << " (acc "
              << stusim::detail::format_fixed(report.acc, 4) << ")\n";
  });
  gateway.flush_run_log(paths.log_file());
  return outcome.any_failed ? kExitRuntime : kExitOk;
}

int cmd_run(const GlobalArgs& args, const std::vector<std::string>& files,
            const std::string& predictor_name, const std::string& simulator_name, bool judge,
            bool build_first) {
  stusim::RunOptions options;
  options.config = resolve_config(args);
  try {
    options.predictor = stusim::predictor_tag_from_string(predictor_name);
    options.simulator = stusim::method_tag_from_string(simulator_name);
  } catch (const stusim::Error& e) {
    throw UsageError(e.what());
  }
  const std::vector<fs::path> record_files = check_record_files(files);
  auto [backend, descriptor] = make_backend(args);
  const stusim::PromptLibrary prompts = load_prompts(args);

  options.out_dir = args.out;
  options.run_id = args.run_id;
  options.seed = args.seed;
  options.jobs = args.jobs;
  options.strict = args.strict;
  options.judge_enabled = judge;
  options.build_first = build_first;

  stusim::LlmGateway gateway(backend);
  stusim::RunOutcome outcome;
  try {
    outcome = stusim::run_pipeline(gateway, prompts, record_files, options, descriptor);
  } catch (const stusim::ValidationError& e) {
    // Pre-run validation (run id reuse, empty inputs) is a usage error.
    throw UsageError(e.what());
  }

  for (const stusim::StudentResult& result : outcome.results) {
    print_warnings(result.warnings);
    if (result.ok) {
      std::cout << "[ok] " << result.student_id << "\n";
    } else {
      std::cerr << "[failed] " << result.student_id << ": " << result.error << "\n";
    }
  }
  std::cout << "run " << outcome.manifest.run_id << " written to "
            << outcome.paths.root.string() << "\n";
  return outcome.all_ok ? kExitOk : kExitRuntime;
}

int cmd_report(const GlobalArgs& args, const std::vector<std::string>& run_dir_args,
               const std::string& csv_path, const std::string& text_path) {
  std::vector<fs::path> run_dirs;
  if (!run_dir_args.empty()) {
    for (const std::string& dir : run_dir_args) {
      if (!fs::exists(fs::path(dir) / "manifest.json"))
        throw UsageError("no manifest.json under " + dir);
      run_dirs.emplace_back(dir);
    }
  } else {
    if (fs::is_directory(args.out))
      for (const auto& entry : fs::directory_iterator(args.out))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
          run_dirs.push_back(entry.path());
    std::sort(run_dirs.begin(), run_dirs.end());
  }
  if (run_dirs.empty()) throw UsageError("no run manifests found");

  std::vector<stusim::ReportRow> rows;
  try {
    rows = stusim::collect_report_rows(run_dirs);
  } catch (const stusim::ValidationError& e) {
    throw UsageError(e.what());
  }
  const std::string table = stusim::render_report_table(rows);
  std::cout << table;
  if (!text_path.empty()) stusim::write_text_file(text_path, table);
  if (!csv_path.empty()) stusim::write_text_file(csv_path, stusim::render_report_csv(rows));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free student simulation: knowledge-graph cognitive prototypes, "
               "behavior prediction, and beam-search self-refinement."};
  app.fallthrough();
  app.require_subcommand(0, 1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "JSON config file mirroring PipelineConfig");
  app.add_option("--backend", args.backend, "Model backend: scripted or live")
      ->default_str("scripted");
  app.add_option("--fixtures", args.fixtures, "Fixture file for the scripted backend");
  app.add_option("--prompts", args.prompts_dir, "Prompt template directory")
      ->default_str("prompts");
  app.add_option("--out", args.out, "Output directory holding run directories")
      ->default_str("runs");
  app.add_option("--run-id", args.run_id, "Run identifier (derived from the config if omitted)");
  app.add_option("--seed", args.seed, "Base seed for the random baselines");
  app.add_option("--jobs", args.jobs, "Students processed concurrently (run command)");
  app.add_flag("--strict", args.strict, "Make per-record ingestion failures fatal");
  app.add_option("--M", args.M, "Past records consumed per student");
  app.add_option("--N", args.N, "Simulation records per student");
  app.add_option("--p", args.p, "Top concepts for prototype mapping");
  app.add_option("--L", args.L, "Max refinement iterations");
  app.add_option("--B", args.B, "Beam width (samples per iteration)");
  app.add_option("--delta", args.delta, "Value-score acceptance threshold");
  app.add_option("--concept-cap", args.concept_cap, "Max concepts extracted per record");
  app.add_option("--retrieval-count", args.retrieval_count, "Records retrieved for prediction");

  std::vector<std::string> build_files, predict_files, simulate_files, evaluate_files, run_files;
  std::vector<std::string> report_dirs;
  std::string predictor = "prototype";
  std::string simulator = "refine";
  bool judge = true;
  bool build_first = false;
  std::string csv_path, text_path;

  CLI::App* build = app.add_subcommand("build", "Build cognitive prototypes (graphs)");
  build->add_option("files", build_files, "Student record files")->required();

  CLI::App* predict = app.add_subcommand("predict", "Predict behavior on simulation tasks");
  predict->add_option("files", predict_files, "Student record files")->required();
  predict->add_option("--predictor", predictor,
                      "prototype|random|similarity|level|level-random|level-similarity");

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate solutions for predicted behavior");
  simulate->add_option("files", simulate_files, "Student record files")->required();
  simulate->add_option("--simulator", simulator, "io|cot|refine");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions and simulations");
  evaluate->add_option("files", evaluate_files, "Student record files")->required();
  evaluate->add_flag("--judge,!--no-judge", judge, "Enable the LLM judge metrics");

  CLI::App* run = app.add_subcommand("run", "Full pipeline: build, predict, simulate, evaluate");
  run->add_option("files", run_files, "Student record files")->required();
  run->add_option("--predictor", predictor,
                  "prototype|random|similarity|level|level-random|level-similarity");
  run->add_option("--simulator", simulator, "io|cot|refine");
  run->add_flag("--judge,!--no-judge", judge, "Enable the LLM judge metrics");
  run->add_flag("--build-first", build_first, "Rebuild graphs even when snapshots exist");

  CLI::App* report = app.add_subcommand("report", "Render the cross-configuration grid");
  report->add_option("runs", report_dirs, "Run directories (default: scan --out)");
  report->add_option("--csv", csv_path, "Also write the grid as CSV to this path");
  report->add_option("--text", text_path, "Also write the plain-text table to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(args, build_files);
    if (predict->parsed()) return cmd_predict(args, predict_files, predictor);
    if (simulate->parsed()) return cmd_simulate(args, simulate_files, simulator);
    if (evaluate->parsed()) return cmd_evaluate(args, evaluate_files, judge);
    if (run->parsed())
      return cmd_run(args, run_files, predictor, simulator, judge, build_first);
    if (report->parsed()) return cmd_report(args, report_dirs, csv_path, text_path);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
