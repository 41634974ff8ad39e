#pragma once

// Shared scaffolding for the unit tests: an in-memory prompt library with
// every template the pipeline renders, small profile builders, and a
// self-cleaning temp directory.

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stusim/llm.hpp"
#include "stusim/prompts.hpp"
#include "stusim/records.hpp"

namespace testutil {

inline stusim::PromptLibrary test_prompts() {
  stusim::PromptLibrary prompts;
  prompts.add("desc", "Describe: {{task_statement}}");
  prompts.add("node",
              "Concepts (max {{concept_cap}}) for {{task_statement}} / {{description}} / "
              "{{behavior}} / {{solution}}");
  prompts.add("edge", "Relations among:\n{{concepts}}");
  prompts.add("local",
              "Verdicts for {{concepts}} given {{description}} / {{task_statement}} / "
              "{{behavior}} / {{solution}}");
  prompts.add("global",
              "Summarize {{concept}}: {{cognitive_states}} ({{good_count}} good, "
              "{{bad_count}} bad)");
  prompts.add("pred",
              "Predict {{task_statement}} given {{cognitive_states}} and {{retrieved_record}}");
  prompts.add("pred_record", "Predict {{task_statement}} given {{retrieved_record}}");
  prompts.add("pred_level", "Predict {{task_statement}} at level {{level}}");
  prompts.add("pred_level_record",
              "Predict {{task_statement}} at level {{level}} given {{retrieved_record}}");
  prompts.add("refine_initial",
              "Write {{language}} for {{task_statement}} as {{behavior}}; see "
              "{{retrieved_record}}");
  prompts.add("refine_step",
              "Refine {{current_solution}} for {{task_statement}} as {{behavior}}; see "
              "{{retrieved_record}} ({{language}})");
  prompts.add("io", "Solve {{task_statement}} as {{behavior}} in {{language}}");
  prompts.add("cot", "Think stepwise, then solve {{task_statement}} as {{behavior}} in "
                     "{{language}}");
  prompts.add("value", "Score {{candidate}} against {{behavior}} for {{task_statement}}");
  prompts.add("judge_behavior", "Rate behavior {{generated}} vs {{reference}}");
  prompts.add("judge_solution", "Rate solution {{generated}} vs {{reference}}");
  prompts.add("judge_cognitive", "Rate overall {{solution}}");
  return prompts;
}

inline stusim::LearningRecord make_record(std::string id, int order, std::string statement,
                                          bool correct, std::string solution = "print(1)",
                                          std::string behavior = "Solved it directly.") {
  stusim::LearningRecord record;
  record.record_id = std::move(id);
  record.order_index = order;
  record.task_statement = std::move(statement);
  record.behavior = std::move(behavior);
  record.is_correct = correct;
  record.solution = std::move(solution);
  record.language_tag = stusim::LanguageTag::python;
  return record;
}

/// Unique temp directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("stusim-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Backend that fails with TransportError a fixed number of times, then
/// delegates to an inner scripted backend.
class FlakyBackend : public stusim::CompletionBackend {
 public:
  FlakyBackend(std::shared_ptr<stusim::CompletionBackend> inner, int failures)
      : inner_(std::move(inner)), failures_left_(failures) {}

  std::vector<std::string> complete(const stusim::InvocationRequest& request) override {
    if (failures_left_ > 0) {
      --failures_left_;
      throw stusim::TransportError("synthetic transport failure");
    }
    return inner_->complete(request);
  }

  std::string describe() const override { return "flaky:" + inner_->describe(); }

 private:
  std::shared_ptr<stusim::CompletionBackend> inner_;
  int failures_left_;
};

}  // namespace testutil
