#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "stusim/simulate.hpp"

using namespace stusim;

TEST_CASE("extract_code_block") {
  CHECK(extract_code_block("```python\nprint(1)\n```") == "print(1)");
  CHECK(extract_code_block("prose\n```python\nprint(1)\nprint(2)\n```\nmore prose") ==
        "print(1)\nprint(2)");
  CHECK(extract_code_block("```\nraw fence\n```") == "raw fence");
  // Only the first complete fence counts.
  CHECK(extract_code_block("```python\na\n```\n```python\nb\n```") == "a");
  // No fence: the whole trimmed response.
  CHECK(extract_code_block("  just code  ") == "just code");
  // Unterminated fence: fall back to the whole trimmed response.
  CHECK(extract_code_block("```python\nno closing") == "```python\nno closing");
  // Trailing newlines inside the fence are stripped.
  CHECK(extract_code_block("```\nx\n\n\n```") == "x");
}

TEST_CASE("parse_value_score") {
  CHECK(parse_value_score("0.95").value() == doctest::Approx(0.95));
  CHECK(parse_value_score("Score: 0.7 overall").value() == doctest::Approx(0.7));
  CHECK(parse_value_score("1").value() == doctest::Approx(1.0));
  CHECK(parse_value_score("0").value() == doctest::Approx(0.0));
  // The first in-range number wins; out-of-range numbers are skipped.
  CHECK(parse_value_score("rated 7/10, call it 0.7").value() == doctest::Approx(0.7));
  // A bare leading dot is not part of the match, so ".5" reads as 5: out of range.
  CHECK_FALSE(parse_value_score("around .5 I think").has_value());
  CHECK_FALSE(parse_value_score("no numbers here").has_value());
  CHECK_FALSE(parse_value_score("42").has_value());
  // Enormous digit runs must not crash the parser.
  CHECK(parse_value_score(std::string(40, '9') + " then 0.25").value() == doctest::Approx(0.25));
}

namespace {

struct SimRig {
  std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
  PromptLibrary prompts = testutil::test_prompts();
  PipelineConfig config;
  LearningRecord task = testutil::make_record("t0", 5, "Sum the numbers.", true);
  BehaviorPrediction behavior;
  const CallContext context{"s1", "simulate"};

  SimRig() {
    behavior.task_id = "t0";
    behavior.predicted_correct = true;
    behavior.description = "Will sum carefully.";
  }
};

std::string fenced(const std::string& code) { return "```python\n" + code + "\n```"; }

}  // namespace

TEST_CASE("refine follows the scripted trajectory and keeps the argmax") {
  SimRig rig;
  rig.config.max_iterations = 3;
  rig.config.beam_width = 2;
  rig.config.value_threshold = 0.9;

  rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
  rig.backend->add_ordinal(ModelRole::refine, {fenced("cand-1-0"), fenced("cand-1-1")});
  rig.backend->add_ordinal(ModelRole::refine, {fenced("cand-2-0"), fenced("cand-2-1")});
  for (const char* score : {"0.30", "0.70", "0.95", "0.50"})
    rig.backend->add_ordinal(ModelRole::value, {score});

  LlmGateway gateway(rig.backend);
  SolutionSimulator simulator(gateway, rig.prompts, rig.config);
  const SimulatedSolution result =
      simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);

  CHECK(result.task_id == "t0");
  CHECK(result.method_tag == MethodTag::refine);
  CHECK(result.iterations_used == 2);  // 0.70 < 0.9, then 0.95 >= 0.9
  REQUIRE(result.score_trace.size() == 2);
  CHECK(result.score_trace[0] == std::vector<double>{0.30, 0.70});
  CHECK(result.score_trace[1] == std::vector<double>{0.95, 0.50});
  CHECK(result.solution == "cand-2-0");
  CHECK(result.final_score.value() == doctest::Approx(0.95));
  CHECK(gateway.call_count(ModelRole::refine) == 3);  // 1 + 2 iterations
  CHECK(gateway.call_count(ModelRole::value) == 4);   // B * iterations

  // The iteration request heats up and samples the beam width.
  for (const auto& entry : gateway.entries()) {
    if (entry.request.role != ModelRole::refine) continue;
    CHECK(entry.request.temperature == doctest::Approx(0.7));
  }
  CHECK(gateway.entries()[1].request.sample_count == 2);
}

TEST_CASE("value-score ties keep the lowest index") {
  SimRig rig;
  rig.config.max_iterations = 1;
  rig.config.beam_width = 3;
  rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
  rig.backend->add_ordinal(ModelRole::refine,
                           {fenced("first"), fenced("second"), fenced("third")});
  for (const char* score : {"0.5", "0.5", "0.5"})
    rig.backend->add_ordinal(ModelRole::value, {score});

  LlmGateway gateway(rig.backend);
  SolutionSimulator simulator(gateway, rig.prompts, rig.config);
  const auto result = simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);
  CHECK(result.solution == "first");
  CHECK(result.iterations_used == 1);  // L exhausted without reaching delta
  CHECK(result.final_score.value() == doctest::Approx(0.5));
}

TEST_CASE("unparseable value responses re-ask once, then score 0 with a warning") {
  SimRig rig;
  rig.config.max_iterations = 1;
  rig.config.beam_width = 1;
  rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
  rig.backend->add_ordinal(ModelRole::refine, {fenced("candidate")});
  rig.backend->add_ordinal(ModelRole::value, {"unsure"});
  rig.backend->add_ordinal(ModelRole::value, {"still unsure"});

  LlmGateway gateway(rig.backend);
  SolutionSimulator simulator(gateway, rig.prompts, rig.config);
  const auto result = simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);
  CHECK(result.score_trace == std::vector<std::vector<double>>{{0.0}});
  CHECK(gateway.call_count(ModelRole::value) == 2);
  REQUIRE_FALSE(simulator.warnings().empty());
  CHECK(simulator.warnings().front().find("t0") != std::string::npos);
}

TEST_CASE("a mid-loop gateway failure reports completed iterations") {
  SimRig rig;
  rig.config.max_iterations = 3;
  rig.config.beam_width = 1;
  rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
  rig.backend->add_ordinal(ModelRole::refine, {fenced("cand-1")});
  rig.backend->add_ordinal(ModelRole::value, {"0.2"});
  // Second iteration's refine entry is missing -> ScriptedMissError.

  LlmGateway gateway(rig.backend);
  SolutionSimulator simulator(gateway, rig.prompts, rig.config);
  try {
    simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    const std::string what = e.what();
    CHECK(what.find("1 completed iterations") != std::string::npos);
    CHECK(what.find("t0") != std::string::npos);
  }
}

TEST_CASE("io and cot are single refine calls with no trace") {
  for (MethodTag tag : {MethodTag::io, MethodTag::cot}) {
    CAPTURE(to_string(tag));
    SimRig rig;
    rig.backend->add_ordinal(ModelRole::refine, {"plain answer, no fence"});
    LlmGateway gateway(rig.backend);
    SolutionSimulator simulator(gateway, rig.prompts, rig.config);
    const auto result = tag == MethodTag::io
                            ? simulator.simulate_io(rig.task, rig.behavior, nullptr, rig.context)
                            : simulator.simulate_cot(rig.task, rig.behavior, nullptr, rig.context);
    CHECK(result.method_tag == tag);
    CHECK(result.solution == "plain answer, no fence");
    CHECK(result.iterations_used == 0);
    CHECK(result.score_trace.empty());
    CHECK_FALSE(result.final_score.has_value());
    CHECK(gateway.call_count(ModelRole::refine) == 1);
    CHECK(gateway.call_count(ModelRole::value) == 0);
  }
}

TEST_CASE("retrieved records and empty behavior are handled at the edges") {
  SimRig rig;
  rig.config.max_iterations = 1;
  rig.config.beam_width = 1;
  const LearningRecord retrieved =
      testutil::make_record("r9", 0, "Old task.", true, "print('old')");

  SUBCASE("retrieved record lands in the prompt") {
    rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
    rig.backend->add_ordinal(ModelRole::refine, {fenced("cand")});
    rig.backend->add_ordinal(ModelRole::value, {"0.99"});
    LlmGateway gateway(rig.backend);
    SolutionSimulator simulator(gateway, rig.prompts, rig.config);
    simulator.simulate_refine(rig.task, rig.behavior, &retrieved, rig.context);
    CHECK(gateway.entries().front().request.prompt.find("Old task.") != std::string::npos);
  }
  SUBCASE("no retrieved record renders the (none) marker") {
    rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
    rig.backend->add_ordinal(ModelRole::refine, {fenced("cand")});
    rig.backend->add_ordinal(ModelRole::value, {"0.99"});
    LlmGateway gateway(rig.backend);
    SolutionSimulator simulator(gateway, rig.prompts, rig.config);
    simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);
    CHECK(gateway.entries().front().request.prompt.find("(none)") != std::string::npos);
  }
  SUBCASE("empty behavior description is rejected") {
    rig.behavior.description = "   ";
    LlmGateway gateway(rig.backend);
    SolutionSimulator simulator(gateway, rig.prompts, rig.config);
    CHECK_THROWS_AS(simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context),
                    ValidationError);
    CHECK_THROWS_AS(simulator.simulate_io(rig.task, rig.behavior, nullptr, rig.context),
                    ValidationError);
  }
}

TEST_CASE("algorithm laws hold across randomized scripted trajectories") {
  std::mt19937_64 rng(424242);
  int trials_run = 0;

  for (int trial = 0; trial < 240; ++trial) {
    const int L = 1 + static_cast<int>(rng() % 5);   // 1..5
    const int B = 1 + static_cast<int>(rng() % 3);   // 1..3
    const double delta = 0.9;

    // Random score grid, quantized to two decimals for exact replay.
    std::vector<std::vector<double>> grid(L);
    for (auto& row : grid) {
      row.resize(B);
      for (double& score : row) score = static_cast<double>(rng() % 101) / 100.0;
    }

    // Independent trajectory prediction.
    int expected_iterations = L;
    for (int l = 0; l < L; ++l) {
      if (*std::max_element(grid[l].begin(), grid[l].end()) >= delta) {
        expected_iterations = l + 1;
        break;
      }
    }
    SimRig rig;
    rig.config.max_iterations = L;
    rig.config.beam_width = B;
    rig.config.value_threshold = delta;
    rig.backend->add_ordinal(ModelRole::refine, {fenced("draft")});
    for (int l = 0; l < L; ++l) {
      std::vector<std::string> candidates;
      for (int b = 0; b < B; ++b)
        candidates.push_back(fenced("cand-" + std::to_string(l) + "-" + std::to_string(b)));
      rig.backend->add_ordinal(ModelRole::refine, candidates);
      for (int b = 0; b < B; ++b) {
        char buffer[16];
        std::snprintf(buffer, sizeof buffer, "%.2f", grid[l][b]);
        rig.backend->add_ordinal(ModelRole::value, {buffer});
      }
    }

    LlmGateway gateway(rig.backend);
    SolutionSimulator simulator(gateway, rig.prompts, rig.config);
    const SimulatedSolution result =
        simulator.simulate_refine(rig.task, rig.behavior, nullptr, rig.context);

    CAPTURE(trial);
    CAPTURE(L);
    CAPTURE(B);

    // Law: iterations bounded by L.
    REQUIRE(result.iterations_used <= L);
    // Law: call counts.
    REQUIRE(gateway.call_count(ModelRole::refine) ==
            static_cast<std::size_t>(1 + result.iterations_used));
    REQUIRE(gateway.call_count(ModelRole::value) ==
            static_cast<std::size_t>(B * result.iterations_used));
    // Law: early exit iff some iteration's max reached delta.
    REQUIRE(result.iterations_used == expected_iterations);
    bool any_reached = false;
    for (const auto& row : result.score_trace)
      if (*std::max_element(row.begin(), row.end()) >= delta) any_reached = true;
    REQUIRE((result.iterations_used < L) == (any_reached && expected_iterations < L));
    if (any_reached)
      REQUIRE(*std::max_element(result.score_trace.back().begin(),
                                result.score_trace.back().end()) >= delta);
    // Law: the trace is the consumed prefix of the scripted grid.
    REQUIRE(result.score_trace.size() == static_cast<std::size_t>(result.iterations_used));
    for (int l = 0; l < result.iterations_used; ++l) REQUIRE(result.score_trace[l] == grid[l]);
    // Law: final score is the max of the last iteration, and the winning
    // candidate is the argmax with ties to the lowest index.
    const auto& last = result.score_trace.back();
    REQUIRE(result.final_score.value() ==
            doctest::Approx(*std::max_element(last.begin(), last.end())));
    std::size_t best = 0;
    for (std::size_t i = 1; i < last.size(); ++i)
      if (last[i] > last[best]) best = i;
    REQUIRE(result.solution == "cand-" + std::to_string(result.iterations_used - 1) + "-" +
                                   std::to_string(best));
    ++trials_run;
  }
  CHECK(trials_run == 240);
}

TEST_CASE("method tags round-trip") {
  for (MethodTag tag : {MethodTag::io, MethodTag::cot, MethodTag::refine})
    CHECK(method_tag_from_string(to_string(tag)) == tag);
  CHECK_THROWS_AS(method_tag_from_string("beam"), FormatError);
}
