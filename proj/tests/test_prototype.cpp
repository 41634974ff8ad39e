#include <doctest.h>

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "stusim/prototype.hpp"

using namespace stusim;

TEST_CASE("parse_concept_list accepts the documented list shapes") {
  SUBCASE("numbered") {
    CHECK(parse_concept_list("1. For Loops\n2. Recursion", 15) ==
          std::vector<std::string>{"For Loops", "Recursion"});
  }
  SUBCASE("numbered with parenthesis or colon") {
    CHECK(parse_concept_list("1) Arrays\n2: Stacks", 15) ==
          std::vector<std::string>{"Arrays", "Stacks"});
  }
  SUBCASE("dashes and stars") {
    CHECK(parse_concept_list("- Arrays\n* Stacks", 15) ==
          std::vector<std::string>{"Arrays", "Stacks"});
  }
  SUBCASE("blank lines ignored") {
    CHECK(parse_concept_list("1. Arrays\n\n2. Stacks\n", 15) ==
          std::vector<std::string>{"Arrays", "Stacks"});
  }
  SUBCASE("deduplicates by canonical form, first surface wins") {
    CHECK(parse_concept_list("1. For Loops\n2. for   loops\n3. FOR LOOPS", 15) ==
          std::vector<std::string>{"For Loops"});
  }
  SUBCASE("cap truncates after deduplication") {
    CHECK(parse_concept_list("1. A\n2. a\n3. B\n4. C", 2) == std::vector<std::string>{"A", "B"});
  }
  SUBCASE("none is a legal empty list") {
    CHECK(parse_concept_list("none", 15).empty());
    CHECK(parse_concept_list("None.", 15).empty());
    CHECK(parse_concept_list("(none)", 15).empty());
  }
  SUBCASE("no list structure is a parse error carrying the raw text") {
    try {
      parse_concept_list("I could not find any concepts worth listing here", 15);
      FAIL("expected ExtractionParseError");
    } catch (const ExtractionParseError& e) {
      CHECK(e.raw_response().find("worth listing") != std::string::npos);
    }
  }
}

TEST_CASE("parse_relation_lines") {
  const std::vector<std::string> concepts{"For Loops", "Integer Arithmetic", "Recursion"};
  std::vector<std::string> warnings;

  SUBCASE("plain triples with canonical matching") {
    const auto triples = parse_relation_lines(
        "for loops Used_for integer arithmetic\nRecursion Hyponym_of For Loops", concepts,
        &warnings);
    REQUIRE(triples.size() == 2);
    CHECK(triples[0].source == "for loops");
    CHECK(triples[0].type == RelationType::Used_for);
    CHECK(triples[0].target == "integer arithmetic");
    CHECK(triples[1].type == RelationType::Hyponym_of);
    CHECK(warnings.empty());
  }
  SUBCASE("list markers and case-insensitive relation tokens") {
    const auto triples =
        parse_relation_lines("1. For Loops used_for Recursion", concepts, &warnings);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].type == RelationType::Used_for);
  }
  SUBCASE("self-loops are dropped with a warning") {
    const auto triples =
        parse_relation_lines("For Loops Used_for for   loops", concepts, &warnings);
    CHECK(triples.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("self") != std::string::npos);
  }
  SUBCASE("foreign concepts are dropped with a warning") {
    const auto triples =
        parse_relation_lines("Pointers Used_for For Loops", concepts, &warnings);
    CHECK(triples.empty());
    CHECK(warnings.size() == 1);
  }
  SUBCASE("none yields an empty list without warnings") {
    CHECK(parse_relation_lines("none", concepts, &warnings).empty());
    CHECK(warnings.empty());
  }
  SUBCASE("no structure at all is a parse error") {
    CHECK_THROWS_AS(parse_relation_lines("these ideas feel related somehow", concepts, &warnings),
                    ExtractionParseError);
  }
}

TEST_CASE("parse_local_verdicts") {
  const std::vector<std::string> concepts{"For Loops", "Recursion"};

  SUBCASE("labeled lines in any order") {
    const auto verdicts =
        parse_local_verdicts("recursion: Bad\nFor Loops: Good", concepts);
    REQUIRE(verdicts.size() == 2);
    CHECK(verdicts[0] == Verdict::Good);  // aligned to concept order
    CHECK(verdicts[1] == Verdict::Bad);
  }
  SUBCASE("first labeled occurrence wins") {
    const auto verdicts =
        parse_local_verdicts("For Loops: Good\nRecursion: Bad\nFor Loops: Bad", concepts);
    CHECK(verdicts[0] == Verdict::Good);
  }
  SUBCASE("bare verdict sequence when every label is missing") {
    const auto verdicts = parse_local_verdicts("Good\nBad", concepts);
    REQUIRE(verdicts.size() == 2);
    CHECK(verdicts[0] == Verdict::Good);
    CHECK(verdicts[1] == Verdict::Bad);
  }
  SUBCASE("partial coverage names the first missing concept") {
    try {
      parse_local_verdicts("For Loops: Good", concepts);
      FAIL("expected ExtractionParseError");
    } catch (const ExtractionParseError& e) {
      CHECK(std::string(e.what()).find("Recursion") != std::string::npos);
    }
  }
  SUBCASE("garbage is a parse error") {
    CHECK_THROWS_AS(parse_local_verdicts("maybe fine?", concepts), ExtractionParseError);
  }
}

TEST_CASE("edge mode oracle: 1000 random libraries") {
  // Brute force: count each relation type; resolve to the max count, breaking
  // ties by earliest first occurrence in the library.
  auto brute_force = [](const std::vector<RelationType>& library) {
    std::map<RelationType, int> counts;
    for (RelationType type : library) ++counts[type];
    RelationType best = library.front();
    int best_count = counts[best];
    for (RelationType type : library) {  // library order = first-occurrence order
      if (counts[type] > best_count) {
        best = type;
        best_count = counts[type];
      }
    }
    return best;
  };

  std::mt19937_64 rng(20260814);
  const auto types = all_relation_types();
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t size = 1 + rng() % 9;
    std::vector<RelationType> library;
    for (std::size_t i = 0; i < size; ++i) library.push_back(types[rng() % types.size()]);
    REQUIRE(resolve_mode(library) == brute_force(library));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("edge mode: deterministic corner cases") {
  using R = RelationType;
  CHECK(resolve_mode({R::Part_of}) == R::Part_of);
  // Tie between two types: first occurrence wins.
  CHECK(resolve_mode({R::Used_for, R::Prerequisite_of}) == R::Used_for);
  CHECK(resolve_mode({R::Prerequisite_of, R::Used_for}) == R::Prerequisite_of);
  // Later majority beats earlier minority.
  CHECK(resolve_mode({R::Used_for, R::Part_of, R::Part_of}) == R::Part_of);
  // Three-way tie: earliest of the tied.
  CHECK(resolve_mode({R::Hyponym_of, R::Part_of, R::Used_for}) == R::Hyponym_of);
  CHECK_THROWS_AS(resolve_mode({}), ValidationError);
}

namespace {

/// Scripted build scenario: two past records over three concepts.
struct BuildRig {
  std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
  PromptLibrary prompts = testutil::test_prompts();
  PipelineConfig config;
  StudentProfile profile;

  BuildRig() {
    config.past_count = 2;
    config.simulation_count = 1;
    profile.student_id = "s1";
    profile.past_records = {
        testutil::make_record("r0", 0, "Loop over a range.", true),
        testutil::make_record("r1", 1, "Recurse over a list.", false),
    };
    profile.simulation_records = {testutil::make_record("r2", 2, "New task.", true)};
  }

  void script_record(const std::string& node_response, const std::string& edge_response,
                     const std::string& local_response, bool has_edge_call = true) {
    backend->add_ordinal(ModelRole::desc, {"a description"});
    backend->add_ordinal(ModelRole::node, {node_response});
    if (has_edge_call) backend->add_ordinal(ModelRole::edge, {edge_response});
    backend->add_ordinal(ModelRole::local, {local_response});
  }
};

}  // namespace

TEST_CASE("builder assembles the graph from scripted extractions") {
  BuildRig rig;
  rig.script_record("1. For Loops\n2. Ranges", "For Loops Used_for Ranges",
                    "For Loops: Good\nRanges: Good");
  rig.script_record("1. Recursion\n2. For Loops", "Recursion Hyponym_of For Loops",
                    "Recursion: Bad\nFor Loops: Good");
  rig.backend->add_ordinal(ModelRole::global, {"Loops are solid."});
  rig.backend->add_ordinal(ModelRole::global, {"Ranges are fine."});
  rig.backend->add_ordinal(ModelRole::global, {"Recursion is shaky."});

  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, /*strict=*/false);
  const KnowledgeGraph graph = builder.build(rig.profile);

  CHECK(graph.student_id == "s1");
  REQUIRE(graph.nodes.size() == 3);
  const ConceptNode& loops = graph.nodes.at("for loops");
  CHECK(loops.display_name == "For Loops");
  REQUIRE(loops.state_library.size() == 2);
  CHECK(loops.state_library[0].record_id == "r0");
  CHECK(loops.state_library[0].verdict == Verdict::Good);
  REQUIRE(loops.global_state.has_value());
  CHECK(loops.global_state->good_count == 2);
  CHECK(loops.global_state->bad_count == 0);
  CHECK(loops.global_state->dominant == Dominance::Good);
  CHECK(loops.global_state->summary == "Loops are solid.");

  const ConceptNode& recursion = graph.nodes.at("recursion");
  CHECK(recursion.global_state->dominant == Dominance::Bad);

  REQUIRE(graph.edges.size() == 2);
  const EdgeRecord& edge = graph.edges.at({"for loops", "ranges"});
  REQUIRE(edge.resolved.has_value());
  CHECK(*edge.resolved == RelationType::Used_for);

  CHECK_NOTHROW(check_graph(graph));
  CHECK(builder.warnings().empty());

  // Global summaries are requested in sorted node order.
  const auto entries = gateway.entries();
  std::vector<std::string> global_prompts;
  for (const auto& entry : entries)
    if (entry.request.role == ModelRole::global) global_prompts.push_back(entry.request.prompt);
  REQUIRE(global_prompts.size() == 3);
  CHECK(global_prompts[0].find("For Loops") != std::string::npos);
  CHECK(global_prompts[1].find("Ranges") != std::string::npos);
  CHECK(global_prompts[2].find("Recursion") != std::string::npos);
}

TEST_CASE("single-concept records skip the edge role entirely") {
  BuildRig rig;
  rig.script_record("1. For Loops", "(unused)", "For Loops: Good", /*has_edge_call=*/false);
  rig.script_record("1. For Loops", "(unused)", "For Loops: Good", /*has_edge_call=*/false);
  rig.backend->add_ordinal(ModelRole::global, {"Fine."});

  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, false);
  const KnowledgeGraph graph = builder.build(rig.profile);
  CHECK(graph.nodes.size() == 1);
  CHECK(gateway.call_count(ModelRole::edge) == 0);
}

TEST_CASE("record ingestion is atomic: a late parse failure leaves no partial state") {
  BuildRig rig;
  rig.script_record("1. For Loops\n2. Ranges", "For Loops Used_for Ranges",
                    "no verdicts here at all");  // local parse will fail
  rig.script_record("1. Recursion", "(unused)", "Recursion: Bad", /*has_edge_call=*/false);
  rig.backend->add_ordinal(ModelRole::global, {"Recursion is shaky."});

  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, false);
  const KnowledgeGraph graph = builder.build(rig.profile);

  // r0 contributed nothing -- not even the node extraction that succeeded.
  CHECK(graph.nodes.count("for loops") == 0);
  CHECK(graph.edges.empty());
  REQUIRE(graph.nodes.count("recursion") == 1);
  REQUIRE_FALSE(builder.warnings().empty());
  CHECK(builder.warnings().front().find("r0") != std::string::npos);
}

TEST_CASE("strict mode turns record skips into failures") {
  BuildRig rig;
  rig.script_record("1. For Loops\n2. Ranges", "For Loops Used_for Ranges", "garbage");
  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, /*strict=*/true);
  CHECK_THROWS_AS(builder.build(rig.profile), ExtractionParseError);
}

TEST_CASE("empty concept extraction skips the record legally") {
  BuildRig rig;
  // r0: desc + node only; a "none" extraction stops before edge/local.
  rig.backend->add_ordinal(ModelRole::desc, {"a description"});
  rig.backend->add_ordinal(ModelRole::node, {"none"});
  rig.script_record("1. Recursion", "(unused)", "Recursion: Good", /*has_edge_call=*/false);
  rig.backend->add_ordinal(ModelRole::global, {"Okay."});

  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, false);
  const KnowledgeGraph graph = builder.build(rig.profile);
  CHECK(graph.nodes.size() == 1);
  // Local analysis was never requested for the empty record.
  CHECK(gateway.call_count(ModelRole::local) == 1);
  CHECK(builder.warnings().empty());
}

TEST_CASE("describe_task requires a non-empty statement and returns verbatim text") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_ordinal(ModelRole::desc, {"  A description with whitespace kept.  "});
  PromptLibrary prompts = testutil::test_prompts();
  LlmGateway gateway(backend);
  CHECK(describe_task(gateway, prompts, "Sum numbers.", {"s1", "test"}) ==
        "  A description with whitespace kept.  ");
  CHECK_THROWS_AS(describe_task(gateway, prompts, "   ", {"s1", "test"}), ValidationError);
}

TEST_CASE("check_graph rejects structural corruption") {
  KnowledgeGraph graph;
  graph.student_id = "s1";
  ConceptNode node;
  node.canonical_name = "loops";
  node.display_name = "Loops";
  node.state_library.push_back({"r0", Verdict::Good});
  graph.nodes["loops"] = node;

  SUBCASE("valid minimal graph passes") { CHECK_NOTHROW(check_graph(graph)); }
  SUBCASE("key mismatch") {
    graph.nodes["other"] = node;
    CHECK_THROWS_AS(check_graph(graph), ValidationError);
  }
  SUBCASE("empty state library") {
    graph.nodes["loops"].state_library.clear();
    CHECK_THROWS_AS(check_graph(graph), ValidationError);
  }
  SUBCASE("edge endpoint missing") {
    EdgeRecord edge;
    edge.endpoints = {"loops", "ghost"};
    edge.library = {RelationType::Used_for};
    graph.edges[edge.endpoints] = edge;
    CHECK_THROWS_AS(check_graph(graph), ValidationError);
  }
  SUBCASE("self-loop edge") {
    EdgeRecord edge;
    edge.endpoints = {"loops", "loops"};
    edge.library = {RelationType::Used_for};
    graph.edges[edge.endpoints] = edge;
    CHECK_THROWS_AS(check_graph(graph), ValidationError);
  }
}

TEST_CASE("directed edges never merge with their reverse") {
  BuildRig rig;
  rig.script_record("1. A\n2. B", "A Used_for B", "A: Good\nB: Good");
  rig.script_record("1. A\n2. B", "B Used_for A", "A: Good\nB: Good");
  rig.backend->add_ordinal(ModelRole::global, {"ok"});
  rig.backend->add_ordinal(ModelRole::global, {"ok"});

  LlmGateway gateway(rig.backend);
  PrototypeBuilder builder(gateway, rig.prompts, rig.config, false);
  const KnowledgeGraph graph = builder.build(rig.profile);
  REQUIRE(graph.edges.size() == 2);
  CHECK(graph.edges.count({"a", "b"}) == 1);
  CHECK(graph.edges.count({"b", "a"}) == 1);
}

TEST_CASE("relation type names round-trip") {
  for (RelationType type : all_relation_types())
    CHECK(relation_type_from_string(to_string(type)) == type);
  CHECK_THROWS_AS(relation_type_from_string("Causes"), FormatError);
  CHECK(match_relation_token("used_for").value() == RelationType::Used_for);
  CHECK(match_relation_token("USED_FOR").value() == RelationType::Used_for);
  CHECK_FALSE(match_relation_token("uses").has_value());
}
