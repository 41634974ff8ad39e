#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "stusim/llm.hpp"

using namespace stusim;

namespace {

InvocationRequest request_for(ModelRole role, std::string prompt = "p", double temp = 0.0,
                              int samples = 1) {
  InvocationRequest request;
  request.role = role;
  request.prompt = std::move(prompt);
  request.temperature = temp;
  request.sample_count = samples;
  return request;
}

GatewayOptions fast_retry() {
  GatewayOptions options;
  options.backoff_initial_ms = 0;
  return options;
}

const CallContext kContext{"s1", "test"};

}  // namespace

TEST_CASE("role contract: only refine may sample or heat up") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_ordinal(ModelRole::desc, {"d"});
  LlmGateway gateway(backend);

  for (ModelRole role : {ModelRole::desc, ModelRole::node, ModelRole::edge, ModelRole::local,
                         ModelRole::global, ModelRole::pred, ModelRole::value, ModelRole::judge}) {
    CHECK_THROWS_AS(gateway.complete(request_for(role, "p", 0.5), kContext), ContractError);
    CHECK_THROWS_AS(gateway.complete(request_for(role, "p", 0.0, 2), kContext), ContractError);
  }
  CHECK_THROWS_AS(gateway.complete(request_for(ModelRole::refine, "p", -0.1), kContext),
                  ContractError);
  CHECK_THROWS_AS(gateway.complete(request_for(ModelRole::desc, "p", 0.0, 0), kContext),
                  ContractError);
  // Contract violations must leave no trace in the log.
  CHECK(gateway.entries().empty());

  // The refine role may do both.
  backend->add_ordinal(ModelRole::refine, {"a", "b", "c"});
  const auto responses = gateway.complete(request_for(ModelRole::refine, "p", 0.7, 3), kContext);
  CHECK(responses == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("scripted backend: digest match wins over ordinal") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_prompt(ModelRole::desc, "special prompt", {"by digest"});
  backend->add_ordinal(ModelRole::desc, {"by ordinal 0"});
  backend->add_ordinal(ModelRole::desc, {"by ordinal 1"});

  CHECK(backend->complete(request_for(ModelRole::desc, "anything")).front() == "by ordinal 0");
  CHECK(backend->complete(request_for(ModelRole::desc, "special prompt")).front() == "by digest");
  // Digest matches must not consume the role's ordinal counter.
  CHECK(backend->complete(request_for(ModelRole::desc, "other")).front() == "by ordinal 1");
}

TEST_CASE("scripted backend: miss names role, digest, and ordinal") {
  auto backend = std::make_shared<ScriptedBackend>();
  try {
    backend->complete(request_for(ModelRole::pred, "mystery"));
    FAIL("expected ScriptedMissError");
  } catch (const ScriptedMissError& e) {
    const std::string what = e.what();
    CHECK(what.find("pred") != std::string::npos);
    CHECK(what.find(fnv1a64_hex("mystery")) != std::string::npos);
    CHECK(what.find("ordinal 0") != std::string::npos);
  }
}

TEST_CASE("scripted backend: duplicate keys are fixture format errors") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_digest(ModelRole::desc, "abc", {"x"});
  CHECK_THROWS_AS(backend->add_digest(ModelRole::desc, "abc", {"y"}), FormatError);
  backend->add_ordinal_at(ModelRole::desc, 0, {"x"});
  CHECK_THROWS_AS(backend->add_ordinal_at(ModelRole::desc, 0, {"y"}), FormatError);
}

TEST_CASE("scripted backend: sample_count slices the response list") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_ordinal(ModelRole::refine, {"a", "b", "c"});
  backend->add_ordinal(ModelRole::refine, {"only"});

  CHECK(backend->complete(request_for(ModelRole::refine, "p", 0.7, 2)) ==
        std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(backend->complete(request_for(ModelRole::refine, "p", 0.7, 2)),
                  ScriptedMissError);
}

TEST_CASE("scripted backend: cycling reuses entries modulo the role count") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_cycling(true);
  backend->add_ordinal(ModelRole::desc, {"first"});
  backend->add_ordinal(ModelRole::desc, {"second"});
  std::vector<std::string> seen;
  for (int i = 0; i < 5; ++i)
    seen.push_back(backend->complete(request_for(ModelRole::desc, "p")).front());
  CHECK(seen == std::vector<std::string>{"first", "second", "first", "second", "first"});
}

TEST_CASE("fixture files parse both layouts and reject malformed entries") {
  testutil::TempDir dir;
  const auto path = dir.path() / "fixture.json";

  SUBCASE("bare array") {
    write_text_file(path, R"([{"role":"desc","match":{"ordinal":0},"responses":["hi"]}])");
    auto backend = scripted_backend_from_fixture(path);
    CHECK(backend->complete(request_for(ModelRole::desc, "p")).front() == "hi");
  }
  SUBCASE("wrapped object with cycling") {
    write_text_file(path,
                    R"({"cycle_roles":true,"entries":[{"role":"desc","match":{"ordinal":0},"responses":["hi"]}]})");
    auto backend = scripted_backend_from_fixture(path);
    CHECK(backend->complete(request_for(ModelRole::desc, "p")).front() == "hi");
    CHECK(backend->complete(request_for(ModelRole::desc, "q")).front() == "hi");
  }
  SUBCASE("digest match") {
    write_text_file(path, std::string(R"([{"role":"desc","match":{"digest":")") +
                              fnv1a64_hex("exact prompt") + R"("},"responses":["hi"]}])");
    auto backend = scripted_backend_from_fixture(path);
    CHECK(backend->complete(request_for(ModelRole::desc, "exact prompt")).front() == "hi");
  }
  SUBCASE("unknown role") {
    write_text_file(path, R"([{"role":"oracle","match":{"ordinal":0},"responses":["hi"]}])");
    CHECK_THROWS_AS(scripted_backend_from_fixture(path), FormatError);
  }
  SUBCASE("missing match") {
    write_text_file(path, R"([{"role":"desc","responses":["hi"]}])");
    CHECK_THROWS_AS(scripted_backend_from_fixture(path), FormatError);
  }
  SUBCASE("empty responses") {
    write_text_file(path, R"([{"role":"desc","match":{"ordinal":0},"responses":[]}])");
    CHECK_THROWS_AS(scripted_backend_from_fixture(path), FormatError);
  }
  SUBCASE("duplicate ordinal") {
    write_text_file(path, R"([{"role":"desc","match":{"ordinal":0},"responses":["a"]},
                              {"role":"desc","match":{"ordinal":0},"responses":["b"]}])");
    CHECK_THROWS_AS(scripted_backend_from_fixture(path), FormatError);
  }
  SUBCASE("not json") {
    write_text_file(path, "nope");
    CHECK_THROWS_AS(scripted_backend_from_fixture(path), FormatError);
  }
}

TEST_CASE("gateway retries transport errors with a bounded attempt budget") {
  auto inner = std::make_shared<ScriptedBackend>();
  inner->add_ordinal(ModelRole::desc, {"ok"});

  SUBCASE("two failures then success") {
    LlmGateway gateway(std::make_shared<testutil::FlakyBackend>(inner, 2), fast_retry());
    CHECK(gateway.complete(request_for(ModelRole::desc), kContext).front() == "ok");
    // Only the final success is logged.
    REQUIRE(gateway.entries().size() == 1);
    CHECK(gateway.entries().front().error.empty());
  }
  SUBCASE("persistent failure exhausts the budget") {
    LlmGateway gateway(std::make_shared<testutil::FlakyBackend>(inner, 100), fast_retry());
    CHECK_THROWS_AS(gateway.complete(request_for(ModelRole::desc), kContext), GatewayError);
    REQUIRE(gateway.entries().size() == 1);
    CHECK(gateway.entries().front().error.find("3 attempts") != std::string::npos);
    CHECK(gateway.entries().front().responses.empty());
  }
  SUBCASE("scripted misses are not retried") {
    LlmGateway gateway(inner, fast_retry());
    gateway.complete(request_for(ModelRole::desc), kContext);
    CHECK_THROWS_AS(gateway.complete(request_for(ModelRole::desc), kContext), ScriptedMissError);
    // Success entry plus exactly one error entry: no retry loop for misses.
    REQUIRE(gateway.entries().size() == 2);
    CHECK_FALSE(gateway.entries().back().error.empty());
  }
}

TEST_CASE("gateway log records the full call and survives a round-trip") {
  testutil::TempDir dir;
  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_ordinal(ModelRole::desc, {"d"});
  backend->add_ordinal(ModelRole::refine, {"r1", "r2"});
  LlmGateway gateway(backend);

  gateway.complete(request_for(ModelRole::desc, "describe this"), {"alice", "build"});
  gateway.complete(request_for(ModelRole::refine, "refine this", 0.7, 2), {"alice", "simulate"});

  const auto entries = gateway.entries();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].call_index == 0);
  CHECK(entries[1].call_index == 1);
  CHECK(entries[0].student_id == "alice");
  CHECK(entries[0].stage == "build");
  CHECK(entries[0].request.prompt == "describe this");
  CHECK(entries[1].request.temperature == doctest::Approx(0.7));
  CHECK(entries[1].request.sample_count == 2);
  CHECK(entries[1].responses == std::vector<std::string>{"r1", "r2"});
  CHECK(entries[0].timestamp.size() == 20);  // 2026-01-01T00:00:00Z
  CHECK(gateway.call_count(ModelRole::desc) == 1);
  CHECK(gateway.call_count(ModelRole::refine) == 1);
  CHECK(gateway.call_count(ModelRole::value) == 0);

  const auto log_path = dir.path() / "log" / "run_log.jsonl";
  gateway.flush_run_log(log_path);
  const std::string first = read_text_file(log_path);
  gateway.flush_run_log(log_path);  // idempotent
  CHECK(read_text_file(log_path) == first);

  const auto loaded = LlmGateway::load_run_log(log_path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].call_index == 0);
  CHECK(loaded[1].request.prompt == "refine this");
  CHECK(loaded[1].responses == std::vector<std::string>{"r1", "r2"});
  CHECK(loaded[0].timestamp == entries[0].timestamp);
}

TEST_CASE("preload continues call indices across processes") {
  testutil::TempDir dir;
  const auto log_path = dir.path() / "run_log.jsonl";

  auto backend = std::make_shared<ScriptedBackend>();
  backend->add_ordinal(ModelRole::desc, {"one"});
  {
    LlmGateway first(backend);
    first.complete(request_for(ModelRole::desc), kContext);
    first.flush_run_log(log_path);
  }

  auto backend2 = std::make_shared<ScriptedBackend>();
  backend2->add_ordinal(ModelRole::pred, {"two"});
  LlmGateway second(backend2);
  second.preload_log(LlmGateway::load_run_log(log_path));
  second.complete(request_for(ModelRole::pred), {"s1", "predict"});
  second.flush_run_log(log_path);

  const auto entries = LlmGateway::load_run_log(log_path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].call_index == 0);
  CHECK(entries[1].call_index == 1);
  CHECK(entries[1].request.role == ModelRole::pred);

  // Preloading a non-empty gateway is a bug.
  CHECK_THROWS_AS(second.preload_log({}), ValidationError);
}

TEST_CASE("model role names round-trip") {
  for (ModelRole role : {ModelRole::desc, ModelRole::node, ModelRole::edge, ModelRole::local,
                         ModelRole::global, ModelRole::pred, ModelRole::refine, ModelRole::value,
                         ModelRole::judge}) {
    CHECK(model_role_from_string(to_string(role)) == role);
  }
  CHECK_THROWS_AS(model_role_from_string("nonsense"), FormatError);
}
