#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/graph.hpp"
#include "stusim/llm.hpp"
#include "stusim/prompts.hpp"
#include "stusim/records.hpp"
#include "stusim/text.hpp"

namespace stusim {

// ============================================================================
// Response parsers (pure, no gateway)
// ============================================================================
//
// Model roles answer in a line-oriented labeled format. Parsers are lenient
// to surrounding prose but strict about structure: a response that carries
// none of the expected structure is an error, not an empty result.

namespace detail {

/// Strips a leading enumeration marker: "1." / "2)" / "3:" / "-" / "*".
/// Returns the remainder, or nullopt when the line has no marker.
inline std::optional<std::string> strip_list_marker(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
    return trim(line.substr(i + 1));
  }
  std::size_t digits = i;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > i && digits < line.size() &&
      (line[digits] == '.' || line[digits] == ')' || line[digits] == ':')) {
    return trim(line.substr(digits + 1));
  }
  return std::nullopt;
}

inline bool is_none_marker(const std::string& line) {
  const std::string c = canonical_concept(line);
  return c == "none" || c == "(none)" || c == "none.";
}

/// Strips punctuation that models like to glue onto words.
inline std::string strip_token_punct(const std::string& token) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  auto is_word = [](char c) { return is_alnum(c) || c == '_'; };
  while (begin < end && !is_word(token[begin])) ++begin;
  while (end > begin && !is_word(token[end - 1])) --end;
  return token.substr(begin, end - begin);
}

inline std::vector<std::string> whitespace_split(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (is_space(c)) {
      if (!current.empty()) {
        out.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

}  // namespace detail

/// Parses a node-role response: one concept per list line, deduplicated by
/// canonical form (first surface form wins), capped. A bare "none" line means
/// an explicitly empty list; a response with no list structure at all is a
/// parse error.
inline std::vector<std::string> parse_concept_list(const std::string& response, int cap) {
  if (cap < 1) throw ValidationError("concept cap must be >= 1");
  std::vector<std::string> surfaces;
  std::set<std::string> seen;
  bool saw_structure = false;
  for (const std::string& line : split_lines(response)) {
    if (detail::is_none_marker(line)) {
      saw_structure = true;
      continue;
    }
    std::optional<std::string> item = detail::strip_list_marker(line);
    if (!item) continue;
    saw_structure = true;
    if (item->empty()) continue;
    const std::string canonical = canonical_concept(*item);
    if (canonical.empty() || !seen.insert(canonical).second) continue;
    if (static_cast<int>(surfaces.size()) < cap) surfaces.push_back(trim(*item));
  }
  if (!saw_structure)
    throw ExtractionParseError("node response has no list structure", response);
  return surfaces;
}

/// Parses edge-role lines of the form "<source> <RelationType> <target>".
/// Endpoints may span several words; matching against the concept list is by
/// canonical form. Self-loops and triples naming foreign concepts are
/// dropped with a warning. "none" means no relations.
inline std::vector<RelationTriple> parse_relation_lines(const std::string& response,
                                                        const std::vector<std::string>& concepts,
                                                        std::vector<std::string>* warnings) {
  std::set<std::string> allowed;
  for (const std::string& name : concepts) allowed.insert(canonical_concept(name));

  auto warn = [warnings](const std::string& message) {
    if (warnings) warnings->push_back(message);
  };

  std::vector<RelationTriple> triples;
  bool saw_structure = false;
  for (const std::string& raw_line : split_lines(response)) {
    std::string line = raw_line;
    if (std::optional<std::string> unmarked = detail::strip_list_marker(line)) line = *unmarked;
    if (detail::is_none_marker(line)) {
      saw_structure = true;
      continue;
    }
    const std::vector<std::string> tokens = detail::whitespace_split(line);
    std::optional<RelationType> type;
    std::size_t type_index = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if ((type = match_relation_token(detail::strip_token_punct(tokens[i])))) {
        type_index = i;
        break;
      }
    }
    if (!type) continue;  // prose line
    saw_structure = true;
    const std::string source = canonical_concept(
        join({tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(type_index)}, " "));
    const std::string target = canonical_concept(
        join({tokens.begin() + static_cast<std::ptrdiff_t>(type_index) + 1, tokens.end()}, " "));
    if (source.empty() || target.empty()) {
      warn("relation line missing an endpoint: '" + raw_line + "'");
      continue;
    }
    if (source == target) {
      warn("dropped self-loop relation on '" + source + "'");
      continue;
    }
    if (!allowed.count(source) || !allowed.count(target)) {
      warn("dropped relation naming a concept outside the extracted list: '" + raw_line + "'");
      continue;
    }
    triples.push_back(RelationTriple{source, target, *type});
  }
  if (!saw_structure)
    throw ExtractionParseError("edge response has no relation lines", response);
  return triples;
}

/// Parses a local-role response into one verdict per concept, in concept
/// order. Accepts labeled lines ("concept: Good") covering every concept, or
/// a bare verdict sequence whose length matches the concept count.
inline std::vector<Verdict> parse_local_verdicts(const std::string& response,
                                                 const std::vector<std::string>& concepts) {
  if (concepts.empty()) throw ValidationError("local analysis requires at least one concept");

  auto verdict_of = [](const std::string& token) -> std::optional<Verdict> {
    const std::string word = to_lower(detail::strip_token_punct(token));
    if (word == "good") return Verdict::Good;
    if (word == "bad") return Verdict::Bad;
    return std::nullopt;
  };

  std::map<std::string, Verdict> labeled;
  for (const std::string& raw_line : split_lines(response)) {
    std::string line = raw_line;
    if (std::optional<std::string> unmarked = detail::strip_list_marker(line)) line = *unmarked;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string name = canonical_concept(line.substr(0, colon));
    if (name.empty()) continue;
    std::optional<Verdict> verdict;
    for (const std::string& token : detail::whitespace_split(line.substr(colon + 1))) {
      if ((verdict = verdict_of(token))) break;
    }
    if (verdict && !labeled.count(name)) labeled[name] = *verdict;
  }

  std::vector<Verdict> out;
  out.reserve(concepts.size());
  bool all_labeled = true;
  for (const std::string& name : concepts) {
    auto it = labeled.find(canonical_concept(name));
    if (it == labeled.end()) {
      all_labeled = false;
      break;
    }
    out.push_back(it->second);
  }
  if (all_labeled) return out;

  // Fallback: a bare verdict sequence aligned with the input order.
  std::vector<Verdict> sequence;
  for (const std::string& token : detail::whitespace_split(response)) {
    if (std::optional<Verdict> verdict = verdict_of(token)) sequence.push_back(*verdict);
  }
  if (sequence.size() == concepts.size()) return sequence;

  for (const std::string& name : concepts) {
    if (!labeled.count(canonical_concept(name)))
      throw ExtractionParseError("local response missing a verdict for concept '" + name + "'",
                                 response);
  }
  throw ExtractionParseError("local response verdicts do not align with concepts", response);
}

// ============================================================================
// Gateway-backed operations
// ============================================================================

/// High-level task description via the desc role; returned verbatim.
/// Used during both prototype construction and prediction.
inline std::string describe_task(LlmGateway& gateway, const PromptLibrary& prompts,
                                 const std::string& task_statement, const CallContext& context) {
  if (trim(task_statement).empty())
    throw ValidationError("describe_task requires a non-empty task statement");
  InvocationRequest request;
  request.role = ModelRole::desc;
  request.prompt = prompts.render("desc", {{"task_statement", task_statement}});
  return gateway.complete(request, context).front();
}

/// Builds one student's cognitive prototype from past records (Steps 1-4):
/// describe each record, extract concepts and relations, judge per-concept
/// mastery, then resolve edge libraries and summarize each node globally.
class PrototypeBuilder {
 public:
  PrototypeBuilder(LlmGateway& gateway, const PromptLibrary& prompts, PipelineConfig config,
                   bool strict = false)
      : gateway_(gateway), prompts_(prompts), config_(config), strict_(strict) {}

  std::vector<std::string> extract_concepts(const std::string& description,
                                            const LearningRecord& record,
                                            const CallContext& context) {
    InvocationRequest request;
    request.role = ModelRole::node;
    request.prompt = prompts_.render("node", {{"description", description},
                                              {"task_statement", record.task_statement},
                                              {"behavior", record.behavior},
                                              {"solution", record.solution},
                                              {"concept_cap", std::to_string(config_.concept_cap)}});
    const std::string response = gateway_.complete(request, context).front();
    return parse_concept_list(response, config_.concept_cap);
  }

  std::vector<RelationTriple> extract_relations(const std::vector<std::string>& concepts,
                                                const CallContext& context) {
    if (concepts.size() < 2) return {};  // no pair to relate; no model call
    std::vector<std::string> numbered;
    numbered.reserve(concepts.size());
    for (std::size_t i = 0; i < concepts.size(); ++i)
      numbered.push_back(std::to_string(i + 1) + ". " + concepts[i]);
    InvocationRequest request;
    request.role = ModelRole::edge;
    request.prompt = prompts_.render("edge", {{"concepts", join(numbered, "\n")}});
    const std::string response = gateway_.complete(request, context).front();
    return parse_relation_lines(response, concepts, &warnings_);
  }

  std::vector<LocalState> analyze_local_states(const std::string& description,
                                               const LearningRecord& record,
                                               const std::vector<std::string>& concepts,
                                               const CallContext& context) {
    if (concepts.empty())
      throw ValidationError("analyze_local_states requires a non-empty concept list");
    std::vector<std::string> numbered;
    numbered.reserve(concepts.size());
    for (std::size_t i = 0; i < concepts.size(); ++i)
      numbered.push_back(std::to_string(i + 1) + ". " + concepts[i]);
    InvocationRequest request;
    request.role = ModelRole::local;
    request.prompt = prompts_.render("local", {{"description", description},
                                               {"task_statement", record.task_statement},
                                               {"behavior", record.behavior},
                                               {"solution", record.solution},
                                               {"concepts", join(numbered, "\n")}});
    const std::string response = gateway_.complete(request, context).front();
    const std::vector<Verdict> verdicts = parse_local_verdicts(response, concepts);
    std::vector<LocalState> states;
    states.reserve(verdicts.size());
    for (Verdict verdict : verdicts) states.push_back(LocalState{record.record_id, verdict});
    return states;
  }

  /// Runs Steps 1-3 for one record and merges the result into the graph.
  /// All model calls happen before any mutation, so a failure leaves the
  /// graph untouched for this record.
  void ingest_record(KnowledgeGraph& graph, const LearningRecord& record,
                     const CallContext& context) {
    const std::string description = describe_task(gateway_, prompts_, record.task_statement,
                                                  context);
    const std::vector<std::string> concepts = extract_concepts(description, record, context);
    if (concepts.empty()) return;  // legal: record contributes nothing
    const std::vector<RelationTriple> relations = extract_relations(concepts, context);
    const std::vector<LocalState> states = analyze_local_states(description, record, concepts,
                                                                context);

    for (std::size_t i = 0; i < concepts.size(); ++i) {
      const std::string canonical = canonical_concept(concepts[i]);
      ConceptNode& node = graph.nodes[canonical];
      if (node.canonical_name.empty()) {
        node.canonical_name = canonical;
        node.display_name = concepts[i];
      }
      node.state_library.push_back(states[i]);
    }
    for (const RelationTriple& triple : relations) {
      const EdgeKey key{triple.source, triple.target};
      EdgeRecord& edge = graph.edges[key];
      if (edge.library.empty()) edge.endpoints = key;
      edge.library.push_back(triple.type);
    }
  }

  /// Sets every edge's resolved type to the mode of its library,
  /// first occurrence winning ties. Pure graph transformation.
  static void resolve_edge_conflicts(KnowledgeGraph& graph) {
    for (auto& [key, edge] : graph.edges) edge.resolved = resolve_mode(edge.library);
  }

  /// Step 4: counts are computed locally (exact arithmetic, never trusted
  /// from the model); the summary text comes from one global-role call per
  /// node. A failed call skips that node's global state with a warning.
  void build_global_prototype(KnowledgeGraph& graph, const CallContext& context) {
    for (auto& [name, node] : graph.nodes) {
      int good = 0;
      int bad = 0;
      std::vector<std::string> verdicts;
      verdicts.reserve(node.state_library.size());
      for (const LocalState& state : node.state_library) {
        (state.verdict == Verdict::Good ? good : bad)++;
        verdicts.push_back(state.record_id + ": " + to_string(state.verdict));
      }
      GlobalState global;
      global.good_count = good;
      global.bad_count = bad;
      global.dominant = good > bad   ? Dominance::Good
                        : bad > good ? Dominance::Bad
                                     : Dominance::Mixed;
      try {
        InvocationRequest request;
        request.role = ModelRole::global;
        request.prompt = prompts_.render("global", {{"concept", node.display_name},
                                                    {"cognitive_states", join(verdicts, "; ")},
                                                    {"good_count", std::to_string(good)},
                                                    {"bad_count", std::to_string(bad)}});
        global.summary = trim(gateway_.complete(request, context).front());
        node.global_state = global;
      } catch (const Error& e) {
        if (strict_) throw;
        warnings_.push_back("global summary for concept '" + name + "' skipped: " + e.what());
      }
    }
  }

  /// Full Steps 1-4 over the student's past records, in order_index order.
  /// Per-record failures are skipped with a warning unless strict.
  KnowledgeGraph build(const StudentProfile& profile) {
    const CallContext context{profile.student_id, "build"};
    KnowledgeGraph graph;
    graph.student_id = profile.student_id;
    for (const LearningRecord& record : profile.past_records) {
      try {
        ingest_record(graph, record, context);
      } catch (const Error& e) {
        if (strict_) throw;
        warnings_.push_back("record " + record.record_id + " skipped: " + e.what());
      }
    }
    resolve_edge_conflicts(graph);
    build_global_prototype(graph, context);
    check_graph(graph);
    return graph;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  LlmGateway& gateway_;
  const PromptLibrary& prompts_;
  PipelineConfig config_;
  bool strict_;
  std::vector<std::string> warnings_;
};

}  // namespace stusim
