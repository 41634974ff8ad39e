#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stusim/errors.hpp"
#include "stusim/text.hpp"

namespace stusim {

// ============================================================================
// Relation and verdict vocabulary
// ============================================================================

enum class RelationType { Prerequisite_of, Used_for, Hyponym_of, Part_of };

inline const std::vector<RelationType>& all_relation_types() {
  static const std::vector<RelationType> types{RelationType::Prerequisite_of,
                                               RelationType::Used_for, RelationType::Hyponym_of,
                                               RelationType::Part_of};
  return types;
}

inline std::string to_string(RelationType type) {
  switch (type) {
    case RelationType::Prerequisite_of: return "Prerequisite_of";
    case RelationType::Used_for: return "Used_for";
    case RelationType::Hyponym_of: return "Hyponym_of";
    case RelationType::Part_of: return "Part_of";
  }
  return "Used_for";
}

inline RelationType relation_type_from_string(const std::string& text) {
  for (RelationType type : all_relation_types())
    if (text == to_string(type)) return type;
  throw FormatError("unknown relation type '" + text + "'");
}

/// Case-insensitive match used when parsing model output.
inline std::optional<RelationType> match_relation_token(const std::string& token) {
  const std::string lowered = to_lower(token);
  for (RelationType type : all_relation_types())
    if (lowered == to_lower(to_string(type))) return type;
  return std::nullopt;
}

enum class Verdict { Good, Bad };

inline std::string to_string(Verdict verdict) {
  return verdict == Verdict::Good ? "Good" : "Bad";
}

inline Verdict verdict_from_string(const std::string& text) {
  if (text == "Good") return Verdict::Good;
  if (text == "Bad") return Verdict::Bad;
  throw FormatError("unknown verdict '" + text + "'");
}

enum class Dominance { Good, Bad, Mixed };

inline std::string to_string(Dominance dominance) {
  switch (dominance) {
    case Dominance::Good: return "Good";
    case Dominance::Bad: return "Bad";
    case Dominance::Mixed: return "Mixed";
  }
  return "Mixed";
}

inline Dominance dominance_from_string(const std::string& text) {
  if (text == "Good") return Dominance::Good;
  if (text == "Bad") return Dominance::Bad;
  if (text == "Mixed") return Dominance::Mixed;
  throw FormatError("unknown dominance '" + text + "'");
}

// ============================================================================
// Graph types
// ============================================================================

/// One mastery verdict for one concept, tied to the record that produced it.
struct LocalState {
  std::string record_id;
  Verdict verdict = Verdict::Good;
};

struct GlobalState {
  std::string summary;
  int good_count = 0;
  int bad_count = 0;
  Dominance dominant = Dominance::Mixed;
};

struct ConceptNode {
  std::string canonical_name;
  std::string display_name;  // first-seen surface form
  std::vector<LocalState> state_library;  // ordered by producing record's order_index
  std::optional<GlobalState> global_state;
};

using EdgeKey = std::pair<std::string, std::string>;  // (source, target), canonical, directed

struct EdgeRecord {
  EdgeKey endpoints;
  std::vector<RelationType> library;  // one entry per extraction event, in ingestion order
  std::optional<RelationType> resolved;
};

struct RelationTriple {
  std::string source;  // canonical
  std::string target;  // canonical
  RelationType type = RelationType::Used_for;
};

/// The cognitive prototype: concept nodes with per-record state libraries and
/// directed edges carrying relation libraries. Ordered pairs are never merged
/// with their reverses.
struct KnowledgeGraph {
  std::string student_id;
  std::map<std::string, ConceptNode> nodes;
  std::map<EdgeKey, EdgeRecord> edges;

  bool empty() const { return nodes.empty(); }
};

/// Mode of the library with ties broken by earliest first occurrence.
inline RelationType resolve_mode(const std::vector<RelationType>& library) {
  if (library.empty()) throw ValidationError("edge library must be non-empty");
  std::map<RelationType, int> counts;
  for (RelationType type : library) ++counts[type];
  RelationType best = library.front();
  int best_count = 0;
  std::set<RelationType> seen;
  for (RelationType type : library) {  // first-occurrence order
    if (!seen.insert(type).second) continue;
    if (counts[type] > best_count) {
      best = type;
      best_count = counts[type];
    }
  }
  return best;
}

/// Referential integrity plus per-node bookkeeping; throws on violations.
inline void check_graph(const KnowledgeGraph& graph) {
  for (const auto& [key, edge] : graph.edges) {
    if (key.first == key.second)
      throw ValidationError("self-loop edge on '" + key.first + "'");
    if (!graph.nodes.count(key.first) || !graph.nodes.count(key.second))
      throw ValidationError("edge (" + key.first + ", " + key.second +
                            ") references a missing node");
    if (edge.library.empty())
      throw ValidationError("edge (" + key.first + ", " + key.second + ") has an empty library");
  }
  for (const auto& [name, node] : graph.nodes) {
    if (node.canonical_name != name)
      throw ValidationError("node key '" + name + "' does not match canonical_name");
    if (node.state_library.empty())
      throw ValidationError("node '" + name + "' has an empty state library");
    if (node.global_state &&
        node.global_state->good_count + node.global_state->bad_count !=
            static_cast<int>(node.state_library.size()))
      throw ValidationError("node '" + name + "' global counts disagree with state_library");
  }
}

/// record_id -> set of canonical concept names, recovered from the state
/// libraries (every concept extracted from a record leaves a LocalState).
inline std::map<std::string, std::set<std::string>> record_concepts_map(
    const KnowledgeGraph& graph) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [name, node] : graph.nodes)
    for (const LocalState& state : node.state_library) out[state.record_id].insert(name);
  return out;
}

}  // namespace stusim
