#pragma once

#include "circuits/predicate.hpp"

#include <optional>

namespace circuits {

/// Component traversal order for the discovery loops. ReverseTopoLex
/// visits later layers first, unit index ascending within a layer.
struct Ordering {
  enum class Kind { ReverseTopoLex, Explicit } kind = Kind::ReverseTopoLex;
  std::vector<ComponentId> order;  // Explicit: every component exactly once

  static Ordering reverse_topo_lex() { return {}; }
  static Ordering explicit_order(std::vector<ComponentId> ids);
};

std::vector<ComponentId> resolve_ordering(const Ordering& ordering,
                                          const std::vector<ComponentId>& universe);

struct TraceStep {
  int step = 0;
  ComponentId tested;
  TriBool result = TriBool::Unknown;
  std::size_t size_after = 0;
  double elapsed_s = 0;
};

struct DiscoveryTrace {
  std::vector<TraceStep> steps;
  long search_evals = 0;     // evaluations inside the search loop
  long precheck_evals = 0;   // precondition checks
  double wall_s = 0;
  std::optional<ComponentId> quasi_witness;  // first kept component
};

struct DiscoveryResult {
  std::set<ComponentId> circuit;
  DiscoveryTrace trace;
};

/// Single pass over the ordering; removes a component whenever the
/// predicate still holds without it. Unknown counts as a keep.
DiscoveryResult greedy(const Predicate& pred, const Ordering& ordering);

/// Repeats passes until one full pass removes nothing (locally minimal).
DiscoveryResult exhaustive(const Predicate& pred, const Ordering& ordering);

/// Binary search over prefix removals of the ordering; requires the full
/// graph faithful and the empty circuit unfaithful.
DiscoveryResult binary_search(const Predicate& pred, const Ordering& ordering);

}  // namespace circuits
