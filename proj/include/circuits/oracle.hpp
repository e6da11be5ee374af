#pragma once

#include "circuits/bounds.hpp"
#include "circuits/predicate.hpp"

#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace circuits {

/// Exhaustive minimality classification of one circuit. The flag
/// hierarchy cardinal => subset => local => quasi holds for nonempty
/// circuits under predicates with an unfaithful empty circuit.
struct MinimalityReport {
  bool faithful = false;
  bool quasi = false;
  bool local = false;
  bool subset = false;
  bool cardinal = false;
  std::optional<ComponentId> breaking_element;               // quasi witness
  std::optional<std::set<ComponentId>> faithful_proper_subset;  // subset refutation
  std::optional<std::set<ComponentId>> smaller_circuit;         // cardinal refutation
};

/// Exact flags by enumeration. Refuses |circuit| > 16 for the subset
/// check and |universe| > 16 for the cardinal check; refuses empty
/// circuits. Unknown predicate results count as not-faithful.
MinimalityReport classify_minimality(const Predicate& pred, const std::set<ComponentId>& circuit);

/// Exact per-output [min,max] over the box by activation-pattern
/// enumeration: each feasible pattern yields an affine piece whose
/// polytope cell (box intersected with the pattern's sign constraints)
/// is extremized exactly via vertex enumeration. Refuses more than 12
/// unstable ReLUs or more than 6 input dimensions.
std::vector<Interval> enumerate_exact_range(const Network& net, const BoxBounds& box);

struct MonotoneReport {
  bool monotone = true;
  // (C, C + {i}) with eval(C) true and eval(C + {i}) false.
  std::optional<std::pair<std::set<ComponentId>, std::set<ComponentId>>> counterexample;
  long undecided_pairs = 0;
};

/// Exhaustive single-element-extension check over all subsets of the
/// universe. Refuses |universe| > 12.
MonotoneReport check_monotone(const Predicate& pred, const std::vector<ComponentId>& universe);

}  // namespace circuits
