#pragma once

#include "circuits/predicate.hpp"

#include <set>
#include <vector>

namespace circuits {

/// Accumulated circuit blocking-sets over a component universe. Every
/// stored set S satisfied "removing S from the full graph breaks
/// faithfulness" when it was stored.
struct BlockingSetStore {
  std::vector<ComponentId> universe;
  std::vector<std::set<ComponentId>> sets;
};

struct HittingSet {
  std::set<ComponentId> members;
  bool optimal = false;
};

/// Exact minimum-cardinality hitting set by branch-and-bound: branch on
/// elements of the smallest unhit set, prune with a greedy disjoint-set
/// lower bound. Ties resolve in lexicographic component order.
HittingSet mhs(const BlockingSetStore& store);

enum class Alg4Status { Exact, LowerBoundOnly };

struct Alg4Round {
  int t = 0;
  long candidates = 0;
  long blocked = 0;
  std::size_t store_size = 0;
  std::size_t mhs_size = 0;
};

struct Alg4Result {
  std::set<ComponentId> circuit;
  BlockingSetStore store;
  Alg4Status status = Alg4Status::LowerBoundOnly;
  bool monotone_guaranteed = false;  // else monotonicity was assumed
  bool empty_circuit = false;        // the vacuous outcome, surfaced
  long evals = 0;
  std::vector<Alg4Round> rounds;
};

/// Minimum-hitting-set duality loop: for t = 1..t_max test candidate sets
/// of size t that contain no stored blocking set, store the failures,
/// and return the MHS as soon as it is itself faithful (Exact). Unknown
/// predicate results are never stored. Candidate tests within one round
/// may run in parallel (CIRCUITS_PARALLELISM).
Alg4Result algorithm4(const Predicate& pred, int t_max);

}  // namespace circuits
