#pragma once

#include "circuits/circuit.hpp"
#include "circuits/encode.hpp"
#include "circuits/verify.hpp"

#include <set>
#include <vector>

namespace circuits {

enum class TriBool { False, True, Unknown };

enum class PredicateKind {
  Sampling,
  InputRobust,
  PatchingRobust,
  Combined,
  SyntheticMonotone,
  SyntheticNonMonotone,
};

/// A faithfulness predicate over circuits of one network, or a pure set
/// function over an abstract universe (synthetic kinds). Immutable;
/// eval is pure and safe to run concurrently.
struct Predicate {
  PredicateKind kind = PredicateKind::Sampling;

  // Network-backed kinds.
  const Network* net = nullptr;
  Metric metric;
  PatchingScheme patch;            // Sampling / InputRobust
  std::vector<Vec> batch;          // Sampling
  InputRegion region;              // InputRobust
  std::vector<Vec> x_refs;         // PatchingRobust
  InputRegion patch_region;        // PatchingRobust
  std::vector<Vec> anchors;        // Combined
  double eps_in = 0;               // Combined
  double eps_patch = 0;            // Combined
  bool box_patching = false;       // Combined: interval-box transplants
  VerifyBudget budget;

  // Synthetic kinds.
  std::vector<ComponentId> synthetic_universe;
  std::vector<std::set<ComponentId>> witness_family;  // SyntheticMonotone
  std::uint64_t seed = 0;                             // SyntheticNonMonotone

  std::vector<ComponentId> universe() const;
};

Predicate make_sampling(const Network& net, std::vector<Vec> batch, Metric metric,
                        PatchingScheme patch);
Predicate make_input_robust(const Network& net, InputRegion region, Metric metric,
                            PatchingScheme patch);
Predicate make_patching_robust(const Network& net, std::vector<Vec> x_refs,
                               InputRegion patch_region, Metric metric);
Predicate make_combined(const Network& net, std::vector<Vec> anchors, double eps_in,
                        double eps_patch, Metric metric, bool box_patching);
/// Hidden witness family drawn from the seed: eval(C) iff some witness
/// set is contained in C. Monotone by construction.
Predicate make_synthetic_monotone(std::uint64_t seed, int universe_size, int witnesses);
/// Seed-hashed arbitrary set function with eval(full)=true, eval({})=false.
Predicate make_synthetic_non_monotone(std::uint64_t seed, int universe_size);

TriBool eval(const Predicate& pred, const std::set<ComponentId>& members);

enum class MonotoneCertificate { Guaranteed, Unknown };

/// Guaranteed for SyntheticMonotone, and for Combined when the input
/// domain is contained in the patching domain and box-patching is on.
MonotoneCertificate is_monotone_certificate(const Predicate& pred);

}  // namespace circuits
