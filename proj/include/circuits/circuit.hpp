#pragma once

#include "circuits/net.hpp"

#include <map>
#include <set>
#include <vector>

namespace circuits {

/// A circuit: a subset of a network's components. The complement is
/// patched during masked inference.
struct Circuit {
  std::uint64_t net_hash = 0;  // 0 = unchecked
  std::set<ComponentId> members;
};

enum class PatchKind { Zero, Mean, FromInput, Transplant };

/// How complement components are fixed during masked inference.
/// Transplant is symbolic; it is only resolved inside encodings.
struct PatchingScheme {
  PatchKind kind = PatchKind::Zero;
  std::map<ComponentId, Vec> mean_values;  // Mean: per-component vectors
  Vec from_input;                          // FromInput: the source input z

  static PatchingScheme zero() { return {}; }
  static PatchingScheme mean(std::map<ComponentId, Vec> values);
  static PatchingScheme from(Vec z);
  static PatchingScheme transplant();
};

std::set<ComponentId> all_components(const Network& net);
std::set<ComponentId> complement(const Network& net, const std::set<ComponentId>& members);

/// Forward pass where every complement component's post-activation output
/// is overwritten by the patch value before downstream consumption.
/// Members compute normally. Patched components still receive their
/// inputs; the graph shape stays static.
Vec masked_forward(const Network& net, const Circuit& circuit,
                   const PatchingScheme& patch, const Vec& x);

/// Arithmetic mean of each component's post-activation output across the
/// sample set. Errors on an empty set.
std::map<ComponentId, Vec> mean_patch_values(const Network& net,
                                             const std::vector<Vec>& samples);

/// Concrete patch values for the given components (Zero/Mean/FromInput).
/// FromInput resolves to the activations recorded while evaluating f(z).
std::map<ComponentId, Vec> resolve_patch(const Network& net,
                                         const std::set<ComponentId>& patched,
                                         const PatchingScheme& patch);

}  // namespace circuits
