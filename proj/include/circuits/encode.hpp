#pragma once

#include "circuits/circuit.hpp"
#include "circuits/net.hpp"
#include "circuits/region.hpp"

#include <optional>

namespace circuits {

/// Which output slots of the combined network belong to which branch.
/// When reference is set, the model side is a precomputed constant vector
/// instead of live output slots.
struct BranchWiring {
  std::vector<int> model_slots;
  std::vector<int> circuit_slots;
  std::optional<Vec> reference;
};

/// WinnerRunner parameters pinned per box from the clean input.
struct WinnerRunnerSpec {
  int target = 0;
  int runner = 0;
  double margin = 0;  // alpha_frac * clean winner-runner gap
};

struct OutputSpec {
  Metric metric;
  std::vector<WinnerRunnerSpec> winner_runner;  // one per region box
};

/// A verification query: a combined network, the input region, the output
/// specification and the branch slot map. Immutable and shareable.
struct SiameseQuery {
  Network net;
  InputRegion region;
  OutputSpec spec;
  BranchWiring wiring;
  bool z_subset_zprime = true;  // recorded by the tripled builder
};

/// Branch 1 = the full model, branch 2 = the circuit with complement
/// components fixed to the constant patch; shared input; outputs
/// concatenated (model first).
SiameseQuery build_input_siamese(const Network& net, const Circuit& circuit,
                                 const PatchingScheme& patch, const InputRegion& region,
                                 const Metric& metric);

/// Branch A = the full model on free z in patch_region; branch B = the
/// circuit on the fixed x_ref with complement activations transplanted
/// from branch A. Output = circuit logits, compared against the
/// precomputed constant reference f(x_ref).
SiameseQuery build_patching_siamese(const Network& net, const Circuit& circuit,
                                    const Vec& x_ref, const InputRegion& patch_region,
                                    const Metric& metric);

/// Three branches: the model on z' (patching source, radius eps_patch),
/// the model on z (reference, radius eps_in), and the circuit on z with
/// complement transplanted from branch 1. Input is (z', z).
SiameseQuery build_tripled_siamese(const Network& net, const Circuit& circuit,
                                   const Vec& x_anchor, double eps_in, double eps_patch,
                                   const Metric& metric);

/// Monotone-by-construction variant of the tripled encoding: complement
/// activations range over independent per-slot interval boxes (the plain
/// interval bounds of the model over the eps_patch ball) wired as extra
/// input dimensions.
SiameseQuery build_box_patching_siamese(const Network& net, const Circuit& circuit,
                                        const Vec& x_anchor, double eps_in, double eps_patch,
                                        const Metric& metric);

/// Linear constraint over the combined net outputs: sum(coeff*out) +
/// constant <= bound must hold everywhere in the region.
struct LinearConstraint {
  Vec coeffs;
  double constant = 0;
  double bound = 0;
};

/// The metric expanded to constraint rows for one region box.
std::vector<LinearConstraint> constraint_rows(const SiameseQuery& query, int box_index);

/// Concrete satisfaction margin at y = combined net output: max over rows
/// of (value - bound); <= 0 means the spec holds at that point.
double violation_margin(const SiameseQuery& query, int box_index, const Vec& y);

}  // namespace circuits
