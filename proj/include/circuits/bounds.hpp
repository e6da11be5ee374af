#pragma once

#include "circuits/net.hpp"
#include "circuits/region.hpp"

#include <map>
#include <vector>

namespace circuits {

struct Interval {
  Vec lo;
  Vec hi;
};

/// Sound per-node output bounds over an input box.
struct NodeBounds {
  std::vector<Interval> node;
};

/// A forced phase for one ReLU slot during branch-and-bound.
enum class Phase { On, Off };

/// Keys (node, slot) of ReLU nodes.
using PhaseMap = std::map<std::pair<int, int>, Phase>;

/// Plain interval arithmetic, no relaxation. Inclusion-monotone: computing
/// any node from box-valued sources stays inside these intervals.
NodeBounds interval_forward(const Network& net, const BoxBounds& box);

/// Interval bounds tightened by one backward linear-relaxation pass per
/// node (ReLU chord upper bound, zero/identity lower bound by sign).
NodeBounds bound_propagate(const Network& net, const BoxBounds& box);

namespace detail {

/// Full analysis used by the verifier: bounds under forced ReLU phases,
/// optionally intersected with parent bounds (children never loosen).
/// Throws nothing; sets `infeasible` when a forced phase empties a slot.
/// By default only ReLU pre-activation nodes get the backward tightening
/// (the hot path); tighten_all covers every node.
struct Analysis {
  NodeBounds bounds;
  bool infeasible = false;
};

Analysis analyze(const Network& net, const BoxBounds& box, const PhaseMap& phases,
                 const NodeBounds* parent = nullptr, bool tighten_all = false);

/// Lower/upper linear form of `coeffs . output_node + constant` over the
/// box, via backward propagation under the given phases and node bounds.
struct LinearBound {
  Vec lower_coeffs;   // over input dims
  double lower_const = 0;
  Vec upper_coeffs;
  double upper_const = 0;
  double lower = 0;   // extremized over the box
  double upper = 0;
  Vec upper_argmax;   // box point attaining the upper linear form's max
  bool exact = false; // no relaxed ReLU encountered (lower == upper form)
};

LinearBound bound_output_row(const Network& net, const BoxBounds& box, const PhaseMap& phases,
                             const NodeBounds& bounds, const Vec& coeffs, double constant);

/// ReLU slots whose pre-activation straddles zero and is not forced,
/// sorted by descending pre-activation width (ties by node, slot).
std::vector<std::pair<int, int>> unstable_relus(const Network& net, const NodeBounds& bounds,
                                                const PhaseMap& phases);

}  // namespace detail

}  // namespace circuits
