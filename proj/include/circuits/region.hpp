#pragma once

#include "circuits/net.hpp"

#include <vector>

namespace circuits {

/// Union of axis-aligned L-inf boxes, each optionally intersected with
/// per-dimension clamps (e.g. [0,1] input bounds).
struct InputRegion {
  struct Box {
    Vec center;
    double radius = 0;
    Vec clamp_lo;  // empty = unclamped
    Vec clamp_hi;

    static Box around(Vec center, double radius);
    static Box bounds(Vec lo, Vec hi);
  };
  std::vector<Box> boxes;

  static InputRegion ball(Vec center, double radius);
};

/// A box materialized to per-dimension [lo, hi].
struct BoxBounds {
  Vec lo;
  Vec hi;
  Vec center() const { return 0.5 * (lo + hi); }
  Vec halfwidth() const { return 0.5 * (hi - lo); }
};

BoxBounds materialize(const InputRegion::Box& box, int dim);

enum class MetricKind { LogitDiff, WinnerRunner, AbsMax };

/// Output metric over paired (model, circuit) logits.
/// LogitDiff: |model[k] - circuit[k]| <= delta on the gold class k.
/// WinnerRunner: circuit winner margin over the clean runner-up stays
///   within alpha_frac of the clean winner-runner gap.
/// AbsMax: max absolute deviation across all outputs <= delta.
struct Metric {
  MetricKind kind = MetricKind::AbsMax;
  double delta = 0;
  int gold_class = 0;        // LogitDiff
  int target = -1;           // WinnerRunner: -1 = take clean argmax
  double alpha_frac = 1.0;   // WinnerRunner

  static Metric logit_diff(int gold_class, double delta);
  static Metric winner_runner(double alpha_frac, int target = -1);
  static Metric abs_max(double delta);
};

}  // namespace circuits
