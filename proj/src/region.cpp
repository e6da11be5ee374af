#include "circuits/region.hpp"

namespace circuits {

InputRegion::Box InputRegion::Box::around(Vec center, double radius) {
  Box b;
  b.center = std::move(center);
  b.radius = radius;
  return b;
}

InputRegion::Box InputRegion::Box::bounds(Vec lo, Vec hi) {
  Box b;
  b.center = 0.5 * (lo + hi);
  b.radius = 0;
  for (int i = 0; i < lo.size(); ++i) b.radius = std::max(b.radius, 0.5 * (hi[i] - lo[i]));
  b.clamp_lo = std::move(lo);
  b.clamp_hi = std::move(hi);
  return b;
}

InputRegion InputRegion::ball(Vec center, double radius) {
  InputRegion r;
  r.boxes.push_back(Box::around(std::move(center), radius));
  return r;
}

BoxBounds materialize(const InputRegion::Box& box, int dim) {
  if (box.center.size() != dim) {
    throw InputError("region box dimension mismatch");
  }
  if (!(box.radius >= 0) || !std::isfinite(box.radius)) {
    throw InputError("region box radius must be finite and non-negative");
  }
  BoxBounds b;
  b.lo = box.center.array() - box.radius;
  b.hi = box.center.array() + box.radius;
  if (box.clamp_lo.size()) {
    if (box.clamp_lo.size() != dim || box.clamp_hi.size() != dim) {
      throw InputError("region clamp dimension mismatch");
    }
    b.lo = b.lo.cwiseMax(box.clamp_lo);
    b.hi = b.hi.cwiseMin(box.clamp_hi);
  }
  for (int i = 0; i < dim; ++i) {
    if (b.lo[i] > b.hi[i]) throw InputError("region box empty after clamping");
  }
  return b;
}

namespace {

void check_delta(double delta) {
  if (!(delta >= 0) || !std::isfinite(delta)) {
    throw InputError("metric tolerance must be finite and non-negative");
  }
}

}  // namespace

Metric Metric::logit_diff(int gold_class, double delta) {
  check_delta(delta);
  Metric m;
  m.kind = MetricKind::LogitDiff;
  m.gold_class = gold_class;
  m.delta = delta;
  return m;
}

Metric Metric::winner_runner(double alpha_frac, int target) {
  if (!(alpha_frac > 0) || !(alpha_frac <= 1)) {
    throw InputError("winner-runner margin fraction must lie in (0, 1]");
  }
  Metric m;
  m.kind = MetricKind::WinnerRunner;
  m.alpha_frac = alpha_frac;
  m.target = target;
  return m;
}

Metric Metric::abs_max(double delta) {
  check_delta(delta);
  Metric m;
  m.kind = MetricKind::AbsMax;
  m.delta = delta;
  return m;
}

}  // namespace circuits
