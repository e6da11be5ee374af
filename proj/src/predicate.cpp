#include "circuits/predicate.hpp"

#include <algorithm>
#include <random>

namespace circuits {

std::vector<ComponentId> Predicate::universe() const {
  if (kind == PredicateKind::SyntheticMonotone || kind == PredicateKind::SyntheticNonMonotone) {
    return synthetic_universe;
  }
  if (!net) throw InputError("predicate has no network");
  std::vector<ComponentId> out;
  for (const auto& c : net->components) out.push_back(c.id);
  std::sort(out.begin(), out.end());
  return out;
}

Predicate make_sampling(const Network& net, std::vector<Vec> batch, Metric metric,
                        PatchingScheme patch) {
  Predicate p;
  p.kind = PredicateKind::Sampling;
  p.net = &net;
  p.batch = std::move(batch);
  p.metric = metric;
  p.patch = std::move(patch);
  return p;
}

Predicate make_input_robust(const Network& net, InputRegion region, Metric metric,
                            PatchingScheme patch) {
  Predicate p;
  p.kind = PredicateKind::InputRobust;
  p.net = &net;
  p.region = std::move(region);
  p.metric = metric;
  p.patch = std::move(patch);
  return p;
}

Predicate make_patching_robust(const Network& net, std::vector<Vec> x_refs,
                               InputRegion patch_region, Metric metric) {
  Predicate p;
  p.kind = PredicateKind::PatchingRobust;
  p.net = &net;
  p.x_refs = std::move(x_refs);
  p.patch_region = std::move(patch_region);
  p.metric = metric;
  return p;
}

Predicate make_combined(const Network& net, std::vector<Vec> anchors, double eps_in,
                        double eps_patch, Metric metric, bool box_patching) {
  Predicate p;
  p.kind = PredicateKind::Combined;
  p.net = &net;
  p.anchors = std::move(anchors);
  p.eps_in = eps_in;
  p.eps_patch = eps_patch;
  p.metric = metric;
  p.box_patching = box_patching;
  return p;
}

Predicate make_synthetic_monotone(std::uint64_t seed, int universe_size, int witnesses) {
  if (universe_size < 1 || witnesses < 1) {
    throw InputError("synthetic predicate needs a non-empty universe and witness family");
  }
  Predicate p;
  p.kind = PredicateKind::SyntheticMonotone;
  p.seed = seed;
  for (int i = 0; i < universe_size; ++i) p.synthetic_universe.push_back({0, i});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(1, std::max(1, universe_size / 2));
  std::uniform_int_distribution<int> elem(0, universe_size - 1);
  for (int w = 0; w < witnesses; ++w) {
    std::set<ComponentId> witness;
    const int target = size_dist(rng);
    while (static_cast<int>(witness.size()) < target) witness.insert({0, elem(rng)});
    p.witness_family.push_back(std::move(witness));
  }
  return p;
}

Predicate make_synthetic_non_monotone(std::uint64_t seed, int universe_size) {
  if (universe_size < 1) throw InputError("synthetic predicate needs a non-empty universe");
  Predicate p;
  p.kind = PredicateKind::SyntheticNonMonotone;
  p.seed = seed;
  for (int i = 0; i < universe_size; ++i) p.synthetic_universe.push_back({0, i});
  return p;
}

namespace {

bool synthetic_monotone_eval(const Predicate& p, const std::set<ComponentId>& members) {
  for (const auto& witness : p.witness_family) {
    if (std::includes(members.begin(), members.end(), witness.begin(), witness.end())) {
      return true;
    }
  }
  return false;
}

bool synthetic_non_monotone_eval(const Predicate& p, const std::set<ComponentId>& members) {
  if (members.size() == p.synthetic_universe.size()) return true;
  if (members.empty()) return false;
  std::uint64_t h = p.seed ^ 0x9e3779b97f4a7c15ull;
  for (const auto& id : members) {
    h ^= static_cast<std::uint64_t>(id.layer) * 0x100000001b3ull +
         static_cast<std::uint64_t>(id.unit) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0x100000001b3ull;
  }
  return (h >> 17) & 1u;
}

double sampling_metric_value(const Predicate& p, const std::set<ComponentId>& members,
                             const Vec& x) {
  Circuit c;
  c.members = members;
  const Vec model = forward(*p.net, x);
  const Vec circ = masked_forward(*p.net, c, p.patch, x);
  switch (p.metric.kind) {
    case MetricKind::LogitDiff:
      return std::abs(model[p.metric.gold_class] - circ[p.metric.gold_class]);
    case MetricKind::AbsMax:
      return (model - circ).cwiseAbs().maxCoeff();
    case MetricKind::WinnerRunner: {
      int target = p.metric.target;
      if (target < 0) model.maxCoeff(&target);
      int runner = -1;
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < model.size(); ++j) {
        if (j != target && model[j] > best) {
          best = model[j];
          runner = j;
        }
      }
      const double margin = p.metric.alpha_frac * (model[target] - best);
      // Deviation beyond the allowed margin, shifted so <= delta means pass.
      return (circ[runner] - circ[target]) - margin + p.metric.delta;
    }
  }
  return 0;
}

TriBool from_verdict(const Verdict& v) {
  switch (v.status) {
    case Status::Certified: return TriBool::True;
    case Status::Falsified: return TriBool::False;
    case Status::Unknown: return TriBool::Unknown;
  }
  return TriBool::Unknown;
}

}  // namespace

TriBool eval(const Predicate& pred, const std::set<ComponentId>& members) {
  switch (pred.kind) {
    case PredicateKind::SyntheticMonotone:
      return synthetic_monotone_eval(pred, members) ? TriBool::True : TriBool::False;
    case PredicateKind::SyntheticNonMonotone:
      return synthetic_non_monotone_eval(pred, members) ? TriBool::True : TriBool::False;
    case PredicateKind::Sampling: {
      if (pred.batch.empty()) throw InputError("sampling predicate has an empty batch");
      double worst = -std::numeric_limits<double>::infinity();
      for (const Vec& x : pred.batch) {
        worst = std::max(worst, sampling_metric_value(pred, members, x));
      }
      return worst <= pred.metric.delta + kComparisonSlack ? TriBool::True : TriBool::False;
    }
    case PredicateKind::InputRobust: {
      Circuit c;
      c.members = members;
      const SiameseQuery q = build_input_siamese(*pred.net, c, pred.patch, pred.region, pred.metric);
      return from_verdict(verify(q, pred.budget));
    }
    case PredicateKind::PatchingRobust: {
      Circuit c;
      c.members = members;
      bool unknown = false;
      for (const Vec& x_ref : pred.x_refs) {
        const SiameseQuery q =
            build_patching_siamese(*pred.net, c, x_ref, pred.patch_region, pred.metric);
        const TriBool r = from_verdict(verify(q, pred.budget));
        if (r == TriBool::False) return TriBool::False;
        if (r == TriBool::Unknown) unknown = true;
      }
      return unknown ? TriBool::Unknown : TriBool::True;
    }
    case PredicateKind::Combined: {
      Circuit c;
      c.members = members;
      bool unknown = false;
      for (const Vec& anchor : pred.anchors) {
        const SiameseQuery q =
            pred.box_patching
                ? build_box_patching_siamese(*pred.net, c, anchor, pred.eps_in, pred.eps_patch,
                                             pred.metric)
                : build_tripled_siamese(*pred.net, c, anchor, pred.eps_in, pred.eps_patch,
                                        pred.metric);
        const TriBool r = from_verdict(verify(q, pred.budget));
        if (r == TriBool::False) return TriBool::False;
        if (r == TriBool::Unknown) unknown = true;
      }
      return unknown ? TriBool::Unknown : TriBool::True;
    }
  }
  return TriBool::Unknown;
}

MonotoneCertificate is_monotone_certificate(const Predicate& pred) {
  if (pred.kind == PredicateKind::SyntheticMonotone) return MonotoneCertificate::Guaranteed;
  if (pred.kind == PredicateKind::Combined && pred.box_patching &&
      pred.eps_in <= pred.eps_patch) {
    return MonotoneCertificate::Guaranteed;
  }
  return MonotoneCertificate::Unknown;
}

}  // namespace circuits
