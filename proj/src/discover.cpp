#include "circuits/discover.hpp"

#include <algorithm>
#include <chrono>

namespace circuits {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_faithful_precondition(const Predicate& pred, const std::vector<ComponentId>& universe,
                                 DiscoveryTrace& trace) {
  const std::set<ComponentId> full(universe.begin(), universe.end());
  ++trace.precheck_evals;
  if (eval(pred, full) != TriBool::True) {
    throw InputError("discovery precondition failed: the full graph is not faithful");
  }
}

}  // namespace

Ordering Ordering::explicit_order(std::vector<ComponentId> ids) {
  Ordering o;
  o.kind = Kind::Explicit;
  o.order = std::move(ids);
  return o;
}

std::vector<ComponentId> resolve_ordering(const Ordering& ordering,
                                          const std::vector<ComponentId>& universe) {
  if (ordering.kind == Ordering::Kind::Explicit) {
    if (ordering.order.size() != universe.size()) {
      throw InputError("explicit ordering must list every component exactly once");
    }
    auto sorted = ordering.order;
    std::sort(sorted.begin(), sorted.end());
    auto expect = universe;
    std::sort(expect.begin(), expect.end());
    if (sorted != expect) {
      throw InputError("explicit ordering does not match the component universe");
    }
    return ordering.order;
  }
  auto out = universe;
  std::sort(out.begin(), out.end(), [](const ComponentId& a, const ComponentId& b) {
    if (a.layer != b.layer) return a.layer > b.layer;
    return a.unit < b.unit;
  });
  return out;
}

DiscoveryResult greedy(const Predicate& pred, const Ordering& ordering) {
  const auto start = Clock::now();
  DiscoveryResult res;
  const auto universe = pred.universe();
  const auto order = resolve_ordering(ordering, universe);
  check_faithful_precondition(pred, universe, res.trace);

  res.circuit.insert(universe.begin(), universe.end());
  int step = 0;
  for (const auto& id : order) {
    std::set<ComponentId> candidate = res.circuit;
    candidate.erase(id);
    const TriBool r = eval(pred, candidate);
    ++res.trace.search_evals;
    if (r == TriBool::True) {
      res.circuit = std::move(candidate);
    } else if (!res.trace.quasi_witness) {
      res.trace.quasi_witness = id;  // first kept component
    }
    res.trace.steps.push_back({step++, id, r, res.circuit.size(), since(start)});
  }
  res.trace.wall_s = since(start);
  return res;
}

DiscoveryResult exhaustive(const Predicate& pred, const Ordering& ordering) {
  const auto start = Clock::now();
  DiscoveryResult res;
  const auto universe = pred.universe();
  const auto order = resolve_ordering(ordering, universe);
  check_faithful_precondition(pred, universe, res.trace);

  res.circuit.insert(universe.begin(), universe.end());
  int step = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& id : order) {
      if (!res.circuit.count(id)) continue;
      std::set<ComponentId> candidate = res.circuit;
      candidate.erase(id);
      const TriBool r = eval(pred, candidate);
      ++res.trace.search_evals;
      if (r == TriBool::True) {
        res.circuit = std::move(candidate);
        changed = true;
      } else if (!res.trace.quasi_witness) {
        res.trace.quasi_witness = id;
      }
      res.trace.steps.push_back({step++, id, r, res.circuit.size(), since(start)});
    }
  }
  res.trace.wall_s = since(start);
  return res;
}

DiscoveryResult binary_search(const Predicate& pred, const Ordering& ordering) {
  const auto start = Clock::now();
  DiscoveryResult res;
  const auto universe = pred.universe();
  const auto order = resolve_ordering(ordering, universe);
  check_faithful_precondition(pred, universe, res.trace);
  ++res.trace.precheck_evals;
  if (eval(pred, {}) != TriBool::False) {
    throw InputError("binary search precondition failed: the empty circuit must be unfaithful");
  }

  const int n = static_cast<int>(order.size());
  res.circuit.insert(universe.begin(), universe.end());
  int low = 0;
  int high = n;
  int step = 0;
  while (high - low > 1) {
    const int mid = (low + high) / 2;
    // Remove the first `mid` elements of the ordering.
    std::set<ComponentId> candidate(order.begin() + mid, order.end());
    const TriBool r = eval(pred, candidate);
    ++res.trace.search_evals;
    if (r == TriBool::True) {
      low = mid;
      res.circuit = std::move(candidate);
    } else {
      high = mid;
    }
    res.trace.steps.push_back({step++, order[mid - 1], r, res.circuit.size(), since(start)});
  }
  res.trace.wall_s = since(start);
  return res;
}

}  // namespace circuits
