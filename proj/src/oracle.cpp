#include "circuits/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace circuits {

namespace {

std::set<ComponentId> mask_to_set(const std::vector<ComponentId>& items, unsigned mask) {
  std::set<ComponentId> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (mask & (1u << i)) out.insert(items[i]);
  }
  return out;
}

}  // namespace

MinimalityReport classify_minimality(const Predicate& pred, const std::set<ComponentId>& circuit) {
  const auto universe = pred.universe();
  if (circuit.empty()) {
    throw InputError("classify_minimality: empty circuits are not classified");
  }
  if (circuit.size() > 16) {
    throw InputError("classify_minimality: subset check refuses |circuit| > 16");
  }
  if (universe.size() > 16) {
    throw InputError("classify_minimality: cardinal check refuses |universe| > 16");
  }
  for (const auto& id : circuit) {
    if (!std::binary_search(universe.begin(), universe.end(), id)) {
      throw InputError("classify_minimality: circuit contains " + to_string(id) +
                       " outside the universe");
    }
  }

  MinimalityReport report;
  report.faithful = eval(pred, circuit) == TriBool::True;
  if (!report.faithful) return report;

  // quasi / local: single-element removals.
  bool all_break = true;
  bool some_break = false;
  for (const auto& id : circuit) {
    auto without = circuit;
    without.erase(id);
    const TriBool r = eval(pred, without);
    if (r == TriBool::False) {
      some_break = true;
      if (!report.breaking_element) report.breaking_element = id;
    } else {
      all_break = false;
    }
  }
  report.quasi = some_break;
  report.local = all_break;

  // subset: no faithful nonempty proper subset.
  const std::vector<ComponentId> members(circuit.begin(), circuit.end());
  report.subset = true;
  const unsigned full = (1u << members.size()) - 1u;
  for (unsigned mask = 1; mask < full; ++mask) {
    const auto sub = mask_to_set(members, mask);
    if (eval(pred, sub) == TriBool::True) {
      report.subset = false;
      report.faithful_proper_subset = sub;
      break;
    }
  }

  // cardinal: nothing strictly smaller over the whole universe is faithful.
  report.cardinal = true;
  const int n = static_cast<int>(universe.size());
  for (std::size_t size = 0; size < circuit.size() && report.cardinal; ++size) {
    std::vector<int> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = static_cast<int>(i);
    while (true) {
      std::set<ComponentId> candidate;
      for (int i : idx) candidate.insert(universe[i]);
      if (eval(pred, candidate) == TriBool::True) {
        report.cardinal = false;
        report.smaller_circuit = candidate;
        break;
      }
      if (size == 0) break;
      int i = static_cast<int>(size) - 1;
      while (i >= 0 && idx[i] == n - static_cast<int>(size) + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (std::size_t j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return report;
}

namespace {

// Affine form of every node output as a function of the input, for one
// activation pattern: value = A x + b.
struct AffineForms {
  std::vector<Mat> A;
  std::vector<Vec> b;
};

struct Halfspace {
  Vec normal;  // normal . x <= offset
  double offset;
};

// Pattern-conditional forward substitution. `phase` maps unstable slot
// index -> on/off; stable slots follow their bounds.
AffineForms affine_forms(const Network& net, const NodeBounds& bounds,
                         const std::vector<std::pair<int, int>>& unstable,
                         const std::vector<bool>& phase, std::vector<Halfspace>& constraints) {
  const int n = net.input_dim();
  AffineForms f;
  f.A.resize(net.nodes.size());
  f.b.resize(net.nodes.size());

  auto unstable_index = [&](int node, int slot) -> int {
    for (std::size_t k = 0; k < unstable.size(); ++k) {
      if (unstable[k].first == node && unstable[k].second == slot) return static_cast<int>(k);
    }
    return -1;
  };

  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    const Node& node = net.nodes[i];
    switch (node.kind) {
      case NodeKind::Input:
        f.A[i] = Mat::Identity(n, n);
        f.b[i] = Vec::Zero(n);
        break;
      case NodeKind::Affine: {
        Mat in_A(source_width_sum(net, node), n);
        Vec in_b(in_A.rows());
        int at = 0;
        for (int s : node.sources) {
          in_A.middleRows(at, net.nodes[s].width) = f.A[s];
          in_b.segment(at, net.nodes[s].width) = f.b[s];
          at += net.nodes[s].width;
        }
        f.A[i] = node.weights * in_A;
        f.b[i] = node.weights * in_b + node.bias;
        break;
      }
      case NodeKind::Relu: {
        const int s = node.sources[0];
        f.A[i] = f.A[s];
        f.b[i] = f.b[s];
        for (int j = 0; j < node.width; ++j) {
          const double lo = bounds.node[s].lo[j];
          const double hi = bounds.node[s].hi[j];
          bool on;
          const int k = unstable_index(i, j);
          if (k >= 0) {
            on = phase[k];
            // Cell constraint: pre >= 0 when on, pre <= 0 when off.
            Halfspace h;
            h.normal = on ? Vec(-f.A[s].row(j).transpose()) : Vec(f.A[s].row(j).transpose());
            h.offset = on ? f.b[s][j] : -f.b[s][j];
            constraints.push_back(std::move(h));
          } else {
            on = lo >= 0;
            if (!(lo >= 0) && !(hi <= 0)) {
              throw Error("enumerate_exact_range: slot neither stable nor enumerated");
            }
          }
          if (!on) {
            f.A[i].row(j).setZero();
            f.b[i][j] = 0;
          }
        }
        break;
      }
      case NodeKind::Copy:
        f.A[i] = f.A[node.sources[0]];
        f.b[i] = f.b[node.sources[0]];
        break;
      case NodeKind::ConstantFix:
        f.A[i] = Mat::Zero(node.width, n);
        f.b[i] = node.value;
        break;
      case NodeKind::Concat: {
        f.A[i] = Mat(node.width, n);
        f.b[i] = Vec(node.width);
        int at = 0;
        for (int s : node.sources) {
          f.A[i].middleRows(at, net.nodes[s].width) = f.A[s];
          f.b[i].segment(at, net.nodes[s].width) = f.b[s];
          at += net.nodes[s].width;
        }
        break;
      }
      case NodeKind::Subtract:
        f.A[i] = f.A[node.sources[0]] - f.A[node.sources[1]];
        f.b[i] = f.b[node.sources[0]] - f.b[node.sources[1]];
        break;
    }
  }
  return f;
}

// Vertices of box ∩ halfspaces via exhaustive hyperplane intersection.
std::vector<Vec> polytope_vertices(const BoxBounds& box, const std::vector<Halfspace>& hs) {
  const int n = static_cast<int>(box.lo.size());
  std::vector<Halfspace> planes;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1;
    planes.push_back({-e, -box.lo[i]});  // -x_i <= -lo
    planes.push_back({e, box.hi[i]});    //  x_i <= hi
  }
  planes.insert(planes.end(), hs.begin(), hs.end());
  const int p = static_cast<int>(planes.size());

  auto feasible = [&](const Vec& v) {
    for (int i = 0; i < n; ++i) {
      if (v[i] < box.lo[i] - 1e-9 || v[i] > box.hi[i] + 1e-9) return false;
    }
    for (const auto& h : hs) {
      if (h.normal.dot(v) > h.offset + 1e-9 * (1 + std::abs(h.offset))) return false;
    }
    return true;
  };

  std::vector<Vec> vertices;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    Mat M(n, n);
    Vec rhs(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = planes[pick[i]].normal.transpose();
      rhs[i] = planes[pick[i]].offset;
    }
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-10);
    if (lu.isInvertible()) {
      const Vec v = lu.solve(rhs);
      if (v.allFinite() && feasible(v)) vertices.push_back(v);
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == p - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return vertices;
}

}  // namespace

std::vector<Interval> enumerate_exact_range(const Network& net, const BoxBounds& box) {
  const int n = net.input_dim();
  if (static_cast<int>(box.lo.size()) != n) {
    throw InputError("enumerate_exact_range: box dimension mismatch");
  }
  if (n > 6) throw InputError("enumerate_exact_range: refuses input dimension > 6");

  const NodeBounds bounds = bound_propagate(net, box);
  const auto unstable = detail::unstable_relus(net, bounds, {});
  if (unstable.size() > 12) {
    throw InputError("enumerate_exact_range: refuses more than 12 unstable ReLUs (" +
                     std::to_string(unstable.size()) + ")");
  }

  const int d = net.output_dim();
  std::vector<Interval> out(d);
  for (int j = 0; j < d; ++j) {
    out[j].lo = Vec::Constant(1, std::numeric_limits<double>::infinity());
    out[j].hi = Vec::Constant(1, -std::numeric_limits<double>::infinity());
  }

  const std::size_t patterns = 1ull << unstable.size();
  for (std::size_t bits = 0; bits < patterns; ++bits) {
    std::vector<bool> phase(unstable.size());
    for (std::size_t k = 0; k < unstable.size(); ++k) phase[k] = (bits >> k) & 1u;
    std::vector<Halfspace> constraints;
    const AffineForms forms = affine_forms(net, bounds, unstable, phase, constraints);
    const auto vertices = polytope_vertices(box, constraints);
    if (vertices.empty()) continue;  // empty or degenerate cell

    const Mat& A = forms.A[net.output_node];
    const Vec& b = forms.b[net.output_node];
    for (const Vec& v : vertices) {
      const Vec y = A * v + b;
      for (int j = 0; j < d; ++j) {
        out[j].lo[0] = std::min(out[j].lo[0], y[j]);
        out[j].hi[0] = std::max(out[j].hi[0], y[j]);
      }
    }
  }
  for (int j = 0; j < d; ++j) {
    if (!std::isfinite(out[j].lo[0])) {
      throw Error("enumerate_exact_range: no feasible cell found");
    }
  }
  return out;
}

MonotoneReport check_monotone(const Predicate& pred, const std::vector<ComponentId>& universe) {
  if (universe.size() > 12) {
    throw InputError("check_monotone: refuses |universe| > 12");
  }
  MonotoneReport report;
  const std::vector<ComponentId> items(universe.begin(), universe.end());
  const unsigned total = 1u << items.size();
  std::vector<TriBool> memo(total);
  for (unsigned mask = 0; mask < total; ++mask) {
    memo[mask] = eval(pred, mask_to_set(items, mask));
    if (memo[mask] == TriBool::Unknown) ++report.undecided_pairs;
  }
  // Single-element extensions suffice.
  for (unsigned mask = 0; mask < total; ++mask) {
    if (memo[mask] != TriBool::True) continue;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const unsigned ext = mask | (1u << i);
      if (ext == mask) continue;
      if (memo[ext] == TriBool::False) {
        report.monotone = false;
        report.counterexample = {mask_to_set(items, mask), mask_to_set(items, ext)};
        return report;
      }
    }
  }
  return report;
}

}  // namespace circuits
