#include "circuits/encode.hpp"

#include "circuits/bounds.hpp"

#include <algorithm>
#include <map>

namespace circuits {

namespace {

// Replacement for one patched slot: a constant, or a slot of an
// already-built node of the combined graph (transplant wiring).
struct PatchSource {
  bool is_const = true;
  double constant = 0;
  int ref_node = -1;
  int ref_slot = 0;
};

using PatchPlan = std::map<int, std::map<int, PatchSource>>;  // orig node -> slot -> source

int push_node(Network& net, Node n) {
  net.nodes.push_back(std::move(n));
  return static_cast<int>(net.nodes.size()) - 1;
}

Node affine_node(std::vector<int> sources, Mat w, Vec b) {
  Node n;
  n.kind = NodeKind::Affine;
  n.width = static_cast<int>(w.rows());
  n.sources = std::move(sources);
  n.weights = std::move(w);
  n.bias = std::move(b);
  return n;
}

// Copies `src` into `dst` with the input node replaced by
// `input_replacement` and patched slots rewritten. Patches on affine
// nodes fold into their rows; patches on other nodes fold into the
// columns of affine consumers, with an explicit selector node as the
// fallback for non-affine consumers. Returns the branch's node map.
class BranchCopier {
 public:
  BranchCopier(const Network& src, Network& dst, int input_replacement, const PatchPlan& plan)
      : src_(src), dst_(dst), plan_(plan) {
    map_.assign(src.nodes.size(), -1);
    map_[src.input_node] = input_replacement;
  }

  int run() {
    for (int i = 0; i < static_cast<int>(src_.nodes.size()); ++i) {
      if (i == src_.input_node) {
        if (plan_.count(i)) throw InputError("cannot patch the input node");
        continue;
      }
      copy_node(i);
    }
    resolve(src_.output_node);
    return map_[src_.output_node];
  }

  int mapped(int orig) const { return map_[orig]; }

 private:
  void copy_node(int i) {
    const Node& n = src_.nodes[i];
    auto plan_it = plan_.find(i);
    const std::map<int, PatchSource>* here =
        plan_it == plan_.end() ? nullptr : &plan_it->second;

    if (n.kind == NodeKind::Affine) {
      map_[i] = copy_affine(n, here);
      return;
    }
    for (int s : n.sources) resolve(s);
    Node copy = n;
    for (int& s : copy.sources) s = map_[s];
    map_[i] = push_node(dst_, std::move(copy));
    if (here) pending_[i] = *here;  // fold at consumers
  }

  // Affine copy with column folding for pending sources and row folding
  // for patches sitting on this node.
  int copy_affine(const Node& n, const std::map<int, PatchSource>* here) {
    std::vector<int> new_sources;
    std::vector<int> block_offset;
    int in_w = 0;
    for (int s : n.sources) {
      new_sources.push_back(map_[s]);
      block_offset.push_back(in_w);
      in_w += src_.nodes[s].width;
    }
    Mat w = n.weights;
    Vec b = n.bias;

    // ref node -> appended block start (assigned lazily)
    std::map<int, int> ref_block;
    std::vector<std::pair<int, int>> ref_writes;  // flattened (row, ref col) += value
    struct RefWrite {
      int row;
      int ref_node;
      int ref_slot;
      double value;
    };
    std::vector<RefWrite> writes;

    int at = 0;
    for (int s : n.sources) {
      const int sw = src_.nodes[s].width;
      auto pend = pending_.find(s);
      if (pend != pending_.end()) {
        for (const auto& [slot, src] : pend->second) {
          const int col = at + slot;
          if (src.is_const) {
            b += w.col(col) * src.constant;
          } else {
            for (int r = 0; r < w.rows(); ++r) {
              if (w(r, col) != 0.0) writes.push_back({r, src.ref_node, src.ref_slot, w(r, col)});
            }
          }
          w.col(col).setZero();
        }
      }
      at += sw;
    }
    if (here) {
      for (const auto& [slot, src] : *here) {
        w.row(slot).setZero();
        if (src.is_const) {
          b[slot] = src.constant;
        } else {
          b[slot] = 0;
          writes.push_back({slot, src.ref_node, src.ref_slot, 1.0});
        }
      }
    }
    if (!writes.empty()) {
      for (const auto& wr : writes) {
        if (!ref_block.count(wr.ref_node)) {
          ref_block[wr.ref_node] = in_w;
          in_w += dst_.nodes[wr.ref_node].width;
          new_sources.push_back(wr.ref_node);
        }
      }
      Mat wide = Mat::Zero(w.rows(), in_w);
      wide.leftCols(w.cols()) = w;
      for (const auto& wr : writes) {
        wide(wr.row, ref_block[wr.ref_node] + wr.ref_slot) += wr.value;
      }
      w = std::move(wide);
    }
    return push_node(dst_, affine_node(std::move(new_sources), std::move(w), std::move(b)));
  }

  // Materializes a selector for a pending non-affine-consumed node.
  void resolve(int orig) {
    auto pend = pending_.find(orig);
    if (pend == pending_.end()) return;
    const int base = map_[orig];
    const int width = dst_.nodes[base].width;
    std::vector<int> sources = {base};
    int in_w = width;
    std::map<int, int> ref_block;
    Mat w = Mat::Zero(width, width);
    w.setIdentity();
    Vec b = Vec::Zero(width);
    struct Write {
      int row, ref_node, ref_slot;
    };
    std::vector<Write> writes;
    for (const auto& [slot, srcp] : pend->second) {
      w.row(slot).setZero();
      if (srcp.is_const) {
        b[slot] = srcp.constant;
      } else {
        writes.push_back({slot, srcp.ref_node, srcp.ref_slot});
      }
    }
    for (const auto& wr : writes) {
      if (!ref_block.count(wr.ref_node)) {
        ref_block[wr.ref_node] = in_w;
        in_w += dst_.nodes[wr.ref_node].width;
        sources.push_back(wr.ref_node);
      }
    }
    Mat wide = Mat::Zero(width, in_w);
    wide.leftCols(width) = w;
    for (const auto& wr : writes) wide(wr.row, ref_block[wr.ref_node] + wr.ref_slot) = 1.0;
    map_[orig] = push_node(dst_, affine_node(std::move(sources), std::move(wide), std::move(b)));
    pending_.erase(pend);
  }

  const Network& src_;
  Network& dst_;
  const PatchPlan& plan_;
  std::vector<int> map_;
  std::map<int, std::map<int, PatchSource>> pending_;
};

// Merges bit-identical nodes (same kind, sources and parameters) so the
// branches share every unpatched prefix. Shared structure cancels exactly
// in the verifier's backward pass, which is what lets difference rows
// over twin branches tighten to zero.
void merge_duplicates(Network& net) {
  std::vector<int> remap(net.nodes.size());
  std::vector<int> reps;
  auto same = [&](const Node& a, const Node& b) {
    if (a.kind != b.kind || a.width != b.width || a.sources != b.sources) return false;
    if (a.kind == NodeKind::Affine) return a.weights == b.weights && a.bias == b.bias;
    if (a.kind == NodeKind::ConstantFix) return a.value == b.value;
    return true;
  };
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    for (int& s : net.nodes[i].sources) s = remap[s];
    remap[i] = i;
    if (net.nodes[i].kind == NodeKind::Input) continue;
    for (int r : reps) {
      if (same(net.nodes[i], net.nodes[r])) {
        remap[i] = r;
        break;
      }
    }
    if (remap[i] == i) reps.push_back(i);
  }
  net.output_node = remap[net.output_node];
  net.input_node = remap[net.input_node];
}

// Drops nodes with no path to the output; the input node always stays.
void prune_dead(Network& net) {
  std::vector<bool> keep(net.nodes.size(), false);
  keep[net.input_node] = true;
  keep[net.output_node] = true;
  for (int i = static_cast<int>(net.nodes.size()) - 1; i >= 0; --i) {
    if (!keep[i]) continue;
    for (int s : net.nodes[i].sources) keep[s] = true;
  }
  std::vector<int> remap(net.nodes.size(), -1);
  std::vector<Node> kept;
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    if (!keep[i]) continue;
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(std::move(net.nodes[i]));
  }
  for (Node& n : kept) {
    for (int& s : n.sources) s = remap[s];
  }
  net.nodes = std::move(kept);
  net.input_node = remap[net.input_node];
  net.output_node = remap[net.output_node];
}

PatchPlan constant_plan(const Network& net, const std::set<ComponentId>& patched,
                        const std::map<ComponentId, Vec>& values) {
  PatchPlan plan;
  for (const auto& id : patched) {
    const auto& site = net.component(id).site;
    const Vec& v = values.at(id);
    for (int t = 0; t < site.width; ++t) {
      plan[site.node][site.offset + t] = {true, v[t], -1, 0};
    }
  }
  return plan;
}

PatchPlan transplant_plan(const Network& net, const std::set<ComponentId>& patched,
                          const BranchCopier& source_branch) {
  PatchPlan plan;
  for (const auto& id : patched) {
    const auto& site = net.component(id).site;
    const int ref = source_branch.mapped(site.node);
    for (int t = 0; t < site.width; ++t) {
      plan[site.node][site.offset + t] = {false, 0, ref, site.offset + t};
    }
  }
  return plan;
}

void check_members(const Network& net, const Circuit& circuit) {
  for (const auto& id : circuit.members) net.component(id);
}

OutputSpec make_spec(const Metric& metric, const std::vector<Vec>& cleans) {
  OutputSpec spec;
  spec.metric = metric;
  if (metric.kind == MetricKind::WinnerRunner) {
    for (const Vec& clean : cleans) {
      WinnerRunnerSpec wr;
      if (metric.target >= 0) {
        wr.target = metric.target;
      } else {
        clean.maxCoeff(&wr.target);
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < clean.size(); ++j) {
        if (j != wr.target && clean[j] > best) {
          best = clean[j];
          wr.runner = j;
        }
      }
      wr.margin = metric.alpha_frac * (clean[wr.target] - best);
      spec.winner_runner.push_back(wr);
    }
  }
  return spec;
}

int add_input(Network& net, int width) {
  Node in;
  in.kind = NodeKind::Input;
  in.width = width;
  return push_node(net, std::move(in));
}

int add_concat(Network& net, std::vector<int> sources) {
  Node n;
  n.kind = NodeKind::Concat;
  n.width = 0;
  for (int s : sources) n.width += net.nodes[s].width;
  n.sources = std::move(sources);
  return push_node(net, std::move(n));
}

}  // namespace

SiameseQuery build_input_siamese(const Network& net, const Circuit& circuit,
                                 const PatchingScheme& patch, const InputRegion& region,
                                 const Metric& metric) {
  if (patch.kind != PatchKind::Zero && patch.kind != PatchKind::Mean) {
    throw InputError("input siamese requires a constant patching scheme (zero or mean)");
  }
  check_members(net, circuit);
  if (region.boxes.empty()) throw InputError("region must contain at least one box");

  SiameseQuery q;
  add_input(q.net, net.input_dim());
  BranchCopier model_branch(net, q.net, 0, {});
  const int model_out = model_branch.run();

  const auto patched = complement(net, circuit.members);
  const auto values = resolve_patch(net, patched, patch);
  const PatchPlan plan = constant_plan(net, patched, values);
  BranchCopier circuit_branch(net, q.net, 0, plan);
  const int circuit_out = circuit_branch.run();

  q.net.output_node = add_concat(q.net, {model_out, circuit_out});
  merge_duplicates(q.net);
  prune_dead(q.net);
  q.net.validate();

  const int d = net.output_dim();
  for (int j = 0; j < d; ++j) {
    q.wiring.model_slots.push_back(j);
    q.wiring.circuit_slots.push_back(d + j);
  }
  q.region = region;
  std::vector<Vec> cleans;
  for (const auto& box : region.boxes) cleans.push_back(forward(net, box.center));
  q.spec = make_spec(metric, cleans);
  return q;
}

SiameseQuery build_patching_siamese(const Network& net, const Circuit& circuit,
                                    const Vec& x_ref, const InputRegion& patch_region,
                                    const Metric& metric) {
  check_members(net, circuit);
  if (x_ref.size() != net.input_dim()) {
    throw InputError("patching siamese: x_ref dimension mismatch");
  }
  if (patch_region.boxes.empty()) throw InputError("patch region must contain a box");

  SiameseQuery q;
  add_input(q.net, net.input_dim());  // the free patching variable z
  BranchCopier model_branch(net, q.net, 0, {});
  model_branch.run();

  Node ref_const;
  ref_const.kind = NodeKind::ConstantFix;
  ref_const.width = net.input_dim();
  ref_const.value = x_ref;
  const int ref_input = push_node(q.net, std::move(ref_const));

  const auto patched = complement(net, circuit.members);
  const PatchPlan plan = transplant_plan(net, patched, model_branch);
  BranchCopier circuit_branch(net, q.net, ref_input, plan);
  q.net.output_node = circuit_branch.run();
  merge_duplicates(q.net);
  prune_dead(q.net);
  q.net.validate();

  const int d = net.output_dim();
  for (int j = 0; j < d; ++j) q.wiring.circuit_slots.push_back(j);
  q.wiring.reference = forward(net, x_ref);
  q.region = patch_region;
  std::vector<Vec> cleans(patch_region.boxes.size(), *q.wiring.reference);
  q.spec = make_spec(metric, cleans);
  return q;
}

namespace {

SiameseQuery build_three_branch(const Network& net, const Circuit& circuit, const Vec& x_anchor,
                                double eps_in, double eps_patch, const Metric& metric,
                                bool box_patching) {
  check_members(net, circuit);
  const int n = net.input_dim();
  if (x_anchor.size() != n) throw InputError("anchor dimension mismatch");
  if (eps_in < 0 || eps_patch < 0) throw InputError("radii must be non-negative");

  const auto patched = complement(net, circuit.members);

  // Gather the complement slot list in component order (box mode).
  std::vector<std::pair<ComponentId, int>> slots;
  for (const auto& id : patched) {
    const auto& site = net.component(id).site;
    for (int t = 0; t < site.width; ++t) slots.emplace_back(id, t);
  }

  NodeBounds patch_ranges;
  if (box_patching) {
    BoxBounds zprime;
    zprime.lo = x_anchor.array() - eps_patch;
    zprime.hi = x_anchor.array() + eps_patch;
    patch_ranges = interval_forward(net, zprime);
  }

  SiameseQuery q;
  const int extra = box_patching ? static_cast<int>(slots.size()) : n;
  add_input(q.net, n + extra);

  Mat sel_z = Mat::Zero(n, n + extra);
  PatchPlan plan;
  int patch_source = -1;
  if (box_patching) {
    sel_z.leftCols(n).setIdentity();
    int k = 0;
    for (const auto& [id, t] : slots) {
      const auto& site = net.component(id).site;
      plan[site.node][site.offset + t] = {false, 0, 0, n + k};
      ++k;
    }
  } else {
    sel_z.rightCols(n).setIdentity();
  }
  const int z_slice = push_node(q.net, affine_node({0}, sel_z, Vec::Zero(n)));

  if (!box_patching) {
    Mat sel_zp = Mat::Zero(n, 2 * n);
    sel_zp.leftCols(n).setIdentity();
    const int zp_slice = push_node(q.net, affine_node({0}, sel_zp, Vec::Zero(n)));
    BranchCopier patch_branch(net, q.net, zp_slice, {});
    patch_branch.run();
    patch_source = zp_slice;
    plan = transplant_plan(net, patched, patch_branch);
    (void)patch_source;
  }

  BranchCopier reference_branch(net, q.net, z_slice, {});
  const int ref_out = reference_branch.run();
  BranchCopier circuit_branch(net, q.net, z_slice, plan);
  const int circ_out = circuit_branch.run();
  q.net.output_node = add_concat(q.net, {ref_out, circ_out});
  merge_duplicates(q.net);
  prune_dead(q.net);
  q.net.validate();

  const int d = net.output_dim();
  for (int j = 0; j < d; ++j) {
    q.wiring.model_slots.push_back(j);
    q.wiring.circuit_slots.push_back(d + j);
  }

  InputRegion::Box box;
  box.center = Vec(n + extra);
  box.clamp_lo = Vec(n + extra);
  box.clamp_hi = Vec(n + extra);
  if (box_patching) {
    box.center.head(n) = x_anchor;
    box.clamp_lo.head(n) = x_anchor.array() - eps_in;
    box.clamp_hi.head(n) = x_anchor.array() + eps_in;
    double radius = eps_in;
    int k = 0;
    for (const auto& [id, t] : slots) {
      const auto& site = net.component(id).site;
      const double lo = patch_ranges.node[site.node].lo[site.offset + t];
      const double hi = patch_ranges.node[site.node].hi[site.offset + t];
      box.center[n + k] = 0.5 * (lo + hi);
      box.clamp_lo[n + k] = lo;
      box.clamp_hi[n + k] = hi;
      radius = std::max(radius, 0.5 * (hi - lo));
      ++k;
    }
    box.radius = radius;
  } else {
    box.center.head(n) = x_anchor;   // z' (patch source)
    box.center.tail(n) = x_anchor;   // z
    box.clamp_lo.head(n) = x_anchor.array() - eps_patch;
    box.clamp_hi.head(n) = x_anchor.array() + eps_patch;
    box.clamp_lo.tail(n) = x_anchor.array() - eps_in;
    box.clamp_hi.tail(n) = x_anchor.array() + eps_in;
    box.radius = std::max(eps_in, eps_patch);
  }
  q.region.boxes.push_back(std::move(box));
  q.z_subset_zprime = eps_in <= eps_patch;

  std::vector<Vec> cleans = {forward(net, x_anchor)};
  q.spec = make_spec(metric, cleans);
  return q;
}

}  // namespace

SiameseQuery build_tripled_siamese(const Network& net, const Circuit& circuit,
                                   const Vec& x_anchor, double eps_in, double eps_patch,
                                   const Metric& metric) {
  return build_three_branch(net, circuit, x_anchor, eps_in, eps_patch, metric, false);
}

SiameseQuery build_box_patching_siamese(const Network& net, const Circuit& circuit,
                                        const Vec& x_anchor, double eps_in, double eps_patch,
                                        const Metric& metric) {
  return build_three_branch(net, circuit, x_anchor, eps_in, eps_patch, metric, true);
}

std::vector<LinearConstraint> constraint_rows(const SiameseQuery& query, int box_index) {
  const int d_out = query.net.nodes[query.net.output_node].width;
  const auto& w = query.wiring;
  const int d = static_cast<int>(w.circuit_slots.size());

  auto diff_rows = [&](int k, double delta, std::vector<LinearConstraint>& rows) {
    for (double sign : {1.0, -1.0}) {
      LinearConstraint c;
      c.coeffs = Vec::Zero(d_out);
      c.coeffs[w.circuit_slots[k]] += sign;
      if (w.reference) {
        c.constant -= sign * (*w.reference)[k];
      } else {
        c.coeffs[w.model_slots[k]] -= sign;
      }
      c.bound = delta;
      rows.push_back(std::move(c));
    }
  };

  std::vector<LinearConstraint> rows;
  const Metric& m = query.spec.metric;
  switch (m.kind) {
    case MetricKind::LogitDiff:
      if (m.gold_class < 0 || m.gold_class >= d) throw InputError("gold class out of range");
      diff_rows(m.gold_class, m.delta, rows);
      break;
    case MetricKind::AbsMax:
      for (int k = 0; k < d; ++k) diff_rows(k, m.delta, rows);
      break;
    case MetricKind::WinnerRunner: {
      const auto& wr = query.spec.winner_runner.at(box_index);
      LinearConstraint c;
      c.coeffs = Vec::Zero(d_out);
      c.coeffs[w.circuit_slots[wr.runner]] += 1;
      c.coeffs[w.circuit_slots[wr.target]] -= 1;
      c.bound = wr.margin;
      rows.push_back(std::move(c));
      break;
    }
  }
  return rows;
}

double violation_margin(const SiameseQuery& query, int box_index, const Vec& y) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : constraint_rows(query, box_index)) {
    worst = std::max(worst, row.coeffs.dot(y) + row.constant - row.bound);
  }
  return worst;
}

}  // namespace circuits
