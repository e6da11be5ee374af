#include "circuits/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace circuits {

namespace {

// Effective pre-activation bounds of one ReLU slot under an optional
// forced phase. Returns false when the phase empties the slot's domain.
bool effective_pre(double lo, double hi, const Phase* forced, double& out_lo, double& out_hi) {
  if (!forced) {
    out_lo = lo;
    out_hi = hi;
    return true;
  }
  if (*forced == Phase::On) {
    out_lo = std::max(lo, 0.0);
    out_hi = hi;
    return out_hi >= out_lo;
  }
  out_lo = lo;
  out_hi = std::min(hi, 0.0);
  return out_hi >= out_lo;
}

struct ReluRelax {
  // y >= lower_slope * x ; y <= upper_slope * x + upper_const
  double lower_slope = 0;
  double upper_slope = 0;
  double upper_const = 0;
  bool relaxed = false;  // true when the slot is genuinely unstable
};

ReluRelax relax_slot(double lo, double hi) {
  ReluRelax r;
  if (lo >= 0) {
    r.lower_slope = r.upper_slope = 1;
  } else if (hi <= 0) {
    r.lower_slope = r.upper_slope = 0;
  } else {
    r.upper_slope = hi / (hi - lo);
    r.upper_const = -r.upper_slope * lo;
    r.lower_slope = (hi >= -lo) ? 1.0 : 0.0;  // identity/zero by sign of bounds
    r.relaxed = true;
  }
  return r;
}

const Phase* forced_phase(const PhaseMap& phases, int node, int slot) {
  auto it = phases.find({node, slot});
  return it == phases.end() ? nullptr : &it->second;
}

struct IntervalState {
  std::vector<Interval> node;
  bool infeasible = false;
};

void compute_node_interval(const Network& net, const BoxBounds& box, const PhaseMap& phases,
                           IntervalState& st, int i) {
  {
    const Node& n = net.nodes[i];
    Interval& iv = st.node[i];
    switch (n.kind) {
      case NodeKind::Input:
        iv = {box.lo, box.hi};
        break;
      case NodeKind::Affine: {
        const int in_w = source_width_sum(net, n);
        Vec c(in_w), r(in_w);
        int at = 0;
        for (int s : n.sources) {
          const int w = net.nodes[s].width;
          c.segment(at, w) = 0.5 * (st.node[s].lo + st.node[s].hi);
          r.segment(at, w) = 0.5 * (st.node[s].hi - st.node[s].lo);
          at += w;
        }
        const Vec mid = n.weights * c + n.bias;
        const Vec rad = n.weights.cwiseAbs() * r;
        iv = {mid - rad, mid + rad};
        break;
      }
      case NodeKind::Relu: {
        const Interval& pre = st.node[n.sources[0]];
        iv.lo = Vec(n.width);
        iv.hi = Vec(n.width);
        for (int j = 0; j < n.width; ++j) {
          double lo, hi;
          if (!effective_pre(pre.lo[j], pre.hi[j], forced_phase(phases, i, j), lo, hi)) {
            st.infeasible = true;
            lo = hi = 0;
          }
          const Phase* f = forced_phase(phases, i, j);
          if (f && *f == Phase::Off) {
            iv.lo[j] = iv.hi[j] = 0;
          } else {
            iv.lo[j] = std::max(lo, 0.0);
            iv.hi[j] = std::max(hi, 0.0);
          }
        }
        break;
      }
      case NodeKind::Copy:
        iv = st.node[n.sources[0]];
        break;
      case NodeKind::ConstantFix:
        iv = {n.value, n.value};
        break;
      case NodeKind::Concat: {
        iv.lo = Vec(n.width);
        iv.hi = Vec(n.width);
        int at = 0;
        for (int s : n.sources) {
          const int w = net.nodes[s].width;
          iv.lo.segment(at, w) = st.node[s].lo;
          iv.hi.segment(at, w) = st.node[s].hi;
          at += w;
        }
        break;
      }
      case NodeKind::Subtract:
        iv.lo = st.node[n.sources[0]].lo - st.node[n.sources[1]].hi;
        iv.hi = st.node[n.sources[0]].hi - st.node[n.sources[1]].lo;
        break;
    }
  }
}

IntervalState interval_pass(const Network& net, const BoxBounds& box, const PhaseMap& phases) {
  IntervalState st;
  st.node.resize(net.nodes.size());
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    compute_node_interval(net, box, phases, st, i);
  }
  return st;
}

struct BackwardResult {
  Mat lower_in;   // rows x input_dim
  Mat upper_in;
  Vec lower_const;
  Vec upper_const;
  bool exact = true;
};

// Backward linear-relaxation pass from `target` with initial coefficient
// matrix A0 (rows x width(target)). `bounds` must already hold sound
// intervals for every node preceding target.
BackwardResult backward_from(const Network& net, int target, const Mat& A0,
                             const PhaseMap& phases, const std::vector<Interval>& bounds) {
  const int rows = static_cast<int>(A0.rows());
  std::vector<std::optional<Mat>> low(net.nodes.size()), up(net.nodes.size());
  BackwardResult out;
  out.lower_const = Vec::Zero(rows);
  out.upper_const = Vec::Zero(rows);
  out.lower_in = Mat::Zero(rows, net.input_dim());
  out.upper_in = Mat::Zero(rows, net.input_dim());
  low[target] = A0;
  up[target] = A0;

  auto add_to = [&](std::optional<Mat>& dst, const Mat& m) {
    if (dst) {
      *dst += m;
    } else {
      dst = m;
    }
  };

  for (int i = target; i >= 0; --i) {
    if (!low[i]) continue;
    Mat Al = std::move(*low[i]);
    Mat Au = std::move(*up[i]);
    low[i].reset();
    up[i].reset();
    const Node& n = net.nodes[i];
    switch (n.kind) {
      case NodeKind::Input:
        out.lower_in += Al;
        out.upper_in += Au;
        break;
      case NodeKind::Affine: {
        out.lower_const += Al * n.bias;
        out.upper_const += Au * n.bias;
        int at = 0;
        for (int s : n.sources) {
          const int w = net.nodes[s].width;
          add_to(low[s], Al * n.weights.middleCols(at, w));
          add_to(up[s], Au * n.weights.middleCols(at, w));
          at += w;
        }
        break;
      }
      case NodeKind::Relu: {
        const int s = n.sources[0];
        const Interval& pre = bounds[s];
        Mat nl = Mat::Zero(rows, n.width);
        Mat nu = Mat::Zero(rows, n.width);
        for (int j = 0; j < n.width; ++j) {
          double lo, hi;
          const Phase* f = forced_phase(phases, i, j);
          if (!effective_pre(pre.lo[j], pre.hi[j], f, lo, hi)) {
            lo = hi = 0;  // infeasible slot; caller discards via interval pass
          }
          ReluRelax rx = f ? ReluRelax{*f == Phase::On ? 1.0 : 0.0,
                                       *f == Phase::On ? 1.0 : 0.0, 0.0, false}
                           : relax_slot(lo, hi);
          if (rx.relaxed) out.exact = false;
          for (int r = 0; r < rows; ++r) {
            const double al = Al(r, j);
            if (al >= 0) {
              nl(r, j) += al * rx.lower_slope;
            } else {
              nl(r, j) += al * rx.upper_slope;
              out.lower_const[r] += al * rx.upper_const;
            }
            const double au = Au(r, j);
            if (au >= 0) {
              nu(r, j) += au * rx.upper_slope;
              out.upper_const[r] += au * rx.upper_const;
            } else {
              nu(r, j) += au * rx.lower_slope;
            }
          }
        }
        add_to(low[s], nl);
        add_to(up[s], nu);
        break;
      }
      case NodeKind::Copy:
        add_to(low[n.sources[0]], Al);
        add_to(up[n.sources[0]], Au);
        break;
      case NodeKind::ConstantFix:
        out.lower_const += Al * n.value;
        out.upper_const += Au * n.value;
        break;
      case NodeKind::Concat: {
        int at = 0;
        for (int s : n.sources) {
          const int w = net.nodes[s].width;
          add_to(low[s], Al.middleCols(at, w));
          add_to(up[s], Au.middleCols(at, w));
          at += w;
        }
        break;
      }
      case NodeKind::Subtract:
        add_to(low[n.sources[0]], Al);
        add_to(up[n.sources[0]], Au);
        add_to(low[n.sources[1]], -Al);
        add_to(up[n.sources[1]], -Au);
        break;
    }
  }
  return out;
}

void extremize(const BackwardResult& b, const BoxBounds& box, Vec& lo, Vec& hi) {
  const Vec c = box.center();
  const Vec r = box.halfwidth();
  lo = b.lower_in * c - b.lower_in.cwiseAbs() * r + b.lower_const;
  hi = b.upper_in * c + b.upper_in.cwiseAbs() * r + b.upper_const;
}

}  // namespace

NodeBounds interval_forward(const Network& net, const BoxBounds& box) {
  NodeBounds nb;
  nb.node = interval_pass(net, box, {}).node;
  return nb;
}

namespace detail {

Analysis analyze(const Network& net, const BoxBounds& box, const PhaseMap& phases,
                 const NodeBounds* parent, bool tighten_all) {
  // Nodes worth a backward pass: ReLU pre-activations drive relaxations
  // and branching; everything else keeps its interval enclosure.
  std::vector<bool> tighten(net.nodes.size(), tighten_all);
  for (const Node& n : net.nodes) {
    if (n.kind == NodeKind::Relu) tighten[n.sources[0]] = true;
  }
  tighten[net.output_node] = true;

  Analysis a;
  IntervalState st;
  st.node.resize(net.nodes.size());
  for (int i = 0; i < static_cast<int>(net.nodes.size()) && !a.infeasible; ++i) {
    compute_node_interval(net, box, phases, st, i);
    if (st.infeasible) {
      a.infeasible = true;
      break;
    }
    const Node& n = net.nodes[i];
    Interval& iv = st.node[i];
    if (tighten[i] && n.kind != NodeKind::Input && n.kind != NodeKind::ConstantFix) {
      BackwardResult b = backward_from(net, i, Mat::Identity(n.width, n.width), phases, st.node);
      Vec lo, hi;
      extremize(b, box, lo, hi);
      iv.lo = iv.lo.cwiseMax(lo);
      iv.hi = iv.hi.cwiseMin(hi);
    }
    if (parent && n.kind != NodeKind::Input) {
      iv.lo = iv.lo.cwiseMax(parent->node[i].lo);
      iv.hi = iv.hi.cwiseMin(parent->node[i].hi);
    }
    for (int j = 0; j < n.width; ++j) {
      if (iv.lo[j] > iv.hi[j]) {
        if (iv.lo[j] - iv.hi[j] > 1e-9) {
          a.infeasible = true;
          break;
        }
        const double mid = 0.5 * (iv.lo[j] + iv.hi[j]);
        iv.lo[j] = iv.hi[j] = mid;
      }
    }
  }
  a.bounds.node = std::move(st.node);
  return a;
}

LinearBound bound_output_row(const Network& net, const BoxBounds& box, const PhaseMap& phases,
                             const NodeBounds& bounds, const Vec& coeffs, double constant) {
  Mat A0 = coeffs.transpose();
  BackwardResult b = backward_from(net, net.output_node, A0, phases, bounds.node);
  Vec lo, hi;
  extremize(b, box, lo, hi);
  LinearBound lb;
  lb.lower_coeffs = b.lower_in.row(0).transpose();
  lb.lower_const = b.lower_const[0] + constant;
  lb.upper_coeffs = b.upper_in.row(0).transpose();
  lb.upper_const = b.upper_const[0] + constant;
  lb.lower = lo[0] + constant;
  lb.upper = hi[0] + constant;
  lb.exact = b.exact;
  lb.upper_argmax = Vec(net.input_dim());
  for (int i = 0; i < net.input_dim(); ++i) {
    lb.upper_argmax[i] = lb.upper_coeffs[i] >= 0 ? box.hi[i] : box.lo[i];
  }
  return lb;
}

std::vector<std::pair<int, int>> unstable_relus(const Network& net, const NodeBounds& bounds,
                                                const PhaseMap& phases) {
  std::vector<std::tuple<double, int, int>> found;
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    const Node& n = net.nodes[i];
    if (n.kind != NodeKind::Relu) continue;
    const Interval& pre = bounds.node[n.sources[0]];
    for (int j = 0; j < n.width; ++j) {
      if (forced_phase(phases, i, j)) continue;
      if (pre.lo[j] < 0.0 && pre.hi[j] > 0.0) {
        found.emplace_back(pre.hi[j] - pre.lo[j], i, j);
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::pair<int, int>> out;
  out.reserve(found.size());
  for (const auto& [w, node, slot] : found) out.emplace_back(node, slot);
  return out;
}

}  // namespace detail

NodeBounds bound_propagate(const Network& net, const BoxBounds& box) {
  detail::Analysis a = detail::analyze(net, box, {}, nullptr, /*tighten_all=*/true);
  return a.bounds;
}

}  // namespace circuits
