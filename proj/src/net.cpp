#include "circuits/net.hpp"

#include <algorithm>
#include <sstream>

namespace circuits {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Input: return "input";
    case NodeKind::Affine: return "affine";
    case NodeKind::Relu: return "relu";
    case NodeKind::Copy: return "copy";
    case NodeKind::ConstantFix: return "constant_fix";
    case NodeKind::Concat: return "concat";
    case NodeKind::Subtract: return "subtract";
  }
  return "?";
}

std::string to_string(const ComponentId& id) {
  return "(" + std::to_string(id.layer) + "," + std::to_string(id.unit) + ")";
}

const Component& Network::component(const ComponentId& id) const {
  for (const auto& c : components) {
    if (c.id == id) return c;
  }
  throw InputError("unknown component " + to_string(id));
}

const Component* Network::find_component(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

int source_width_sum(const Network& net, const Node& node) {
  int total = 0;
  for (int s : node.sources) total += net.nodes.at(s).width;
  return total;
}

namespace {

[[noreturn]] void node_error(int index, const std::string& what) {
  throw InputError("node " + std::to_string(index) + ": " + what);
}

}  // namespace

void Network::validate() const {
  if (nodes.empty()) throw InputError("network has no nodes");
  if (input_node < 0 || input_node >= static_cast<int>(nodes.size()) ||
      nodes[input_node].kind != NodeKind::Input) {
    throw InputError("input_node does not name an input node");
  }
  if (output_node < 0 || output_node >= static_cast<int>(nodes.size())) {
    throw InputError("output_node out of range");
  }
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const Node& n = nodes[i];
    if (n.width <= 0) node_error(i, "non-positive width");
    for (int s : n.sources) {
      if (s < 0 || s >= i) node_error(i, "source " + std::to_string(s) + " does not precede node");
    }
    switch (n.kind) {
      case NodeKind::Input:
        if (!n.sources.empty()) node_error(i, "input node with sources");
        break;
      case NodeKind::Affine: {
        if (n.sources.empty()) node_error(i, "affine node without sources");
        const int in_w = source_width_sum(*this, n);
        if (n.weights.rows() != n.width || n.weights.cols() != in_w) {
          std::ostringstream os;
          os << "weight matrix shape " << n.weights.rows() << "x" << n.weights.cols()
             << ", expected " << n.width << "x" << in_w;
          node_error(i, os.str());
        }
        if (n.bias.size() != n.width) node_error(i, "bias length mismatch");
        if (!n.weights.allFinite() || !n.bias.allFinite()) node_error(i, "non-finite parameters");
        break;
      }
      case NodeKind::Relu:
      case NodeKind::Copy:
        if (n.sources.size() != 1) node_error(i, "expects exactly one source");
        if (nodes[n.sources[0]].width != n.width) node_error(i, "width differs from source");
        break;
      case NodeKind::ConstantFix:
        if (n.value.size() != n.width) node_error(i, "constant value length mismatch");
        if (!n.value.allFinite()) node_error(i, "non-finite constant");
        break;
      case NodeKind::Concat:
        if (n.sources.empty()) node_error(i, "concat node without sources");
        if (source_width_sum(*this, n) != n.width) node_error(i, "concat width mismatch");
        break;
      case NodeKind::Subtract:
        if (n.sources.size() != 2) node_error(i, "subtract expects two sources");
        if (nodes[n.sources[0]].width != n.width || nodes[n.sources[1]].width != n.width) {
          node_error(i, "subtract width mismatch");
        }
        break;
    }
  }
  for (const auto& c : components) {
    const auto& site = c.site;
    if (site.node < 0 || site.node >= static_cast<int>(nodes.size())) {
      throw InputError("component " + c.name + ": site node out of range");
    }
    if (site.offset < 0 || site.width <= 0 ||
        site.offset + site.width > nodes[site.node].width) {
      throw InputError("component " + c.name + ": site slice out of range");
    }
    for (const auto& other : components) {
      if (&other != &c && other.id == c.id) {
        throw InputError("duplicate component id " + to_string(c.id));
      }
    }
  }
}

namespace {

Vec gather_sources(const Network& net, const Node& node, const std::vector<Vec>& vals) {
  if (node.sources.size() == 1) return vals[node.sources[0]];
  Vec in(source_width_sum(net, node));
  int at = 0;
  for (int s : node.sources) {
    in.segment(at, vals[s].size()) = vals[s];
    at += static_cast<int>(vals[s].size());
  }
  return in;
}

}  // namespace

Vec forward(const Network& net, const Vec& x, Activations* acts) {
  if (x.size() != net.input_dim()) {
    throw InputError("forward: input has length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(net.input_dim()));
  }
  std::vector<Vec> vals(net.nodes.size());
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    const Node& n = net.nodes[i];
    switch (n.kind) {
      case NodeKind::Input:
        vals[i] = x;
        break;
      case NodeKind::Affine:
        vals[i] = n.weights * gather_sources(net, n, vals) + n.bias;
        break;
      case NodeKind::Relu:
        vals[i] = vals[n.sources[0]].cwiseMax(0.0);
        break;
      case NodeKind::Copy:
        vals[i] = vals[n.sources[0]];
        break;
      case NodeKind::ConstantFix:
        vals[i] = n.value;
        break;
      case NodeKind::Concat:
        vals[i] = gather_sources(net, n, vals);
        break;
      case NodeKind::Subtract:
        vals[i] = vals[n.sources[0]] - vals[n.sources[1]];
        break;
    }
  }
  Vec out = vals[net.output_node];
  if (acts) acts->values = std::move(vals);
  return out;
}

Vec input_gradient(const Network& net, const Vec& x, const Vec& output_weights) {
  if (output_weights.size() != net.output_dim()) {
    throw InputError("input_gradient: output_weights length mismatch");
  }
  Activations acts;
  forward(net, x, &acts);

  std::vector<Vec> bar(net.nodes.size());
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    bar[i] = Vec::Zero(net.nodes[i].width);
  }
  bar[net.output_node] = output_weights;

  auto scatter = [&](const Node& n, const Vec& grad_in) {
    int at = 0;
    for (int s : n.sources) {
      const int w = net.nodes[s].width;
      bar[s] += grad_in.segment(at, w);
      at += w;
    }
  };

  for (int i = static_cast<int>(net.nodes.size()) - 1; i >= 0; --i) {
    const Node& n = net.nodes[i];
    if (bar[i].isZero(0.0)) continue;
    switch (n.kind) {
      case NodeKind::Input:
      case NodeKind::ConstantFix:
        break;
      case NodeKind::Affine:
        scatter(n, n.weights.transpose() * bar[i]);
        break;
      case NodeKind::Relu: {
        // Subgradient at 0 fixed to 0: strict positivity gates the flow.
        const Vec& pre = acts.values[n.sources[0]];
        Vec g = bar[i];
        for (int j = 0; j < g.size(); ++j) {
          if (pre[j] <= 0.0) g[j] = 0.0;
        }
        bar[n.sources[0]] += g;
        break;
      }
      case NodeKind::Copy:
        bar[n.sources[0]] += bar[i];
        break;
      case NodeKind::Concat:
        scatter(n, bar[i]);
        break;
      case NodeKind::Subtract:
        bar[n.sources[0]] += bar[i];
        bar[n.sources[1]] -= bar[i];
        break;
    }
  }
  return bar[net.input_node];
}

}  // namespace circuits
