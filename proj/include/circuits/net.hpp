#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace circuits {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base error for all library failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised on malformed user input (dimension mismatches, bad arguments).
struct InputError : Error {
  using Error::Error;
};

enum class NodeKind {
  Input,
  Affine,
  Relu,
  Copy,
  ConstantFix,
  Concat,
  Subtract,
};

const char* node_kind_name(NodeKind kind);

/// One vertex of the computation DAG. Affine nodes may read several
/// sources; their weight columns span the concatenated source outputs.
struct Node {
  NodeKind kind = NodeKind::Input;
  int width = 0;
  std::vector<int> sources;
  Mat weights;  // Affine: width x sum(source widths)
  Vec bias;     // Affine: width
  Vec value;    // ConstantFix: width
};

/// Identifies one named component (hidden neuron or gate) of a network.
/// Natural order is (layer, unit); discovery orderings derive from it.
struct ComponentId {
  int layer = 0;
  int unit = 0;
  auto operator<=>(const ComponentId&) const = default;
};

std::string to_string(const ComponentId& id);

/// The slice of a node's post-activation output owned by a component.
struct ComponentSite {
  int node = -1;
  int offset = 0;
  int width = 1;
};

struct Component {
  ComponentId id;
  std::string name;
  ComponentSite site;
};

/// Per-node output vectors recorded during one forward pass.
struct Activations {
  std::vector<Vec> values;
};

/// A feedforward piecewise-linear network as an immutable computation DAG.
/// Nodes are stored in topological order; node 0 is the input. Construct
/// via the builders in models.hpp or deserialize, then treat as read-only:
/// forward and input_gradient are pure and safe to share across threads.
class Network {
 public:
  std::vector<Node> nodes;
  int input_node = 0;
  int output_node = 0;
  std::vector<Component> components;

  int input_dim() const { return nodes.at(input_node).width; }
  int output_dim() const { return nodes.at(output_node).width; }

  const Component& component(const ComponentId& id) const;
  const Component* find_component(const std::string& name) const;

  /// Checks DAG ordering, source indices, widths and parameter shapes.
  /// Throws InputError naming the offending node.
  void validate() const;
};

int source_width_sum(const Network& net, const Node& node);

/// Exact forward evaluation. Records every node output into acts when given.
Vec forward(const Network& net, const Vec& x, Activations* acts = nullptr);

/// d(output_weights . f(x))/dx by reverse-mode accumulation.
/// ReLU subgradient at 0 is fixed to 0.
Vec input_gradient(const Network& net, const Vec& x, const Vec& output_weights);

}  // namespace circuits
