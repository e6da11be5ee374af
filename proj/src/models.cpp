#include "circuits/models.hpp"

#include <cmath>
#include <random>

namespace circuits {

namespace {

int add_node(Network& net, Node node) {
  net.nodes.push_back(std::move(node));
  return static_cast<int>(net.nodes.size()) - 1;
}

Node affine(std::vector<int> sources, Mat w, Vec b) {
  Node n;
  n.kind = NodeKind::Affine;
  n.width = static_cast<int>(w.rows());
  n.sources = std::move(sources);
  n.weights = std::move(w);
  n.bias = std::move(b);
  return n;
}

Node relu(int source, int width) {
  Node n;
  n.kind = NodeKind::Relu;
  n.width = width;
  n.sources = {source};
  return n;
}

// a xor b over {0,1} values: relu(a-b) + relu(b-a).
int add_xor_gadget(Network& net, int a, int b) {
  Mat pre(2, 2);
  pre << 1, -1, -1, 1;
  const int p = add_node(net, affine({a, b}, pre, Vec::Zero(2)));
  const int r = add_node(net, relu(p, 2));
  Mat sum(1, 2);
  sum << 1, 1;
  return add_node(net, affine({r}, sum, Vec::Zero(1)));
}

}  // namespace

Network build_xor_toy() {
  Network net;
  Node in;
  in.kind = NodeKind::Input;
  in.width = 2;
  add_node(net, std::move(in));

  auto pick = [&](double wx1, double wx2) {
    Mat w(1, 2);
    w << wx1, wx2;
    return add_node(net, affine({0}, w, Vec::Zero(1)));
  };

  const int v1 = pick(0, 1);  // x2
  const int v2 = pick(1, 0);  // x1
  const int v3 = pick(1, 0);  // x1

  auto xor_of_inputs = [&](double a1, double a2, double b1, double b2) {
    Mat pre(2, 2);
    pre << a1 - b1, a2 - b2, b1 - a1, b2 - a2;
    const int p = add_node(net, affine({0}, pre, Vec::Zero(2)));
    const int r = add_node(net, relu(p, 2));
    Mat sum(1, 2);
    sum << 1, 1;
    return add_node(net, affine({r}, sum, Vec::Zero(1)));
  };

  const int v4 = xor_of_inputs(1, 0, 0, 1);  // x1 xor x2
  const int v5 = xor_of_inputs(1, 0, 0, 1);  // x1 xor x2
  const int v6 = xor_of_inputs(0, 1, 0, 1);  // x2 xor x2 == 0

  int acc = add_xor_gadget(net, v1, v2);
  for (int gate : {v3, v4, v5, v6}) acc = add_xor_gadget(net, acc, gate);
  net.output_node = acc;

  const int gates[6] = {v1, v2, v3, v4, v5, v6};
  for (int i = 0; i < 6; ++i) {
    net.components.push_back({{1, i}, "v" + std::to_string(i + 1), {gates[i], 0, 1}});
  }
  net.validate();
  return net;
}

Network build_counterexample(int m) {
  if (m < 1) throw InputError("counterexample: m must be >= 1");
  Network net;
  Node in;
  in.kind = NodeKind::Input;
  in.width = 1;
  add_node(net, std::move(in));

  const int pre = add_node(net, affine({0}, Mat::Ones(2 * m, 1), Vec::Zero(2 * m)));
  const int hidden = add_node(net, relu(pre, 2 * m));
  const int ident = add_node(net, affine({0}, Mat::Ones(1, 1), Vec::Zero(1)));

  Mat agg(1, 2 * m + 1);
  for (int i = 0; i < m; ++i) agg(0, i) = 1;
  for (int i = m; i < 2 * m; ++i) agg(0, i) = -1;
  agg(0, 2 * m) = 1;
  const int out = add_node(net, affine({hidden, ident}, agg, Vec::Zero(1)));
  net.output_node = out;

  for (int i = 0; i < m; ++i) {
    net.components.push_back({{1, i}, "p" + std::to_string(i + 1), {hidden, i, 1}});
  }
  for (int i = 0; i < m; ++i) {
    net.components.push_back({{1, m + i}, "q" + std::to_string(i + 1), {hidden, m + i, 1}});
  }
  net.components.push_back({{1, 2 * m}, "v3", {ident, 0, 1}});
  net.components.push_back({{2, 0}, "v4", {out, 0, 1}});
  net.validate();
  return net;
}

Network build_mlp(const std::vector<Mat>& weights, const std::vector<Vec>& biases) {
  if (weights.empty() || weights.size() != biases.size()) {
    throw InputError("build_mlp: need matching weight/bias lists");
  }
  Network net;
  Node in;
  in.kind = NodeKind::Input;
  in.width = static_cast<int>(weights[0].cols());
  add_node(net, std::move(in));

  int prev = 0;
  for (size_t layer = 0; layer < weights.size(); ++layer) {
    const int lin = add_node(net, affine({prev}, weights[layer], biases[layer]));
    if (layer + 1 < weights.size()) {
      const int act = add_node(net, relu(lin, static_cast<int>(weights[layer].rows())));
      for (int u = 0; u < net.nodes[act].width; ++u) {
        const int l = static_cast<int>(layer) + 1;
        net.components.push_back(
            {{l, u}, "n" + std::to_string(l) + "_" + std::to_string(u), {act, u, 1}});
      }
      prev = act;
    } else {
      prev = lin;
    }
  }
  net.output_node = prev;
  net.validate();
  return net;
}

Network build_random_mlp(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw InputError("random_mlp: need at least input and output dims");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Mat> ws;
  std::vector<Vec> bs;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    Mat w(dims[i + 1], dims[i]);
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * normal(rng);
    }
    Vec b(dims[i + 1]);
    for (int r = 0; r < b.size(); ++r) b[r] = 0.1 * normal(rng);
    ws.push_back(std::move(w));
    bs.push_back(std::move(b));
  }
  return build_mlp(ws, bs);
}

Dataset two_cluster_data(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.inputs = Mat(count, 2);
  d.labels.resize(count);
  // Two diagonal clusters in [0,1]^2, mild overlap.
  for (int i = 0; i < count; ++i) {
    const int label = static_cast<int>(rng() & 1u);
    const double cx = label == 0 ? 0.3 : 0.7;
    const double cy = label == 0 ? 0.3 : 0.7;
    d.inputs(i, 0) = cx + 0.09 * normal(rng);
    d.inputs(i, 1) = cy + 0.09 * normal(rng);
    d.labels[i] = label;
  }
  return d;
}

TrainResult train_tiny(const std::vector<int>& dims, std::uint64_t data_seed,
                       std::uint64_t init_seed, int epochs, double learning_rate) {
  if (dims.size() < 2 || dims.front() != 2) {
    throw InputError("train_tiny: dims must start with input width 2");
  }
  const int classes = dims.back();
  const Dataset train = two_cluster_data(data_seed, 200);
  const Dataset held_out = two_cluster_data(data_seed + 1, 200);

  std::mt19937_64 rng(init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Mat> ws;
  std::vector<Vec> bs;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    Mat w(dims[i + 1], dims[i]);
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * normal(rng);
    }
    ws.push_back(std::move(w));
    bs.push_back(Vec::Zero(dims[i + 1]));
  }

  const int n = static_cast<int>(train.inputs.rows());
  const size_t layers = ws.size();
  double loss = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<Mat> grad_w(layers);
    std::vector<Vec> grad_b(layers);
    for (size_t l = 0; l < layers; ++l) {
      grad_w[l] = Mat::Zero(ws[l].rows(), ws[l].cols());
      grad_b[l] = Vec::Zero(bs[l].size());
    }
    loss = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<Vec> post(layers + 1);
      std::vector<Vec> pre(layers);
      post[0] = train.inputs.row(i).transpose();
      for (size_t l = 0; l < layers; ++l) {
        pre[l] = ws[l] * post[l] + bs[l];
        post[l + 1] = (l + 1 < layers) ? pre[l].cwiseMax(0.0).eval() : pre[l];
      }
      Vec logits = post[layers];
      const double zmax = logits.maxCoeff();
      Vec ex = (logits.array() - zmax).exp();
      Vec prob = ex / ex.sum();
      loss -= std::log(std::max(prob[train.labels[i]], 1e-300));

      Vec delta = prob;
      delta[train.labels[i]] -= 1.0;
      for (int l = static_cast<int>(layers) - 1; l >= 0; --l) {
        grad_w[l] += delta * post[l].transpose();
        grad_b[l] += delta;
        if (l > 0) {
          Vec back = ws[l].transpose() * delta;
          for (int j = 0; j < back.size(); ++j) {
            if (pre[l - 1][j] <= 0.0) back[j] = 0.0;
          }
          delta = back;
        }
      }
    }
    loss /= n;
    if (!std::isfinite(loss)) throw Error("train_tiny: loss diverged");
    for (size_t l = 0; l < layers; ++l) {
      ws[l] -= (learning_rate / n) * grad_w[l];
      bs[l] -= (learning_rate / n) * grad_b[l];
    }
  }

  Network net = build_mlp(ws, bs);
  auto accuracy = [&](const Dataset& d) {
    int hits = 0;
    for (int i = 0; i < d.inputs.rows(); ++i) {
      Vec y = forward(net, d.inputs.row(i).transpose());
      int arg = 0;
      y.maxCoeff(&arg);
      if (arg == d.labels[i] % classes) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(d.inputs.rows());
  };
  TrainResult result;
  result.train_accuracy = accuracy(train);
  result.test_accuracy = accuracy(held_out);
  result.final_loss = loss;
  result.net = std::move(net);
  return result;
}

Network build_model(const ModelSpec& spec) {
  if (spec.name == "xor_toy") return build_xor_toy();
  if (spec.name == "counterexample") return build_counterexample(spec.m);
  if (spec.name == "random_mlp") return build_random_mlp(spec.dims, spec.seed);
  if (spec.name == "trained_mlp") {
    return train_tiny(spec.dims, spec.data_seed, spec.seed, spec.epochs).net;
  }
  throw InputError("unknown model '" + spec.name + "'");
}

}  // namespace circuits
