#pragma once

#include "circuits/net.hpp"

#include <cstdint>
#include <vector>

namespace circuits {

/// Boolean toy network: six named gates v1..v6 over (x1,x2), aggregated by
/// a cascade of ReLU-realized XORs. Computes x2 on all four Boolean inputs.
Network build_xor_toy();

/// One-dimensional network f(x) = x with m cancelling ReLU pairs:
/// components p1..pm, q1..qm, v3 (identity) and the output v4.
Network build_counterexample(int m);

/// Seeded dense ReLU MLP; every hidden neuron is one component.
Network build_random_mlp(const std::vector<int>& dims, std::uint64_t seed);

/// Builds a dense MLP from explicit layer parameters (weights[i]: layer i).
Network build_mlp(const std::vector<Mat>& weights, const std::vector<Vec>& biases);

struct Dataset {
  Mat inputs;               // one row per sample
  std::vector<int> labels;  // class per sample
};

/// Two-cluster synthetic 2-D data, deterministic per seed.
Dataset two_cluster_data(std::uint64_t seed, int count);

struct TrainResult {
  Network net;
  double train_accuracy = 0;
  double test_accuracy = 0;
  double final_loss = 0;
};

/// Full-batch gradient descent on softmax cross-entropy over synthetic
/// two-cluster data. Deterministic given seeds; errors on divergence.
TrainResult train_tiny(const std::vector<int>& dims, std::uint64_t data_seed,
                       std::uint64_t init_seed, int epochs, double learning_rate = 0.5);

struct ModelSpec {
  std::string name;              // xor_toy | counterexample | random_mlp | trained_mlp
  int m = 1;                     // counterexample
  std::vector<int> dims;         // mlp variants
  std::uint64_t seed = 0;        // random_mlp init / trained_mlp init
  std::uint64_t data_seed = 0;   // trained_mlp
  int epochs = 300;              // trained_mlp
};

/// Deterministic model construction per (name, params, seed).
Network build_model(const ModelSpec& spec);

}  // namespace circuits
