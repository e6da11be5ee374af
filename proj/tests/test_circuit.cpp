#include "circuits/circuit.hpp"
#include "circuits/models.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace circuits;
using namespace circuits::testing;

TEST_CASE("the full circuit reproduces forward bit-exactly under any patch") {
  const Network net = build_random_mlp({2, 8, 2}, 3);
  Circuit full;
  full.members = all_components(net);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 25; ++i) {
    const Vec x = random_point(rng, 2);
    const Vec expect = forward(net, x);
    CHECK(masked_forward(net, full, PatchingScheme::zero(), x) == expect);
    CHECK(masked_forward(net, full, PatchingScheme::from(random_point(rng, 2)), x) == expect);
  }
}

TEST_CASE("xor toy: keeping only v1 still computes x2") {
  const Network net = build_xor_toy();
  Circuit c;
  c.members = {net.find_component("v1")->id};
  Vec x(2);
  x << 1, 0;
  CHECK(masked_forward(net, c, PatchingScheme::zero(), x)[0] == doctest::Approx(0.0));
  x << 1, 1;
  CHECK(masked_forward(net, c, PatchingScheme::zero(), x)[0] == doctest::Approx(1.0));
}

TEST_CASE("counterexample net: removing the cancelling pair preserves identity") {
  const Network net = build_counterexample(1);
  Circuit c;
  c.members = all_components(net);
  c.members.erase(net.find_component("p1")->id);
  c.members.erase(net.find_component("q1")->id);
  Vec x(1);
  x << 0.7;
  CHECK(masked_forward(net, c, PatchingScheme::zero(), x)[0] == doctest::Approx(0.7));
}

TEST_CASE("mean patch over a single sample equals that sample's activations") {
  const Network net = build_random_mlp({2, 8, 2}, 9);
  Vec x(2);
  x << 0.3, -0.4;
  Activations acts;
  forward(net, x, &acts);
  const auto means = mean_patch_values(net, {x});
  for (const auto& c : net.components) {
    const Vec expect = acts.values[c.site.node].segment(c.site.offset, c.site.width);
    CHECK(means.at(c.id) == expect);
  }
}

TEST_CASE("mean of relu over -1 and 1 is one half") {
  const Network net = relu_net();
  Vec a(1), b(1);
  a << -1;
  b << 1;
  const auto means = mean_patch_values(net, {a, b});
  CHECK(means.at(net.components[0].id)[0] == doctest::Approx(0.5));
}

TEST_CASE("mean patch matches an independent two-pass average") {
  const Network net = build_random_mlp({2, 10, 2}, 21);
  std::mt19937_64 rng(42);
  std::vector<Vec> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(random_point(rng, 2));
  const auto means = mean_patch_values(net, samples);
  // Oracle: accumulate per component in reverse order, divide at the end.
  for (const auto& c : net.components) {
    double sum = 0;
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
      Activations acts;
      forward(net, *it, &acts);
      sum += acts.values[c.site.node][c.site.offset];
    }
    CHECK(means.at(c.id)[0] == doctest::Approx(sum / 100.0).epsilon(1e-12));
  }
}

TEST_CASE("transplanting a point's own activations is a no-op") {
  const Network net = build_random_mlp({2, 8, 2}, 13);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    const Vec x = random_point(rng, 2);
    const Vec expect = forward(net, x);
    for (int trial = 0; trial < 5; ++trial) {
      Circuit c;
      c.members = random_member_subset(rng, net);
      const Vec got = masked_forward(net, c, PatchingScheme::from(x), x);
      CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("masked forward is deterministic and order independent") {
  const Network net = build_xor_toy();
  Circuit c;
  c.members = {net.find_component("v2")->id, net.find_component("v4")->id};
  Vec x(2);
  x << 1, 1;
  const Vec a = masked_forward(net, c, PatchingScheme::zero(), x);
  const Vec b = masked_forward(net, c, PatchingScheme::zero(), x);
  CHECK(a == b);
  CHECK(a[0] == doctest::Approx(1.0));  // v2 xor v4 == x2
}

TEST_CASE("error paths: transplant outside encodings, empty sample set") {
  const Network net = build_xor_toy();
  Circuit c;
  c.members = {net.find_component("v1")->id};
  Vec x(2);
  x << 0, 0;
  CHECK_THROWS_AS(masked_forward(net, c, PatchingScheme::transplant(), x), InputError);
  CHECK_THROWS_AS(mean_patch_values(net, {}), InputError);
}
