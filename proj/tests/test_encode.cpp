#include "circuits/encode.hpp"
#include "circuits/models.hpp"
#include "circuits/serialize.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <random>

using namespace circuits;
using namespace circuits::testing;

namespace {

Circuit circuit_of(const Network& net, const std::set<ComponentId>& members) {
  Circuit c;
  c.members = members;
  return c;
}

}  // namespace

TEST_CASE("input siamese with the full circuit yields two identical halves") {
  const Network net = build_random_mlp({2, 8, 2}, 31);
  const auto q = build_input_siamese(net, circuit_of(net, all_components(net)),
                                     PatchingScheme::zero(),
                                     InputRegion::ball(Vec::Zero(2), 0.1), Metric::abs_max(0));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vec x = random_point(rng, 2);
    const Vec y = forward(q.net, x);
    REQUIRE(y.size() == 4);
    CHECK(y.head(2) == y.tail(2));
  }
}

TEST_CASE("input siamese of the xor toy with only v1 outputs x2 on both branches") {
  const Network net = build_xor_toy();
  Circuit c;
  c.members = {net.find_component("v1")->id};
  Vec anchor(2);
  anchor << 1, 1;
  const auto q = build_input_siamese(net, c, PatchingScheme::zero(),
                                     InputRegion::ball(anchor, 0.0), Metric::abs_max(0));
  const Vec y = forward(q.net, anchor);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(1.0));
}

TEST_CASE("input siamese composition matches forward plus masked_forward") {
  std::mt19937_64 rng(77);
  const Network net = build_random_mlp({2, 8, 2}, 41);
  for (int trial = 0; trial < 4; ++trial) {
    Circuit c;
    c.members = random_member_subset(rng, net);
    for (auto patch : {PatchingScheme::zero(),
                       PatchingScheme::mean(mean_patch_values(net, {random_point(rng, 2)}))}) {
      const auto q = build_input_siamese(net, c, patch, InputRegion::ball(Vec::Zero(2), 0.1),
                                         Metric::abs_max(0.5));
      for (int i = 0; i < 50; ++i) {
        const Vec x = random_point(rng, 2);
        const Vec y = forward(q.net, x);
        const Vec expect_model = forward(net, x);
        const Vec expect_circuit = masked_forward(net, c, patch, x);
        CHECK((y.head(2) - expect_model).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((y.tail(2) - expect_circuit).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }
}

TEST_CASE("input siamese stays within twice the node count") {
  const Network net = build_random_mlp({2, 16, 8, 2}, 51);
  std::mt19937_64 rng(9);
  Circuit c;
  c.members = random_member_subset(rng, net);
  const auto q = build_input_siamese(net, c, PatchingScheme::zero(),
                                     InputRegion::ball(Vec::Zero(2), 0.1), Metric::abs_max(0));
  CHECK(q.net.nodes.size() <= 2 * net.nodes.size() + 4);
}

TEST_CASE("input siamese rejects non-constant patching") {
  const Network net = build_xor_toy();
  Circuit c;
  c.members = all_components(net);
  CHECK_THROWS_AS(build_input_siamese(net, c, PatchingScheme::from(Vec::Zero(2)),
                                      InputRegion::ball(Vec::Zero(2), 0.1), Metric::abs_max(0)),
                  InputError);
}

TEST_CASE("patching siamese on a point region reproduces the clean forward") {
  const Network net = build_random_mlp({2, 8, 2}, 61);
  std::mt19937_64 rng(11);
  Vec x_ref(2);
  x_ref << 0.2, -0.1;
  for (int trial = 0; trial < 5; ++trial) {
    Circuit c;
    c.members = random_member_subset(rng, net);
    const auto q = build_patching_siamese(net, c, x_ref, InputRegion::ball(x_ref, 0.0),
                                          Metric::abs_max(0));
    const Vec y = forward(q.net, x_ref);
    const Vec expect = forward(net, x_ref);
    CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(q.wiring.reference.has_value());
    CHECK((*q.wiring.reference - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("patching siamese composition matches masked_forward with transplants") {
  const Network net = build_random_mlp({2, 8, 2}, 71);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Circuit c;
    c.members = random_member_subset(rng, net);
    const Vec x_ref = random_point(rng, 2);
    const auto q = build_patching_siamese(net, c, x_ref, InputRegion::ball(Vec::Zero(2), 1.0),
                                          Metric::abs_max(0.5));
    for (int i = 0; i < 50; ++i) {
      const Vec z = random_point(rng, 2);
      const Vec y = forward(q.net, z);
      const Vec expect = masked_forward(net, c, PatchingScheme::from(z), x_ref);
      CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("tripled siamese composition on a sampled grid") {
  const Network net = build_random_mlp({2, 6, 2}, 81);
  std::mt19937_64 rng(17);
  Vec anchor(2);
  anchor << 0.1, 0.2;
  for (int trial = 0; trial < 5; ++trial) {
    Circuit c;
    c.members = random_member_subset(rng, net);
    const auto q = build_tripled_siamese(net, c, anchor, 0.05, 0.08, Metric::abs_max(0.5));
    CHECK(q.z_subset_zprime);
    for (int i = 0; i < 50; ++i) {
      const Vec zprime = anchor + 0.08 * random_point(rng, 2);
      const Vec z = anchor + 0.05 * random_point(rng, 2);
      Vec in(4);
      in << zprime, z;
      const Vec y = forward(q.net, in);
      const Vec expect_model = forward(net, z);
      const Vec expect_circuit = masked_forward(net, c, PatchingScheme::from(zprime), z);
      CHECK((y.head(2) - expect_model).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((y.tail(2) - expect_circuit).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("tripled siamese with zero radii reduces to a point identity") {
  const Network net = build_random_mlp({2, 6, 2}, 91);
  Vec anchor(2);
  anchor << -0.2, 0.4;
  Circuit c;
  c.members = {net.components[0].id, net.components[3].id};
  const auto q = build_tripled_siamese(net, c, anchor, 0.0, 0.0, Metric::abs_max(0));
  Vec in(4);
  in << anchor, anchor;
  const Vec y = forward(q.net, in);
  CHECK((y.head(2) - y.tail(2)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tripled siamese with the full circuit equates branches everywhere") {
  const Network net = build_random_mlp({2, 6, 2}, 95);
  Vec anchor = Vec::Zero(2);
  const auto q =
      build_tripled_siamese(net, circuit_of(net, all_components(net)), anchor, 0.1, 0.2,
                            Metric::abs_max(0));
  std::mt19937_64 rng(19);
  for (int i = 0; i < 20; ++i) {
    Vec in(4);
    in << random_point(rng, 2), random_point(rng, 2);
    const Vec y = forward(q.net, in);
    CHECK((y.head(2) - y.tail(2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("box-patching siamese feeds complement slots from input dimensions") {
  const Network net = build_random_mlp({2, 6, 2}, 97);
  std::mt19937_64 rng(23);
  Vec anchor(2);
  anchor << 0.0, 0.1;
  Circuit c;
  c.members = {net.components[1].id, net.components[4].id};
  const auto q = build_box_patching_siamese(net, c, anchor, 0.05, 0.1, Metric::abs_max(0.5));
  const auto patched = complement(net, c.members);
  REQUIRE(q.net.input_dim() == 2 + static_cast<int>(patched.size()));

  const BoxBounds box = materialize(q.region.boxes[0], q.net.input_dim());
  for (int i = 0; i < 30; ++i) {
    Vec in(q.net.input_dim());
    for (int d = 0; d < q.net.input_dim(); ++d) {
      std::uniform_real_distribution<double> uni(box.lo[d], box.hi[d]);
      in[d] = uni(rng);
    }
    // Oracle: a mean patch holding exactly the sampled slot values.
    std::map<ComponentId, Vec> values;
    int k = 2;
    for (const auto& id : patched) values[id] = in.segment(k++, 1);
    const Vec y = forward(q.net, in);
    const Vec z = in.head(2);
    const Vec expect_model = forward(net, z);
    const Vec expect_circuit = masked_forward(net, c, PatchingScheme::mean(values), z);
    CHECK((y.head(2) - expect_model).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((y.tail(2) - expect_circuit).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("queries and verdicts serialize") {
  const Network net = build_random_mlp({2, 6, 2}, 99);
  Circuit c;
  c.members = {net.components[0].id, net.components[2].id};
  Vec anchor(2);
  anchor << 0.1, -0.2;
  const auto q = build_tripled_siamese(net, c, anchor, 0.03, 0.06, Metric::logit_diff(1, 0.4));
  const std::string text = to_text(q);
  const SiameseQuery back = query_from_text(text);
  CHECK(to_text(back) == text);
  // The round-tripped query evaluates identically.
  Vec in(4);
  in << anchor, anchor;
  CHECK(forward(back.net, in) == forward(q.net, in));
  CHECK(constraint_rows(back, 0).size() == constraint_rows(q, 0).size());

  Verdict v;
  v.status = Status::Falsified;
  v.witness = in;
  v.violation = 0.25;
  const std::string record = to_text(v);
  CHECK(record.find("falsified") != std::string::npos);
}

TEST_CASE("winner-runner spec pins target, runner and margin from the clean input") {
  Mat W(2, 2);
  W << 1, 0, 0, 1;
  const Network net = build_mlp({W}, {Vec::Zero(2)});
  Circuit c;  // no hidden components in a single-layer net
  Vec anchor(2);
  anchor << 3.0, 1.0;
  const auto q = build_input_siamese(net, c, PatchingScheme::zero(),
                                     InputRegion::ball(anchor, 0.1),
                                     Metric::winner_runner(0.5));
  REQUIRE(q.spec.winner_runner.size() == 1);
  CHECK(q.spec.winner_runner[0].target == 0);
  CHECK(q.spec.winner_runner[0].runner == 1);
  CHECK(q.spec.winner_runner[0].margin == doctest::Approx(1.0));
  const auto rows = constraint_rows(q, 0);
  REQUIRE(rows.size() == 1);
  Vec y(4);
  y << 3, 1, 3, 1;  // circuit winner clearly ahead
  CHECK(rows[0].coeffs.dot(y) + rows[0].constant <= rows[0].bound);
}
