#include <doctest.h>

#include <random>

#include "nanomvg/enmoe.hpp"
#include "nanomvg/model.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::verify::RefMap;

namespace {

EnMoeParams random_enmoe(std::mt19937_64& rng, int c) {
  EnMoeParams p = EnMoeParams::zeros(c);
  verify::RandomFill fill(rng);
  p.visit(fill, "enmoe");
  return p;
}

}  // namespace

TEST_CASE("enmoe_forward: neutral gates with identity projection give 1.5 f_o") {
  std::mt19937_64 rng(1);
  EnMoeParams p = random_enmoe(rng, 4);
  p.gate_h = ConvParams::zeros(4, 4, 1, 1, 0, 1, true);
  p.gate_l = ConvParams::zeros(4, 4, 1, 1, 0, 1, true);
  p.w_o = ConvParams::identity(4, false);
  p.theta1_raw = 0.0f;
  p.theta2_raw = 0.0f;
  const FeatureMap x = verify::random_map(rng, {1, 4, 7, 6});
  const FeatureMap y = enmoe_forward(x, p);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y.vec()[i] == doctest::Approx(1.5 * x.vec()[i]).epsilon(1e-6));
}

TEST_CASE("enmoe_forward: constant input stays spatially constant in the interior") {
  std::mt19937_64 rng(2);
  const EnMoeParams p = random_enmoe(rng, 3);
  FeatureMap x({1, 3, 9, 9});
  for (int c = 0; c < 3; ++c)
    for (float& v : x.plane(0, c)) v = 0.3f * (c + 1);
  const FeatureMap y = enmoe_forward(x, p);
  // Zero padding breaks translation invariance within two pixels of the edge.
  for (int c = 0; c < 3; ++c)
    for (int r = 2; r < 7; ++r)
      for (int col = 2; col < 7; ++col)
        CHECK(y.at(0, c, r, col) == doctest::Approx(y.at(0, c, 4, 4)).epsilon(1e-6));
}

TEST_CASE("enmoe_forward: saturated-off mixing returns f_o exactly") {
  std::mt19937_64 rng(3);
  EnMoeParams p = random_enmoe(rng, 5);
  p.theta1_raw = -200.0f;
  p.theta2_raw = -200.0f;
  const FeatureMap x = verify::random_map(rng, {1, 5, 6, 8});
  CHECK(enmoe_forward(x, p).vec() == x.vec());
}

TEST_CASE("enmoe_forward: random instances match the equation oracle") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 8; ++i) {
    const int c = 2 + i, h = 5 + i % 4, w = 5 + (i * 3) % 5;
    const EnMoeParams p = random_enmoe(rng, c);
    const FeatureMap x = verify::random_map(rng, {1, c, h, w});
    const FeatureMap y = enmoe_forward(x, p);
    CHECK(y.shape() == x.shape());
    CHECK(verify::max_abs_diff(y, verify::ref_enmoe(RefMap::from(x), p)) < 1e-5);
  }
}

TEST_CASE("enmoe_forward: maps smaller than 5x5 are rejected and bypassed") {
  const EnMoeParams p = EnMoeParams::zeros(2);
  CHECK_THROWS_AS(enmoe_forward(FeatureMap({1, 2, 4, 6}), p), Error);
  CHECK_THROWS_AS(enmoe_forward(FeatureMap({1, 2, 6, 4}), p), Error);
  CHECK_FALSE(enmoe_applies(FeatureMap({1, 2, 4, 4})));
  CHECK(enmoe_applies(FeatureMap({1, 2, 5, 5})));
}
