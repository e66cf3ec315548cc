#include <doctest.h>

#include <cmath>
#include <random>

#include "nanomvg/ops.hpp"
#include "nanomvg/tmdf.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::verify::RefMap;

namespace {

TmdfParams random_tmdf(std::mt19937_64& rng, int c, int h, int w, int e) {
  TmdfParams p = TmdfParams::zeros(c, h, w, e);
  verify::RandomFill fill(rng);
  p.visit(fill, "tmdf");
  return p;
}

}  // namespace

TEST_CASE("eca: zero weights halve the input") {
  std::mt19937_64 rng(1);
  const FeatureMap x = verify::random_map(rng, {1, 4, 5, 5});
  const FeatureMap y = eca(x, EcaParams::zeros());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.vec()[i] == x.vec()[i] * 0.5f);
}

TEST_CASE("eca: a saturated gate passes the input through") {
  std::mt19937_64 rng(2);
  const FeatureMap x = verify::random_map(rng, {1, 1, 4, 4}, 0.2, 1.0);
  EcaParams p = EcaParams::zeros();
  p.weights = {0.0f, 100.0f, 0.0f};
  const FeatureMap y = eca(x, p);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y.vec()[i] == doctest::Approx(x.vec()[i]).epsilon(1e-6));
}

TEST_CASE("deform_conv: zero offsets reduce to conv2d") {
  std::mt19937_64 rng(3);
  DeformParams p = DeformParams::zeros(4);
  verify::fill_uniform(rng, p.main_kernel.kernel.data(), -1, 1);
  verify::fill_uniform(rng, p.main_kernel.bias, -1, 1);
  const FeatureMap x = verify::random_map(rng, {2, 4, 7, 6});
  const FeatureMap a = deform_conv(x, p);
  const FeatureMap b = conv2d(x, p.main_kernel);
  CHECK(verify::max_abs_diff(a, RefMap::from(b)) <= 1e-6);
}

TEST_CASE("deform_conv: integer column offset equals conv of shifted input") {
  std::mt19937_64 rng(4);
  DeformParams p = DeformParams::zeros(3);
  verify::fill_uniform(rng, p.main_kernel.kernel.data(), -1, 1);
  for (int tap = 0; tap < 9; ++tap) p.offset_conv.bias[2 * tap + 1] = 1.0f;
  const FeatureMap x = verify::random_map(rng, {1, 3, 6, 8});
  FeatureMap shifted(x.shape());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int col = 0; col + 1 < 8; ++col)
        shifted.at(0, c, y, col) = x.at(0, c, y, col + 1);
  const FeatureMap a = deform_conv(x, p);
  const FeatureMap b = conv2d(shifted, p.main_kernel);
  // Column 0 differs: its leftmost tap reads x(0) where the shifted conv pads.
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int col = 1; col < 8; ++col)
        CHECK(std::abs(a.at(0, c, y, col) - b.at(0, c, y, col)) < 1e-5);
}

TEST_CASE("deform_conv: half-pixel offset on a ramp reads midpoints") {
  DeformParams p = DeformParams::zeros(1);
  p.main_kernel.kernel.at(0, 0, 1, 1) = 1.0f;
  p.offset_conv.bias[2 * 4 + 1] = 0.5f;  // center tap, dx
  FeatureMap ramp({1, 1, 4, 6});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) ramp.at(0, 0, y, x) = static_cast<float>(3 * x + y);
  const FeatureMap out = deform_conv(ramp, p);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x + 1 < 6; ++x)
      CHECK(out.at(0, 0, y, x) == doctest::Approx(3 * (x + 0.5) + y));
  // Beyond the last column the sample blends with zero padding.
  CHECK(out.at(0, 0, 0, 5) == doctest::Approx(0.5 * 15));
  CHECK(bilinear_sample(ramp.plane(0, 0), 4, 6, 1.5, 2.5) ==
        doctest::Approx(3 * 2.5 + 1.5));
}

TEST_CASE("cross_attend: 1x1 map with one key gives sqrt(d) * v") {
  const int d = 9;
  FeatureMap q({1, 1, 1, d}, 1.0f);
  FeatureMap k({1, d, 1, 1}, 1.0f);
  FeatureMap v({1, d, 1, 1});
  for (int c = 0; c < d; ++c) v.at(0, c, 0, 0) = static_cast<float>(c - 4);
  const FeatureMap sim = similarity(q, k, false);
  CHECK(sim.at(0, 0, 0, 0) == doctest::Approx(3.0));
  const FeatureMap out = cross_attend(q, k, v, false);
  for (int c = 0; c < d; ++c) CHECK(out.at(0, 0, 0, c) == doctest::Approx(3.0 * (c - 4)));
}

TEST_CASE("cross_attend: linear in V for fixed similarity") {
  std::mt19937_64 rng(5);
  const FeatureMap q = verify::random_map(rng, {1, 1, 12, 6});
  const FeatureMap k = verify::random_map(rng, {1, 6, 1, 5});
  const FeatureMap v = verify::random_map(rng, {1, 6, 1, 5});
  for (bool normalize : {false, true}) {
    const FeatureMap one = cross_attend(q, k, v, normalize);
    const FeatureMap two = cross_attend(q, k, scale(v, 2.0f), normalize);
    for (std::size_t i = 0; i < one.size(); ++i)
      CHECK(two.vec()[i] == doctest::Approx(2.0 * one.vec()[i]).epsilon(1e-6));
  }
}

TEST_CASE("similarity: shape is (H*W, L') and softmax rows sum to one") {
  std::mt19937_64 rng(6);
  TmdfParams p = random_tmdf(rng, 8, 4, 5, 6);
  const FeatureMap text = verify::random_map(rng, {1, 6, 1, 50});
  const FeatureMap kv = maxpool1d(text_projection(text, p));
  CHECK(kv.w() == 24);
  const FeatureMap q = flatten_tokens(verify::random_map(rng, {1, 8, 4, 5}));
  const FeatureMap sim = similarity(q, kv, false);
  CHECK(sim.shape() == Shape4{1, 1, 20, 24});
  const FeatureMap soft = similarity(q, kv, true);
  for (int r = 0; r < 20; ++r) {
    double total = 0.0;
    for (int j = 0; j < 24; ++j) total += soft.at(0, 0, r, j);
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("flatten_tokens: exact bijection") {
  std::mt19937_64 rng(7);
  const FeatureMap x = verify::random_map(rng, {2, 5, 3, 4});
  const FeatureMap t = flatten_tokens(x);
  CHECK(t.shape() == Shape4{2, 1, 12, 5});
  CHECK(unflatten_tokens(t, 5, 3, 4).vec() == x.vec());
  CHECK(flatten_tokens(unflatten_tokens(t, 5, 3, 4)).vec() == t.vec());
}

TEST_CASE("sinusoidal_position_encoding: sin on even dims, cos on odd") {
  const FeatureMap ape = sinusoidal_position_encoding(8, 5);
  for (int l = 0; l < 5; ++l) {
    CHECK(ape.at(0, 0, 0, l) == doctest::Approx(std::sin(l)));
    CHECK(ape.at(0, 1, 0, l) == doctest::Approx(std::cos(l)));
    CHECK(ape.at(0, 2, 0, l) == doctest::Approx(std::sin(l / std::pow(10000.0, 0.25))));
  }
}

TEST_CASE("tmdf_fuse: random instances match the step-by-step oracle") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 6; ++i) {
    const int c = 4 + 2 * i, h = 3 + i % 3, w = 4 + i % 2, e = 5;
    const TmdfParams p = random_tmdf(rng, c, h, w, e);
    const FeatureMap a = verify::random_map(rng, {1, c, h, w});
    const FeatureMap b = verify::random_map(rng, {1, c, h, w});
    const FeatureMap t = verify::random_map(rng, {1, e, 1, 9});
    const bool normalize = i % 2 == 1;
    const FeatureMap out = tmdf_fuse(a, b, t, p, normalize);
    const RefMap ref = verify::ref_tmdf(RefMap::from(a), RefMap::from(b),
                                        RefMap::from(t), p, normalize);
    CHECK(verify::max_abs_diff(out, ref) <= 1e-5 * std::max(1.0, verify::max_abs(ref)));
  }
}

TEST_CASE("tmdf_fuse: zero text path annihilates the output") {
  std::mt19937_64 rng(9);
  TmdfParams p = random_tmdf(rng, 6, 4, 4, 5);
  std::fill(p.w_text.begin(), p.w_text.end(), 0.0f);
  std::fill(p.b_text.begin(), p.b_text.end(), 0.0f);
  const FeatureMap out = tmdf_fuse(verify::random_map(rng, {1, 6, 4, 4}),
                                   verify::random_map(rng, {1, 6, 4, 4}),
                                   FeatureMap({1, 5, 1, 10}), p);
  for (float v : out.vec()) CHECK(v == 0.0f);
}

TEST_CASE("tmdf_fuse: zero embeddings alone still carry the position encoding") {
  std::mt19937_64 rng(10);
  const TmdfParams p = random_tmdf(rng, 6, 4, 4, 5);
  const FeatureMap out = tmdf_fuse(verify::random_map(rng, {1, 6, 4, 4}),
                                   verify::random_map(rng, {1, 6, 4, 4}),
                                   FeatureMap({1, 5, 1, 10}), p);
  CHECK(std::any_of(out.vec().begin(), out.vec().end(), [](float v) { return v != 0.0f; }));
}

TEST_CASE("tmdf_fuse: image and radar are interchangeable under a saturated gate") {
  std::mt19937_64 rng(11);
  TmdfParams p = random_tmdf(rng, 6, 5, 5, 4);
  verify::fill_uniform(rng, p.w_img.kernel.data(), 0.5, 1.5);
  verify::fill_uniform(rng, p.w_img.bias, 0.1, 0.3);
  p.w_radar = p.w_img;
  p.eca.weights = {1000.0f, 1000.0f, 1000.0f};
  std::fill(p.deform.offset_conv.kernel.data().begin(),
            p.deform.offset_conv.kernel.data().end(), 0.0f);
  std::fill(p.deform.offset_conv.bias.begin(), p.deform.offset_conv.bias.end(), 0.0f);
  std::fill(p.lpe.data().begin(), p.lpe.data().end(), 0.0f);
  const FeatureMap a = verify::random_map(rng, {1, 6, 5, 5}, 0.0, 1.0);
  const FeatureMap b = verify::random_map(rng, {1, 6, 5, 5}, 0.0, 1.0);
  const FeatureMap t = verify::random_map(rng, {1, 4, 1, 7});
  CHECK(tmdf_fuse(a, b, t, p).vec() == tmdf_fuse(b, a, t, p).vec());
}

TEST_CASE("tmdf_fuse: rejects prompts shorter than the pooling window") {
  const TmdfParams p = TmdfParams::zeros(4, 3, 3, 5);
  CHECK_THROWS_AS(tmdf_fuse(FeatureMap({1, 4, 3, 3}), FeatureMap({1, 4, 3, 3}),
                            FeatureMap({1, 5, 1, 2}), p),
                  Error);
  CHECK_THROWS_AS(tmdf_fuse(FeatureMap({1, 4, 3, 3}), FeatureMap({1, 4, 3, 4}),
                            FeatureMap({1, 5, 1, 8}), p),
                  Error);
}
