#include <doctest.h>

#include <random>

#include "nanomvg/heads.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::testing::code_of;
using nanomvg::verify::RefMap;

namespace {

MsRepParams random_msrep(std::mt19937_64& rng, int c) {
  MsRepParams p = MsRepParams::zeros(c);
  verify::RandomFill fill(rng);
  p.visit(fill, "rep");
  return p;
}

StageMaps random_pyramid(std::mt19937_64& rng, int c, int base) {
  StageMaps s;
  for (int i = 0; i < 4; ++i) {
    s[i] = verify::random_map(rng, {1, c, base >> i, base >> i});
  }
  return s;
}

}  // namespace

TEST_CASE("rec_head_forward: zero weights give a 0.5 heatmap and the shape contract") {
  const RecHeadParams p = RecHeadParams::zeros(64, 4);
  std::mt19937_64 rng(1);
  const RecHeadOutput out = rec_head_forward(verify::random_map(rng, {1, 64, 16, 16}), p);
  CHECK(out.heatmap.shape() == Shape4{1, 1, 16, 16});
  CHECK(out.wh.shape() == Shape4{1, 2, 16, 16});
  CHECK(out.offset.shape() == Shape4{1, 2, 16, 16});
  for (float v : out.heatmap.vec()) CHECK(v == 0.5f);
}

TEST_CASE("rec_head_forward: random weights match the branch oracle") {
  std::mt19937_64 rng(2);
  RecHeadParams p = RecHeadParams::zeros(8, 4);
  verify::RandomFill fill(rng);
  p.visit(fill, "rec");
  const FeatureMap x = verify::random_map(rng, {1, 8, 9, 7});
  const RecHeadOutput out = rec_head_forward(x, p);
  const verify::RefRecOutput ref = verify::ref_rec_head(RefMap::from(x), p);
  CHECK(verify::max_abs_diff(out.heatmap, ref.heatmap) < 1e-6);
  CHECK(verify::max_abs_diff(out.wh, ref.wh) < 1e-5);
  CHECK(verify::max_abs_diff(out.offset, ref.offset) < 1e-5);
}

TEST_CASE("decode_boxes: single peak hand example") {
  FeatureMap heat({1, 1, 16, 16});
  FeatureMap wh({1, 2, 16, 16});
  FeatureMap off({1, 2, 16, 16});
  heat.at(0, 0, 12, 10) = 0.9f;
  off.at(0, 0, 12, 10) = 0.3f;
  off.at(0, 1, 12, 10) = 0.4f;
  wh.at(0, 0, 12, 10) = 2.0f;
  wh.at(0, 1, 12, 10) = 3.0f;
  const auto boxes = decode_boxes(heat, wh, off, 4, 10, 0.6);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].cx == doctest::Approx(41.2));
  CHECK(boxes[0].cy == doctest::Approx(49.6));
  CHECK(boxes[0].w == doctest::Approx(8.0));
  CHECK(boxes[0].h == doctest::Approx(12.0));
  CHECK(boxes[0].score == doctest::Approx(0.9));
}

TEST_CASE("decode_boxes: empty map and invalid k") {
  const FeatureMap heat({1, 1, 8, 8});
  const FeatureMap two({1, 2, 8, 8});
  CHECK(decode_boxes(heat, two, two, 4, 10, 0.1).empty());
  CHECK(code_of([&] { decode_boxes(heat, two, two, 4, 0, 0.1); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("decode_boxes: plateaus keep the first cell in scan order") {
  FeatureMap heat({1, 1, 6, 6});
  const FeatureMap two({1, 2, 6, 6});
  for (int y = 1; y < 3; ++y)
    for (int x = 1; x < 4; ++x) heat.at(0, 0, y, x) = 0.8f;
  const auto boxes = decode_boxes(heat, two, two, 1, 10, 0.5);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].cx == 1.0);
  CHECK(boxes[0].cy == 1.0);
}

TEST_CASE("decode_boxes: properties against the brute-force enumerator") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick_k(1, 10);
  for (int trial = 0; trial < 40; ++trial) {
    FeatureMap heat = verify::random_map(rng, {1, 1, 12, 12}, 0.0, 1.0);
    if (trial % 2) {
      // Quantize to create ties.
      for (float& v : heat.data()) v = std::round(v * 4.0f) / 4.0f;
    }
    const FeatureMap wh = verify::random_map(rng, {1, 2, 12, 12}, 0.0, 5.0);
    const FeatureMap off = verify::random_map(rng, {1, 2, 12, 12}, 0.0, 1.0);
    const int k = pick_k(rng);
    const auto got = decode_boxes(heat, wh, off, 4, k, 0.3);
    const auto want = verify::ref_decode(heat, wh, off, 4, k, 0.3);
    REQUIRE(got.size() == want.size());
    CHECK(static_cast<int>(got.size()) <= k);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].score >= 0.3);
      if (i) CHECK(got[i].score <= got[i - 1].score);
      CHECK(got[i].cx == doctest::Approx(want[i].cx));
      CHECK(got[i].cy == doctest::Approx(want[i].cy));
      CHECK(got[i].w == doctest::Approx(want[i].w));
      CHECK(got[i].h == doctest::Approx(want[i].h));
    }
  }
}

TEST_CASE("msrep_fuse: identity-only block fuses to a centered delta") {
  MsRepParams p = MsRepParams::zeros(3);
  p.bn3 = BNParams::identity(3, 0.0f);
  p.bn1 = BNParams::identity(3, 0.0f);
  p.bn_id = BNParams::identity(3, 0.0f);
  const MsRepParams f = msrep_fuse(p);
  REQUIRE(f.mode == RepMode::kFused);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        CHECK(f.fused->kernel.at(c, 0, y, x) == (y == 1 && x == 1 ? 1.0f : 0.0f));
  for (float b : f.fused->bias) CHECK(b == 0.0f);
}

TEST_CASE("msrep_fuse: fused equals multi-branch on random inputs") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const MsRepParams p = random_msrep(rng, 4 + trial);
    const MsRepParams f = msrep_fuse(p);
    for (int i = 0; i < 10; ++i) {
      const FeatureMap x = verify::random_map(rng, {1, 4 + trial, 16, 16});
      const FeatureMap a = msrep_forward(x, p);
      const FeatureMap b = msrep_forward(x, f);
      CHECK(verify::max_abs_diff(a, RefMap::from(b)) <= 1e-5);
      CHECK(verify::max_abs_diff(a, verify::ref_msrep(RefMap::from(x), p)) <= 1e-5);
    }
  }
}

TEST_CASE("msrep_fuse: fusing twice is rejected") {
  std::mt19937_64 rng(5);
  const MsRepParams f = msrep_fuse(random_msrep(rng, 3));
  CHECK(code_of([&] { msrep_fuse(f); }) == ErrorCode::kState);
  ResHeadParams head = ResHeadParams::zeros(3);
  head = fuse_res_head(head);
  CHECK(head.fused());
  CHECK(code_of([&] { fuse_res_head(head); }) == ErrorCode::kState);
}

TEST_CASE("res_head_forward: zero pyramid gives an empty mask at image size") {
  const ResHeadParams p = ResHeadParams::zeros(8);
  StageMaps s;
  for (int i = 0; i < 4; ++i) s[i] = FeatureMap({1, 8, 16 >> i, 16 >> i});
  const ResHeadOutput out = res_head_forward(s, p, 64, 64);
  CHECK(out.logits.shape() == Shape4{1, 1, 64, 64});
  REQUIRE(out.masks.size() == 1);
  CHECK(out.masks[0].width == 64);
  CHECK(out.masks[0].height == 64);
  CHECK(out.masks[0].count() == 0);
}

TEST_CASE("res_head_forward: matches the composed oracle in both modes") {
  std::mt19937_64 rng(6);
  ResHeadParams p = ResHeadParams::zeros(6);
  verify::RandomFill fill(rng);
  p.visit(fill, "res");
  const StageMaps s = random_pyramid(rng, 6, 16);
  std::array<RefMap, 4> rs;
  for (int i = 0; i < 4; ++i) rs[i] = RefMap::from(s[i]);
  const RefMap ref = verify::ref_res_head(rs, p, 64);
  const ResHeadOutput train = res_head_forward(s, p, 64, 64);
  const ResHeadOutput fused = res_head_forward(s, fuse_res_head(p), 64, 64);
  CHECK(verify::max_abs_diff(train.logits, ref) <= 1e-4);
  CHECK(verify::max_abs_diff(fused.logits, ref) <= 1e-4);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      CHECK(train.masks[0].bits[y * 64 + x] == (train.logits.at(0, 0, y, x) > 0.0f));
}

TEST_CASE("res_head_forward: rejects non-halving pyramids and bad image sizes") {
  std::mt19937_64 rng(7);
  const ResHeadParams p = ResHeadParams::zeros(4);
  StageMaps s = random_pyramid(rng, 4, 16);
  CHECK_THROWS_AS(res_head_forward(s, p, 60, 64), Error);
  s[1] = FeatureMap({1, 4, 7, 7});
  CHECK_THROWS_AS(res_head_forward(s, p, 64, 64), Error);
}
