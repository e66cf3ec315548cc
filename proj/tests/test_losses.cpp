#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nanomvg/losses.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::testing::code_of;

namespace {

// Scalar CIoU written from the definition.
double scalar_ciou(const BoxCWH& a, const BoxCWH& b) {
  const double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
  const double ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
  const double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
  const double by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  const double iou = inter / (a.w * a.h + b.w * b.h - inter);
  const double cw = std::max(ax1, bx1) - std::min(ax0, bx0);
  const double ch = std::max(ay1, by1) - std::min(ay0, by0);
  const double rho2 = (a.cx - b.cx) * (a.cx - b.cx) + (a.cy - b.cy) * (a.cy - b.cy);
  const double dv = std::atan(b.w / b.h) - std::atan(a.w / a.h);
  const double v = 4.0 / (std::numbers::pi * std::numbers::pi) * dv * dv;
  const double alpha = v == 0.0 ? 0.0 : v / (1.0 - iou + v);
  return iou - rho2 / (cw * cw + ch * ch) - alpha * v;
}

}  // namespace

TEST_CASE("conf_loss: single positive cell at 0.5") {
  const std::vector<double> pred = {0.5};
  const std::vector<double> target = {1.0};
  const LossResult r = conf_loss(pred, target, LossConfig{});
  CHECK(r.value == doctest::Approx(0.25 * std::log(2.0)));
  CHECK(r.value == doctest::Approx(0.1733).epsilon(1e-3));
}

TEST_CASE("conf_loss: perfect prediction is clamped and near zero") {
  const HeatmapTarget t = gaussian_target({{4, 5}, {10, 3}}, {{6, 4}, {3, 8}}, 12, 14);
  std::vector<double> pred(t.y.size());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = t.y[i] == 1.0 ? 1.0 : 0.0;
  const LossResult r = conf_loss(pred, t.y, LossConfig{});
  CHECK(r.value <= 1e-4);
  CHECK(r.clamped == pred.size());
}

TEST_CASE("conf_loss: gradient matches finite differences") {
  std::mt19937_64 rng(1);
  const HeatmapTarget t = gaussian_target({{3, 3}, {8, 6}}, {{5, 5}, {4, 7}}, 10, 10);
  std::vector<double> pred(t.y.size());
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (double& p : pred) p = u(rng);
  const LossConfig cfg;
  const LossResult r = conf_loss(pred, t.y, cfg);
  const auto check = verify::check_gradient(
      [&](std::span<const double> x) { return conf_loss(x, t.y, cfg).value; }, pred,
      r.grad, 1e-4);
  CHECK(check.max_rel_error <= 1e-3);
}

TEST_CASE("offset_loss: hand example") {
  const int h = 16, w = 16;
  std::vector<double> pred(2 * h * w, 0.0);
  const std::vector<GridPoint> centers = {{41.2, 49.6}};
  const std::size_t cell = 12 * w + 10;
  pred[cell] = 0.3;
  pred[h * w + cell] = 0.4;
  CHECK(offset_loss(pred, h, w, centers, 4).value == doctest::Approx(0.0));
  pred[cell] += 0.1;
  pred[h * w + cell] -= 0.1;
  CHECK(offset_loss(pred, h, w, centers, 4).value == doctest::Approx(0.1));
  CHECK(offset_loss(pred, h, w, {}, 4).value == 0.0);
}

TEST_CASE("ciou_wh_loss: identity and distant unit squares") {
  const std::vector<BoxCWH> a = {{5, 5, 3, 2}};
  CHECK(ciou(a[0], a[0]) == doctest::Approx(1.0));
  CHECK(ciou_wh_loss(a, a).value == doctest::Approx(0.0));

  const std::vector<BoxCWH> p = {{0, 0, 1, 1}};
  const std::vector<BoxCWH> g = {{10, 0, 1, 1}};
  const double want = 1.0 - scalar_ciou(p[0], g[0]);
  CHECK(want == doctest::Approx(1.0 + 100.0 / 122.0));
  CHECK(ciou_wh_loss(p, g).value == doctest::Approx(want));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(0, 10), side(0.5, 4);
  for (int i = 0; i < 50; ++i) {
    const BoxCWH x{pos(rng), pos(rng), side(rng), side(rng)};
    const BoxCWH y{pos(rng), pos(rng), side(rng), side(rng)};
    CHECK(ciou(x, y) == doctest::Approx(scalar_ciou(x, y)).epsilon(1e-9));
  }
}

TEST_CASE("ciou_wh_loss: zero-area ground truth is rejected") {
  const std::vector<BoxCWH> p = {{0, 0, 1, 1}};
  const std::vector<BoxCWH> g = {{0, 0, 0, 1}};
  CHECK(code_of([&] { ciou_wh_loss(p, g); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("dice_loss: hand values") {
  const std::vector<double> zero(100, 0.0), one(100, 1.0);
  CHECK(dice_loss(zero, one).value == doctest::Approx(1.0 - 1.0 / 101.0));
  CHECK(dice_loss(zero, one).value == doctest::Approx(0.9901).epsilon(1e-4));

  std::vector<double> mask(1000);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i % 3 == 0 ? 1.0 : 0.0;
  CHECK(dice_loss(mask, mask).value <= 1e-3);
  CHECK_THROWS_AS(dice_loss({}, {}), Error);
}

TEST_CASE("focal_seg_loss: hand value and confident limit") {
  const LossConfig cfg;
  const std::vector<double> half = {0.5, 0.5};
  const std::vector<double> gt = {1.0, 0.0};
  CHECK(focal_seg_loss(half, gt, cfg).value == doctest::Approx(0.0625 * std::log(2.0)));
  CHECK(focal_seg_loss(half, gt, cfg).value == doctest::Approx(0.0433).epsilon(1e-3));
  const std::vector<double> sure = {1.0 - 1e-6, 1e-6};
  CHECK(focal_seg_loss(sure, gt, cfg).value < 1e-12);
}

TEST_CASE("total_loss: uncertainty weighting") {
  CHECK(total_loss(2.0, 4.0, UncertaintyWeights::from_sigma(1, 1)) == 3.0);
  CHECK(total_loss(2.0, 4.0, UncertaintyWeights::from_sigma(1, 2)) ==
        doctest::Approx(1.5 + std::log(2.0)));
  CHECK(total_loss(2.0, 4.0, UncertaintyWeights::from_sigma(1, 2)) ==
        doctest::Approx(2.1931).epsilon(1e-4));
  CHECK_THROWS_AS(UncertaintyWeights::from_sigma(0, 1), Error);
  CHECK_THROWS_AS(UncertaintyWeights::from_sigma(1, -2), Error);

  const LossConfig cfg;
  CHECK(rec_loss(1.0, 2.0, 3.0, cfg) == doctest::Approx(1.0 + 0.2 + 3.0));
  CHECK(res_loss(0.5, 0.25, cfg) == doctest::Approx(0.75));
}

TEST_CASE("gaussian_target: peak, falloff and max composition") {
  const HeatmapTarget one = gaussian_target({{6.7, 4.2}}, {{9, 7}}, 12, 14);
  REQUIRE(one.radius.size() == 1);
  CHECK(one.y[4 * 14 + 6] == 1.0);
  const double sigma = one.radius[0] / 3.0;
  REQUIRE(sigma > 0.0);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 14; ++x) {
      const double d2 = (x - 6.0) * (x - 6.0) + (y - 4.0) * (y - 4.0);
      CHECK(one.y[y * 14 + x] == doctest::Approx(std::exp(-d2 / (2 * sigma * sigma))));
    }

  const HeatmapTarget a = gaussian_target({{3, 3}}, {{8, 8}}, 10, 10);
  const HeatmapTarget b = gaussian_target({{5, 4}}, {{6, 9}}, 10, 10);
  const HeatmapTarget both = gaussian_target({{3, 3}, {5, 4}}, {{8, 8}, {6, 9}}, 10, 10);
  for (std::size_t i = 0; i < both.y.size(); ++i)
    CHECK(both.y[i] == std::max(a.y[i], b.y[i]));
}

TEST_CASE("gaussian_radius: smallest quadratic root at 0.7 overlap") {
  // Third case: 4m r^2 - 2m (h + w) r + (m - 1) h w = 0 with m = 0.7.
  const double b = -2 * 0.7 * 20, c = -0.3 * 100;
  CHECK(gaussian_radius(10, 10) == doctest::Approx((b + std::sqrt(b * b - 4 * 2.8 * c)) / 2));
  CHECK(gaussian_radius(10, 20) > gaussian_radius(10, 10));
}

TEST_CASE("gaussian_target: centers outside the grid are rejected") {
  CHECK(code_of([] { gaussian_target({{10, 2}}, {{3, 3}}, 8, 10); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { gaussian_target({{-0.5, 2}}, {{3, 3}}, 8, 10); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("LossConfig: parse, defaults and unknown keys") {
  const LossConfig d;
  CHECK(d.tau1 == 1.0);
  CHECK(d.tau2 == 0.1);
  CHECK(d.tau3 == 1.0);
  CHECK(d.lambda1 == 1.0);
  CHECK(d.lambda2 == 1.0);
  const LossConfig c = LossConfig::parse("# weights\ntau2 = 0.5\nalpha_res=0.5\n");
  CHECK(c.tau2 == 0.5);
  CHECK(c.alpha_res == 0.5);
  CHECK(code_of([] { LossConfig::parse("tau9 = 1\n"); }) == ErrorCode::kParse);
  CHECK_THROWS_AS(LossConfig::parse("tau1 = abc\n"), Error);
}
