#include <doctest.h>

#include <algorithm>
#include <random>

#include "nanomvg/fixtures.hpp"
#include "nanomvg/metrics.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::testing::code_of;

namespace {

DetectionBox box(double cx, double cy, double w, double h, double score = 1.0) {
  return {cx, cy, w, h, score};
}

BinaryMask mask_from(int w, int h, const std::vector<std::uint8_t>& bits) {
  BinaryMask m;
  m.width = w;
  m.height = h;
  m.bits = bits;
  return m;
}

}  // namespace

TEST_CASE("box_iou: identical, disjoint, half overlap") {
  const DetectionBox a = box(0.5, 0.5, 1, 1);
  CHECK(box_iou(a, a) == 1.0);
  CHECK(box_iou(a, box(5, 5, 1, 1)) == 0.0);
  CHECK(box_iou(a, box(1.0, 0.5, 1, 1)) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([&] { box_iou(a, box(0, 0, 0, 1)); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("average_precision: one good match is a perfect score") {
  const auto r = average_precision({{box(5, 5, 10, 10)}}, {{box(5.2, 5, 10, 10)}});
  CHECK(r.ap50 == doctest::Approx(100.0));
  CHECK(r.queries_scored == 1);
}

TEST_CASE("average_precision: IoU 0.63 counts at three thresholds") {
  const DetectionBox gt = box(5, 5, 10, 10);
  const DetectionBox pred = box(7.3, 5, 10, 10);
  REQUIRE(box_iou(gt, pred) == doctest::Approx(7.7 / 12.3));
  const auto r = average_precision({{pred}}, {{gt}});
  CHECK(r.ap50 == doctest::Approx(100.0));
  CHECK(r.ap50_95 == doctest::Approx(30.0));
  CHECK(r.ar50_95 == doctest::Approx(30.0));
}

TEST_CASE("average_precision: undefined queries are excluded, misses count zero") {
  const auto r = average_precision({{}, {box(5, 5, 4, 4)}, {}},
                                   {{}, {box(5, 5, 4, 4)}, {box(1, 1, 2, 2)}});
  CHECK(r.queries_scored == 2);
  CHECK(r.ap50 == doctest::Approx(50.0));
  CHECK_FALSE(query_average_precision({}, {}, 0.5).has_value());
  CHECK(*query_average_precision({box(1, 1, 1, 1)}, {}, 0.5) == 0.0);
}

TEST_CASE("query_average_precision: random small queries match the cutoff oracle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0, 20), side(2, 8), score(0, 1);
  std::uniform_int_distribution<int> count(1, 5);
  for (int q = 0; q < 200; ++q) {
    std::vector<DetectionBox> gts, preds;
    for (int i = count(rng); i > 0; --i) gts.push_back(box(pos(rng), pos(rng), side(rng), side(rng)));
    for (int i = count(rng); i > 0; --i) {
      if (i % 2 && !gts.empty()) {
        const DetectionBox& g = gts[i % gts.size()];
        preds.push_back(box(g.cx + score(rng), g.cy - score(rng), g.w, g.h, score(rng)));
      } else {
        preds.push_back(box(pos(rng), pos(rng), side(rng), side(rng), score(rng)));
      }
    }
    for (double t : {0.5, 0.75}) {
      CHECK(*query_average_precision(preds, gts, t) ==
            doctest::Approx(verify::ref_query_ap(preds, gts, t)));
    }
  }
}

TEST_CASE("average_precision: invariant to prediction order at distinct scores") {
  std::mt19937_64 rng(2);
  std::vector<DetectionBox> gts = {box(5, 5, 4, 4), box(12, 8, 3, 6), box(3, 14, 5, 5)};
  std::vector<DetectionBox> preds = {box(5.5, 5, 4, 4, 0.9), box(12, 9, 3, 6, 0.3),
                                     box(20, 20, 2, 2, 0.6), box(3, 13, 5, 5, 0.45)};
  const EvalResult base = average_precision({preds}, {gts});
  for (int i = 0; i < 10; ++i) {
    std::shuffle(preds.begin(), preds.end(), rng);
    const EvalResult r = average_precision({preds}, {gts});
    CHECK(r.ap50 == base.ap50);
    CHECK(r.ap50_95 == base.ap50_95);
    CHECK(r.ar50_95 == base.ar50_95);
  }
  CHECK(base.ap50 >= 0.0);
  CHECK(base.ap50 <= 100.0);
}

TEST_CASE("mask_miou: perfect, complement, empty and random") {
  const BinaryMask a = mask_from(2, 2, {1, 0, 1, 1});
  const BinaryMask not_a = mask_from(2, 2, {0, 1, 0, 0});
  const BinaryMask empty = mask_from(2, 2, {0, 0, 0, 0});
  CHECK(mask_miou({a}, {a}) == doctest::Approx(100.0));
  CHECK(mask_miou({a}, {not_a}) == 0.0);
  CHECK(mask_miou({empty}, {empty}) == doctest::Approx(100.0));

  std::mt19937_64 rng(3);
  std::bernoulli_distribution bit(0.4);
  std::vector<BinaryMask> p, g;
  double want = 0.0;
  for (int s = 0; s < 5; ++s) {
    std::vector<std::uint8_t> pb(36), gb(36);
    int inter = 0, uni = 0;
    for (int i = 0; i < 36; ++i) {
      pb[i] = bit(rng);
      gb[i] = bit(rng);
      inter += pb[i] && gb[i];
      uni += pb[i] || gb[i];
    }
    want += uni ? static_cast<double>(inter) / uni : 1.0;
    p.push_back(mask_from(6, 6, pb));
    g.push_back(mask_from(6, 6, gb));
  }
  CHECK(mask_miou(p, g) == doctest::Approx(100.0 * want / 5));
  CHECK_THROWS_AS(mask_miou({a}, {mask_from(1, 4, {1, 1, 1, 1})}), Error);
}

TEST_CASE("mept: hand trace, homogeneity and degenerate traces") {
  const EnergyTrace t = hand_energy_trace();
  CHECK(t.tau() == 10);
  CHECK(relative_power(t) == doctest::Approx(28.0));
  CHECK(std::abs(mept({70.0}, t) - 2.5) <= 1e-9);
  CHECK(std::abs(mept({60.0, 80.0}, t) - 2.5) <= 1e-9);

  EnergyTrace doubled = t;
  for (auto& r : doubled.rows) {
    r.energy_trained *= 2;
    r.energy_untrained *= 2;
  }
  CHECK(mept({70.0}, doubled) == doctest::Approx(1.25));
  CHECK(mept({3 * 70.0}, t) == doctest::Approx(3 * mept({70.0}, t)));

  EnergyTrace flat = t;
  for (auto& r : flat.rows) r.energy_untrained = r.energy_trained;
  CHECK(code_of([&] { mept({70.0}, flat); }) == ErrorCode::kInvalidArgument);

  EnergyTrace tau = t;
  tau.tau_evals = 20;
  CHECK(mept({70.0}, tau) == doctest::Approx(5.0));
}

TEST_CASE("EnergyTrace: CSV round trip and malformed input") {
  const EnergyTrace t = hand_energy_trace();
  const EnergyTrace back = EnergyTrace::parse_csv(t.to_csv());
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].sample_id == t.rows[i].sample_id);
    CHECK(back.rows[i].energy_trained == t.rows[i].energy_trained);
    CHECK(back.rows[i].energy_untrained == t.rows[i].energy_untrained);
  }
  CHECK(code_of([] { EnergyTrace::parse_csv("id,a,b\nx,1,2\n"); }) == ErrorCode::kParse);
  CHECK_THROWS_AS(
      EnergyTrace::parse_csv("sample_id,energy_trained,energy_untrained\nx,1\n"), Error);
  CHECK_THROWS_AS(
      EnergyTrace::parse_csv("sample_id,energy_trained,energy_untrained\n"), Error);
}
