#include "nanomvg/verify/acceptance.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>

#include "nanomvg/error.hpp"
#include "nanomvg/fixtures.hpp"
#include "nanomvg/losses.hpp"
#include "nanomvg/ops.hpp"
#include "nanomvg/verify/oracles.hpp"

namespace nanomvg::verify {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool bitwise_equal(const FeatureMap& a, const FeatureMap& b) {
  if (a.shape() != b.shape()) return false;
  auto x = a.data();
  auto y = b.data();
  return std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
}

bool same_boxes(const std::vector<DetectionBox>& a,
                const std::vector<DetectionBox>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].cx != b[i].cx || a[i].cy != b[i].cy || a[i].w != b[i].w ||
        a[i].h != b[i].h || a[i].score != b[i].score) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

CriterionResult reparameterization(const AcceptanceOptions& opts) {
  CriterionResult r{1, "reparameterization equivalence", false, "", 0.0};
  std::mt19937_64 rng(opts.seed + 1);
  double worst_fused = 0.0, worst_oracle = 0.0;
  const int cases = 120;
  for (int i = 0; i < cases; ++i) {
    const int c = uniform_int(rng, 1, 32);
    MsRepParams p = MsRepParams::zeros(c);
    RandomFill fill(rng);
    p.visit(fill, "msrep");
    const FeatureMap x = random_map(rng, {1, c, 16, 16}, -2.0, 2.0);
    const FeatureMap multi = msrep_forward(x, p);
    const FeatureMap fused = msrep_forward(x, msrep_fuse(p));
    worst_fused = std::max(worst_fused, max_abs_diff(fused, RefMap::from(multi)));
    worst_oracle =
        std::max(worst_oracle, max_abs_diff(multi, ref_msrep(RefMap::from(x), p)));
  }
  r.passed = worst_fused <= 1e-5 && worst_oracle <= 1e-5;
  r.detail = fmt("%.0f cases, max |fused - multibranch| = %.3g, "
                 "max |multibranch - oracle| = %.3g",
                 cases, worst_fused, worst_oracle);
  return r;
}

// ---------------------------------------------------------------------------

struct GradStats {
  double worst = 0.0;
  int instances = 0;
};

void record(GradStats& s, const GradCheck& g) {
  s.worst = std::max(s.worst, g.max_rel_error);
  if (std::isnan(g.max_rel_error)) s.worst = g.max_rel_error;
  ++s.instances;
}

CriterionResult gradients(const AcceptanceOptions& opts) {
  CriterionResult r{2, "gradient correctness", false, "", 0.0};
  constexpr double kStep = 1e-4;
  constexpr int kInstances = 60;
  std::mt19937_64 rng(opts.seed + 2);
  const LossConfig cfg;
  GradStats conf, offset, ciou_s, dice, focal;

  for (int i = 0; i < kInstances; ++i) {
    const int h = uniform_int(rng, 4, 10), w = uniform_int(rng, 4, 10);
    std::vector<GridPoint> centers;
    std::vector<GridSize> sizes;
    for (int k = uniform_int(rng, 1, 3); k > 0; --k) {
      centers.push_back({double(uniform_int(rng, 0, w - 1)),
                         double(uniform_int(rng, 0, h - 1))});
      sizes.push_back({uniform(rng, 1.0, w), uniform(rng, 1.0, h)});
    }
    const HeatmapTarget target = gaussian_target(centers, sizes, h, w);
    std::vector<double> pred(target.y.size());
    for (double& v : pred) v = uniform(rng, 0.02, 0.98);
    const auto f = [&](std::span<const double> x) {
      return conf_loss(x, target.y, cfg).value;
    };
    record(conf, check_gradient(f, pred, conf_loss(pred, target.y, cfg).grad,
                                kStep));
  }

  for (int i = 0; i < kInstances; ++i) {
    const int h = uniform_int(rng, 6, 12), w = uniform_int(rng, 6, 12);
    const int R = 4;
    std::vector<GridPoint> px;
    std::vector<int> cells;
    for (int k = uniform_int(rng, 1, 4); k > 0; --k) {
      const GridPoint p{uniform(rng, 0.0, w * R - 1e-3),
                        uniform(rng, 0.0, h * R - 1e-3)};
      const int cell = int(p.y / R) * w + int(p.x / R);
      if (std::find(cells.begin(), cells.end(), cell) != cells.end()) continue;
      cells.push_back(cell);
      px.push_back(p);
    }
    std::vector<double> pred(2 * static_cast<std::size_t>(h) * w);
    for (double& v : pred) v = uniform(rng, 0.0, 1.0);
    // Skip coordinates within a few steps of the L1 kink.
    std::vector<bool> near_kink(pred.size(), false);
    for (const auto& p : px) {
      const int cx = int(p.x / R), cy = int(p.y / R);
      const std::size_t ix = std::size_t(cy) * w + cx;
      const std::size_t iy = std::size_t(h) * w + ix;
      near_kink[ix] = std::abs(pred[ix] - (p.x / R - cx)) < 10 * kStep;
      near_kink[iy] = std::abs(pred[iy] - (p.y / R - cy)) < 10 * kStep;
    }
    const auto f = [&](std::span<const double> x) {
      return offset_loss(x, h, w, px, R).value;
    };
    record(offset, check_gradient(f, pred, offset_loss(pred, h, w, px, R).grad,
                                  kStep, [&](std::size_t k) { return near_kink[k]; }));
  }

  for (int i = 0; i < kInstances; ++i) {
    const int n = uniform_int(rng, 1, 4);
    std::vector<BoxCWH> pred, gt;
    while (static_cast<int>(pred.size()) < n) {
      const BoxCWH g{uniform(rng, 5, 15), uniform(rng, 5, 15), uniform(rng, 1, 8),
                     uniform(rng, 1, 8)};
      const BoxCWH p{g.cx + uniform(rng, -4, 4), g.cy + uniform(rng, -4, 4),
                     uniform(rng, 1, 8), uniform(rng, 1, 8)};
      // Intersection and enclosing boxes switch edges where two edges meet;
      // resample instances that sit on such a kink.
      const double pe[4] = {p.cx - p.w / 2, p.cx + p.w / 2, p.cy - p.h / 2,
                            p.cy + p.h / 2};
      const double ge[4] = {g.cx - g.w / 2, g.cx + g.w / 2, g.cy - g.h / 2,
                            g.cy + g.h / 2};
      bool kink = false;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          if ((a < 2) == (b < 2) && std::abs(pe[a] - ge[b]) < 1e-2) kink = true;
        }
      }
      if (kink) continue;
      pred.push_back(p);
      gt.push_back(g);
    }
    std::vector<double> flat;
    for (const auto& b : pred) flat.insert(flat.end(), {b.cx, b.cy, b.w, b.h});
    const auto f = [&](std::span<const double> x) {
      std::vector<BoxCWH> boxes;
      for (std::size_t k = 0; k < x.size(); k += 4) {
        boxes.push_back({x[k], x[k + 1], x[k + 2], x[k + 3]});
      }
      return ciou_wh_loss(boxes, gt).value;
    };
    record(ciou_s, check_gradient(f, flat, ciou_wh_loss(pred, gt).grad, kStep));
  }

  for (int i = 0; i < kInstances; ++i) {
    const int n = uniform_int(rng, 16, 256);
    std::vector<double> prob(n), gt(n);
    for (int k = 0; k < n; ++k) {
      prob[k] = uniform(rng, 0.02, 0.98);
      gt[k] = uniform_int(rng, 0, 1);
    }
    const auto fd = [&](std::span<const double> x) {
      return dice_loss(x, gt, cfg.dice_eps).value;
    };
    record(dice, check_gradient(fd, prob, dice_loss(prob, gt, cfg.dice_eps).grad,
                                kStep));
    const auto ff = [&](std::span<const double> x) {
      return focal_seg_loss(x, gt, cfg).value;
    };
    record(focal, check_gradient(ff, prob, focal_seg_loss(prob, gt, cfg).grad,
                                 kStep));
  }

  const double worst = std::max({conf.worst, offset.worst, ciou_s.worst,
                                 dice.worst, focal.worst});
  r.passed = worst <= 1e-3 && !std::isnan(worst);
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%d instances per loss, max rel error conf %.2g, offset %.2g, "
                "ciou %.2g, dice %.2g, focal %.2g",
                kInstances, conf.worst, offset.worst, ciou_s.worst, dice.worst,
                focal.worst);
  r.detail = buf;
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult equation_fidelity(const AcceptanceOptions& opts) {
  CriterionResult r{3, "equation-fidelity oracles", false, "", 0.0};
  std::mt19937_64 rng(opts.seed + 3);
  constexpr int kInstances = 60;
  double worst_tmdf = 0.0, worst_enmoe = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const int n = uniform_int(rng, 1, 2);
    const int c = uniform_int(rng, 1, 8);
    const int h = uniform_int(rng, 2, 6), w = uniform_int(rng, 2, 6);
    const int e = uniform_int(rng, 2, 8), len = uniform_int(rng, 3, 12);
    TmdfParams p = TmdfParams::zeros(c, h, w, e);
    RandomFill fill(rng);
    p.visit(fill, "tmdf");
    fill_uniform(rng, p.eca.weights, -1.0, 1.0);
    const FeatureMap img = random_map(rng, {n, c, h, w});
    const FeatureMap rad = random_map(rng, {n, c, h, w});
    const FeatureMap text = random_map(rng, {n, e, 1, len});
    const bool normalize = i % 2 == 1;
    const FeatureMap got = tmdf_fuse(img, rad, text, p, normalize);
    const RefMap want = ref_tmdf(RefMap::from(img), RefMap::from(rad),
                                 RefMap::from(text), p, normalize);
    worst_tmdf = std::max(worst_tmdf, max_abs_diff(got, want));
  }
  for (int i = 0; i < kInstances; ++i) {
    const int n = uniform_int(rng, 1, 2);
    const int c = uniform_int(rng, 1, 8);
    const int h = uniform_int(rng, 5, 10), w = uniform_int(rng, 5, 10);
    EnMoeParams p = EnMoeParams::zeros(c);
    RandomFill fill(rng);
    p.visit(fill, "enmoe");
    const FeatureMap x = random_map(rng, {n, c, h, w});
    worst_enmoe = std::max(
        worst_enmoe, max_abs_diff(enmoe_forward(x, p), ref_enmoe(RefMap::from(x), p)));
  }
  r.passed = worst_tmdf <= 1e-5 && worst_enmoe <= 1e-5;
  r.detail = fmt("%.0f instances each, max |tmdf - oracle| = %.3g, "
                 "max |enmoe - oracle| = %.3g",
                 kInstances, worst_tmdf, worst_enmoe);
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult degenerate(const AcceptanceOptions& opts) {
  CriterionResult r{4, "degenerate exactness", false, "", 0.0};
  std::mt19937_64 rng(opts.seed + 4);
  double worst_deform = 0.0;
  bool enmoe_exact = true, tmdf_zero = true;
  for (int i = 0; i < 20; ++i) {
    const int c = uniform_int(rng, 1, 8);
    const int h = uniform_int(rng, 3, 12), w = uniform_int(rng, 3, 12);
    DeformParams d = DeformParams::zeros(c);
    fill_uniform(rng, d.main_kernel.kernel.data(), -1.0, 1.0);
    fill_uniform(rng, d.main_kernel.bias, -1.0, 1.0);
    const FeatureMap x = random_map(rng, {1, c, h, w});
    worst_deform = std::max(
        worst_deform,
        max_abs_diff(deform_conv(x, d), RefMap::from(conv2d(x, d.main_kernel))));

    EnMoeParams m = EnMoeParams::zeros(c);
    RandomFill fill(rng);
    m.visit(fill, "enmoe");
    m.gate_h = ConvParams::zeros(c, c, 1, 1, 0, 1, true);
    m.gate_l = ConvParams::zeros(c, c, 1, 1, 0, 1, true);
    m.theta1_raw = m.theta2_raw = 0.0f;
    const FeatureMap fo = random_map(rng, {1, c, std::max(h, 5), std::max(w, 5)});
    const FeatureMap proj = conv2d(fo, m.w_o);
    const FeatureMap got = enmoe_forward(fo, m);
    for (std::size_t k = 0; k < got.data().size(); ++k) {
      const float want = fo.data()[k] + 0.5f * proj.data()[k];
      if (got.data()[k] != want) enmoe_exact = false;
    }

    TmdfParams t = TmdfParams::zeros(c, h, w, 6);
    t.visit(fill, "tmdf");
    std::fill(t.w_text.begin(), t.w_text.end(), 0.0f);
    std::fill(t.b_text.begin(), t.b_text.end(), 0.0f);
    const FeatureMap zero_text({1, 6, 1, 10});
    const FeatureMap out = tmdf_fuse(random_map(rng, {1, c, h, w}),
                                     random_map(rng, {1, c, h, w}), zero_text, t,
                                     i % 2 == 1);
    for (float v : out.data()) {
      if (v != 0.0f) tmdf_zero = false;
    }
  }
  r.passed = worst_deform <= 1e-6 && enmoe_exact && tmdf_zero;
  r.detail = fmt("20 cases each, max |deform - conv2d| = %.3g, ", worst_deform) +
             "enmoe zero gates " + (enmoe_exact ? "exact" : "NOT exact") +
             ", tmdf zero text " + (tmdf_zero ? "all zero" : "NOT zero");
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult decode_oracle(const AcceptanceOptions& opts) {
  CriterionResult r{5, "decode oracle", false, "", 0.0};
  std::mt19937_64 rng(opts.seed + 5);
  const int cases = 240;
  int mismatches = 0, plateau_cases = 0;
  std::size_t boxes = 0;
  for (int i = 0; i < cases; ++i) {
    FeatureMap heat({1, 1, 16, 16});
    const bool plateau = i % 2 == 0;
    for (float& v : heat.data()) {
      v = plateau ? uniform_int(rng, 0, 4) / 4.0f
                  : static_cast<float>(uniform(rng, 0.0, 1.0));
    }
    if (plateau) {
      ++plateau_cases;
      // A flat block guarantees a tie plateau at the top level.
      const int y = uniform_int(rng, 0, 13), x = uniform_int(rng, 0, 13);
      for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) heat.at(0, 0, y + dy, x + dx) = 1.0f;
      }
    }
    const FeatureMap wh = random_map(rng, {1, 2, 16, 16}, 0.0, 4.0);
    const FeatureMap off = random_map(rng, {1, 2, 16, 16}, 0.0, 1.0);
    const int k = uniform_int(rng, 1, 10);
    const double thresh = std::array{0.0, 0.25, 0.5, 0.75}[uniform_int(rng, 0, 3)];
    const auto got = decode_boxes(heat, wh, off, 4, k, thresh);
    const auto want = ref_decode(heat, wh, off, 4, k, thresh);
    boxes += got.size();
    if (!same_boxes(got, want)) ++mismatches;
  }
  r.passed = mismatches == 0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d heatmaps 16x16 (%d with tie plateaus), %zu boxes, "
                "%d mismatches",
                cases, plateau_cases, boxes, mismatches);
  r.detail = buf;
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult loss_constants(const AcceptanceOptions& opts) {
  CriterionResult r{6, "loss constants", false, "", 0.0};
  std::mt19937_64 rng(opts.seed + 6);
  const LossConfig cfg;
  bool defaults = cfg.tau1 == 1.0 && cfg.tau2 == 0.1 && cfg.tau3 == 1.0 &&
                  cfg.lambda1 == 1.0 && cfg.lambda2 == 1.0;
  bool exact = true;
  const auto unit = UncertaintyWeights::from_sigma(1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double conf = uniform(rng, 0, 5), off = uniform(rng, 0, 5),
                 wh = uniform(rng, 0, 5), dice = uniform(rng, 0, 1),
                 focal = uniform(rng, 0, 1);
    const double l_rec = rec_loss(conf, off, wh, cfg);
    const double l_res = res_loss(dice, focal, cfg);
    if (l_rec != conf + 0.1 * off + wh || l_res != dice + focal) exact = false;
    if (total_loss(l_rec, l_res, unit) != 0.5 * l_rec + 0.5 * l_res) exact = false;
  }
  r.passed = defaults && exact;
  r.detail = std::string("defaults tau=(1, 0.1, 1) lambda=(1, 1) ") +
             (defaults ? "ok" : "WRONG") +
             ", 1000 random draws total == 0.5 L_REC + 0.5 L_RES " +
             (exact ? "exactly" : "NOT exactly");
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult mept_criterion(const AcceptanceOptions&) {
  CriterionResult r{7, "mEPT", false, "", 0.0};
  const EnergyTrace trace = hand_energy_trace();
  const double base = mept({70.0}, trace);
  bool homogeneous = true;
  for (double s : {0.5, 2.0, 3.0, 10.0}) {
    EnergyTrace scaled = trace;
    for (auto& row : scaled.rows) {
      row.energy_trained *= s;
      row.energy_untrained *= s;
    }
    const double perf_scaled = mept({70.0 * s}, trace);
    const double energy_scaled = mept({70.0}, scaled);
    EnergyTrace tau = trace;
    tau.tau_evals = static_cast<int>(10 * s + 0.5);
    const double tau_scaled = mept({70.0}, tau);
    if (std::abs(perf_scaled - s * base) > 1e-12 * s * base ||
        std::abs(energy_scaled - base / s) > 1e-12 * base / s ||
        std::abs(tau_scaled - base * tau.tau() / 10.0) > 1e-12 * tau_scaled) {
      homogeneous = false;
    }
  }
  r.passed = std::abs(base - 2.5) <= 1e-9 && homogeneous;
  r.detail = fmt("hand trace (mean P 70, tau 10, sum diff 280) -> %.12g; ", base) +
             "scaling perf/energy/tau " +
             (homogeneous ? "homogeneous" : "NOT homogeneous");
  return r;
}

// ---------------------------------------------------------------------------

bool same_prediction(const Prediction& a, const Prediction& b) {
  return bitwise_equal(a.rec.heatmap, b.rec.heatmap) &&
         bitwise_equal(a.rec.wh, b.rec.wh) &&
         bitwise_equal(a.rec.offset, b.rec.offset) &&
         bitwise_equal(a.res.logits, b.res.logits) &&
         a.res.masks.at(0).bits == b.res.masks.at(0).bits &&
         same_boxes(a.boxes, b.boxes);
}

std::string pipeline_case(int size, std::uint64_t seed, bool& ok) {
  RunConfig cfg;
  cfg.input_size = size;
  const auto vocab = Vocabulary::from_tokens(fixture_vocabulary());
  const ModelParams model = ModelParams::random(cfg, vocab.size(), seed);
  std::mt19937_64 rng(seed);
  const FeatureMap image = random_map(rng, {1, 3, size, size}, 0.0, 1.0);
  const FeatureMap radar = random_map(rng, {1, 3, size, size}, 0.0, 1.0);
  const TokenSequence tokens =
      vocab.tokenize("the red boat near the bridge", cfg.text_len);
  const Prediction a = forward(model, image, radar, tokens);
  const Prediction b = forward(model, image, radar, tokens);
  const Shape4 heat{1, 1, size / 4, size / 4};
  const bool shapes = a.rec.heatmap.shape() == heat &&
                      a.res.logits.shape() == Shape4{1, 1, size, size} &&
                      a.res.masks.at(0).height == size &&
                      a.res.masks.at(0).width == size;
  const bool deterministic = same_prediction(a, b);
  ok = ok && shapes && deterministic;
  return std::to_string(size) + ": heatmap " + a.rec.heatmap.shape().str() +
         ", mask " + std::to_string(a.res.masks.at(0).height) + "x" +
         std::to_string(a.res.masks.at(0).width) +
         (deterministic ? ", bitwise deterministic" : ", NOT deterministic");
}

CriterionResult pipeline(const AcceptanceOptions& opts) {
  CriterionResult r{8, "end-to-end shape contract", false, "", 0.0};
  bool ok = true;
  r.detail = pipeline_case(64, opts.seed + 8, ok);
  if (opts.include_large) {
    r.detail += "; " + pipeline_case(640, opts.seed + 8, ok);
  } else {
    r.detail += "; 640 skipped (quick mode)";
  }
  r.passed = ok;
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult metric_sanity(const AcceptanceOptions& opts) {
  CriterionResult r{9, "metric sanity", false, "", 0.0};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("nmvg_accept_" + std::to_string(opts.seed) + "_" +
                        std::to_string(Clock::now().time_since_epoch().count()));
  write_eval_set(make_eval_samples(8, 64, opts.seed + 9), dir);
  const auto gt = load_eval_set(dir);
  const EvalResult self = evaluate(gt, gt);
  fs::remove_all(dir);

  // One gt, one prediction at IoU exactly 0.6: matched at 0.50, 0.55, 0.60.
  const DetectionBox g{5.0, 5.0, 10.0, 10.0, 1.0};
  const DetectionBox p{5.0, 7.5, 10.0, 10.0, 0.9};
  const EvalResult sweep = average_precision({{p}}, {{g}});

  // Random queries against the cutoff-enumeration oracle.
  std::mt19937_64 rng(opts.seed + 90);
  double worst = 0.0;
  for (int q = 0; q < 100; ++q) {
    std::vector<DetectionBox> preds, gts;
    for (int k = uniform_int(rng, 1, 5); k > 0; --k) {
      gts.push_back({uniform(rng, 10, 50), uniform(rng, 10, 50),
                     uniform(rng, 4, 20), uniform(rng, 4, 20), 1.0});
    }
    for (int k = uniform_int(rng, 1, 8); k > 0; --k) {
      const auto& base = gts[uniform_int(rng, 0, int(gts.size()) - 1)];
      preds.push_back({base.cx + uniform(rng, -3, 3), base.cy + uniform(rng, -3, 3),
                       base.w * uniform(rng, 0.7, 1.3),
                       base.h * uniform(rng, 0.7, 1.3),
                       uniform_int(rng, 1, 6) / 6.0});
    }
    for (double t : coco_iou_thresholds()) {
      worst = std::max(worst, std::abs(*query_average_precision(preds, gts, t) -
                                       ref_query_ap(preds, gts, t)));
    }
  }
  r.passed = self.ap50 == 100.0 && self.miou == 100.0 &&
             std::abs(sweep.ap50_95 - 30.0) <= 1e-9 && sweep.ap50 == 100.0 &&
             worst <= 1e-12;
  r.detail = fmt("self-match AP50 %.4g mIoU %.4g; IoU-0.6 sweep AP50:95 %.6g",
                 self.ap50, self.miou, sweep.ap50_95) +
             fmt("; 100 random queries vs enumeration oracle max diff %.3g",
                 worst);
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opts) {
  using Fn = CriterionResult (*)(const AcceptanceOptions&);
  static constexpr Fn kCriteria[kCriterionCount] = {
      reparameterization, gradients,     equation_fidelity,
      degenerate,         decode_oracle, loss_constants,
      mept_criterion,     pipeline,      metric_sanity};
  require(id >= 1 && id <= kCriterionCount, ErrorCode::kInvalidArgument,
          "no acceptance criterion " + std::to_string(id));
  const auto start = Clock::now();
  CriterionResult r;
  try {
    r = kCriteria[id - 1](opts);
  } catch (const std::exception& e) {
    r.id = id;
    r.title = "criterion " + std::to_string(id);
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  // Wall-clock budgets: 10 s for criterion 1, 30 s for criterion 2.
  if (r.id == 1 && r.seconds >= 10.0) {
    r.passed = false;
    r.detail += " [over 10 s budget]";
  }
  if (r.id == 2 && r.seconds >= 30.0) {
    r.passed = false;
    r.detail += " [over 30 s budget]";
  }
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    out.push_back(run_criterion(id, opts));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.2f s)", r.seconds);
  return std::string(r.passed ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) +
         " " + r.title + ": " + r.detail + buf;
}

bool report(const std::vector<CriterionResult>& results, std::ostream& out) {
  bool all = true;
  for (const auto& r : results) {
    out << format_result(r) << "\n";
    all = all && r.passed;
  }
  int passed = 0;
  for (const auto& r : results) passed += r.passed ? 1 : 0;
  out << passed << "/" << results.size() << " criteria passed\n";
  return all;
}

}  // namespace nanomvg::verify
