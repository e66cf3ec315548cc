#include "nanomvg/verify/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "nanomvg/error.hpp"
#include "nanomvg/metrics.hpp"

namespace nanomvg::verify {

namespace {

double ref_sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Zero outside the plane.
double ref_bilinear(const RefMap& x, int n, int c, double y, double xx) {
  const double fy = std::floor(y);
  const double fx = std::floor(xx);
  const double wy = y - fy;
  const double wx = xx - fx;
  double total = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int r = static_cast<int>(fy) + dy;
      const int col = static_cast<int>(fx) + dx;
      if (r < 0 || r >= x.h || col < 0 || col >= x.w) continue;
      const double weight = (dy ? wy : 1.0 - wy) * (dx ? wx : 1.0 - wx);
      total += weight * x.at(n, c, r, col);
    }
  }
  return total;
}

RefMap ref_deform(const RefMap& x, const RefMap& offsets, const ConvParams& p) {
  const int kh = p.kernel.h(), kw = p.kernel.w();
  const int out_h = (x.h + 2 * p.padding - kh) / p.stride + 1;
  const int out_w = (x.w + 2 * p.padding - kw) / p.stride + 1;
  const int cout = p.kernel.n();
  const int cin_g = p.kernel.c();
  const int cout_g = cout / p.groups;
  RefMap y(x.n, cout, out_h, out_w);
  for (int n = 0; n < x.n; ++n)
    for (int oc = 0; oc < cout; ++oc)
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          double acc = p.bias.empty() ? 0.0 : p.bias[oc];
          for (int icg = 0; icg < cin_g; ++icg) {
            const int ic = (oc / cout_g) * cin_g + icg;
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int tap = ky * kw + kx;
                const double sy = oy * p.stride - p.padding + ky +
                                  offsets.at(n, 2 * tap, oy, ox);
                const double sx = ox * p.stride - p.padding + kx +
                                  offsets.at(n, 2 * tap + 1, oy, ox);
                acc += p.kernel.at(oc, icg, ky, kx) *
                       ref_bilinear(x, n, ic, sy, sx);
              }
          }
          y.at(n, oc, oy, ox) = acc;
        }
  return y;
}

RefMap ref_sobel(const RefMap& x) {
  const int gx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  RefMap y(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) {
          double sx = 0.0, sy = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const int rr = r + i - 1, cc = col + j - 1;
              if (rr < 0 || rr >= x.h || cc < 0 || cc >= x.w) continue;
              const double v = x.at(n, c, rr, cc);
              sx += gx[i][j] * v;
              sy += gx[j][i] * v;  // Gy is the transpose of Gx
            }
          y.at(n, c, r, col) = std::hypot(sx, sy);
        }
  return y;
}

template <typename F>
RefMap map_each(RefMap x, F f) {
  for (double& v : x.v) v = f(v);
  return x;
}

}  // namespace

RefMap::RefMap(int n_, int c_, int h_, int w_, double fill)
    : n(n_), c(c_), h(h_), w(w_),
      v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

RefMap RefMap::from(const FeatureMap& m) {
  RefMap r(m.n(), m.c(), m.h(), m.w());
  auto d = m.data();
  std::copy(d.begin(), d.end(), r.v.begin());
  return r;
}

double max_abs_diff(const FeatureMap& a, const RefMap& b) {
  require(a.n() == b.n && a.c() == b.c && a.h() == b.h && a.w() == b.w,
          ErrorCode::kShapeMismatch, "max_abs_diff: shapes differ");
  double worst = 0.0;
  auto d = a.data();
  for (std::size_t i = 0; i < b.v.size(); ++i) {
    const double diff = std::abs(static_cast<double>(d[i]) - b.v[i]);
    if (!(diff <= worst)) worst = diff;  // NaN propagates as failure
  }
  return worst;
}

double max_abs(const RefMap& a) {
  double m = 0.0;
  for (double v : a.v) m = std::max(m, std::abs(v));
  return m;
}

RefMap ref_conv2d(const RefMap& x, const ConvParams& p) {
  const int kh = p.kernel.h(), kw = p.kernel.w();
  const int out_h = (x.h + 2 * p.padding - kh) / p.stride + 1;
  const int out_w = (x.w + 2 * p.padding - kw) / p.stride + 1;
  const int cout = p.kernel.n();
  const int cin_g = p.kernel.c();
  const int cout_g = cout / p.groups;
  RefMap y(x.n, cout, out_h, out_w);
  for (int n = 0; n < x.n; ++n)
    for (int oc = 0; oc < cout; ++oc)
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          double acc = p.bias.empty() ? 0.0 : p.bias[oc];
          for (int icg = 0; icg < cin_g; ++icg) {
            const int ic = (oc / cout_g) * cin_g + icg;
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * p.stride - p.padding + ky;
                const int ix = ox * p.stride - p.padding + kx;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                acc += p.kernel.at(oc, icg, ky, kx) * x.at(n, ic, iy, ix);
              }
          }
          y.at(n, oc, oy, ox) = acc;
        }
  return y;
}

RefMap ref_batchnorm(const RefMap& x, const BNParams& p) {
  RefMap y = x;
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const double inv =
          1.0 / std::sqrt(static_cast<double>(p.running_var[c]) + p.epsilon);
      for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) {
          y.at(n, c, r, col) =
              p.gamma[c] * (x.at(n, c, r, col) - p.running_mean[c]) * inv +
              p.beta[c];
        }
    }
  return y;
}

RefMap ref_add(const RefMap& a, const RefMap& b) {
  RefMap y = a;
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += b.v[i];
  return y;
}

RefMap ref_msrep(const RefMap& x, const MsRepParams& p) {
  if (p.mode == RepMode::kFused) return ref_conv2d(x, *p.fused);
  return ref_add(ref_add(ref_batchnorm(ref_conv2d(x, p.conv3), p.bn3),
                         ref_batchnorm(ref_conv2d(x, p.conv1), p.bn1)),
                 ref_batchnorm(x, p.bn_id));
}

RefMap ref_tmdf(const RefMap& f_img, const RefMap& f_radar,
                const RefMap& f_text, const TmdfParams& p, bool normalize) {
  const int N = f_img.n, C = f_img.c, H = f_img.h, W = f_img.w;
  const int E = f_text.c, L = f_text.w;

  // Image and radar alignment; the radar path is gated per channel.
  const RefMap img = ref_conv2d(f_img, p.w_img);
  RefMap rad = ref_conv2d(f_radar, p.w_radar);
  for (int n = 0; n < N; ++n) {
    std::vector<double> mean(C, 0.0);
    for (int c = 0; c < C; ++c) {
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) mean[c] += rad.at(n, c, y, x);
      mean[c] /= H * W;
    }
    for (int c = 0; c < C; ++c) {
      double z = 0.0;
      for (int t = 0; t < p.eca.k; ++t) {
        const int src = c - p.eca.k / 2 + t;
        if (src >= 0 && src < C) z += p.eca.weights[t] * mean[src];
      }
      const double gate = ref_sigmoid(z);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) rad.at(n, c, y, x) *= gate;
    }
  }

  // Sum, deformable conv, learnable position encoding.
  const RefMap sum = ref_add(img, rad);
  const RefMap offsets = ref_conv2d(sum, p.deform.offset_conv);
  RefMap fused = ref_deform(sum, offsets, p.deform.main_kernel);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) fused.at(n, c, y, x) += p.lpe.at(0, c, y, x);

  // Text: sinusoidal APE, affine projection, 1x3 stride-2 max pooling.
  const int Lp = (L - 3) / 2 + 1;
  RefMap out(N, C, H, W);
  for (int n = 0; n < N; ++n) {
    std::vector<double> proj(static_cast<std::size_t>(C) * L);
    for (int l = 0; l < L; ++l) {
      for (int c = 0; c < C; ++c) {
        double acc = p.b_text[c];
        for (int e = 0; e < E; ++e) {
          const double rate = std::pow(10000.0, -(e - e % 2) / double(E));
          const double ape = e % 2 ? std::cos(l * rate) : std::sin(l * rate);
          acc += p.w_text[static_cast<std::size_t>(c) * E + e] *
                 (f_text.at(n, e, 0, l) + ape);
        }
        proj[static_cast<std::size_t>(c) * L + l] = acc;
      }
    }
    std::vector<double> kv(static_cast<std::size_t>(C) * Lp);
    for (int c = 0; c < C; ++c)
      for (int j = 0; j < Lp; ++j) {
        double m = proj[static_cast<std::size_t>(c) * L + 2 * j];
        for (int t = 1; t < 3; ++t)
          m = std::max(m, proj[static_cast<std::size_t>(c) * L + 2 * j + t]);
        kv[static_cast<std::size_t>(c) * Lp + j] = m;
      }

    // Scaled dot-product against every query position, reshaped back.
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        std::vector<double> sim(Lp, 0.0);
        for (int j = 0; j < Lp; ++j) {
          for (int c = 0; c < C; ++c)
            sim[j] += fused.at(n, c, y, x) * kv[static_cast<std::size_t>(c) * Lp + j];
          sim[j] /= std::sqrt(double(C));
        }
        if (normalize) {
          double total = 0.0;
          const double top = *std::max_element(sim.begin(), sim.end());
          for (double& s : sim) total += (s = std::exp(s - top));
          for (double& s : sim) s /= total;
        }
        for (int c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int j = 0; j < Lp; ++j)
            acc += sim[j] * kv[static_cast<std::size_t>(c) * Lp + j];
          out.at(n, c, y, x) = acc;
        }
      }
  }
  return out;
}

RefMap ref_enmoe(const RefMap& f_o, const EnMoeParams& p) {
  auto silu = [](double v) { return v * ref_sigmoid(v); };
  const RefMap f_h = map_each(
      ref_batchnorm(ref_conv2d(ref_sobel(f_o), p.edge_conv), p.edge_bn), silu);
  const RefMap f_l =
      map_each(ref_batchnorm(ref_conv2d(f_o, p.nbr_conv), p.nbr_bn), silu);
  const RefMap w_h = map_each(ref_conv2d(f_h, p.gate_h), ref_sigmoid);
  const RefMap w_l = map_each(ref_conv2d(f_l, p.gate_l), ref_sigmoid);
  const RefMap proj = ref_conv2d(f_o, p.w_o);
  const double t1 = ref_sigmoid(p.theta1_raw);
  const double t2 = ref_sigmoid(p.theta2_raw);
  RefMap out = f_o;
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    out.v[i] += t1 * w_h.v[i] * proj.v[i] + t2 * w_l.v[i] * proj.v[i];
  }
  return out;
}

RefMap ref_upsample(const RefMap& x, int factor, bool bilinear) {
  RefMap y(x.n, x.c, x.h * factor, x.w * factor);
  auto source = [&](int i, int len, int& lo, int& hi, double& frac) {
    const double s = std::clamp((i + 0.5) / factor - 0.5, 0.0, double(len - 1));
    lo = static_cast<int>(std::floor(s));
    hi = std::min(lo + 1, len - 1);
    frac = s - lo;
  };
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int r = 0; r < y.h; ++r)
        for (int col = 0; col < y.w; ++col) {
          if (!bilinear) {
            y.at(n, c, r, col) = x.at(n, c, r / factor, col / factor);
            continue;
          }
          int y0, y1, x0, x1;
          double fy, fx;
          source(r, x.h, y0, y1, fy);
          source(col, x.w, x0, x1, fx);
          y.at(n, c, r, col) =
              (1 - fy) * ((1 - fx) * x.at(n, c, y0, x0) + fx * x.at(n, c, y0, x1)) +
              fy * ((1 - fx) * x.at(n, c, y1, x0) + fx * x.at(n, c, y1, x1));
        }
  return y;
}

std::array<RefMap, 4> ref_fpn(const std::array<RefMap, 4>& c,
                              const FpnParams& p) {
  std::array<RefMap, 4> merged, out;
  merged[3] = ref_conv2d(c[3], p.lateral[3]);
  for (int i = 2; i >= 0; --i) {
    merged[i] = ref_add(ref_conv2d(c[i], p.lateral[i]),
                        ref_upsample(merged[i + 1], 2, false));
  }
  for (int i = 0; i < 4; ++i) out[i] = ref_conv2d(merged[i], p.smooth[i]);
  return out;
}

RefRecOutput ref_rec_head(const RefMap& feat, const RecHeadParams& p) {
  auto relu = [](double v) { return v > 0 ? v : 0.0; };
  auto branch = [&](const RecBranch& b) {
    RefMap t = map_each(ref_batchnorm(ref_conv2d(feat, b.dw), b.dw_bn), relu);
    t = map_each(ref_batchnorm(ref_conv2d(t, b.pw), b.pw_bn), relu);
    return ref_conv2d(t, b.proj);
  };
  return {map_each(branch(p.conf), ref_sigmoid), branch(p.wh), branch(p.offset)};
}

RefMap ref_res_head(const std::array<RefMap, 4>& pyramid,
                    const ResHeadParams& p, int image_h) {
  RefMap d = ref_conv2d(pyramid[3], p.d5);
  for (int i = 0; i < 3; ++i) {
    RefMap t = ref_add(ref_msrep(d, p.msrep[i]), d);
    for (double& v : t.v) v = std::max(v, 0.0);
    d = ref_add(pyramid[2 - i], ref_upsample(t, 2, false));
  }
  return ref_upsample(ref_conv2d(d, p.proj), image_h / pyramid[0].h, true);
}

std::vector<DetectionBox> ref_decode(const FeatureMap& heatmap,
                                     const FeatureMap& wh,
                                     const FeatureMap& offset, int R, int k,
                                     double score_thresh) {
  const int h = heatmap.h(), w = heatmap.w();
  struct Peak {
    double score;
    int index;
  };
  std::vector<Peak> peaks;
  for (int index = 0; index < h * w; ++index) {
    const int y = index / w, x = index % w;
    const double s = heatmap.at(0, 0, y, x);
    if (s < score_thresh) continue;
    bool keep = true;
    for (int other = 0; other < h * w && keep; ++other) {
      const int oy = other / w, ox = other % w;
      if (other == index || std::abs(oy - y) > 1 || std::abs(ox - x) > 1) {
        continue;
      }
      const double o = heatmap.at(0, 0, oy, ox);
      if (o > s || (o == s && other < index)) keep = false;
    }
    if (keep) peaks.push_back({s, index});
  }
  // Selection sort by (score desc, index asc): slow and obviously right.
  std::vector<DetectionBox> out;
  while (!peaks.empty() && static_cast<int>(out.size()) < k) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < peaks.size(); ++i) {
      if (peaks[i].score > peaks[best].score ||
          (peaks[i].score == peaks[best].score &&
           peaks[i].index < peaks[best].index)) {
        best = i;
      }
    }
    const int y = peaks[best].index / w, x = peaks[best].index % w;
    DetectionBox b;
    b.cx = (x + static_cast<double>(offset.at(0, 0, y, x))) * R;
    b.cy = (y + static_cast<double>(offset.at(0, 1, y, x))) * R;
    b.w = std::max(static_cast<double>(wh.at(0, 0, y, x)) * R, kMinBoxSide);
    b.h = std::max(static_cast<double>(wh.at(0, 1, y, x)) * R, kMinBoxSide);
    b.score = peaks[best].score;
    out.push_back(b);
    peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

double ref_query_ap(const std::vector<DetectionBox>& preds,
                    const std::vector<DetectionBox>& gts, double iou_threshold) {
  if (preds.empty() || gts.empty()) return 0.0;
  std::vector<DetectionBox> sorted = preds;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  // For each cutoff, re-run the matching on the prefix from scratch.
  std::vector<double> precision, recall;
  for (std::size_t cut = 1; cut <= sorted.size(); ++cut) {
    std::vector<bool> used(gts.size(), false);
    int tp = 0;
    for (std::size_t i = 0; i < cut; ++i) {
      int pick = -1;
      double pick_iou = -1.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g]) continue;
        const double iou = box_iou(sorted[i], gts[g]);
        if (iou >= iou_threshold && iou > pick_iou) {
          pick = static_cast<int>(g);
          pick_iou = iou;
        }
      }
      if (pick >= 0) {
        used[pick] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / cut);
    recall.push_back(static_cast<double>(tp) / gts.size());
  }
  double sum = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    double best = 0.0;
    for (std::size_t j = 0; j < precision.size(); ++j) {
      if (recall[j] >= r) best = std::max(best, precision[j]);
    }
    sum += best;
  }
  return sum / 101.0;
}

GradCheck check_gradient(const std::function<double(std::span<const double>)>& f,
                         std::vector<double> x, std::span<const double> grad,
                         double step,
                         const std::function<bool(std::size_t)>& skip) {
  require(grad.size() == x.size(), ErrorCode::kShapeMismatch,
          "check_gradient: gradient size differs from input size");
  GradCheck out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (skip && skip(i)) continue;
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-12});
    const double rel = std::abs(numeric - grad[i]) / scale;
    if (!(rel <= out.max_rel_error)) out.max_rel_error = rel;
    ++out.checked;
  }
  return out;
}

void fill_uniform(std::mt19937_64& rng, std::span<float> data, double lo,
                  double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (float& v : data) v = static_cast<float>(dist(rng));
}

FeatureMap random_map(std::mt19937_64& rng, Shape4 shape, double lo,
                      double hi) {
  FeatureMap m(shape);
  fill_uniform(rng, m.data(), lo, hi);
  return m;
}

void RandomFill::visit(const std::string&, ParamKind kind,
                       std::span<float> data, const std::vector<int>&,
                       int fan_in) {
  switch (kind) {
    case ParamKind::kBnVar:
      fill_uniform(rng_, data, 0.25, 2.0);
      break;
    case ParamKind::kBnGamma:
      fill_uniform(rng_, data, 0.5, 1.5);
      break;
    case ParamKind::kWeight: {
      const double bound = 1.5 / std::sqrt(static_cast<double>(fan_in));
      fill_uniform(rng_, data, -bound, bound);
      break;
    }
    case ParamKind::kLogit:
      fill_uniform(rng_, data, -2.0, 2.0);
      break;
    default:
      fill_uniform(rng_, data, -0.5, 0.5);
  }
}

}  // namespace nanomvg::verify
