#include "nanomvg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nanomvg/error.hpp"
#include "nanomvg/kv.hpp"

namespace nanomvg {

void LossConfig::validate() const {
  for (double e : {alpha_conf, beta_conf, alpha_res, gamma_res}) {
    require(e >= 0.0, ErrorCode::kInvalidArgument,
            "loss exponents must be non-negative");
  }
  require(dice_eps >= 0.0, ErrorCode::kInvalidArgument,
          "dice_eps must be non-negative");
}

void LossConfig::set(const std::string& key, double value) {
  if (key == "alpha_conf") alpha_conf = value;
  else if (key == "beta_conf") beta_conf = value;
  else if (key == "tau1") tau1 = value;
  else if (key == "tau2") tau2 = value;
  else if (key == "tau3") tau3 = value;
  else if (key == "alpha_res") alpha_res = value;
  else if (key == "gamma_res") gamma_res = value;
  else if (key == "lambda1") lambda1 = value;
  else if (key == "lambda2") lambda2 = value;
  else if (key == "dice_eps") dice_eps = value;
  else fail(ErrorCode::kParse, "unknown loss config key '" + key + "'");
}

LossConfig LossConfig::parse(const std::string& text) {
  LossConfig cfg;
  for (const auto& [key, value] : parse_key_values(text)) {
    cfg.set(key, parse_double(key, value));
  }
  cfg.validate();
  return cfg;
}

LossConfig LossConfig::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

double gaussian_radius(double height, double width, double min_overlap) {
  const double a1 = 1.0;
  const double b1 = height + width;
  const double c1 = width * height * (1.0 - min_overlap) / (1.0 + min_overlap);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * a1 * c1)) / 2.0;

  const double a2 = 4.0;
  const double b2 = 2.0 * (height + width);
  const double c2 = (1.0 - min_overlap) * width * height;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / 2.0;

  const double a3 = 4.0 * min_overlap;
  const double b3 = -2.0 * min_overlap * (height + width);
  const double c3 = (min_overlap - 1.0) * width * height;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0;
  return std::min({r1, r2, r3});
}

HeatmapTarget gaussian_target(const std::vector<GridPoint>& centers,
                              const std::vector<GridSize>& sizes, int height,
                              int width) {
  require(centers.size() == sizes.size(), ErrorCode::kShapeMismatch,
          "gaussian_target: centers and sizes differ in count");
  require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
          "gaussian_target: empty grid");
  HeatmapTarget t;
  t.height = height;
  t.width = width;
  t.y.assign(static_cast<std::size_t>(height) * width, 0.0);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double cx = std::floor(centers[k].x);
    const double cy = std::floor(centers[k].y);
    require(cx >= 0 && cx < width && cy >= 0 && cy < height,
            ErrorCode::kInvalidArgument,
            "gaussian_target: center (" + std::to_string(centers[k].x) + ", " +
                std::to_string(centers[k].y) + ") outside " +
                std::to_string(width) + "x" + std::to_string(height) + " grid");
    const double radius =
        std::max(0.0, std::floor(gaussian_radius(sizes[k].h, sizes[k].w)));
    const double sigma = radius / 3.0;
    t.centers.push_back({cx, cy});
    t.radius.push_back(radius);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        double v;
        if (d2 == 0.0) {
          v = 1.0;
        } else if (sigma > 0.0) {
          v = std::exp(-d2 / (2.0 * sigma * sigma));
        } else {
          v = 0.0;
        }
        double& cell = t.y[static_cast<std::size_t>(y) * width + x];
        cell = std::max(cell, v);
      }
    }
  }
  return t;
}

LossResult conf_loss(std::span<const double> pred,
                     std::span<const double> target, const LossConfig& cfg) {
  require(pred.size() == target.size(), ErrorCode::kShapeMismatch,
          "conf_loss: prediction and target sizes differ");
  cfg.validate();
  const double a = cfg.alpha_conf;
  const double b = cfg.beta_conf;
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  const double positives = static_cast<double>(
      std::count(target.begin(), target.end(), 1.0));
  const double inv_n = 1.0 / std::max(positives, 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double p = pred[i];
    bool clamped = false;
    if (p < kProbClamp || p > 1.0 - kProbClamp) {
      p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      clamped = true;
      ++r.clamped;
    }
    double g;
    if (target[i] == 1.0) {
      sum += std::pow(1.0 - p, a) * std::log(p);
      g = (a * std::pow(1.0 - p, a - 1.0) * std::log(p) -
           std::pow(1.0 - p, a) / p) *
          inv_n;
    } else {
      const double w = std::pow(1.0 - target[i], b);
      sum += w * std::pow(p, a) * std::log(1.0 - p);
      g = -w *
          (a * std::pow(p, a - 1.0) * std::log(1.0 - p) -
           std::pow(p, a) / (1.0 - p)) *
          inv_n;
    }
    r.grad[i] = clamped ? 0.0 : g;
  }
  r.value = -sum * inv_n;
  return r;
}

LossResult offset_loss(std::span<const double> pred, int height, int width,
                       const std::vector<GridPoint>& centers_px, int R) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  require(pred.size() == 2 * plane, ErrorCode::kShapeMismatch,
          "offset_loss: prediction must be a (2, h, w) map");
  require(R > 0, ErrorCode::kInvalidArgument,
          "offset_loss: downsample ratio must be positive");
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  if (centers_px.empty()) return r;
  const double inv = 1.0 / (2.0 * centers_px.size());
  double sum = 0.0;
  for (const GridPoint& p : centers_px) {
    const double fx = p.x / R;
    const double fy = p.y / R;
    const double cx = std::floor(fx);
    const double cy = std::floor(fy);
    require(cx >= 0 && cx < width && cy >= 0 && cy < height,
            ErrorCode::kInvalidArgument,
            "offset_loss: center (" + std::to_string(p.x) + ", " +
                std::to_string(p.y) + ") maps outside the grid");
    const std::size_t cell = static_cast<std::size_t>(cy) * width +
                             static_cast<std::size_t>(cx);
    const double targets[2] = {fx - cx, fy - cy};
    for (int k = 0; k < 2; ++k) {
      const double diff = pred[k * plane + cell] - targets[k];
      sum += std::abs(diff);
      r.grad[k * plane + cell] += (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * inv;
    }
  }
  r.value = sum * inv;
  return r;
}

namespace {

constexpr double kAspectScale = 4.0 / (std::numbers::pi * std::numbers::pi);

struct CiouEval {
  double value;
  double grad[4];  // d CIoU / d (cx, cy, w, h)
};

void require_positive_box(const BoxCWH& b, const char* what) {
  require(b.w > 0.0 && b.h > 0.0, ErrorCode::kInvalidArgument,
          std::string("ciou: ") + what + " box has non-positive size " +
              std::to_string(b.w) + "x" + std::to_string(b.h));
}

CiouEval ciou_eval(const BoxCWH& p, const BoxCWH& g) {
  const double px1 = p.cx - p.w / 2, px2 = p.cx + p.w / 2;
  const double py1 = p.cy - p.h / 2, py2 = p.cy + p.h / 2;
  const double gx1 = g.cx - g.w / 2, gx2 = g.cx + g.w / 2;
  const double gy1 = g.cy - g.h / 2, gy2 = g.cy + g.h / 2;

  // Corner-space derivatives, order (x1, x2, y1, y2).
  const double iw_raw = std::min(px2, gx2) - std::max(px1, gx1);
  const double ih_raw = std::min(py2, gy2) - std::max(py1, gy1);
  const double iw = std::max(iw_raw, 0.0);
  const double ih = std::max(ih_raw, 0.0);
  const double diw[4] = {iw_raw > 0 && px1 > gx1 ? -1.0 : 0.0,
                         iw_raw > 0 && px2 < gx2 ? 1.0 : 0.0, 0.0, 0.0};
  const double dih[4] = {0.0, 0.0, ih_raw > 0 && py1 > gy1 ? -1.0 : 0.0,
                         ih_raw > 0 && py2 < gy2 ? 1.0 : 0.0};
  const double inter = iw * ih;
  const double uni = p.w * p.h + g.w * g.h - inter;
  const double iou = inter / uni;
  const double darea[4] = {-p.h, p.h, -p.w, p.w};

  const double cw = std::max(px2, gx2) - std::min(px1, gx1);
  const double ch = std::max(py2, gy2) - std::min(py1, gy1);
  const double dcw[4] = {px1 < gx1 ? -1.0 : 0.0, px2 > gx2 ? 1.0 : 0.0, 0.0,
                         0.0};
  const double dch[4] = {0.0, 0.0, py1 < gy1 ? -1.0 : 0.0,
                         py2 > gy2 ? 1.0 : 0.0};
  const double c2 = cw * cw + ch * ch;
  const double dx = p.cx - g.cx;
  const double dy = p.cy - g.cy;
  const double rho2 = dx * dx + dy * dy;
  const double drho2[4] = {dx, dx, dy, dy};

  const double angle_diff = std::atan(g.w / g.h) - std::atan(p.w / p.h);
  const double v = kAspectScale * angle_diff * angle_diff;
  const double r2 = p.w * p.w + p.h * p.h;
  const double dv_dw = -2.0 * kAspectScale * angle_diff * (p.h / r2);
  const double dv_dh = -2.0 * kAspectScale * angle_diff * (-p.w / r2);
  const double dv[4] = {-dv_dw, dv_dw, -dv_dh, dv_dh};

  const double denom = 1.0 - iou + v;
  double trade = 0.0, dtrade_dv = 0.0, dtrade_diou = 0.0;
  if (denom > 0.0) {
    trade = v * v / denom;
    dtrade_dv = (2.0 * v * denom - v * v) / (denom * denom);
    dtrade_diou = v * v / (denom * denom);
  }

  CiouEval out;
  out.value = iou - rho2 / c2 - trade;
  double dcorner[4];
  for (int i = 0; i < 4; ++i) {
    const double dinter = ih * diw[i] + iw * dih[i];
    const double duni = darea[i] - dinter;
    const double diou = (dinter * uni - inter * duni) / (uni * uni);
    const double dc2 = 2.0 * cw * dcw[i] + 2.0 * ch * dch[i];
    const double dpenalty = (drho2[i] * c2 - rho2 * dc2) / (c2 * c2);
    dcorner[i] = diou - dpenalty - (dtrade_dv * dv[i] + dtrade_diou * diou);
  }
  out.grad[0] = dcorner[0] + dcorner[1];
  out.grad[1] = dcorner[2] + dcorner[3];
  out.grad[2] = 0.5 * (dcorner[1] - dcorner[0]);
  out.grad[3] = 0.5 * (dcorner[3] - dcorner[2]);
  return out;
}

}  // namespace

double ciou(const BoxCWH& pred, const BoxCWH& gt) {
  require_positive_box(pred, "predicted");
  require_positive_box(gt, "ground-truth");
  return ciou_eval(pred, gt).value;
}

LossResult ciou_wh_loss(std::span<const BoxCWH> pred,
                        std::span<const BoxCWH> gt) {
  require(pred.size() == gt.size(), ErrorCode::kShapeMismatch,
          "ciou_wh_loss: prediction and target counts differ");
  LossResult r;
  r.grad.assign(pred.size() * 4, 0.0);
  if (pred.empty()) return r;
  const double inv = 1.0 / pred.size();
  for (std::size_t k = 0; k < pred.size(); ++k) {
    require_positive_box(gt[k], "ground-truth");
    require_positive_box(pred[k], "predicted");
    const CiouEval e = ciou_eval(pred[k], gt[k]);
    r.value += (1.0 - e.value) * inv;
    for (int i = 0; i < 4; ++i) r.grad[4 * k + i] = -e.grad[i] * inv;
  }
  return r;
}

LossResult dice_loss(std::span<const double> prob, std::span<const double> gt,
                     double eps) {
  require(!prob.empty(), ErrorCode::kInvalidArgument, "dice_loss: empty input");
  require(prob.size() == gt.size(), ErrorCode::kShapeMismatch,
          "dice_loss: prediction and target sizes differ");
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    inter += prob[i] * gt[i];
    sum_p += prob[i];
    sum_g += gt[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sum_p + sum_g + eps;
  LossResult r;
  r.value = 1.0 - num / den;
  r.grad.resize(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    r.grad[i] = -(2.0 * gt[i] * den - num) / (den * den);
  }
  return r;
}

LossResult focal_seg_loss(std::span<const double> prob,
                          std::span<const double> gt, const LossConfig& cfg) {
  require(!prob.empty(), ErrorCode::kInvalidArgument,
          "focal_seg_loss: empty input");
  require(prob.size() == gt.size(), ErrorCode::kShapeMismatch,
          "focal_seg_loss: prediction and target sizes differ");
  cfg.validate();
  const double a = cfg.alpha_res;
  const double gm = cfg.gamma_res;
  const double inv = 1.0 / prob.size();
  LossResult r;
  r.grad.assign(prob.size(), 0.0);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    double p = prob[i];
    bool clamped = false;
    if (p < kProbClamp || p > 1.0 - kProbClamp) {
      p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      clamped = true;
      ++r.clamped;
    }
    const bool fg = gt[i] >= 0.5;
    const double pt = fg ? p : 1.0 - p;
    r.value += -a * std::pow(1.0 - pt, gm) * std::log(pt) * inv;
    // d/dpt of -a (1 - pt)^g log(pt)
    const double dpt = a * gm * std::pow(1.0 - pt, gm - 1.0) * std::log(pt) -
                       a * std::pow(1.0 - pt, gm) / pt;
    r.grad[i] = clamped ? 0.0 : (fg ? dpt : -dpt) * inv;
  }
  return r;
}

UncertaintyWeights UncertaintyWeights::from_sigma(double sigma1, double sigma2) {
  require(sigma1 > 0.0 && sigma2 > 0.0, ErrorCode::kInvalidArgument,
          "uncertainty weights: sigma must be positive");
  return from_log_sigma(std::log(sigma1), std::log(sigma2));
}

UncertaintyWeights UncertaintyWeights::from_log_sigma(double log_sigma1,
                                                      double log_sigma2) {
  require(std::isfinite(log_sigma1) && std::isfinite(log_sigma2),
          ErrorCode::kInvalidArgument,
          "uncertainty weights: log sigma must be finite");
  UncertaintyWeights u;
  u.log_sigma1_ = log_sigma1;
  u.log_sigma2_ = log_sigma2;
  return u;
}

double UncertaintyWeights::sigma1() const { return std::exp(log_sigma1_); }
double UncertaintyWeights::sigma2() const { return std::exp(log_sigma2_); }

double rec_loss(double conf, double offset, double wh, const LossConfig& cfg) {
  return cfg.tau1 * conf + cfg.tau2 * offset + cfg.tau3 * wh;
}

double res_loss(double dice, double focal, const LossConfig& cfg) {
  return cfg.lambda1 * dice + cfg.lambda2 * focal;
}

double total_loss(double l_rec, double l_res, const UncertaintyWeights& u) {
  const double s1 = u.sigma1();
  const double s2 = u.sigma2();
  return l_rec / (2.0 * s1 * s1) + l_res / (2.0 * s2 * s2) + u.log_sigma1() +
         u.log_sigma2();
}

}  // namespace nanomvg
