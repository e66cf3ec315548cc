#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nanomvg/tensor.hpp"

namespace nanomvg {

struct LossConfig {
  double alpha_conf = 2.0;  // focal exponent on the prediction
  double beta_conf = 4.0;   // penalty-reduction exponent on (1 - Y)
  double tau1 = 1.0;        // confidence
  double tau2 = 0.1;        // offset
  double tau3 = 1.0;        // size (CIoU)
  double alpha_res = 0.25;
  double gamma_res = 2.0;
  double lambda1 = 1.0;     // dice
  double lambda2 = 1.0;     // focal
  double dice_eps = 1.0;

  void validate() const;
  // `key = value` lines; '#' starts a comment. Unknown keys are rejected.
  static LossConfig parse(const std::string& text);
  static LossConfig load(const std::filesystem::path& path);
  void set(const std::string& key, double value);
};

// Loss value plus gradient with respect to every prediction element.
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
  std::size_t clamped = 0;  // predictions pulled into [1e-6, 1 - 1e-6]
};

inline constexpr double kProbClamp = 1e-6;

struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

struct GridSize {
  double w = 0.0;
  double h = 0.0;
};

struct HeatmapTarget {
  int height = 0;
  int width = 0;
  std::vector<double> y;             // row-major, values in [0, 1]
  std::vector<GridPoint> centers;    // integer cells
  std::vector<double> radius;        // per object
};

// Radius such that a box shifted within it keeps IoU >= min_overlap with
// the original (smallest root of the three corner cases).
double gaussian_radius(double height, double width, double min_overlap = 0.7);

// Centers / sizes in feature-grid units; centers are floored to cells.
// Per object: radius = max(0, floor(gaussian_radius)), sigma = radius / 3;
// radius 0 renders a single-cell peak.
HeatmapTarget gaussian_target(const std::vector<GridPoint>& centers,
                              const std::vector<GridSize>& sizes, int height,
                              int width);

// Penalty-reduced focal loss over the heatmap. N = number of cells with
// Y == 1 (floored at 1).
LossResult conf_loss(std::span<const double> pred, std::span<const double> target,
                     const LossConfig& cfg);

// L1 between the offset prediction at floor(p / R) and p / R - floor(p / R),
// averaged over 2 N components. `pred` is a (2, h, w) map, x plane first.
LossResult offset_loss(std::span<const double> pred, int height, int width,
                       const std::vector<GridPoint>& centers_px, int R);

struct BoxCWH {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Complete-IoU: IoU - rho^2 / c^2 - alpha v with
// v = 4/pi^2 (atan(wg/hg) - atan(w/h))^2 and alpha = v / (1 - IoU + v).
double ciou(const BoxCWH& pred, const BoxCWH& gt);

// Mean (1 - CIoU). grad is 4 entries (cx, cy, w, h) per predicted box.
// The trade-off factor alpha is differentiated like every other term.
LossResult ciou_wh_loss(std::span<const BoxCWH> pred, std::span<const BoxCWH> gt);

// 1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps).
LossResult dice_loss(std::span<const double> prob, std::span<const double> gt,
                     double eps = 1.0);

// Mean over pixels of -alpha (1 - p_t)^gamma log(p_t), p_t = p for
// foreground and 1 - p for background.
LossResult focal_seg_loss(std::span<const double> prob,
                          std::span<const double> gt, const LossConfig& cfg);

// sigma kept as log(sigma) so it stays positive.
class UncertaintyWeights {
 public:
  UncertaintyWeights() = default;
  static UncertaintyWeights from_sigma(double sigma1, double sigma2);
  static UncertaintyWeights from_log_sigma(double log_sigma1,
                                           double log_sigma2);

  double sigma1() const;
  double sigma2() const;
  double log_sigma1() const { return log_sigma1_; }
  double log_sigma2() const { return log_sigma2_; }

 private:
  double log_sigma1_ = 0.0;
  double log_sigma2_ = 0.0;
};

double rec_loss(double conf, double offset, double wh, const LossConfig& cfg);
double res_loss(double dice, double focal, const LossConfig& cfg);

// L_REC / (2 sigma1^2) + L_RES / (2 sigma2^2) + log sigma1 + log sigma2.
double total_loss(double l_rec, double l_res, const UncertaintyWeights& u);

}  // namespace nanomvg
