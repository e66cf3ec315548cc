#pragma once

// Naive double-precision reference implementations. They share no code with
// the runtime kernels beyond the parameter structs, so agreement between the
// two is evidence rather than tautology.

#include <array>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "nanomvg/enmoe.hpp"
#include "nanomvg/fpn.hpp"
#include "nanomvg/heads.hpp"
#include "nanomvg/tmdf.hpp"

namespace nanomvg::verify {

struct RefMap {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  RefMap() = default;
  RefMap(int n_, int c_, int h_, int w_, double fill = 0.0);
  static RefMap from(const FeatureMap& m);

  double& at(int i, int ch, int y, int x) {
    return v[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
  double at(int i, int ch, int y, int x) const {
    return v[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
};

double max_abs_diff(const FeatureMap& a, const RefMap& b);
double max_abs(const RefMap& a);

RefMap ref_conv2d(const RefMap& x, const ConvParams& p);
RefMap ref_batchnorm(const RefMap& x, const BNParams& p);
RefMap ref_add(const RefMap& a, const RefMap& b);

// BN(conv3 x) + BN(conv1 x) + BN(x), or the fused conv when fused.
RefMap ref_msrep(const RefMap& x, const MsRepParams& p);

// Step-by-step composition of image/radar alignment, deformable sampling,
// LPE, text projection with sinusoidal APE, pooling and attention.
RefMap ref_tmdf(const RefMap& f_img, const RefMap& f_radar,
                const RefMap& f_text, const TmdfParams& p, bool normalize);

RefMap ref_enmoe(const RefMap& f_o, const EnMoeParams& p);

// Half-pixel bilinear (align_corners=false) or nearest replication.
RefMap ref_upsample(const RefMap& x, int factor, bool bilinear);

std::array<RefMap, 4> ref_fpn(const std::array<RefMap, 4>& c,
                              const FpnParams& p);

struct RefRecOutput {
  RefMap heatmap, wh, offset;
};
RefRecOutput ref_rec_head(const RefMap& feat, const RecHeadParams& p);

// Logit map at image resolution.
RefMap ref_res_head(const std::array<RefMap, 4>& pyramid,
                    const ResHeadParams& p, int image_h);

// Scans every cell and its full neighbourhood; no shared helpers.
std::vector<DetectionBox> ref_decode(const FeatureMap& heatmap,
                                     const FeatureMap& wh,
                                     const FeatureMap& offset, int R, int k,
                                     double score_thresh);

// AP at one IoU threshold by enumerating every score cutoff and taking the
// interpolated precision max(P(k) : R(k) >= r) at r = 0, 0.01, ..., 1.
double ref_query_ap(const std::vector<DetectionBox>& preds,
                    const std::vector<DetectionBox>& gts, double iou_threshold);

// Worst relative error between `grad` and central differences of `f`
// around `x`. Coordinates for which `skip(i)` is true are ignored.
struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};
GradCheck check_gradient(const std::function<double(std::span<const double>)>& f,
                         std::vector<double> x, std::span<const double> grad,
                         double step,
                         const std::function<bool(std::size_t)>& skip = {});

// Seeded fillers for random instances.
void fill_uniform(std::mt19937_64& rng, std::span<float> data, double lo,
                  double hi);
FeatureMap random_map(std::mt19937_64& rng, Shape4 shape, double lo = -1.0,
                      double hi = 1.0);

// Fills every parameter, including the ones the runtime initializer leaves
// at zero (LPE, gate logits), so oracles see every term.
class RandomFill : public ParamVisitor {
 public:
  explicit RandomFill(std::mt19937_64& rng) : rng_(rng) {}
  void visit(const std::string& name, ParamKind kind, std::span<float> data,
             const std::vector<int>& shape, int fan_in) override;

 private:
  std::mt19937_64& rng_;
};

}  // namespace nanomvg::verify
