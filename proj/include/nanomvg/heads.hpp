#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nanomvg/encoders.hpp"

namespace nanomvg {

// ---------------------------------------------------------------------------
// Center-point REC head
// ---------------------------------------------------------------------------

// [3x3 DWC + BN + ReLU] -> [1x1 PWC + BN + ReLU] -> 1x1 projection.
struct RecBranch {
  ConvParams dw;
  BNParams dw_bn;
  ConvParams pw;
  BNParams pw_bn;
  ConvParams proj;

  static RecBranch zeros(int channels, int out_channels);
  void visit(ParamVisitor& v, const std::string& prefix);
};

struct RecHeadParams {
  RecBranch conf;    // 1 channel, sigmoid
  RecBranch wh;      // 2 channels, feature-grid units
  RecBranch offset;  // 2 channels, (ox, oy)
  int downsample_ratio = 4;

  static RecHeadParams zeros(int channels, int downsample_ratio);
  void visit(ParamVisitor& v, const std::string& prefix);
};

struct RecHeadOutput {
  FeatureMap heatmap;  // (N, 1, h, w) in (0, 1)
  FeatureMap wh;       // (N, 2, h, w)
  FeatureMap offset;   // (N, 2, h, w)
};

RecHeadOutput rec_head_forward(const FeatureMap& feat, const RecHeadParams& p);

struct DetectionBox {
  double cx = 0.0;  // image pixels
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double score = 0.0;
};

// Decoded sizes are floored at this many pixels so boxes keep positive area.
inline constexpr double kMinBoxSide = 1e-3;

// Peaks are cells >= every 3x3 neighbour whose flat index is the smallest
// among equal-valued neighbours, and whose score >= score_thresh. The k best
// (score descending, flat index ascending) are decoded as
// cx = (x + ox) R, cy = (y + oy) R, w = w~ R, h = h~ R.
std::vector<DetectionBox> decode_boxes(const FeatureMap& heatmap,
                                       const FeatureMap& wh,
                                       const FeatureMap& offset, int R, int k,
                                       double score_thresh, int batch = 0);

// ---------------------------------------------------------------------------
// Reparameterizable RES head
// ---------------------------------------------------------------------------

enum class RepMode { kTrain, kFused };

// Train mode: BN(DWC3x3 x) + BN(DWC1x1 x) + BN(x). Fused mode: one 3x3
// depthwise conv with bias.
struct MsRepParams {
  RepMode mode = RepMode::kTrain;
  ConvParams conv3;
  BNParams bn3;
  ConvParams conv1;
  BNParams bn1;
  BNParams bn_id;
  std::optional<ConvParams> fused;

  int channels() const;
  static MsRepParams zeros(int channels);
  void visit(ParamVisitor& v, const std::string& prefix);
};

FeatureMap msrep_forward(const FeatureMap& x, const MsRepParams& p);

// Folds every branch into a single 3x3 depthwise conv. Throws kState when
// `p` is already fused.
MsRepParams msrep_fuse(const MsRepParams& p);

struct ResHeadParams {
  ConvParams d5;                    // 1x1 depthwise on S5
  std::array<MsRepParams, 3> msrep; // applied at levels 5, 4, 3
  ConvParams proj;                  // 1x1, C -> 1

  static ResHeadParams zeros(int channels);
  void visit(ParamVisitor& v, const std::string& prefix);
  bool fused() const;
};

ResHeadParams fuse_res_head(const ResHeadParams& p);

struct BinaryMask {
  int height = 0;
  int width = 0;
  float threshold = 0.0f;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  std::size_t count() const;
};

struct ResHeadOutput {
  FeatureMap logits;              // (N, 1, image_h, image_w)
  std::vector<BinaryMask> masks;  // one per batch item, logit > threshold
};

// pyramid = S2..S5 at strictly halving resolution.
ResHeadOutput res_head_forward(const StageMaps& pyramid, const ResHeadParams& p,
                               int image_h, int image_w,
                               float mask_threshold = 0.0f);

BinaryMask threshold_mask(const FeatureMap& logits, int batch,
                          float threshold);

}  // namespace nanomvg
