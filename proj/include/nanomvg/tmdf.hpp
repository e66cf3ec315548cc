#pragma once

#include <string>
#include <vector>

#include "nanomvg/params.hpp"
#include "nanomvg/tensor.hpp"

namespace nanomvg {

// Channel gate: sigmoid(conv1d over the pooled channel descriptor).
struct EcaParams {
  int k = 3;
  std::vector<float> weights;  // length k, no bias

  static EcaParams zeros(int k = 3);
};

FeatureMap eca(const FeatureMap& x, const EcaParams& p);

// Offset-only deformable convolution. offset_conv predicts 2 * kh * kw
// channels laid out per tap as (dy, dx), tap index = ky * kw + kx.
struct DeformParams {
  ConvParams offset_conv;
  ConvParams main_kernel;

  static DeformParams zeros(int channels, int groups = 1);
};

FeatureMap deform_conv(const FeatureMap& x, const DeformParams& p);
FeatureMap deform_conv_with_offsets(const FeatureMap& x,
                                    const FeatureMap& offsets,
                                    const ConvParams& main_kernel);

// Zero-padded bilinear read of one plane at a real-valued position.
double bilinear_sample(std::span<const float> plane, int height, int width,
                       double y, double x);

struct TmdfParams {
  int channels = 0;   // C of the stage; also the attention dimension d
  int text_dim = 0;   // embedding width of f_T
  ConvParams w_img;   // 1x1 depthwise
  ConvParams w_radar; // 1x1 depthwise
  EcaParams eca;
  DeformParams deform;
  FeatureMap lpe;                  // (1, C, H, W)
  std::vector<float> w_text;       // C x text_dim, row-major
  std::vector<float> b_text;       // C

  static TmdfParams zeros(int channels, int height, int width, int text_dim);
  void visit(ParamVisitor& v, const std::string& prefix);
};

// Fixed sinusoidal absolute position encoding, (1, dim, 1, length).
FeatureMap sinusoidal_position_encoding(int dim, int length);

// (N, C, H, W) <-> (N, 1, H*W, C) token layout; exact inverses.
FeatureMap flatten_tokens(const FeatureMap& x);
FeatureMap unflatten_tokens(const FeatureMap& tokens, int channels,
                            int height, int width);

// W_T (f_T + APE) + b: (N, text_dim, 1, L) -> (N, C, 1, L).
FeatureMap text_projection(const FeatureMap& f_text, const TmdfParams& p);

// Sim = Q K / sqrt(d), out = Sim V^T. query: (N, 1, P, C); keys/values:
// (N, C, 1, L'). Optional row softmax on Sim. Returns (N, 1, P, C).
FeatureMap cross_attend(const FeatureMap& query, const FeatureMap& keys,
                        const FeatureMap& values, bool normalize);

// Row-wise similarity matrix only, (N, 1, P, L').
FeatureMap similarity(const FeatureMap& query, const FeatureMap& keys,
                      bool normalize);

FeatureMap tmdf_fuse(const FeatureMap& f_img, const FeatureMap& f_radar,
                     const FeatureMap& f_text, const TmdfParams& p,
                     bool attention_normalize = false);

}  // namespace nanomvg
