#pragma once

#include "nanomvg/tensor.hpp"

namespace nanomvg {

// Zero-padded 2-D convolution; reductions accumulate in double.
FeatureMap conv2d(const FeatureMap& x, const ConvParams& p);

// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
FeatureMap batchnorm_inference(const FeatureMap& x, const BNParams& p);

enum class Activation { kRelu, kSilu, kSigmoid };

float sigmoid(float v);
float silu(float v);
FeatureMap activation(const FeatureMap& x, Activation kind);

// Max pooling along the last axis of an (N, C, 1, L) sequence.
FeatureMap maxpool1d(const FeatureMap& seq, int kernel = 3, int stride = 2);
int maxpool1d_length(int length, int kernel = 3, int stride = 2);

// Per-channel gradient magnitude with the 3x3 Sobel pair, zero padding.
FeatureMap sobel(const FeatureMap& x);

enum class Resample { kNearest, kBilinear };

// Bilinear uses half-pixel centers (align_corners = false) with edge clamp.
FeatureMap upsample(const FeatureMap& x, int factor, Resample mode);

// (N, C, 1, 1) channel means.
FeatureMap global_avg_pool(const FeatureMap& x);

FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap multiply(const FeatureMap& a, const FeatureMap& b);
FeatureMap scale(const FeatureMap& x, float factor);
// x * gate, gate shaped (N, C, 1, 1).
FeatureMap scale_channels(const FeatureMap& x, const FeatureMap& gate);

}  // namespace nanomvg
