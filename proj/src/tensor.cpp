#include "nanomvg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "nanomvg/error.hpp"

namespace nanomvg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kMalformedManifest: return "malformed_manifest";
    case ErrorCode::kOverlappingEntries: return "overlapping_entries";
    case ErrorCode::kBlobOutOfBounds: return "blob_out_of_bounds";
    case ErrorCode::kMissingParameter: return "missing_parameter";
    case ErrorCode::kUnexpectedParameter: return "unexpected_parameter";
    case ErrorCode::kDuplicateParameter: return "duplicate_parameter";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kState: return "state";
  }
  return "unknown";
}

std::string Shape4::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
         std::to_string(h) + ", " + std::to_string(w) + ")";
}

FeatureMap::FeatureMap(Shape4 shape, float fill) : shape_(shape) {
  require(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0,
          ErrorCode::kInvalidArgument,
          "negative feature map dimension " + shape.str());
  data_.assign(shape.count(), fill);
}

FeatureMap::FeatureMap(Shape4 shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  require(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0,
          ErrorCode::kInvalidArgument,
          "negative feature map dimension " + shape.str());
  require(data_.size() == shape.count(), ErrorCode::kShapeMismatch,
          "data length " + std::to_string(data_.size()) +
              " does not match shape " + shape.str());
}

bool FeatureMap::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

ConvParams ConvParams::zeros(int in_channels, int out_channels,
                             int kernel_size, int stride, int padding,
                             int groups, bool with_bias) {
  require(groups > 0 && in_channels % groups == 0 && out_channels % groups == 0,
          ErrorCode::kInvalidArgument,
          "groups " + std::to_string(groups) + " must divide C_in " +
              std::to_string(in_channels) + " and C_out " +
              std::to_string(out_channels));
  ConvParams p;
  p.kernel = FeatureMap({out_channels, in_channels / groups, kernel_size,
                         kernel_size});
  if (with_bias) p.bias.assign(out_channels, 0.0f);
  p.stride = stride;
  p.padding = padding;
  p.groups = groups;
  return p;
}

ConvParams ConvParams::depthwise(int channels, int kernel_size, int stride,
                                 bool with_bias) {
  return zeros(channels, channels, kernel_size, stride, kernel_size / 2,
               channels, with_bias);
}

ConvParams ConvParams::identity(int channels, bool depthwise) {
  ConvParams p = zeros(channels, channels, 1, 1, 0, depthwise ? channels : 1,
                       true);
  for (int c = 0; c < channels; ++c) {
    p.kernel.at(c, depthwise ? 0 : c, 0, 0) = 1.0f;
  }
  return p;
}

void ConvParams::validate() const {
  require(groups > 0, ErrorCode::kInvalidArgument, "groups must be positive");
  require(stride > 0, ErrorCode::kInvalidArgument, "stride must be positive");
  require(padding >= 0, ErrorCode::kInvalidArgument,
          "padding must be non-negative");
  require(kernel.n() % groups == 0, ErrorCode::kInvalidArgument,
          "groups " + std::to_string(groups) + " does not divide C_out " +
              std::to_string(kernel.n()));
  require(bias.empty() || static_cast<int>(bias.size()) == kernel.n(),
          ErrorCode::kShapeMismatch,
          "bias length " + std::to_string(bias.size()) + " != C_out " +
              std::to_string(kernel.n()));
}

BNParams BNParams::identity(int channels, float epsilon) {
  BNParams p;
  p.gamma.assign(channels, 1.0f);
  p.beta.assign(channels, 0.0f);
  p.running_mean.assign(channels, 0.0f);
  p.running_var.assign(channels, 1.0f);
  p.epsilon = epsilon;
  return p;
}

void BNParams::validate() const {
  const std::size_t c = gamma.size();
  require(beta.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          ErrorCode::kShapeMismatch, "batchnorm vectors differ in length");
  require(epsilon >= 0.0f, ErrorCode::kInvalidArgument,
          "batchnorm epsilon must be non-negative");
  for (std::size_t i = 0; i < c; ++i) {
    require(running_var[i] >= 0.0f, ErrorCode::kInvalidArgument,
            "negative running_var " + std::to_string(running_var[i]) +
                " at channel " + std::to_string(i));
    require(running_var[i] + epsilon > 0.0f, ErrorCode::kInvalidArgument,
            "running_var + epsilon is zero at channel " + std::to_string(i));
  }
}

}  // namespace nanomvg
