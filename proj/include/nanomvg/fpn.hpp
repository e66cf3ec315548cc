#pragma once

#include <array>
#include <string>

#include "nanomvg/encoders.hpp"

namespace nanomvg {

struct FpnParams {
  std::array<ConvParams, 4> lateral;  // 1x1, C_i -> out
  std::array<ConvParams, 4> smooth;   // 3x3, out -> out
  int out_channels = 64;

  static FpnParams zeros(const std::array<int, 4>& in_channels,
                         int out_channels);
  void visit(ParamVisitor& v, const std::string& prefix);
};

// Top-down pyramid: P5 = lateral(c5), P_i = lateral(c_i) + up2(P_{i+1}),
// S_i = smooth(P_i). Input spatial dims must halve from level to level.
StageMaps fpn_forward(const StageMaps& c, const FpnParams& p);

}  // namespace nanomvg
