#pragma once

#include <string>

#include "nanomvg/params.hpp"
#include "nanomvg/tensor.hpp"

namespace nanomvg {

// Edge-neighbour mixture of experts for one pyramid level.
//
//   f_h = SiLU(BN(edge_conv(Sobel(f_o))))      edge expert, 1x1 depthwise
//   f_l = SiLU(BN(nbr_conv(f_o)))              neighbour expert, 5x5 depthwise
//   W_H = sigmoid(gate_h(f_h)), W_L = sigmoid(gate_l(f_l))
//   out = sigmoid(theta1) W_H * w_o(f_o) + sigmoid(theta2) W_L * w_o(f_o) + f_o
//
// The gates are 1x1 dense convs, so W_H / W_L are full-resolution maps.
struct EnMoeParams {
  ConvParams edge_conv;
  BNParams edge_bn;
  ConvParams nbr_conv;
  BNParams nbr_bn;
  ConvParams gate_h;
  ConvParams gate_l;
  ConvParams w_o;
  float theta1_raw = 0.0f;
  float theta2_raw = 0.0f;

  static EnMoeParams zeros(int channels);
  void visit(ParamVisitor& v, const std::string& prefix);
};

// Requires both spatial dims >= 5.
FeatureMap enmoe_forward(const FeatureMap& f_o, const EnMoeParams& p);

// Smallest spatial extent enmoe_forward accepts.
inline constexpr int kEnMoeMinExtent = 5;

}  // namespace nanomvg
