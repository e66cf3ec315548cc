#include "nanomvg/enmoe.hpp"

#include "nanomvg/error.hpp"
#include "nanomvg/ops.hpp"

namespace nanomvg {

EnMoeParams EnMoeParams::zeros(int channels) {
  EnMoeParams p;
  p.edge_conv = ConvParams::depthwise(channels, 1, 1, false);
  p.edge_bn = BNParams::identity(channels);
  p.nbr_conv = ConvParams::depthwise(channels, 5, 1, false);
  p.nbr_bn = BNParams::identity(channels);
  p.gate_h = ConvParams::zeros(channels, channels, 1, 1, 0, 1, true);
  p.gate_l = ConvParams::zeros(channels, channels, 1, 1, 0, 1, true);
  p.w_o = ConvParams::zeros(channels, channels, 1, 1, 0, 1, true);
  return p;
}

void EnMoeParams::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".edge_conv", edge_conv);
  visit_bn(v, prefix + ".edge_bn", edge_bn);
  visit_conv(v, prefix + ".nbr_conv", nbr_conv);
  visit_bn(v, prefix + ".nbr_bn", nbr_bn);
  visit_conv(v, prefix + ".gate_h", gate_h);
  visit_conv(v, prefix + ".gate_l", gate_l);
  visit_conv(v, prefix + ".w_o", w_o);
  visit_scalar(v, prefix + ".theta1_raw", ParamKind::kLogit, theta1_raw);
  visit_scalar(v, prefix + ".theta2_raw", ParamKind::kLogit, theta2_raw);
}

FeatureMap enmoe_forward(const FeatureMap& f_o, const EnMoeParams& p) {
  require(f_o.h() >= kEnMoeMinExtent && f_o.w() >= kEnMoeMinExtent,
          ErrorCode::kShapeMismatch,
          "enmoe: spatial dims " + std::to_string(f_o.h()) + "x" +
              std::to_string(f_o.w()) + " below 5x5");

  const FeatureMap f_h = activation(
      batchnorm_inference(conv2d(sobel(f_o), p.edge_conv), p.edge_bn),
      Activation::kSilu);
  const FeatureMap f_l = activation(
      batchnorm_inference(conv2d(f_o, p.nbr_conv), p.nbr_bn),
      Activation::kSilu);
  const FeatureMap gate_h = activation(conv2d(f_h, p.gate_h), Activation::kSigmoid);
  const FeatureMap gate_l = activation(conv2d(f_l, p.gate_l), Activation::kSigmoid);
  const FeatureMap projected = conv2d(f_o, p.w_o);

  const float theta1 = sigmoid(p.theta1_raw);
  const float theta2 = sigmoid(p.theta2_raw);
  FeatureMap out(f_o.shape());
  auto dst = out.data();
  auto fo = f_o.data();
  auto wh = gate_h.data();
  auto wl = gate_l.data();
  auto proj = projected.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const float high = wh[i] * proj[i];
    const float low = wl[i] * proj[i];
    dst[i] = (theta1 * high + theta2 * low) + fo[i];
  }
  return out;
}

}  // namespace nanomvg
