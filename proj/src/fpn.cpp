#include "nanomvg/fpn.hpp"

#include "nanomvg/error.hpp"
#include "nanomvg/ops.hpp"

namespace nanomvg {

FpnParams FpnParams::zeros(const std::array<int, 4>& in_channels,
                           int out_channels) {
  FpnParams p;
  p.out_channels = out_channels;
  for (int i = 0; i < 4; ++i) {
    p.lateral[i] =
        ConvParams::zeros(in_channels[i], out_channels, 1, 1, 0, 1, true);
    p.smooth[i] = ConvParams::zeros(out_channels, out_channels, 3, 1, 1, 1, true);
  }
  return p;
}

void FpnParams::visit(ParamVisitor& v, const std::string& prefix) {
  for (int i = 0; i < 4; ++i) {
    visit_conv(v, prefix + ".lateral" + std::to_string(i), lateral[i]);
    visit_conv(v, prefix + ".smooth" + std::to_string(i), smooth[i]);
  }
}

StageMaps fpn_forward(const StageMaps& c, const FpnParams& p) {
  for (int i = 1; i < 4; ++i) {
    require(c[i - 1].h() == 2 * c[i].h() && c[i - 1].w() == 2 * c[i].w() &&
                c[i - 1].n() == c[i].n(),
            ErrorCode::kShapeMismatch,
            "fpn: level " + std::to_string(i - 1) + " " + c[i - 1].shape().str() +
                " is not twice level " + std::to_string(i) + " " +
                c[i].shape().str());
  }
  StageMaps merged;
  merged[3] = conv2d(c[3], p.lateral[3]);
  for (int i = 2; i >= 0; --i) {
    merged[i] = add(conv2d(c[i], p.lateral[i]),
                    upsample(merged[i + 1], 2, Resample::kNearest));
  }
  StageMaps out;
  for (int i = 0; i < 4; ++i) out[i] = conv2d(merged[i], p.smooth[i]);
  return out;
}

}  // namespace nanomvg
