#include "nanomvg/heads.hpp"

#include <algorithm>
#include <cmath>

#include "nanomvg/error.hpp"
#include "nanomvg/ops.hpp"

namespace nanomvg {

namespace {

FeatureMap conv_bn_relu(const FeatureMap& x, const ConvParams& conv,
                        const BNParams& bn) {
  return activation(batchnorm_inference(conv2d(x, conv), bn),
                    Activation::kRelu);
}

FeatureMap run_branch(const FeatureMap& x, const RecBranch& b) {
  return conv2d(conv_bn_relu(conv_bn_relu(x, b.dw, b.dw_bn), b.pw, b.pw_bn),
                b.proj);
}

// Per-channel (scale, shift) of an inference-mode batchnorm, in double.
struct BnAffine {
  double scale;
  double shift;
};

BnAffine bn_affine(const BNParams& bn, int c) {
  const double s = bn.gamma[c] /
                   std::sqrt(static_cast<double>(bn.running_var[c]) + bn.epsilon);
  return {s, bn.beta[c] - bn.running_mean[c] * s};
}

}  // namespace

RecBranch RecBranch::zeros(int channels, int out_channels) {
  RecBranch b;
  b.dw = ConvParams::depthwise(channels, 3, 1, false);
  b.dw_bn = BNParams::identity(channels);
  b.pw = ConvParams::zeros(channels, channels, 1, 1, 0, 1, false);
  b.pw_bn = BNParams::identity(channels);
  b.proj = ConvParams::zeros(channels, out_channels, 1, 1, 0, 1, true);
  return b;
}

void RecBranch::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".dw", dw);
  visit_bn(v, prefix + ".dw_bn", dw_bn);
  visit_conv(v, prefix + ".pw", pw);
  visit_bn(v, prefix + ".pw_bn", pw_bn);
  visit_conv(v, prefix + ".proj", proj);
}

RecHeadParams RecHeadParams::zeros(int channels, int downsample_ratio) {
  RecHeadParams p;
  p.conf = RecBranch::zeros(channels, 1);
  p.wh = RecBranch::zeros(channels, 2);
  p.offset = RecBranch::zeros(channels, 2);
  p.downsample_ratio = downsample_ratio;
  return p;
}

void RecHeadParams::visit(ParamVisitor& v, const std::string& prefix) {
  conf.visit(v, prefix + ".conf");
  wh.visit(v, prefix + ".wh");
  offset.visit(v, prefix + ".offset");
}

RecHeadOutput rec_head_forward(const FeatureMap& feat, const RecHeadParams& p) {
  RecHeadOutput out;
  out.heatmap = activation(run_branch(feat, p.conf), Activation::kSigmoid);
  out.wh = run_branch(feat, p.wh);
  out.offset = run_branch(feat, p.offset);
  return out;
}

std::vector<DetectionBox> decode_boxes(const FeatureMap& heatmap,
                                       const FeatureMap& wh,
                                       const FeatureMap& offset, int R, int k,
                                       double score_thresh, int batch) {
  require(k > 0, ErrorCode::kInvalidArgument,
          "decode_boxes: k must be positive, got " + std::to_string(k));
  require(R > 0, ErrorCode::kInvalidArgument,
          "decode_boxes: downsample ratio must be positive");
  require(heatmap.c() == 1 && wh.c() == 2 && offset.c() == 2,
          ErrorCode::kShapeMismatch,
          "decode_boxes: expected 1/2/2 channel maps");
  require(heatmap.h() == wh.h() && heatmap.w() == wh.w() &&
              heatmap.h() == offset.h() && heatmap.w() == offset.w(),
          ErrorCode::kShapeMismatch, "decode_boxes: map sizes differ");
  require(batch >= 0 && batch < heatmap.n() && batch < wh.n() &&
              batch < offset.n(),
          ErrorCode::kInvalidArgument, "decode_boxes: batch index out of range");

  const int h = heatmap.h();
  const int w = heatmap.w();
  auto heat = heatmap.plane(batch, 0);

  struct Peak {
    float score;
    int index;
  };
  std::vector<Peak> peaks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int idx = y * w + x;
      const float v = heat[idx];
      if (!(v >= score_thresh)) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if ((dy == 0 && dx == 0) || yy < 0 || yy >= h || xx < 0 || xx >= w) {
            continue;
          }
          const int nidx = yy * w + xx;
          const float nv = heat[nidx];
          if (nv > v || (nv == v && nidx < idx)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) peaks.push_back({v, idx});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  if (static_cast<int>(peaks.size()) > k) peaks.resize(k);

  std::vector<DetectionBox> boxes;
  boxes.reserve(peaks.size());
  for (const Peak& pk : peaks) {
    const int y = pk.index / w;
    const int x = pk.index % w;
    DetectionBox b;
    b.cx = (x + static_cast<double>(offset.at(batch, 0, y, x))) * R;
    b.cy = (y + static_cast<double>(offset.at(batch, 1, y, x))) * R;
    b.w = std::max(static_cast<double>(wh.at(batch, 0, y, x)) * R, kMinBoxSide);
    b.h = std::max(static_cast<double>(wh.at(batch, 1, y, x)) * R, kMinBoxSide);
    b.score = pk.score;
    boxes.push_back(b);
  }
  return boxes;
}

int MsRepParams::channels() const {
  return mode == RepMode::kFused ? fused->out_channels() : conv3.out_channels();
}

MsRepParams MsRepParams::zeros(int channels) {
  MsRepParams p;
  p.conv3 = ConvParams::depthwise(channels, 3, 1, false);
  p.bn3 = BNParams::identity(channels);
  p.conv1 = ConvParams::depthwise(channels, 1, 1, false);
  p.bn1 = BNParams::identity(channels);
  p.bn_id = BNParams::identity(channels);
  return p;
}

void MsRepParams::visit(ParamVisitor& v, const std::string& prefix) {
  if (mode == RepMode::kFused) {
    visit_conv(v, prefix + ".fused", *fused);
    return;
  }
  visit_conv(v, prefix + ".conv3", conv3);
  visit_bn(v, prefix + ".bn3", bn3);
  visit_conv(v, prefix + ".conv1", conv1);
  visit_bn(v, prefix + ".bn1", bn1);
  visit_bn(v, prefix + ".bn_id", bn_id);
}

FeatureMap msrep_forward(const FeatureMap& x, const MsRepParams& p) {
  if (p.mode == RepMode::kFused) {
    require(p.fused.has_value(), ErrorCode::kState,
            "msrep: fused mode without a fused kernel");
    return conv2d(x, *p.fused);
  }
  FeatureMap y = batchnorm_inference(conv2d(x, p.conv3), p.bn3);
  y = add(y, batchnorm_inference(conv2d(x, p.conv1), p.bn1));
  return add(y, batchnorm_inference(x, p.bn_id));
}

MsRepParams msrep_fuse(const MsRepParams& p) {
  require(p.mode == RepMode::kTrain, ErrorCode::kState,
          "msrep_fuse: parameters are already fused");
  const int c = p.conv3.out_channels();
  require(p.conv3.groups == c && p.conv3.kernel_h() == 3 &&
              p.conv3.kernel_w() == 3 && p.conv3.padding == 1 &&
              p.conv1.groups == c && p.conv1.kernel_h() == 1 &&
              p.conv1.padding == 0 && p.conv3.stride == 1 &&
              p.conv1.stride == 1,
          ErrorCode::kInvalidArgument,
          "msrep_fuse: expected 3x3 and 1x1 depthwise branches");
  p.bn3.validate();
  p.bn1.validate();
  p.bn_id.validate();

  ConvParams fused = ConvParams::depthwise(c, 3, 1, true);
  for (int ch = 0; ch < c; ++ch) {
    const BnAffine a3 = bn_affine(p.bn3, ch);
    const BnAffine a1 = bn_affine(p.bn1, ch);
    const BnAffine aid = bn_affine(p.bn_id, ch);
    double k[3][3] = {};
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        k[ky][kx] = a3.scale * p.conv3.kernel.at(ch, 0, ky, kx);
      }
    }
    k[1][1] += a1.scale * p.conv1.kernel.at(ch, 0, 0, 0);
    k[1][1] += aid.scale;
    double bias = a3.shift + a1.shift + aid.shift;
    if (p.conv3.has_bias()) bias += a3.scale * p.conv3.bias[ch];
    if (p.conv1.has_bias()) bias += a1.scale * p.conv1.bias[ch];
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        fused.kernel.at(ch, 0, ky, kx) = static_cast<float>(k[ky][kx]);
      }
    }
    fused.bias[ch] = static_cast<float>(bias);
  }

  MsRepParams out;
  out.mode = RepMode::kFused;
  out.fused = std::move(fused);
  return out;
}

ResHeadParams ResHeadParams::zeros(int channels) {
  ResHeadParams p;
  p.d5 = ConvParams::depthwise(channels, 1, 1, true);
  for (auto& m : p.msrep) m = MsRepParams::zeros(channels);
  p.proj = ConvParams::zeros(channels, 1, 1, 1, 0, 1, true);
  return p;
}

void ResHeadParams::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".d5", d5);
  for (int i = 0; i < 3; ++i) {
    msrep[i].visit(v, prefix + ".msrep" + std::to_string(5 - i));
  }
  visit_conv(v, prefix + ".proj", proj);
}

bool ResHeadParams::fused() const {
  return std::all_of(msrep.begin(), msrep.end(), [](const MsRepParams& m) {
    return m.mode == RepMode::kFused;
  });
}

ResHeadParams fuse_res_head(const ResHeadParams& p) {
  ResHeadParams out = p;
  for (auto& m : out.msrep) m = msrep_fuse(m);
  return out;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

BinaryMask threshold_mask(const FeatureMap& logits, int batch,
                          float threshold) {
  require(logits.c() == 1, ErrorCode::kShapeMismatch,
          "threshold_mask: expected a single-channel logit map");
  BinaryMask m;
  m.height = logits.h();
  m.width = logits.w();
  m.threshold = threshold;
  auto src = logits.plane(batch, 0);
  m.bits.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    m.bits[i] = src[i] > threshold ? 1 : 0;
  }
  return m;
}

ResHeadOutput res_head_forward(const StageMaps& pyramid, const ResHeadParams& p,
                               int image_h, int image_w,
                               float mask_threshold) {
  for (int i = 1; i < 4; ++i) {
    require(pyramid[i - 1].h() == 2 * pyramid[i].h() &&
                pyramid[i - 1].w() == 2 * pyramid[i].w() &&
                pyramid[i - 1].c() == pyramid[i].c() &&
                pyramid[i - 1].n() == pyramid[i].n(),
            ErrorCode::kShapeMismatch,
            "res_head: pyramid level " + std::to_string(i + 2) + " " +
                pyramid[i].shape().str() + " inconsistent with level " +
                std::to_string(i + 1) + " " + pyramid[i - 1].shape().str());
  }
  const FeatureMap& s2 = pyramid[0];
  require(s2.h() > 0 && s2.w() > 0 && image_h % s2.h() == 0 &&
              image_w % s2.w() == 0 && image_h / s2.h() == image_w / s2.w(),
          ErrorCode::kShapeMismatch,
          "res_head: image " + std::to_string(image_h) + "x" +
              std::to_string(image_w) + " is not an integer multiple of S2 " +
              s2.shape().str());

  FeatureMap d = conv2d(pyramid[3], p.d5);
  for (int i = 0; i < 3; ++i) {
    FeatureMap t = activation(add(msrep_forward(d, p.msrep[i]), d),
                              Activation::kRelu);
    d = add(pyramid[2 - i], upsample(t, 2, Resample::kNearest));
  }
  ResHeadOutput out;
  out.logits = upsample(conv2d(d, p.proj), image_h / s2.h(), Resample::kBilinear);
  for (int n = 0; n < out.logits.n(); ++n) {
    out.masks.push_back(threshold_mask(out.logits, n, mask_threshold));
  }
  return out;
}

}  // namespace nanomvg
