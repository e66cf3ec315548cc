#include "nanomvg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nanomvg/error.hpp"

namespace nanomvg {

namespace {

int conv_out_dim(int in, int pad, int k, int stride) {
  return (in + 2 * pad - k) / stride + 1;
}

void require_same_shape(const FeatureMap& a, const FeatureMap& b,
                        const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          std::string(op) + ": shapes " + a.shape().str() + " and " +
              b.shape().str() + " differ");
}

}  // namespace

FeatureMap conv2d(const FeatureMap& x, const ConvParams& p) {
  p.validate();
  const int kh = p.kernel_h();
  const int kw = p.kernel_w();
  require(x.c() == p.in_channels(), ErrorCode::kShapeMismatch,
          "conv2d: input has " + std::to_string(x.c()) +
              " channels, kernel expects " + std::to_string(p.in_channels()));
  require(x.h() + 2 * p.padding >= kh && x.w() + 2 * p.padding >= kw,
          ErrorCode::kShapeMismatch,
          "conv2d: padded input " + std::to_string(x.h() + 2 * p.padding) +
              "x" + std::to_string(x.w() + 2 * p.padding) +
              " smaller than kernel " + std::to_string(kh) + "x" +
              std::to_string(kw));

  const int in_h = x.h();
  const int in_w = x.w();
  const int out_h = conv_out_dim(in_h, p.padding, kh, p.stride);
  const int out_w = conv_out_dim(in_w, p.padding, kw, p.stride);
  const int out_c = p.out_channels();
  const int in_per_group = p.kernel.c();
  const int out_per_group = out_c / p.groups;
  const int s = p.stride;
  const int pad = p.padding;

  FeatureMap y({x.n(), out_c, out_h, out_w});
  std::vector<double> acc(static_cast<std::size_t>(out_h) * out_w);

  for (int n = 0; n < x.n(); ++n) {
    for (int oc = 0; oc < out_c; ++oc) {
      const int g = oc / out_per_group;
      std::fill(acc.begin(), acc.end(), p.has_bias() ? p.bias[oc] : 0.0);
      for (int icg = 0; icg < in_per_group; ++icg) {
        const int ic = g * in_per_group + icg;
        const float* in = x.plane(n, ic).data();
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const double wv = p.kernel.at(oc, icg, ky, kx);
            if (wv == 0.0) continue;
            // Output columns whose tap lands inside the input row.
            int ox_lo = 0;
            while (ox_lo < out_w && ox_lo * s - pad + kx < 0) ++ox_lo;
            int ox_hi = out_w;
            while (ox_hi > ox_lo && (ox_hi - 1) * s - pad + kx >= in_w) --ox_hi;
            for (int oy = 0; oy < out_h; ++oy) {
              const int iy = oy * s - pad + ky;
              if (iy < 0 || iy >= in_h) continue;
              const float* row = in + static_cast<std::size_t>(iy) * in_w;
              double* dst = acc.data() + static_cast<std::size_t>(oy) * out_w;
              if (s == 1) {
                const float* src = row - pad + kx;
                for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] += wv * src[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) {
                  dst[ox] += wv * row[ox * s - pad + kx];
                }
              }
            }
          }
        }
      }
      auto out = y.plane(n, oc);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(acc[i]);
      }
    }
  }
  return y;
}

FeatureMap batchnorm_inference(const FeatureMap& x, const BNParams& p) {
  p.validate();
  require(x.c() == p.channels(), ErrorCode::kShapeMismatch,
          "batchnorm: input has " + std::to_string(x.c()) +
              " channels, params have " + std::to_string(p.channels()));
  FeatureMap y(x.shape());
  for (int c = 0; c < x.c(); ++c) {
    const double inv_std =
        1.0 / std::sqrt(static_cast<double>(p.running_var[c]) + p.epsilon);
    const double scale = p.gamma[c] * inv_std;
    const double shift = p.beta[c] - p.running_mean[c] * scale;
    for (int n = 0; n < x.n(); ++n) {
      auto src = x.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<float>(src[i] * scale + shift);
      }
    }
  }
  return y;
}

float sigmoid(float v) {
  if (v >= 0.0f) return 1.0f / (1.0f + std::exp(-v));
  const float e = std::exp(v);
  return e / (1.0f + e);
}

float silu(float v) { return v * sigmoid(v); }

FeatureMap activation(const FeatureMap& x, Activation kind) {
  FeatureMap y(x.shape());
  auto src = x.data();
  auto dst = y.data();
  switch (kind) {
    case Activation::kRelu:
      std::transform(src.begin(), src.end(), dst.begin(),
                     [](float v) { return v > 0.0f ? v : 0.0f; });
      break;
    case Activation::kSilu:
      std::transform(src.begin(), src.end(), dst.begin(), silu);
      break;
    case Activation::kSigmoid:
      std::transform(src.begin(), src.end(), dst.begin(), sigmoid);
      break;
  }
  return y;
}

int maxpool1d_length(int length, int kernel, int stride) {
  require(kernel > 0 && stride > 0, ErrorCode::kInvalidArgument,
          "maxpool1d: kernel and stride must be positive");
  require(length >= kernel, ErrorCode::kShapeMismatch,
          "maxpool1d: sequence length " + std::to_string(length) +
              " shorter than kernel " + std::to_string(kernel));
  return (length - kernel) / stride + 1;
}

FeatureMap maxpool1d(const FeatureMap& seq, int kernel, int stride) {
  const int out_len = maxpool1d_length(seq.w(), kernel, stride);
  FeatureMap y({seq.n(), seq.c(), seq.h(), out_len});
  for (int n = 0; n < seq.n(); ++n) {
    for (int c = 0; c < seq.c(); ++c) {
      for (int r = 0; r < seq.h(); ++r) {
        for (int j = 0; j < out_len; ++j) {
          float m = seq.at(n, c, r, j * stride);
          for (int t = 1; t < kernel; ++t) {
            m = std::max(m, seq.at(n, c, r, j * stride + t));
          }
          y.at(n, c, r, j) = m;
        }
      }
    }
  }
  return y;
}

FeatureMap sobel(const FeatureMap& x) {
  require(x.h() >= 3 && x.w() >= 3, ErrorCode::kShapeMismatch,
          "sobel: spatial dims " + std::to_string(x.h()) + "x" +
              std::to_string(x.w()) + " below 3x3");
  static constexpr int kGx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static constexpr int kGy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const int h = x.h();
  const int w = x.w();
  FeatureMap y(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      auto in = x.plane(n, c);
      auto out = y.plane(n, c);
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
          double gx = 0.0;
          double gy = 0.0;
          for (int dy = -1; dy <= 1; ++dy) {
            const int rr = r + dy;
            if (rr < 0 || rr >= h) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int cc = col + dx;
              if (cc < 0 || cc >= w) continue;
              const double v = in[static_cast<std::size_t>(rr) * w + cc];
              gx += kGx[dy + 1][dx + 1] * v;
              gy += kGy[dy + 1][dx + 1] * v;
            }
          }
          out[static_cast<std::size_t>(r) * w + col] =
              static_cast<float>(std::sqrt(gx * gx + gy * gy));
        }
      }
    }
  }
  return y;
}

FeatureMap upsample(const FeatureMap& x, int factor, Resample mode) {
  require(factor >= 1, ErrorCode::kInvalidArgument,
          "upsample: factor " + std::to_string(factor) + " < 1");
  if (factor == 1) return x;
  const int in_h = x.h();
  const int in_w = x.w();
  const int out_h = in_h * factor;
  const int out_w = in_w * factor;
  FeatureMap y({x.n(), x.c(), out_h, out_w});

  if (mode == Resample::kNearest) {
    for (int n = 0; n < x.n(); ++n) {
      for (int c = 0; c < x.c(); ++c) {
        auto in = x.plane(n, c);
        auto out = y.plane(n, c);
        for (int r = 0; r < out_h; ++r) {
          const float* src = in.data() + static_cast<std::size_t>(r / factor) * in_w;
          float* dst = out.data() + static_cast<std::size_t>(r) * out_w;
          for (int col = 0; col < out_w; ++col) dst[col] = src[col / factor];
        }
      }
    }
    return y;
  }

  // Precompute source taps per output row / column.
  struct Tap {
    int lo;
    int hi;
    double frac;
  };
  auto taps = [factor](int out_len, int in_len) {
    std::vector<Tap> t(out_len);
    for (int i = 0; i < out_len; ++i) {
      double src = (i + 0.5) / factor - 0.5;
      if (src < 0.0) src = 0.0;
      const int lo = static_cast<int>(src);
      const int hi = lo < in_len - 1 ? lo + 1 : lo;
      t[i] = {lo, hi, src - lo};
    }
    return t;
  };
  const std::vector<Tap> row_taps = taps(out_h, in_h);
  const std::vector<Tap> col_taps = taps(out_w, in_w);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      auto in = x.plane(n, c);
      auto out = y.plane(n, c);
      for (int r = 0; r < out_h; ++r) {
        const Tap& ty = row_taps[r];
        const float* r0 = in.data() + static_cast<std::size_t>(ty.lo) * in_w;
        const float* r1 = in.data() + static_cast<std::size_t>(ty.hi) * in_w;
        for (int col = 0; col < out_w; ++col) {
          const Tap& tx = col_taps[col];
          const double top = r0[tx.lo] * (1.0 - tx.frac) + r0[tx.hi] * tx.frac;
          const double bot = r1[tx.lo] * (1.0 - tx.frac) + r1[tx.hi] * tx.frac;
          out[static_cast<std::size_t>(r) * out_w + col] =
              static_cast<float>(top * (1.0 - ty.frac) + bot * ty.frac);
        }
      }
    }
  }
  return y;
}

FeatureMap global_avg_pool(const FeatureMap& x) {
  FeatureMap y({x.n(), x.c(), 1, 1});
  const double count = static_cast<double>(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      double sum = 0.0;
      for (float v : x.plane(n, c)) sum += v;
      y.at(n, c, 0, 0) = count > 0 ? static_cast<float>(sum / count) : 0.0f;
    }
  }
  return y;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "add");
  FeatureMap y(a.shape());
  std::transform(a.data().begin(), a.data().end(), b.data().begin(),
                 y.data().begin(), [](float u, float v) { return u + v; });
  return y;
}

FeatureMap multiply(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "multiply");
  FeatureMap y(a.shape());
  std::transform(a.data().begin(), a.data().end(), b.data().begin(),
                 y.data().begin(), [](float u, float v) { return u * v; });
  return y;
}

FeatureMap scale(const FeatureMap& x, float factor) {
  FeatureMap y(x.shape());
  std::transform(x.data().begin(), x.data().end(), y.data().begin(),
                 [factor](float v) { return v * factor; });
  return y;
}

FeatureMap scale_channels(const FeatureMap& x, const FeatureMap& gate) {
  require(gate.n() == x.n() && gate.c() == x.c() && gate.h() == 1 &&
              gate.w() == 1,
          ErrorCode::kShapeMismatch,
          "scale_channels: gate " + gate.shape().str() +
              " does not match input " + x.shape().str());
  FeatureMap y(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float g = gate.at(n, c, 0, 0);
      auto src = x.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * g;
    }
  }
  return y;
}

}  // namespace nanomvg
