#include "nanomvg/tmdf.hpp"

#include <algorithm>
#include <cmath>

#include "nanomvg/error.hpp"
#include "nanomvg/ops.hpp"

namespace nanomvg {

EcaParams EcaParams::zeros(int k) {
  EcaParams p;
  p.k = k;
  p.weights.assign(k, 0.0f);
  return p;
}

FeatureMap eca(const FeatureMap& x, const EcaParams& p) {
  require(p.k > 0 && p.k % 2 == 1, ErrorCode::kInvalidArgument,
          "eca: kernel size " + std::to_string(p.k) + " must be odd");
  require(static_cast<int>(p.weights.size()) == p.k, ErrorCode::kShapeMismatch,
          "eca: expected " + std::to_string(p.k) + " weights");
  const FeatureMap pooled = global_avg_pool(x);
  FeatureMap gate(pooled.shape());
  const int half = p.k / 2;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      double acc = 0.0;
      for (int t = 0; t < p.k; ++t) {
        const int src = c + t - half;
        if (src < 0 || src >= x.c()) continue;
        acc += static_cast<double>(p.weights[t]) * pooled.at(n, src, 0, 0);
      }
      gate.at(n, c, 0, 0) = sigmoid(static_cast<float>(acc));
    }
  }
  return scale_channels(x, gate);
}

DeformParams DeformParams::zeros(int channels, int groups) {
  DeformParams p;
  p.offset_conv = ConvParams::zeros(channels, 18, 3, 1, 1, 1, true);
  p.main_kernel = ConvParams::zeros(channels, channels, 3, 1, 1, groups, true);
  return p;
}

double bilinear_sample(std::span<const float> plane, int height, int width,
                       double y, double x) {
  if (y <= -1.0 || y >= height || x <= -1.0 || x >= width) return 0.0;
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = y0 + 1;
  const int x1 = x0 + 1;
  const double ly = y - y0;
  const double lx = x - x0;
  auto read = [&](int r, int c) -> double {
    if (r < 0 || r >= height || c < 0 || c >= width) return 0.0;
    return plane[static_cast<std::size_t>(r) * width + c];
  };
  return (1.0 - ly) * (1.0 - lx) * read(y0, x0) +
         (1.0 - ly) * lx * read(y0, x1) + ly * (1.0 - lx) * read(y1, x0) +
         ly * lx * read(y1, x1);
}

FeatureMap deform_conv_with_offsets(const FeatureMap& x,
                                    const FeatureMap& offsets,
                                    const ConvParams& p) {
  p.validate();
  require(x.c() == p.in_channels(), ErrorCode::kShapeMismatch,
          "deform_conv: input has " + std::to_string(x.c()) +
              " channels, kernel expects " + std::to_string(p.in_channels()));
  const int kh = p.kernel_h();
  const int kw = p.kernel_w();
  const int taps = kh * kw;
  const int out_h = (x.h() + 2 * p.padding - kh) / p.stride + 1;
  const int out_w = (x.w() + 2 * p.padding - kw) / p.stride + 1;
  require(offsets.n() == x.n() && offsets.c() == 2 * taps &&
              offsets.h() == out_h && offsets.w() == out_w,
          ErrorCode::kShapeMismatch,
          "deform_conv: offsets " + offsets.shape().str() +
              " do not match output grid");

  const int in_c = x.c();
  const int out_c = p.out_channels();
  const int in_per_group = p.kernel.c();
  const int out_per_group = out_c / p.groups;
  const std::size_t positions = static_cast<std::size_t>(out_h) * out_w;

  FeatureMap y({x.n(), out_c, out_h, out_w});
  // Sampled columns: row (ic * taps + tap), one entry per output position.
  std::vector<float> cols(static_cast<std::size_t>(in_c) * taps * positions);
  std::vector<double> acc(positions);

  for (int n = 0; n < x.n(); ++n) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const int tap = ky * kw + kx;
        auto dy_plane = offsets.plane(n, 2 * tap);
        auto dx_plane = offsets.plane(n, 2 * tap + 1);
        for (int oy = 0; oy < out_h; ++oy) {
          for (int ox = 0; ox < out_w; ++ox) {
            const std::size_t pos = static_cast<std::size_t>(oy) * out_w + ox;
            const double sy = oy * p.stride - p.padding + ky + dy_plane[pos];
            const double sx = ox * p.stride - p.padding + kx + dx_plane[pos];
            for (int ic = 0; ic < in_c; ++ic) {
              cols[(static_cast<std::size_t>(ic) * taps + tap) * positions +
                   pos] = static_cast<float>(
                  bilinear_sample(x.plane(n, ic), x.h(), x.w(), sy, sx));
            }
          }
        }
      }
    }
    for (int oc = 0; oc < out_c; ++oc) {
      const int g = oc / out_per_group;
      std::fill(acc.begin(), acc.end(), p.has_bias() ? p.bias[oc] : 0.0);
      for (int icg = 0; icg < in_per_group; ++icg) {
        const int ic = g * in_per_group + icg;
        for (int tap = 0; tap < taps; ++tap) {
          const double wv = p.kernel.at(oc, icg, tap / kw, tap % kw);
          if (wv == 0.0) continue;
          const float* src =
              cols.data() + (static_cast<std::size_t>(ic) * taps + tap) * positions;
          for (std::size_t i = 0; i < positions; ++i) acc[i] += wv * src[i];
        }
      }
      auto out = y.plane(n, oc);
      for (std::size_t i = 0; i < positions; ++i) {
        out[i] = static_cast<float>(acc[i]);
      }
    }
  }
  return y;
}

FeatureMap deform_conv(const FeatureMap& x, const DeformParams& p) {
  const FeatureMap offsets = conv2d(x, p.offset_conv);
  return deform_conv_with_offsets(x, offsets, p.main_kernel);
}

TmdfParams TmdfParams::zeros(int channels, int height, int width,
                             int text_dim) {
  TmdfParams p;
  p.channels = channels;
  p.text_dim = text_dim;
  p.w_img = ConvParams::depthwise(channels, 1, 1, true);
  p.w_radar = ConvParams::depthwise(channels, 1, 1, true);
  p.eca = EcaParams::zeros(3);
  p.deform = DeformParams::zeros(channels);
  p.lpe = FeatureMap({1, channels, height, width});
  p.w_text.assign(static_cast<std::size_t>(channels) * text_dim, 0.0f);
  p.b_text.assign(channels, 0.0f);
  return p;
}

void TmdfParams::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".w_img", w_img);
  visit_conv(v, prefix + ".w_radar", w_radar);
  visit_vector(v, prefix + ".eca.weight", ParamKind::kWeight, eca.weights,
               eca.k);
  visit_conv(v, prefix + ".deform.offset", deform.offset_conv);
  visit_conv(v, prefix + ".deform.main", deform.main_kernel);
  visit_map(v, prefix + ".lpe", ParamKind::kPositional, lpe);
  v.visit(prefix + ".w_text.weight", ParamKind::kWeight, w_text,
          {channels, text_dim}, text_dim);
  visit_vector(v, prefix + ".w_text.bias", ParamKind::kBias, b_text);
}

FeatureMap sinusoidal_position_encoding(int dim, int length) {
  FeatureMap pe({1, dim, 1, length});
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      const double angle = pos * freq;
      pe.at(0, i, 0, pos) =
          static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

FeatureMap flatten_tokens(const FeatureMap& x) {
  const int positions = x.h() * x.w();
  FeatureMap t({x.n(), 1, positions, x.c()});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      auto src = x.plane(n, c);
      for (int pos = 0; pos < positions; ++pos) t.at(n, 0, pos, c) = src[pos];
    }
  }
  return t;
}

FeatureMap unflatten_tokens(const FeatureMap& tokens, int channels,
                            int height, int width) {
  require(tokens.c() == 1 && tokens.h() == height * width &&
              tokens.w() == channels,
          ErrorCode::kShapeMismatch,
          "unflatten_tokens: " + tokens.shape().str() + " cannot form " +
              std::to_string(channels) + "x" + std::to_string(height) + "x" +
              std::to_string(width));
  FeatureMap x({tokens.n(), channels, height, width});
  for (int n = 0; n < tokens.n(); ++n) {
    for (int c = 0; c < channels; ++c) {
      auto dst = x.plane(n, c);
      for (int pos = 0; pos < height * width; ++pos) {
        dst[pos] = tokens.at(n, 0, pos, c);
      }
    }
  }
  return x;
}

FeatureMap text_projection(const FeatureMap& f_text, const TmdfParams& p) {
  require(f_text.c() == p.text_dim && f_text.h() == 1,
          ErrorCode::kShapeMismatch,
          "tmdf: text feature " + f_text.shape().str() +
              " does not match text_dim " + std::to_string(p.text_dim));
  const int len = f_text.w();
  const FeatureMap ape = sinusoidal_position_encoding(p.text_dim, len);
  FeatureMap out({f_text.n(), p.channels, 1, len});
  std::vector<double> col(p.text_dim);
  for (int n = 0; n < f_text.n(); ++n) {
    for (int j = 0; j < len; ++j) {
      for (int e = 0; e < p.text_dim; ++e) {
        col[e] = static_cast<double>(f_text.at(n, e, 0, j)) + ape.at(0, e, 0, j);
      }
      for (int c = 0; c < p.channels; ++c) {
        const float* wrow =
            p.w_text.data() + static_cast<std::size_t>(c) * p.text_dim;
        double acc = p.b_text[c];
        for (int e = 0; e < p.text_dim; ++e) acc += wrow[e] * col[e];
        out.at(n, c, 0, j) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

namespace {

// Scaled dot products of one query row against every key column, kept in
// double until the caller rounds.
void similarity_row(const FeatureMap& query, const FeatureMap& keys, int n,
                    int pos, bool normalize, std::vector<double>& row) {
  const int d = query.w();
  const int len = keys.w();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  row.assign(len, 0.0);
  for (int j = 0; j < len; ++j) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
      acc += static_cast<double>(query.at(n, 0, pos, c)) * keys.at(n, c, 0, j);
    }
    row[j] = acc * inv_sqrt_d;
  }
  if (normalize) {
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& r : row) {
      r = std::exp(r - mx);
      total += r;
    }
    for (double& r : row) r /= total;
  }
}

void require_attention_shapes(const FeatureMap& query, const FeatureMap& keys) {
  require(query.c() == 1 && keys.n() == query.n() && keys.c() == query.w() &&
              keys.h() == 1 && keys.w() > 0,
          ErrorCode::kShapeMismatch,
          "attention: keys " + keys.shape().str() +
              " incompatible with query " + query.shape().str());
}

}  // namespace

FeatureMap similarity(const FeatureMap& query, const FeatureMap& keys,
                      bool normalize) {
  require_attention_shapes(query, keys);
  FeatureMap sim({query.n(), 1, query.h(), keys.w()});
  std::vector<double> row;
  for (int n = 0; n < query.n(); ++n) {
    for (int pos = 0; pos < query.h(); ++pos) {
      similarity_row(query, keys, n, pos, normalize, row);
      for (int j = 0; j < keys.w(); ++j) {
        sim.at(n, 0, pos, j) = static_cast<float>(row[j]);
      }
    }
  }
  return sim;
}

FeatureMap cross_attend(const FeatureMap& query, const FeatureMap& keys,
                        const FeatureMap& values, bool normalize) {
  require_attention_shapes(query, keys);
  require(values.shape() == keys.shape(), ErrorCode::kShapeMismatch,
          "cross_attend: keys " + keys.shape().str() + " and values " +
              values.shape().str() + " differ");
  const int d = query.w();
  const int len = keys.w();
  FeatureMap out({query.n(), 1, query.h(), d});
  std::vector<double> row;
  for (int n = 0; n < query.n(); ++n) {
    for (int pos = 0; pos < query.h(); ++pos) {
      similarity_row(query, keys, n, pos, normalize, row);
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int j = 0; j < len; ++j) acc += row[j] * values.at(n, c, 0, j);
        out.at(n, 0, pos, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

FeatureMap tmdf_fuse(const FeatureMap& f_img, const FeatureMap& f_radar,
                     const FeatureMap& f_text, const TmdfParams& p,
                     bool attention_normalize) {
  require(f_img.shape() == f_radar.shape(), ErrorCode::kShapeMismatch,
          "tmdf: image " + f_img.shape().str() + " and radar " +
              f_radar.shape().str() + " features differ");
  require(f_img.c() == p.channels, ErrorCode::kShapeMismatch,
          "tmdf: feature channels " + std::to_string(f_img.c()) +
              " != stage channels " + std::to_string(p.channels));
  require(p.lpe.c() == p.channels && p.lpe.h() == f_img.h() &&
              p.lpe.w() == f_img.w(),
          ErrorCode::kShapeMismatch,
          "tmdf: LPE " + p.lpe.shape().str() + " does not match stage " +
              f_img.shape().str());
  require(f_text.n() == f_img.n(), ErrorCode::kShapeMismatch,
          "tmdf: text batch differs from image batch");
  require(f_text.w() >= 3, ErrorCode::kShapeMismatch,
          "tmdf: text length " + std::to_string(f_text.w()) +
              " too short for 1x3 pooling");

  const FeatureMap img = conv2d(f_img, p.w_img);
  const FeatureMap rad = eca(conv2d(f_radar, p.w_radar), p.eca);
  FeatureMap fused = deform_conv(add(img, rad), p.deform);
  for (int n = 0; n < fused.n(); ++n) {
    for (int c = 0; c < fused.c(); ++c) {
      auto dst = fused.plane(n, c);
      auto pos = p.lpe.plane(0, c);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += pos[i];
    }
  }
  const FeatureMap query = flatten_tokens(fused);

  // K and V come from one pooled tensor.
  const FeatureMap pooled = maxpool1d(text_projection(f_text, p), 3, 2);
  const FeatureMap attended =
      cross_attend(query, pooled, pooled, attention_normalize);
  return unflatten_tokens(attended, f_img.c(), f_img.h(), f_img.w());
}

}  // namespace nanomvg
