#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nanomvg {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense NCHW array of 32-bit reals. Text features use (N, C, 1, L).
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Shape4 shape, float fill = 0.0f);
  FeatureMap(Shape4 shape, std::vector<float> data);

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& vec() const { return data_; }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }

  std::span<float> plane(int n, int c) {
    return {data_.data() + index(n, c, 0, 0),
            static_cast<std::size_t>(shape_.h) * shape_.w};
  }
  std::span<const float> plane(int n, int c) const {
    return {data_.data() + index(n, c, 0, 0),
            static_cast<std::size_t>(shape_.h) * shape_.w};
  }

  bool all_finite() const;

 private:
  Shape4 shape_{};
  std::vector<float> data_;
};

// kernel: (C_out, C_in / groups, k_h, k_w). bias: empty or C_out entries.
struct ConvParams {
  FeatureMap kernel;
  std::vector<float> bias;
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int out_channels() const { return kernel.n(); }
  int in_channels() const { return kernel.c() * groups; }
  int kernel_h() const { return kernel.h(); }
  int kernel_w() const { return kernel.w(); }
  bool has_bias() const { return !bias.empty(); }

  // Zero-filled parameters of the given geometry.
  static ConvParams zeros(int in_channels, int out_channels, int kernel_size,
                          int stride, int padding, int groups, bool with_bias);
  static ConvParams depthwise(int channels, int kernel_size, int stride,
                              bool with_bias);
  // 1x1 identity mapping; depthwise when `depthwise` is true.
  static ConvParams identity(int channels, bool depthwise);

  void validate() const;
};

struct BNParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = 1e-5f;

  int channels() const { return static_cast<int>(gamma.size()); }

  // gamma=1, beta=0, mean=0, var=1.
  static BNParams identity(int channels, float epsilon = 1e-5f);
  void validate() const;
};

}  // namespace nanomvg
