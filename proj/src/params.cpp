#include "nanomvg/params.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nanomvg {

void visit_conv(ParamVisitor& v, const std::string& prefix, ConvParams& p) {
  const std::vector<int> shape = {p.kernel.n(), p.kernel.c(), p.kernel.h(),
                                  p.kernel.w()};
  const int fan_in = p.kernel.c() * p.kernel.h() * p.kernel.w();
  v.visit(prefix + ".weight", ParamKind::kWeight, p.kernel.data(), shape,
          fan_in);
  if (p.has_bias()) {
    v.visit(prefix + ".bias", ParamKind::kBias, p.bias,
            {static_cast<int>(p.bias.size())}, fan_in);
  }
}

void visit_bn(ParamVisitor& v, const std::string& prefix, BNParams& p) {
  const std::vector<int> shape = {p.channels()};
  v.visit(prefix + ".gamma", ParamKind::kBnGamma, p.gamma, shape, 1);
  v.visit(prefix + ".beta", ParamKind::kBnBeta, p.beta, shape, 1);
  v.visit(prefix + ".running_mean", ParamKind::kBnMean, p.running_mean, shape,
          1);
  v.visit(prefix + ".running_var", ParamKind::kBnVar, p.running_var, shape, 1);
}

void visit_vector(ParamVisitor& v, const std::string& name, ParamKind kind,
                  std::vector<float>& data, int fan_in) {
  v.visit(name, kind, data, {static_cast<int>(data.size())}, fan_in);
}

void visit_scalar(ParamVisitor& v, const std::string& name, ParamKind kind,
                  float& value) {
  v.visit(name, kind, std::span<float>(&value, 1), {1}, 1);
}

void visit_map(ParamVisitor& v, const std::string& name, ParamKind kind,
               FeatureMap& map) {
  v.visit(name, kind, map.data(), {map.n(), map.c(), map.h(), map.w()},
          map.c() * map.h() * map.w());
}

unsigned long long name_seed(unsigned long long seed, const std::string& name) {
  // FNV-1a over the name, mixed with the global seed.
  unsigned long long h = 1469598103934665603ull ^ (seed * 0x9E3779B97F4A7C15ull);
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void RandomInitializer::visit(const std::string& name, ParamKind kind,
                              std::span<float> data,
                              const std::vector<int>& /*shape*/, int fan_in) {
  std::mt19937_64 rng(name_seed(seed_, name));
  auto uniform = [&rng](double lo, double hi) {
    return static_cast<float>(std::uniform_real_distribution<double>(lo, hi)(rng));
  };
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (float& x : data) {
    switch (kind) {
      case ParamKind::kWeight: x = uniform(-bound, bound); break;
      case ParamKind::kBias: x = uniform(-0.1, 0.1); break;
      case ParamKind::kBnGamma: x = uniform(0.8, 1.2); break;
      case ParamKind::kBnBeta: x = uniform(-0.1, 0.1); break;
      case ParamKind::kBnMean: x = uniform(-0.1, 0.1); break;
      case ParamKind::kBnVar: x = uniform(0.5, 1.5); break;
      // Expert-mixing logits start neutral (sigmoid = 0.5).
      case ParamKind::kLogit: x = 0.0f; break;
      case ParamKind::kEmbedding: x = uniform(-1.0, 1.0); break;
      case ParamKind::kPositional: x = 0.0f; break;
    }
  }
}

void NameCollector::visit(const std::string& name, ParamKind /*kind*/,
                          std::span<float> /*data*/,
                          const std::vector<int>& shape, int /*fan_in*/) {
  entries_.push_back({name, shape});
}

}  // namespace nanomvg
