#pragma once

#include <span>
#include <string>
#include <vector>

#include "nanomvg/tensor.hpp"

namespace nanomvg {

// Semantic role of a parameter tensor; random initialization keys off it.
enum class ParamKind {
  kWeight,
  kBias,
  kBnGamma,
  kBnBeta,
  kBnMean,
  kBnVar,
  kLogit,
  kEmbedding,
  kPositional,
};

// Walks every named parameter of a model. Names are dotted paths such as
// `tmdf.stage0.w_img.weight`; shapes are fixed before visiting.
class ParamVisitor {
 public:
  virtual ~ParamVisitor() = default;
  virtual void visit(const std::string& name, ParamKind kind,
                     std::span<float> data, const std::vector<int>& shape,
                     int fan_in) = 0;
};

void visit_conv(ParamVisitor& v, const std::string& prefix, ConvParams& p);
void visit_bn(ParamVisitor& v, const std::string& prefix, BNParams& p);
void visit_vector(ParamVisitor& v, const std::string& name, ParamKind kind,
                  std::vector<float>& data, int fan_in = 1);
void visit_scalar(ParamVisitor& v, const std::string& name, ParamKind kind,
                  float& value);
void visit_map(ParamVisitor& v, const std::string& name, ParamKind kind,
               FeatureMap& map);

// Deterministic initializer: every tensor draws from its own generator
// seeded by (seed, name), so adding a layer never perturbs the others.
class RandomInitializer : public ParamVisitor {
 public:
  explicit RandomInitializer(unsigned long long seed) : seed_(seed) {}
  void visit(const std::string& name, ParamKind kind, std::span<float> data,
             const std::vector<int>& shape, int fan_in) override;

 private:
  unsigned long long seed_;
};

// Collects (name, shape) pairs; used for manifests and duplicate checks.
class NameCollector : public ParamVisitor {
 public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
  };
  void visit(const std::string& name, ParamKind kind, std::span<float> data,
             const std::vector<int>& shape, int fan_in) override;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

unsigned long long name_seed(unsigned long long seed, const std::string& name);

}  // namespace nanomvg
