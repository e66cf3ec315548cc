#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nanomvg/params.hpp"
#include "nanomvg/tensor.hpp"

namespace nanomvg {

using StageMaps = std::array<FeatureMap, 4>;

struct EncoderConfig {
  std::array<int, 4> stage_channels = {16, 32, 64, 96};
  int text_vocab = 0;
  int text_len = 50;
  int embed_dim = 64;

  void validate() const;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<bool> padding_mask;  // true where the position is padding
};

// One token per line, line index = id. Id 0 is the padding token.
class Vocabulary {
 public:
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  int find(std::string_view token) const;  // -1 when absent

  // Lowercase + whitespace split, padded or truncated to `length`. Words
  // missing from the vocabulary map to `[unk]` when present, else throw.
  TokenSequence tokenize(std::string_view text, int length) const;

  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Stem (3x3 stride-2 conv) then four stride-2 depthwise-separable stages,
// giving features at 1/4, 1/8, 1/16 and 1/32 of the input.
struct ImageEncoderParams {
  struct Stage {
    ConvParams dw;
    ConvParams pw;
    BNParams bn;
  };
  ConvParams stem;
  BNParams stem_bn;
  std::array<Stage, 4> stages;

  static ImageEncoderParams zeros(const EncoderConfig& cfg);
  void visit(ParamVisitor& v, const std::string& prefix);
};

// Lite radar encoder: a stride-2 depthwise stem, then per stage an optional
// 1x1 bridge to the stage width, two residual [DWC3x3-BN-ReLU]x2 blocks and
// a stride-2 depthwise downsample.
struct RadarEncoderParams {
  struct Block {
    ConvParams dw1;
    BNParams bn1;
    ConvParams dw2;
    BNParams bn2;
  };
  struct Stage {
    bool has_bridge = false;
    ConvParams bridge;
    std::array<Block, 2> blocks;
    ConvParams down;
    BNParams down_bn;
  };
  ConvParams stem;
  BNParams stem_bn;
  std::array<Stage, 4> stages;

  static RadarEncoderParams zeros(const EncoderConfig& cfg);
  void visit(ParamVisitor& v, const std::string& prefix);
};

struct TextEncoderParams {
  int vocab = 0;
  int dim = 0;
  std::vector<float> table;  // vocab x dim, row-major

  static TextEncoderParams zeros(const EncoderConfig& cfg);
  void visit(ParamVisitor& v, const std::string& prefix);
};

// Both take N x 3 x H x W with H, W divisible by 32.
StageMaps image_encoder(const FeatureMap& rgb, const ImageEncoderParams& p);
StageMaps radar_encoder(const FeatureMap& radar, const RadarEncoderParams& p);

// Residual radar block, exposed for tests.
FeatureMap radar_block(const FeatureMap& x,
                       const RadarEncoderParams::Block& block);

// (N, dim, 1, L): column j is the embedding of token j.
FeatureMap text_encoder(const std::vector<TokenSequence>& batch,
                        const TextEncoderParams& p);
FeatureMap text_encoder(const TokenSequence& tokens,
                        const TextEncoderParams& p);

}  // namespace nanomvg
