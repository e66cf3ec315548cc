#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "nanomvg/archive.hpp"
#include "nanomvg/encoders.hpp"
#include "nanomvg/enmoe.hpp"
#include "nanomvg/fpn.hpp"
#include "nanomvg/heads.hpp"
#include "nanomvg/tmdf.hpp"

namespace nanomvg {

struct RunConfig {
  int input_size = 640;
  std::array<int, 4> stage_channels = {16, 32, 64, 96};
  int fpn_channels = 64;
  int embed_dim = 64;
  int text_len = 50;
  bool attention_normalize = false;
  int head_level = 2;  // REC head reads S_level, downsample ratio 2^level
  double score_thresh = 0.6;
  int topk = 10;
  float mask_thresh = 0.0f;
  std::string loss_config;  // optional path, unused by inference
  std::string vocab;        // optional path
  unsigned long long seed = 0;

  int downsample_ratio() const { return 1 << head_level; }
  EncoderConfig encoder(int vocab_size) const;
  void validate() const;
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
};

struct ModelParams {
  RunConfig config;
  int vocab_size = 0;
  ImageEncoderParams image;
  RadarEncoderParams radar;
  TextEncoderParams text;
  std::array<TmdfParams, 4> tmdf;
  FpnParams fpn;
  std::array<EnMoeParams, 4> enmoe;
  RecHeadParams rec;
  ResHeadParams res;

  static ModelParams zeros(const RunConfig& cfg, int vocab_size);
  static ModelParams random(const RunConfig& cfg, int vocab_size,
                            unsigned long long seed);
  // Shapes come from `cfg`, the vocabulary size from the archive; the RES
  // head is bound in fused form when the archive carries fused weights.
  static ModelParams from_archive(const RunConfig& cfg,
                                  const WeightArchive& archive);
  WeightArchive to_archive() const;

  bool fused() const { return res.fused(); }
  ModelParams fuse() const;
  void visit(ParamVisitor& v);
};

struct Prediction {
  StageMaps fused;    // TMDF output per encoder stage
  StageMaps pyramid;  // EN-MoE refined S2..S5
  RecHeadOutput rec;
  std::vector<DetectionBox> boxes;
  ResHeadOutput res;
};

// image, radar: (1, 3, S, S) with S == config.input_size.
Prediction forward(const ModelParams& m, const FeatureMap& image,
                   const FeatureMap& radar, const TokenSequence& tokens);

// Replaces the multi-branch RES-head blocks of an archive by their fused
// kernels; every other entry is copied unchanged. Throws kState when the
// archive is already fused.
WeightArchive fuse_archive(const WeightArchive& archive);

// EN-MoE needs at least a 5x5 map; smaller pyramid levels pass through.
bool enmoe_applies(const FeatureMap& level);

}  // namespace nanomvg
