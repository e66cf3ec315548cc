#include "nanomvg/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "nanomvg/error.hpp"
#include "nanomvg/ops.hpp"

namespace nanomvg {

namespace {

void require_divisible_input(const FeatureMap& x, const char* who) {
  require(x.c() == 3, ErrorCode::kShapeMismatch,
          std::string(who) + ": expected 3 input channels, got " +
              std::to_string(x.c()));
  require(x.h() > 0 && x.w() > 0 && x.h() % 32 == 0 && x.w() % 32 == 0,
          ErrorCode::kShapeMismatch,
          std::string(who) + ": input " + std::to_string(x.h()) + "x" +
              std::to_string(x.w()) +
              " must be a positive multiple of 32 in both dims");
}

FeatureMap conv_bn_relu(const FeatureMap& x, const ConvParams& conv,
                        const BNParams& bn) {
  return activation(batchnorm_inference(conv2d(x, conv), bn),
                    Activation::kRelu);
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

void EncoderConfig::validate() const {
  for (int i = 0; i < 4; ++i) {
    require(stage_channels[i] > 0, ErrorCode::kInvalidArgument,
            "stage channels must be positive");
    if (i > 0) {
      require(stage_channels[i] >= stage_channels[i - 1],
              ErrorCode::kInvalidArgument,
              "stage channels must be non-decreasing");
    }
  }
  require(text_len >= 3, ErrorCode::kInvalidArgument,
          "text_len must be at least 3");
  require(embed_dim > 0, ErrorCode::kInvalidArgument,
          "embed_dim must be positive");
  require(text_vocab > 0, ErrorCode::kInvalidArgument,
          "text_vocab must be positive");
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  require(!tokens.empty(), ErrorCode::kInvalidArgument,
          "vocabulary must contain at least the padding token");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (int i = 0; i < v.size(); ++i) {
    // First occurrence wins so ids stay stable under duplicate lines.
    v.index_.emplace(lowercase(v.tokens_[i]), i);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo,
          "cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  require(!tokens.empty(), ErrorCode::kParse,
          "vocabulary file " + path.string() + " is empty");
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIo,
          "cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::find(std::string_view token) const {
  auto it = index_.find(lowercase(std::string(token)));
  return it == index_.end() ? -1 : it->second;
}

TokenSequence Vocabulary::tokenize(std::string_view text, int length) const {
  require(length > 0, ErrorCode::kInvalidArgument,
          "token length must be positive");
  const int unk = find("[unk]");
  TokenSequence seq;
  seq.ids.assign(length, 0);
  seq.padding_mask.assign(length, true);
  std::istringstream words{std::string(text)};
  std::string word;
  int pos = 0;
  while (pos < length && words >> word) {
    int id = find(word);
    if (id <= 0) {
      require(unk > 0, ErrorCode::kInvalidArgument,
              "word '" + word + "' not in vocabulary and no [unk] token");
      id = unk;
    }
    seq.ids[pos] = id;
    seq.padding_mask[pos] = false;
    ++pos;
  }
  return seq;
}

ImageEncoderParams ImageEncoderParams::zeros(const EncoderConfig& cfg) {
  ImageEncoderParams p;
  const int c0 = cfg.stage_channels[0];
  p.stem = ConvParams::zeros(3, c0, 3, 2, 1, 1, false);
  p.stem_bn = BNParams::identity(c0);
  int prev = c0;
  for (int i = 0; i < 4; ++i) {
    const int c = cfg.stage_channels[i];
    p.stages[i].dw = ConvParams::depthwise(prev, 3, 2, false);
    p.stages[i].pw = ConvParams::zeros(prev, c, 1, 1, 0, 1, false);
    p.stages[i].bn = BNParams::identity(c);
    prev = c;
  }
  return p;
}

void ImageEncoderParams::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".stem.conv", stem);
  visit_bn(v, prefix + ".stem.bn", stem_bn);
  for (int i = 0; i < 4; ++i) {
    const std::string s = prefix + ".stage" + std::to_string(i);
    visit_conv(v, s + ".dw", stages[i].dw);
    visit_conv(v, s + ".pw", stages[i].pw);
    visit_bn(v, s + ".bn", stages[i].bn);
  }
}

RadarEncoderParams RadarEncoderParams::zeros(const EncoderConfig& cfg) {
  RadarEncoderParams p;
  p.stem = ConvParams::depthwise(3, 3, 2, false);
  p.stem_bn = BNParams::identity(3);
  int prev = 3;
  for (int i = 0; i < 4; ++i) {
    const int c = cfg.stage_channels[i];
    Stage& st = p.stages[i];
    st.has_bridge = prev != c;
    if (st.has_bridge) st.bridge = ConvParams::zeros(prev, c, 1, 1, 0, 1, true);
    for (auto& b : st.blocks) {
      b.dw1 = ConvParams::depthwise(c, 3, 1, false);
      b.bn1 = BNParams::identity(c);
      b.dw2 = ConvParams::depthwise(c, 3, 1, false);
      b.bn2 = BNParams::identity(c);
    }
    st.down = ConvParams::depthwise(c, 3, 2, false);
    st.down_bn = BNParams::identity(c);
    prev = c;
  }
  return p;
}

void RadarEncoderParams::visit(ParamVisitor& v, const std::string& prefix) {
  visit_conv(v, prefix + ".stem.conv", stem);
  visit_bn(v, prefix + ".stem.bn", stem_bn);
  for (int i = 0; i < 4; ++i) {
    const std::string s = prefix + ".stage" + std::to_string(i);
    Stage& st = stages[i];
    if (st.has_bridge) visit_conv(v, s + ".bridge", st.bridge);
    for (int b = 0; b < 2; ++b) {
      const std::string bp = s + ".block" + std::to_string(b);
      visit_conv(v, bp + ".dw1", st.blocks[b].dw1);
      visit_bn(v, bp + ".bn1", st.blocks[b].bn1);
      visit_conv(v, bp + ".dw2", st.blocks[b].dw2);
      visit_bn(v, bp + ".bn2", st.blocks[b].bn2);
    }
    visit_conv(v, s + ".down", st.down);
    visit_bn(v, s + ".down_bn", st.down_bn);
  }
}

TextEncoderParams TextEncoderParams::zeros(const EncoderConfig& cfg) {
  TextEncoderParams p;
  p.vocab = cfg.text_vocab;
  p.dim = cfg.embed_dim;
  p.table.assign(static_cast<std::size_t>(p.vocab) * p.dim, 0.0f);
  return p;
}

void TextEncoderParams::visit(ParamVisitor& v, const std::string& prefix) {
  v.visit(prefix + ".embedding", ParamKind::kEmbedding, table, {vocab, dim},
          dim);
}

StageMaps image_encoder(const FeatureMap& rgb, const ImageEncoderParams& p) {
  require_divisible_input(rgb, "image_encoder");
  FeatureMap x = conv_bn_relu(rgb, p.stem, p.stem_bn);
  StageMaps out;
  for (int i = 0; i < 4; ++i) {
    const auto& st = p.stages[i];
    x = conv_bn_relu(conv2d(x, st.dw), st.pw, st.bn);
    out[i] = x;
  }
  return out;
}

FeatureMap radar_block(const FeatureMap& x,
                       const RadarEncoderParams::Block& block) {
  FeatureMap h = conv_bn_relu(x, block.dw1, block.bn1);
  h = conv_bn_relu(h, block.dw2, block.bn2);
  return add(x, h);
}

StageMaps radar_encoder(const FeatureMap& radar, const RadarEncoderParams& p) {
  require_divisible_input(radar, "radar_encoder");
  FeatureMap x = conv_bn_relu(radar, p.stem, p.stem_bn);
  StageMaps out;
  for (int i = 0; i < 4; ++i) {
    const auto& st = p.stages[i];
    if (st.has_bridge) x = conv2d(x, st.bridge);
    for (const auto& b : st.blocks) x = radar_block(x, b);
    x = conv_bn_relu(x, st.down, st.down_bn);
    out[i] = x;
  }
  return out;
}

FeatureMap text_encoder(const std::vector<TokenSequence>& batch,
                        const TextEncoderParams& p) {
  require(!batch.empty(), ErrorCode::kInvalidArgument,
          "text_encoder: empty batch");
  const int len = static_cast<int>(batch.front().ids.size());
  FeatureMap out({static_cast<int>(batch.size()), p.dim, 1, len});
  for (int n = 0; n < static_cast<int>(batch.size()); ++n) {
    const auto& ids = batch[n].ids;
    require(static_cast<int>(ids.size()) == len, ErrorCode::kShapeMismatch,
            "text_encoder: sequences in a batch must share one length");
    for (int j = 0; j < len; ++j) {
      const int id = ids[j];
      require(id >= 0 && id < p.vocab, ErrorCode::kInvalidArgument,
              "text_encoder: token id " + std::to_string(id) +
                  " outside vocabulary of size " + std::to_string(p.vocab));
      const float* row = p.table.data() + static_cast<std::size_t>(id) * p.dim;
      for (int c = 0; c < p.dim; ++c) out.at(n, c, 0, j) = row[c];
    }
  }
  return out;
}

FeatureMap text_encoder(const TokenSequence& tokens,
                        const TextEncoderParams& p) {
  return text_encoder(std::vector<TokenSequence>{tokens}, p);
}

}  // namespace nanomvg
