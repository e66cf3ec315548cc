#include "nanomvg/model.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "nanomvg/error.hpp"
#include "nanomvg/kv.hpp"

namespace nanomvg {

EncoderConfig RunConfig::encoder(int vocab_size) const {
  EncoderConfig e;
  e.stage_channels = stage_channels;
  e.text_vocab = vocab_size;
  e.text_len = text_len;
  e.embed_dim = embed_dim;
  return e;
}

void RunConfig::validate() const {
  require(input_size >= 32 && input_size % 32 == 0,
          ErrorCode::kInvalidArgument,
          "input_size must be a positive multiple of 32, got " +
              std::to_string(input_size));
  for (int c : stage_channels) {
    require(c > 0, ErrorCode::kInvalidArgument,
            "stage_channels must be positive");
  }
  require(fpn_channels > 0, ErrorCode::kInvalidArgument,
          "fpn_channels must be positive");
  require(embed_dim > 0, ErrorCode::kInvalidArgument,
          "embed_dim must be positive");
  require(text_len >= 3, ErrorCode::kInvalidArgument,
          "text_len must be at least 3");
  require(head_level >= 2 && head_level <= 5, ErrorCode::kInvalidArgument,
          "head_level must be in [2, 5]");
  require(topk >= 1, ErrorCode::kInvalidArgument, "topk must be at least 1");
  require(score_thresh >= 0.0 && score_thresh <= 1.0,
          ErrorCode::kInvalidArgument, "score_thresh must be in [0, 1]");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "input_size") {
    input_size = static_cast<int>(parse_int(key, value));
  } else if (key == "stage_channels") {
    const auto v = parse_int_list(key, value);
    require(v.size() == 4, ErrorCode::kParse,
            "stage_channels needs 4 comma-separated values");
    std::copy(v.begin(), v.end(), stage_channels.begin());
  } else if (key == "fpn_channels") {
    fpn_channels = static_cast<int>(parse_int(key, value));
  } else if (key == "embed_dim") {
    embed_dim = static_cast<int>(parse_int(key, value));
  } else if (key == "text_len") {
    text_len = static_cast<int>(parse_int(key, value));
  } else if (key == "attention_normalize") {
    attention_normalize = parse_bool(key, value);
  } else if (key == "head_level") {
    head_level = static_cast<int>(parse_int(key, value));
  } else if (key == "score_thresh") {
    score_thresh = parse_double(key, value);
  } else if (key == "topk") {
    topk = static_cast<int>(parse_int(key, value));
  } else if (key == "mask_thresh") {
    mask_thresh = static_cast<float>(parse_double(key, value));
  } else if (key == "loss_config") {
    loss_config = value;
  } else if (key == "vocab") {
    vocab = value;
  } else if (key == "seed") {
    seed = static_cast<unsigned long long>(parse_int(key, value));
  } else {
    fail(ErrorCode::kParse, "unknown config key '" + key + "'");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  char thresh[64];
  out << "input_size = " << input_size << "\n";
  out << "stage_channels = " << stage_channels[0] << "," << stage_channels[1]
      << "," << stage_channels[2] << "," << stage_channels[3] << "\n";
  out << "fpn_channels = " << fpn_channels << "\n";
  out << "embed_dim = " << embed_dim << "\n";
  out << "text_len = " << text_len << "\n";
  out << "attention_normalize = "
      << (attention_normalize ? "true" : "false") << "\n";
  out << "head_level = " << head_level << "\n";
  std::snprintf(thresh, sizeof thresh, "%.17g", score_thresh);
  out << "score_thresh = " << thresh << "\n";
  out << "topk = " << topk << "\n";
  std::snprintf(thresh, sizeof thresh, "%.9g", mask_thresh);
  out << "mask_thresh = " << thresh << "\n";
  if (!loss_config.empty()) out << "loss_config = " << loss_config << "\n";
  if (!vocab.empty()) out << "vocab = " << vocab << "\n";
  out << "seed = " << seed << "\n";
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  RunConfig cfg = parse(read_text_file(path));
  // Relative paths inside a config resolve against its directory.
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).string();
    }
  };
  resolve(cfg.loss_config);
  resolve(cfg.vocab);
  return cfg;
}

ModelParams ModelParams::zeros(const RunConfig& cfg, int vocab_size) {
  cfg.validate();
  const EncoderConfig enc = cfg.encoder(vocab_size);
  enc.validate();
  ModelParams m;
  m.config = cfg;
  m.vocab_size = vocab_size;
  m.image = ImageEncoderParams::zeros(enc);
  m.radar = RadarEncoderParams::zeros(enc);
  m.text = TextEncoderParams::zeros(enc);
  for (int i = 0; i < 4; ++i) {
    const int side = cfg.input_size / (4 << i);
    m.tmdf[i] =
        TmdfParams::zeros(cfg.stage_channels[i], side, side, cfg.embed_dim);
    m.enmoe[i] = EnMoeParams::zeros(cfg.fpn_channels);
  }
  m.fpn = FpnParams::zeros(cfg.stage_channels, cfg.fpn_channels);
  m.rec = RecHeadParams::zeros(cfg.fpn_channels, cfg.downsample_ratio());
  m.res = ResHeadParams::zeros(cfg.fpn_channels);
  return m;
}

ModelParams ModelParams::random(const RunConfig& cfg, int vocab_size,
                                unsigned long long seed) {
  ModelParams m = zeros(cfg, vocab_size);
  RandomInitializer init(seed);
  m.visit(init);
  return m;
}

ModelParams ModelParams::from_archive(const RunConfig& cfg,
                                      const WeightArchive& archive) {
  const ArchiveEntry* emb = archive.find("text.embedding");
  require(emb != nullptr, ErrorCode::kMissingParameter,
          "archive is missing parameter 'text.embedding'");
  require(emb->shape.size() == 2, ErrorCode::kShapeMismatch,
          "text.embedding must be 2-D");
  ModelParams m = zeros(cfg, emb->shape[0]);
  if (archive.find("res.msrep5.fused.weight") != nullptr) {
    for (auto& rep : m.res.msrep) rep = msrep_fuse(rep);
  }
  ArchiveReader reader(archive);
  m.visit(reader);
  reader.finish();
  return m;
}

WeightArchive ModelParams::to_archive() const {
  WeightArchive out;
  ArchiveWriter writer(out);
  // Visiting needs mutable spans; the writer only reads them.
  const_cast<ModelParams*>(this)->visit(writer);
  return out;
}

ModelParams ModelParams::fuse() const {
  ModelParams m = *this;
  m.res = fuse_res_head(res);
  return m;
}

void ModelParams::visit(ParamVisitor& v) {
  image.visit(v, "image");
  radar.visit(v, "radar");
  text.visit(v, "text");
  for (int i = 0; i < 4; ++i) {
    tmdf[i].visit(v, "tmdf.stage" + std::to_string(i));
  }
  fpn.visit(v, "fpn");
  for (int i = 0; i < 4; ++i) {
    enmoe[i].visit(v, "enmoe.stage" + std::to_string(i));
  }
  rec.visit(v, "rec");
  res.visit(v, "res");
}

WeightArchive fuse_archive(const WeightArchive& archive) {
  require(archive.find("res.msrep5.fused.weight") == nullptr, ErrorCode::kState,
          "archive is already fused");
  WeightArchive fused_entries;
  ArchiveWriter writer(fused_entries);
  std::vector<std::string> replaced;
  for (int level = 5; level >= 3; --level) {
    const std::string prefix = "res.msrep" + std::to_string(level);
    const ArchiveEntry* conv3 = archive.find(prefix + ".conv3.weight");
    require(conv3 != nullptr, ErrorCode::kMissingParameter,
            "archive is missing parameter '" + prefix + ".conv3.weight'");
    MsRepParams train = MsRepParams::zeros(conv3->shape.at(0));
    NameCollector names;
    train.visit(names, prefix);
    ArchiveReader reader(archive);
    train.visit(reader, prefix);
    for (const auto& e : names.entries()) replaced.push_back(e.name);
    msrep_fuse(train).visit(writer, prefix);
  }
  WeightArchive out;
  for (const auto& e : archive.manifest) {
    if (std::find(replaced.begin(), replaced.end(), e.name) != replaced.end()) {
      continue;
    }
    out.add(e.name, e.shape, archive.read(e));
  }
  for (const auto& e : fused_entries.manifest) {
    out.add(e.name, e.shape, fused_entries.read(e));
  }
  return out;
}

bool enmoe_applies(const FeatureMap& level) {
  return level.h() >= kEnMoeMinExtent && level.w() >= kEnMoeMinExtent;
}

Prediction forward(const ModelParams& m, const FeatureMap& image,
                   const FeatureMap& radar, const TokenSequence& tokens) {
  const RunConfig& cfg = m.config;
  const Shape4 want{1, 3, cfg.input_size, cfg.input_size};
  require(image.shape() == want, ErrorCode::kShapeMismatch,
          "image must be " + want.str() + ", got " + image.shape().str());
  require(radar.shape() == want, ErrorCode::kShapeMismatch,
          "radar must be " + want.str() + ", got " + radar.shape().str());
  require(static_cast<int>(tokens.ids.size()) == cfg.text_len,
          ErrorCode::kShapeMismatch,
          "prompt must have " + std::to_string(cfg.text_len) + " tokens");

  const StageMaps f_img = image_encoder(image, m.image);
  const StageMaps f_radar = radar_encoder(radar, m.radar);
  const FeatureMap f_text = text_encoder(tokens, m.text);

  Prediction out;
  for (int i = 0; i < 4; ++i) {
    out.fused[i] = tmdf_fuse(f_img[i], f_radar[i], f_text, m.tmdf[i],
                             cfg.attention_normalize);
  }
  const StageMaps s = fpn_forward(out.fused, m.fpn);
  for (int i = 0; i < 4; ++i) {
    out.pyramid[i] = enmoe_applies(s[i]) ? enmoe_forward(s[i], m.enmoe[i])
                                         : s[i];
  }
  out.rec = rec_head_forward(out.pyramid[cfg.head_level - 2], m.rec);
  out.boxes = decode_boxes(out.rec.heatmap, out.rec.wh, out.rec.offset,
                           cfg.downsample_ratio(), cfg.topk, cfg.score_thresh);
  out.res = res_head_forward(out.pyramid, m.res, cfg.input_size,
                             cfg.input_size, cfg.mask_thresh);
  return out;
}

}  // namespace nanomvg
