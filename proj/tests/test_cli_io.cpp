#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "nanomvg/cli.hpp"
#include "nanomvg/fixtures.hpp"
#include "nanomvg/io.hpp"
#include "nanomvg/raster.hpp"
#include "nanomvg/verify/oracles.hpp"
#include "test_util.hpp"

using namespace nanomvg;
using nanomvg::testing::code_of;
using nanomvg::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.input_size = 64;
  cfg.stage_channels = {8, 8, 12, 16};
  cfg.fpn_channels = 12;
  cfg.embed_dim = 8;
  cfg.text_len = 12;
  return cfg;
}

ModelParams small_model(unsigned long long seed = 5) {
  return ModelParams::random(small_config(), 20, seed);
}

std::vector<std::uint8_t> raw_archive(const std::string& manifest,
                                      std::size_t blob_bytes) {
  std::vector<std::uint8_t> out = {'N', 'M', 'V', 'G', 1, 0, 0, 0};
  const auto len = static_cast<std::uint32_t>(manifest.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.resize(out.size() + blob_bytes, 0);
  return out;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Inputs {
  FeatureMap image, radar;
  TokenSequence tokens;
};

Inputs random_inputs(const RunConfig& cfg, int vocab, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  Inputs in;
  in.image = verify::random_map(rng, {1, 3, cfg.input_size, cfg.input_size}, 0, 1);
  in.radar = verify::random_map(rng, {1, 3, cfg.input_size, cfg.input_size}, 0, 1);
  std::uniform_int_distribution<int> id(1, vocab - 1);
  for (int i = 0; i < cfg.text_len; ++i) {
    const bool pad = i >= cfg.text_len / 2;
    in.tokens.ids.push_back(pad ? 0 : id(rng));
    in.tokens.padding_mask.push_back(pad);
  }
  return in;
}

int run(const std::vector<std::string>& args, std::string* out = nullptr,
        std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = cli_dispatch(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST_CASE("archive: save and load round trip is bitwise") {
  const WeightArchive a = small_model().to_archive();
  const auto bytes = serialize_archive(a);
  const WeightArchive b = parse_archive(bytes);
  CHECK(a == b);
  CHECK(serialize_archive(b) == bytes);

  TempDir dir;
  save_archive(a, dir.path() / "m.nmvg");
  CHECK(file_bytes(dir.path() / "m.nmvg") == bytes);
  CHECK(load_archive(dir.path() / "m.nmvg") == a);
}

TEST_CASE("archive: every parameter survives a model round trip") {
  const ModelParams m = small_model();
  const ModelParams back = ModelParams::from_archive(m.config, m.to_archive());
  CHECK(back.vocab_size == m.vocab_size);
  CHECK(back.to_archive() == m.to_archive());
}

TEST_CASE("archive: truncated blob") {
  auto bytes = serialize_archive(small_model().to_archive());
  bytes.resize(bytes.size() - 4);
  try {
    parse_archive(bytes);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBlobOutOfBounds);
    CHECK(std::string(e.what()).find("blob out of bounds") != std::string::npos);
  }
}

TEST_CASE("archive: missing parameter is named") {
  const WeightArchive full = small_model().to_archive();
  WeightArchive partial;
  for (const auto& e : full.manifest) {
    if (e.name != "enmoe.stage0.theta1_raw") partial.add(e.name, e.shape, full.read(e));
  }
  try {
    ModelParams::from_archive(small_config(), partial);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingParameter);
    CHECK(std::string(e.what()).find("enmoe.stage0.theta1_raw") != std::string::npos);
  }
}

TEST_CASE("archive: unexpected and mis-shaped parameters") {
  WeightArchive extra = small_model().to_archive();
  const float one = 1.0f;
  extra.add("enmoe.stage9.theta1_raw", {1}, std::span<const float>(&one, 1));
  CHECK(code_of([&] { ModelParams::from_archive(small_config(), extra); }) ==
        ErrorCode::kUnexpectedParameter);

  RunConfig wider = small_config();
  wider.fpn_channels = 16;
  CHECK(code_of([&] { ModelParams::from_archive(wider, small_model().to_archive()); }) ==
        ErrorCode::kShapeMismatch);
}

TEST_CASE("archive: header and manifest errors have distinct codes") {
  auto bytes = serialize_archive(small_model().to_archive());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { parse_archive(bad_magic); }) == ErrorCode::kBadMagic);
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(code_of([&] { parse_archive(bad_version); }) == ErrorCode::kUnsupportedVersion);
  CHECK(code_of([] { parse_archive(raw_archive("a f32 2 0\nb f32 2 4\n", 16)); }) ==
        ErrorCode::kOverlappingEntries);
  CHECK(code_of([] { parse_archive(raw_archive("a f32 2 0\na f32 2 8\n", 16)); }) ==
        ErrorCode::kDuplicateParameter);
  CHECK(code_of([] { parse_archive(raw_archive("a f16 2 0\n", 16)); }) ==
        ErrorCode::kMalformedManifest);
  CHECK(code_of([] { parse_archive(raw_archive("a f32 2\n", 16)); }) ==
        ErrorCode::kMalformedManifest);
  CHECK(parse_archive(raw_archive("a f32 2 8\nb f32 2 0\n", 16)).manifest.size() == 2);
}

TEST_CASE("raster: PNM and radar round trips") {
  TempDir dir;
  Raster rgb{5, 3, 3, {}};
  for (int i = 0; i < 45; ++i) rgb.data.push_back(static_cast<std::uint8_t>(i * 5));
  write_pnm(rgb, dir.path() / "a.ppm");
  const Raster back = read_pnm(dir.path() / "a.ppm");
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.channels == 3);
  CHECK(back.data == rgb.data);

  const std::string with_comment = "P5\n# hi\n2 1\n15\n\x0f\x05";
  const Raster gray = parse_pnm(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(with_comment.data()), with_comment.size()));
  CHECK(gray.data == std::vector<std::uint8_t>{255, 85});
  CHECK(raster_to_map(gray).shape() == Shape4{1, 3, 1, 2});

  std::mt19937_64 rng(3);
  const FeatureMap radar = verify::random_map(rng, {1, 3, 32, 32});
  write_radar_f32(radar, dir.path() / "r.f32");
  CHECK(read_radar(dir.path() / "r.f32", 32).vec() == radar.vec());
  CHECK_THROWS_AS(read_radar(dir.path() / "r.f32", 64), Error);
  CHECK(code_of([&] { read_image(dir.path() / "a.ppm", 64); }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([&] { read_pnm(dir.path() / "missing.ppm"); }) == ErrorCode::kIo);

  BinaryMask m;
  m.width = 3;
  m.height = 2;
  m.bits = {1, 0, 1, 0, 0, 1};
  write_mask(m, dir.path() / "m.pgm");
  CHECK(read_mask(dir.path() / "m.pgm").bits == m.bits);
  CHECK(mask_to_raster(m).data[0] == 255);
}

TEST_CASE("boxes and eval sets round trip") {
  const std::vector<DetectionBox> boxes = {{1.25, 2.5, 3.0, 4.0, 0.875},
                                           {10.1, 20.2, 0.3, 0.4, 1e-3}};
  const auto back = parse_boxes(format_boxes(boxes));
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].cx == boxes[i].cx);
    CHECK(back[i].cy == boxes[i].cy);
    CHECK(back[i].w == boxes[i].w);
    CHECK(back[i].h == boxes[i].h);
    CHECK(back[i].score == boxes[i].score);
  }
  CHECK(parse_boxes("1 2 3 4\n")[0].score == 1.0);
  CHECK_THROWS_AS(parse_boxes("1 2 0 4\n"), Error);
  CHECK_THROWS_AS(parse_boxes("1 2 3\n"), Error);

  TempDir dir;
  const auto samples = make_eval_samples(5, 64, 11);
  write_eval_set(samples, dir.path());
  const auto loaded = load_eval_set(dir.path());
  REQUIRE(loaded.size() == 5);
  const EvalResult r = evaluate(loaded, samples);
  CHECK(r.ap50 == doctest::Approx(100.0));
  CHECK(r.miou == doctest::Approx(100.0));
}

TEST_CASE("RunConfig: parse, round trip and validation") {
  const RunConfig d;
  CHECK(d.input_size == 640);
  CHECK(d.text_len == 50);
  CHECK(d.score_thresh == 0.6);
  CHECK_FALSE(d.attention_normalize);
  const RunConfig c = RunConfig::parse(small_config().to_text());
  CHECK(c.to_text() == small_config().to_text());
  CHECK(code_of([] { RunConfig::parse("input_size = 100\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { RunConfig::parse("colour = red\n"); }) == ErrorCode::kParse);
}

TEST_CASE("forward: zero weights emit no boxes and an image-sized empty mask") {
  const RunConfig cfg = small_config();
  const ModelParams m = ModelParams::zeros(cfg, 20);
  const Inputs in = random_inputs(cfg, 20, 1);
  const Prediction p = forward(m, in.image, in.radar, in.tokens);
  CHECK(p.boxes.empty());
  CHECK(p.rec.heatmap.h() == 16);
  for (float v : p.rec.heatmap.vec()) CHECK(v == 0.5f);
  CHECK(p.res.masks[0].width == 64);
  CHECK(p.res.masks[0].height == 64);
  CHECK(p.res.masks[0].count() == 0);
}

TEST_CASE("forward: deterministic and fused equals train mode") {
  const ModelParams m = small_model(9);
  const Inputs in = random_inputs(m.config, 20, 2);
  const Prediction a = forward(m, in.image, in.radar, in.tokens);
  const Prediction b = forward(m, in.image, in.radar, in.tokens);
  CHECK(a.res.logits.vec() == b.res.logits.vec());
  CHECK(a.rec.heatmap.vec() == b.rec.heatmap.vec());

  const ModelParams fused = ModelParams::from_archive(m.config, fuse_archive(m.to_archive()));
  CHECK(fused.fused());
  const Prediction f = forward(fused, in.image, in.radar, in.tokens);
  CHECK(verify::max_abs_diff(f.res.logits, verify::RefMap::from(a.res.logits)) <= 1e-5);
  CHECK(f.rec.heatmap.vec() == a.rec.heatmap.vec());
  CHECK(code_of([&] { fuse_archive(fused.to_archive()); }) == ErrorCode::kState);
}

TEST_CASE("forward: rejects wrong input sizes and prompt lengths") {
  const ModelParams m = small_model();
  Inputs in = random_inputs(m.config, 20, 3);
  CHECK(code_of([&] { forward(m, FeatureMap({1, 3, 32, 32}), in.radar, in.tokens); }) ==
        ErrorCode::kShapeMismatch);
  in.tokens.ids.pop_back();
  in.tokens.padding_mask.pop_back();
  CHECK(code_of([&] { forward(m, in.image, in.radar, in.tokens); }) ==
        ErrorCode::kShapeMismatch);
}

TEST_CASE("cli: usage errors") {
  std::string out, err;
  CHECK(run({}, &out, &err) == kExitUsage);
  CHECK(err.find("infer") != std::string::npos);
  CHECK(run({"frobnicate"}, &out, &err) == kExitUsage);
  CHECK(run({"mept", "--perf", "70"}) == kExitUsage);
  CHECK(run({"--help"}, &out) == kExitOk);
}

TEST_CASE("cli: fixtures, infer, fuse-rep, eval and mept end to end") {
  TempDir dir;
  const fs::path d = dir.path();
  std::string out, err;
  REQUIRE(run({"gen-fixtures", "--out-dir", d.string(), "--samples", "3"}) == kExitOk);

  CHECK(run({"mept", "--trace", (d / "trace.csv").string(), "--perf", "70"}, &out) ==
        kExitOk);
  CHECK(out == "2.5\n");

  const std::vector<std::string> common = {
      "--config", (d / "config.txt").string(), "--image", (d / "image.ppm").string(),
      "--radar", (d / "radar.f32").string(), "--prompt", (d / "prompt.txt").string()};
  auto infer = [&](const std::string& weights, const std::string& out_dir,
                   std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"infer", "--weights", weights, "--out-dir", out_dir};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args, &out, &err);
  };
  REQUIRE(infer((d / "model.nmvg").string(), (d / "a").string()) == kExitOk);
  REQUIRE(infer((d / "model.nmvg").string(), (d / "b").string()) == kExitOk);
  CHECK(file_bytes(d / "a" / "mask.pgm") == file_bytes(d / "b" / "mask.pgm"));
  CHECK(file_bytes(d / "a" / "boxes.txt") == file_bytes(d / "b" / "boxes.txt"));
  CHECK(read_mask(d / "a" / "mask.pgm").width == 64);

  REQUIRE(run({"fuse-rep", (d / "model.nmvg").string(), (d / "fused.nmvg").string()}) ==
          kExitOk);
  REQUIRE(infer((d / "fused.nmvg").string(), (d / "f").string()) == kExitOk);
  CHECK(read_boxes(d / "f" / "boxes.txt").size() == read_boxes(d / "a" / "boxes.txt").size());
  REQUIRE(infer((d / "model.nmvg").string(), (d / "g").string(), {"--fused"}) == kExitOk);
  CHECK(infer((d / "fused.nmvg").string(), (d / "h").string(), {"--train-mode"}) ==
        kExitData);
  CHECK(err.find("[state]") != std::string::npos);
  CHECK(run({"fuse-rep", (d / "fused.nmvg").string(), (d / "x.nmvg").string()}, &out,
            &err) == kExitData);

  CHECK(run({"eval", "--pred", (d / "gt").string(), "--gt", (d / "gt").string()}, &out) ==
        kExitOk);
  CHECK(out.find("AP50 100.0000") != std::string::npos);
  CHECK(out.find("mIoU 100.0000") != std::string::npos);

  CHECK(run({"mept", "--trace", (d / "nope.csv").string(), "--perf", "70"}, &out, &err) ==
        kExitData);
}
