#include "nanomvg/fixtures.hpp"

#include <cstdio>
#include <fstream>
#include <random>

#include "nanomvg/error.hpp"
#include "nanomvg/raster.hpp"

namespace nanomvg {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<std::string> fixture_vocabulary() {
  return {"[pad]", "[unk]", "the",   "a",     "boat",  "ship",   "buoy",
          "pier",  "person", "left", "right", "on",    "in",     "of",
          "near",  "far",   "red",   "white", "small", "large",  "moving",
          "water", "bridge", "kayak", "front", "behind", "closest", "to"};
}

std::vector<EvalSample> make_eval_samples(int count, int image_size,
                                          unsigned long long seed) {
  require(count > 0 && image_size >= 8, ErrorCode::kInvalidArgument,
          "make_eval_samples: need count > 0 and image_size >= 8");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nboxes(1, 3);
  std::uniform_int_distribution<int> side(2, image_size / 2);
  std::vector<EvalSample> out;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "sample%03d", i);
    EvalSample s;
    s.id = id;
    BinaryMask mask;
    mask.height = mask.width = image_size;
    mask.bits.assign(static_cast<std::size_t>(image_size) * image_size, 0);
    const int n = nboxes(rng);
    for (int b = 0; b < n; ++b) {
      const int w = side(rng), h = side(rng);
      const int x0 = std::uniform_int_distribution<int>(0, image_size - w)(rng);
      const int y0 = std::uniform_int_distribution<int>(0, image_size - h)(rng);
      s.boxes.push_back({x0 + w / 2.0, y0 + h / 2.0, double(w), double(h), 1.0});
      for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
          mask.bits[static_cast<std::size_t>(y) * image_size + x] = 1;
        }
      }
    }
    s.mask = std::move(mask);
    out.push_back(std::move(s));
  }
  return out;
}

EnergyTrace hand_energy_trace() {
  EnergyTrace t;
  for (int i = 0; i < 10; ++i) {
    t.rows.push_back({"eval" + std::to_string(i), 40.0 + i, 12.0 + i});
  }
  return t;
}

void generate_fixtures(const fs::path& dir, const FixtureOptions& opts) {
  RunConfig cfg;
  cfg.input_size = opts.input_size;
  cfg.seed = opts.seed;
  cfg.vocab = "vocab.txt";
  cfg.validate();
  fs::create_directories(dir);

  write_text(cfg.to_text(), dir / "config.txt");
  const Vocabulary vocab = Vocabulary::from_tokens(fixture_vocabulary());
  vocab.save(dir / "vocab.txt");
  const ModelParams model =
      opts.zero_weights ? ModelParams::zeros(cfg, vocab.size())
                        : ModelParams::random(cfg, vocab.size(), opts.seed);
  save_archive(model.to_archive(), dir / "model.nmvg");
  write_text("the small red boat on the left\n", dir / "prompt.txt");

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  Raster image{cfg.input_size, cfg.input_size, 3, {}};
  image.data.resize(static_cast<std::size_t>(cfg.input_size) * cfg.input_size * 3);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& v : image.data) v = static_cast<std::uint8_t>(byte(rng));
  write_pnm(image, dir / "image.ppm");

  FeatureMap radar({1, 3, cfg.input_size, cfg.input_size});
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (float& v : radar.data()) v = unit(rng);
  write_radar_f32(radar, dir / "radar.f32");

  write_text(hand_energy_trace().to_csv(), dir / "trace.csv");
  write_eval_set(make_eval_samples(opts.eval_samples, cfg.input_size, opts.seed),
                 dir / "gt");
}

}  // namespace nanomvg
