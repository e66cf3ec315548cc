#include "nanomvg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nanomvg/error.hpp"
#include "nanomvg/kv.hpp"
#include "nanomvg/raster.hpp"

namespace nanomvg {

namespace fs = std::filesystem;

std::string format_boxes(const std::vector<DetectionBox>& boxes) {
  std::string out;
  char line[160];
  for (const auto& b : boxes) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g\n", b.cx,
                  b.cy, b.w, b.h, b.score);
    out += line;
  }
  return out;
}

std::vector<DetectionBox> parse_boxes(const std::string& text) {
  std::vector<DetectionBox> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    require(fields.size() == 4 || fields.size() == 5, ErrorCode::kParse,
            "boxes line " + std::to_string(line_no) +
                ": expected 'cx cy w h [score]'");
    DetectionBox b;
    const std::string where = "boxes line " + std::to_string(line_no);
    b.cx = parse_double(where, fields[0]);
    b.cy = parse_double(where, fields[1]);
    b.w = parse_double(where, fields[2]);
    b.h = parse_double(where, fields[3]);
    b.score = fields.size() == 5 ? parse_double(where, fields[4]) : 1.0;
    require(b.w > 0 && b.h > 0, ErrorCode::kParse,
            where + ": box width and height must be positive");
    out.push_back(b);
  }
  return out;
}

void write_boxes(const std::vector<DetectionBox>& boxes, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << format_boxes(boxes);
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<DetectionBox> read_boxes(const fs::path& path) {
  try {
    return parse_boxes(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
  write_pnm(mask_to_raster(mask), path);
}

BinaryMask read_mask(const fs::path& path) {
  return raster_to_mask(read_pnm(path));
}

void write_eval_set(const std::vector<EvalSample>& samples,
                    const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& s : samples) {
    const fs::path sub = dir / s.id;
    fs::create_directories(sub);
    write_boxes(s.boxes, sub / "boxes.txt");
    if (s.mask) write_mask(*s.mask, sub / "mask.pgm");
  }
}

std::vector<EvalSample> load_eval_set(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::kIo,
          dir.string() + " is not a directory");
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<EvalSample> out;
  for (const auto& sub : subdirs) {
    EvalSample s;
    s.id = sub.filename().string();
    const fs::path boxes = sub / "boxes.txt";
    require(fs::exists(boxes), ErrorCode::kIo,
            "sample " + s.id + " has no boxes.txt");
    s.boxes = read_boxes(boxes);
    if (fs::exists(sub / "mask.pgm")) s.mask = read_mask(sub / "mask.pgm");
    out.push_back(std::move(s));
  }
  require(!out.empty(), ErrorCode::kIo,
          dir.string() + " contains no sample directories");
  return out;
}

EvalResult evaluate(const std::vector<EvalSample>& preds,
                    const std::vector<EvalSample>& gts) {
  std::map<std::string, const EvalSample*> by_id;
  for (const auto& p : preds) by_id[p.id] = &p;
  std::vector<std::vector<DetectionBox>> pb, gb;
  std::vector<BinaryMask> pm, gm;
  bool masks = true;
  for (const auto& g : gts) {
    auto it = by_id.find(g.id);
    require(it != by_id.end(), ErrorCode::kInvalidArgument,
            "no prediction for sample '" + g.id + "'");
    pb.push_back(it->second->boxes);
    gb.push_back(g.boxes);
    if (!g.mask) {
      masks = false;
      continue;
    }
    require(it->second->mask.has_value(), ErrorCode::kInvalidArgument,
            "prediction for sample '" + g.id + "' has no mask");
    pm.push_back(*it->second->mask);
    gm.push_back(*g.mask);
  }
  EvalResult r = average_precision(pb, gb);
  if (masks && !gm.empty()) r.miou = mask_miou(pm, gm);
  return r;
}

InferOutput run_infer(const ModelParams& model, const fs::path& image,
                      const fs::path& radar, const fs::path& prompt,
                      const Vocabulary& vocab, const fs::path& out_dir) {
  const int size = model.config.input_size;
  require(vocab.size() == model.vocab_size, ErrorCode::kShapeMismatch,
          "vocabulary has " + std::to_string(vocab.size()) +
              " tokens, model embedding expects " +
              std::to_string(model.vocab_size));
  const FeatureMap img = read_image(image, size);
  const FeatureMap rad = read_radar(radar, size);
  const TokenSequence tokens =
      vocab.tokenize(read_text_file(prompt), model.config.text_len);

  InferOutput out;
  out.prediction = forward(model, img, rad, tokens);
  fs::create_directories(out_dir);
  out.boxes_path = out_dir / "boxes.txt";
  out.mask_path = out_dir / "mask.pgm";
  write_boxes(out.prediction.boxes, out.boxes_path);
  write_mask(out.prediction.res.masks.at(0), out.mask_path);
  return out;
}

}  // namespace nanomvg
