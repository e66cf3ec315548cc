#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nanomvg/metrics.hpp"
#include "nanomvg/model.hpp"

namespace nanomvg {

// One box per line: `cx cy w h score`. Reading accepts a missing score
// column (score 1) so ground-truth files can omit it.
std::string format_boxes(const std::vector<DetectionBox>& boxes);
std::vector<DetectionBox> parse_boxes(const std::string& text);
void write_boxes(const std::vector<DetectionBox>& boxes,
                 const std::filesystem::path& path);
std::vector<DetectionBox> read_boxes(const std::filesystem::path& path);

void write_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask(const std::filesystem::path& path);

// An evaluation set is a directory of sample subdirectories, each holding
// boxes.txt and optionally mask.pgm.
struct EvalSample {
  std::string id;
  std::vector<DetectionBox> boxes;
  std::optional<BinaryMask> mask;
};

void write_eval_set(const std::vector<EvalSample>& samples,
                    const std::filesystem::path& dir);
std::vector<EvalSample> load_eval_set(const std::filesystem::path& dir);

// Pairs samples by id. Every ground-truth sample needs a prediction; mIoU
// is computed when every ground-truth sample carries a mask.
EvalResult evaluate(const std::vector<EvalSample>& preds,
                    const std::vector<EvalSample>& gts);

struct InferOutput {
  Prediction prediction;
  std::filesystem::path boxes_path;
  std::filesystem::path mask_path;
};

// Reads the rasters and prompt, runs the model and writes boxes.txt and
// mask.pgm into out_dir.
InferOutput run_infer(const ModelParams& model,
                      const std::filesystem::path& image,
                      const std::filesystem::path& radar,
                      const std::filesystem::path& prompt,
                      const Vocabulary& vocab,
                      const std::filesystem::path& out_dir);

}  // namespace nanomvg
