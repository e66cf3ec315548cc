#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nanomvg/heads.hpp"

namespace nanomvg {

double box_iou(const DetectionBox& a, const DetectionBox& b);

// All values on a 0..100 percentage scale.
struct EvalResult {
  double ap50 = 0.0;
  double ap50_95 = 0.0;
  double ar50_95 = 0.0;
  double miou = 0.0;
  int queries_scored = 0;  // queries contributing to the AP mean
};

// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

// AP of a single query at one IoU threshold: greedy score-descending
// matching (each prediction takes the best still-unmatched gt with
// IoU >= threshold), then 101-point interpolated precision. Returns nullopt
// when the query has neither ground truth nor predictions.
std::optional<double> query_average_precision(
    const std::vector<DetectionBox>& preds,
    const std::vector<DetectionBox>& gts, double iou_threshold);

// Max recall at one threshold; nullopt when the query has no ground truth.
std::optional<double> query_recall(const std::vector<DetectionBox>& preds,
                                   const std::vector<DetectionBox>& gts,
                                   double iou_threshold);

// Per-query AP / AR averaged over queries (undefined queries excluded) and
// over the given thresholds. ap50 uses threshold 0.5 regardless.
EvalResult average_precision(
    const std::vector<std::vector<DetectionBox>>& preds,
    const std::vector<std::vector<DetectionBox>>& gts,
    const std::vector<double>& iou_thresholds = coco_iou_thresholds());

// Mean |P & G| / |P | G| over samples; empty-vs-empty counts as 1. 0..100.
double mask_miou(const std::vector<BinaryMask>& preds,
                 const std::vector<BinaryMask>& gts);

struct EnergyRecord {
  std::string sample_id;
  double energy_trained = 0.0;    // joules
  double energy_untrained = 0.0;  // joules
};

struct EnergyTrace {
  std::vector<EnergyRecord> rows;
  std::optional<int> tau_evals;  // defaults to the row count

  int tau() const;
  void validate() const;

  // CSV with header `sample_id,energy_trained,energy_untrained`.
  static EnergyTrace parse_csv(const std::string& text);
  static EnergyTrace load_csv(const std::filesystem::path& path);
  std::string to_csv() const;
};

// (1 / tau) * sum(trained - untrained).
double relative_power(const EnergyTrace& trace);

// mean(perf) / relative_power(trace). Rejects non-positive relative power.
double mept(const std::vector<double>& perf, const EnergyTrace& trace);

}  // namespace nanomvg
