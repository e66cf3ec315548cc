#include "nanomvg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nanomvg/error.hpp"
#include "nanomvg/kv.hpp"

namespace nanomvg {

double box_iou(const DetectionBox& a, const DetectionBox& b) {
  require(a.w > 0 && a.h > 0 && b.w > 0 && b.h > 0,
          ErrorCode::kInvalidArgument, "box_iou: zero-area box");
  const double ix = std::min(a.cx + a.w / 2, b.cx + b.w / 2) -
                    std::max(a.cx - a.w / 2, b.cx - b.w / 2);
  const double iy = std::min(a.cy + a.h / 2, b.cy + b.h / 2) -
                    std::max(a.cy - a.h / 2, b.cy - b.h / 2);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

namespace {

// true-positive flags in score-descending order (stable on ties).
std::vector<bool> greedy_match(const std::vector<DetectionBox>& preds,
                               const std::vector<DetectionBox>& gts,
                               double iou_threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });
  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> tp;
  tp.reserve(preds.size());
  for (std::size_t idx : order) {
    double best = iou_threshold;
    int match = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = box_iou(preds[idx], gts[g]);
      if (iou >= best) {
        // Strictly better wins; the first gt wins exact ties.
        if (match < 0 || iou > best) {
          best = iou;
          match = static_cast<int>(g);
        }
      }
    }
    if (match >= 0) taken[match] = true;
    tp.push_back(match >= 0);
  }
  return tp;
}

}  // namespace

std::optional<double> query_average_precision(
    const std::vector<DetectionBox>& preds,
    const std::vector<DetectionBox>& gts, double iou_threshold) {
  if (gts.empty() && preds.empty()) return std::nullopt;
  if (gts.empty() || preds.empty()) return 0.0;
  const std::vector<bool> tp = greedy_match(preds, gts, iou_threshold);
  std::vector<double> precision(tp.size());
  std::vector<double> recall(tp.size());
  double hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i] ? 1 : 0;
    precision[i] = hits / (i + 1);
    recall[i] = hits / gts.size();
  }
  // Monotone precision envelope.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

std::optional<double> query_recall(const std::vector<DetectionBox>& preds,
                                   const std::vector<DetectionBox>& gts,
                                   double iou_threshold) {
  if (gts.empty()) return std::nullopt;
  const std::vector<bool> tp = greedy_match(preds, gts, iou_threshold);
  return static_cast<double>(std::count(tp.begin(), tp.end(), true)) /
         gts.size();
}

EvalResult average_precision(
    const std::vector<std::vector<DetectionBox>>& preds,
    const std::vector<std::vector<DetectionBox>>& gts,
    const std::vector<double>& iou_thresholds) {
  require(preds.size() == gts.size(), ErrorCode::kShapeMismatch,
          "average_precision: prediction and gt query counts differ");
  require(!iou_thresholds.empty(), ErrorCode::kInvalidArgument,
          "average_precision: no IoU thresholds");
  EvalResult out;
  double ap50 = 0.0, ap_all = 0.0, ar_all = 0.0;
  int ap_queries = 0, ar_queries = 0;
  for (std::size_t q = 0; q < preds.size(); ++q) {
    const auto a50 = query_average_precision(preds[q], gts[q], 0.5);
    if (a50) {
      ++ap_queries;
      ap50 += *a50;
      double s = 0.0;
      for (double t : iou_thresholds) {
        s += *query_average_precision(preds[q], gts[q], t);
      }
      ap_all += s / iou_thresholds.size();
    }
    if (!gts[q].empty()) {
      ++ar_queries;
      double s = 0.0;
      for (double t : iou_thresholds) s += *query_recall(preds[q], gts[q], t);
      ar_all += s / iou_thresholds.size();
    }
  }
  out.queries_scored = ap_queries;
  if (ap_queries > 0) {
    out.ap50 = 100.0 * ap50 / ap_queries;
    out.ap50_95 = 100.0 * ap_all / ap_queries;
  }
  if (ar_queries > 0) out.ar50_95 = 100.0 * ar_all / ar_queries;
  return out;
}

double mask_miou(const std::vector<BinaryMask>& preds,
                 const std::vector<BinaryMask>& gts) {
  require(preds.size() == gts.size(), ErrorCode::kShapeMismatch,
          "mask_miou: prediction and gt counts differ");
  require(!preds.empty(), ErrorCode::kInvalidArgument, "mask_miou: no masks");
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const BinaryMask& p = preds[i];
    const BinaryMask& g = gts[i];
    require(p.height == g.height && p.width == g.width &&
                p.bits.size() == g.bits.size(),
            ErrorCode::kShapeMismatch,
            "mask_miou: mask " + std::to_string(i) + " dims differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < p.bits.size(); ++k) {
      inter += (p.bits[k] && g.bits[k]) ? 1 : 0;
      uni += (p.bits[k] || g.bits[k]) ? 1 : 0;
    }
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  }
  return 100.0 * total / preds.size();
}

int EnergyTrace::tau() const {
  return tau_evals.value_or(static_cast<int>(rows.size()));
}

void EnergyTrace::validate() const {
  require(!rows.empty(), ErrorCode::kInvalidArgument, "energy trace is empty");
  require(tau() >= 1, ErrorCode::kInvalidArgument,
          "tau_evals must be at least 1");
  for (const auto& r : rows) {
    require(r.energy_trained >= 0 && r.energy_untrained >= 0 &&
                std::isfinite(r.energy_trained) &&
                std::isfinite(r.energy_untrained),
            ErrorCode::kInvalidArgument,
            "energy trace row '" + r.sample_id + "' has a negative or non-finite energy");
  }
}

EnergyTrace EnergyTrace::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  EnergyTrace trace;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      require(line == "sample_id,energy_trained,energy_untrained",
              ErrorCode::kParse,
              "energy trace: expected header "
              "'sample_id,energy_trained,energy_untrained'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    require(fields.size() == 3, ErrorCode::kParse,
            "energy trace line " + std::to_string(line_no) +
                ": expected 3 fields");
    trace.rows.push_back({fields[0], parse_double("energy_trained", fields[1]),
                          parse_double("energy_untrained", fields[2])});
  }
  require(header_seen, ErrorCode::kParse, "energy trace: missing header");
  trace.validate();
  return trace;
}

EnergyTrace EnergyTrace::load_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path));
}

std::string EnergyTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "sample_id,energy_trained,energy_untrained\n";
  for (const auto& r : rows) {
    out << r.sample_id << ',' << r.energy_trained << ',' << r.energy_untrained
        << '\n';
  }
  return out.str();
}

double relative_power(const EnergyTrace& trace) {
  trace.validate();
  double diff = 0.0;
  for (const auto& r : trace.rows) diff += r.energy_trained - r.energy_untrained;
  return diff / trace.tau();
}

double mept(const std::vector<double>& perf, const EnergyTrace& trace) {
  require(!perf.empty(), ErrorCode::kInvalidArgument,
          "mept: no performance values");
  const double power = relative_power(trace);
  require(power > 0.0, ErrorCode::kInvalidArgument,
          "mept: relative power " + std::to_string(power) +
              " is not positive (untrained energy >= trained energy)");
  const double mean = std::accumulate(perf.begin(), perf.end(), 0.0) /
                      perf.size();
  return mean / power;
}

}  // namespace nanomvg
