#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nanomvg::verify {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool include_large = true;  // the 640x640 pipeline run
  std::uint64_t seed = 20240611;
};

inline constexpr int kCriterionCount = 9;

CriterionResult run_criterion(int id, const AcceptanceOptions& opts);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

// "[PASS] 3 equation fidelity: ... (0.42 s)"
std::string format_result(const CriterionResult& r);

// Prints one line per criterion; returns true when all passed.
bool report(const std::vector<CriterionResult>& results, std::ostream& out);

}  // namespace nanomvg::verify
