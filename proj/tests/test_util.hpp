#pragma once

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "nanomvg/error.hpp"
#include "nanomvg/params.hpp"

namespace nanomvg::testing {

// Runs f and returns the code of the nanomvg::Error it throws.
template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kState;
}

// Zeroes biases and BN shifts so an all-zero input stays zero.
class ZeroShift : public ParamVisitor {
 public:
  void visit(const std::string&, ParamKind kind, std::span<float> data,
             const std::vector<int>&, int) override {
    if (kind == ParamKind::kBias || kind == ParamKind::kBnBeta ||
        kind == ParamKind::kBnMean) {
      std::fill(data.begin(), data.end(), 0.0f);
    }
  }
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("nmvg_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace nanomvg::testing
