#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nanomvg/io.hpp"

namespace nanomvg {

std::vector<std::string> fixture_vocabulary();

// Random boxes (score 1) with matching rectangular masks.
std::vector<EvalSample> make_eval_samples(int count, int image_size,
                                          unsigned long long seed);

// Ten evaluations, 28 J trained-minus-untrained each: with mean
// performance 70 the metric is 70 / 28 = 2.5.
EnergyTrace hand_energy_trace();

struct FixtureOptions {
  int input_size = 64;
  unsigned long long seed = 7;
  bool zero_weights = false;
  int eval_samples = 4;
};

// Writes config.txt, vocab.txt, model.nmvg, prompt.txt, image.ppm,
// radar.f32, trace.csv and a gt/ evaluation set into dir.
void generate_fixtures(const std::filesystem::path& dir,
                       const FixtureOptions& opts);

}  // namespace nanomvg
