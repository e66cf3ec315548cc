#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nanomvg/heads.hpp"
#include "nanomvg/tensor.hpp"

namespace nanomvg {

// 8-bit interleaved raster as stored in binary PGM (1 channel) / PPM (3).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

Raster parse_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const Raster& r);
Raster read_pnm(const std::filesystem::path& path);
void write_pnm(const Raster& r, const std::filesystem::path& path);

// (1, 3, H, W) in [0, 1]. Grayscale input is replicated to three channels.
FeatureMap raster_to_map(const Raster& r);

// Radar input: either a 3-channel PPM or raw little-endian f32 planar
// (range, velocity, power) with exactly 3 * size * size values.
FeatureMap read_radar(const std::filesystem::path& path, int size);
FeatureMap read_radar_f32(const std::filesystem::path& path, int size);
void write_radar_f32(const FeatureMap& radar, const std::filesystem::path& path);

FeatureMap read_image(const std::filesystem::path& path, int size);

// Foreground 255, background 0.
Raster mask_to_raster(const BinaryMask& m);
// Any nonzero pixel is foreground.
BinaryMask raster_to_mask(const Raster& r);

}  // namespace nanomvg
