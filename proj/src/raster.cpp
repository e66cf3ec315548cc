#include "nanomvg/raster.hpp"

#include <bit>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "nanomvg/error.hpp"

namespace nanomvg {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_bytes(const std::vector<std::uint8_t>& bytes,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : b_(b) {}

  int next_int() {
    skip_space_and_comments();
    long long v = 0;
    std::size_t digits = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      require(v <= 1 << 20, ErrorCode::kParse, "pnm: header value too large");
      ++digits;
    }
    require(digits > 0, ErrorCode::kParse, "pnm: malformed header");
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the pixel data.
  std::size_t data_start() {
    require(pos_ < b_.size() && std::isspace(b_[pos_]), ErrorCode::kParse,
            "pnm: missing whitespace before pixel data");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 2;
};

}  // namespace

Raster parse_pnm(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P' &&
              (bytes[1] == '5' || bytes[1] == '6'),
          ErrorCode::kParse, "pnm: expected binary PGM (P5) or PPM (P6)");
  Raster r;
  r.channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader h(bytes);
  r.width = h.next_int();
  r.height = h.next_int();
  const int maxval = h.next_int();
  require(r.width > 0 && r.height > 0, ErrorCode::kParse,
          "pnm: zero-sized raster");
  require(maxval > 0 && maxval <= 255, ErrorCode::kParse,
          "pnm: only 8-bit rasters are supported (maxval " +
              std::to_string(maxval) + ")");
  const std::size_t start = h.data_start();
  const std::size_t n =
      static_cast<std::size_t>(r.width) * r.height * r.channels;
  require(bytes.size() >= start + n, ErrorCode::kParse,
          "pnm: truncated pixel data");
  r.data.assign(bytes.begin() + start, bytes.begin() + start + n);
  if (maxval != 255) {
    for (auto& v : r.data) {
      v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
  }
  return r;
}

std::vector<std::uint8_t> encode_pnm(const Raster& r) {
  require(r.channels == 1 || r.channels == 3, ErrorCode::kInvalidArgument,
          "pnm: channels must be 1 or 3");
  require(r.data.size() ==
              static_cast<std::size_t>(r.width) * r.height * r.channels,
          ErrorCode::kShapeMismatch, "pnm: data size does not match dims");
  const std::string header = std::string(r.channels == 3 ? "P6" : "P5") +
                             "\n" + std::to_string(r.width) + " " +
                             std::to_string(r.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), r.data.begin(), r.data.end());
  return out;
}

Raster read_pnm(const std::filesystem::path& path) {
  try {
    return parse_pnm(read_bytes(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_pnm(const Raster& r, const std::filesystem::path& path) {
  write_bytes(encode_pnm(r), path);
}

FeatureMap raster_to_map(const Raster& r) {
  FeatureMap out({1, 3, r.height, r.width});
  const std::size_t plane = static_cast<std::size_t>(r.height) * r.width;
  auto d = out.data();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const int src = r.channels == 3 ? c : 0;
      d[c * plane + i] = r.data[i * r.channels + src] / 255.0f;
    }
  }
  return out;
}

FeatureMap read_image(const std::filesystem::path& path, int size) {
  const Raster r = read_pnm(path);
  require(r.width == size && r.height == size, ErrorCode::kShapeMismatch,
          path.string() + ": image is " + std::to_string(r.width) + "x" +
              std::to_string(r.height) + ", expected " + std::to_string(size) +
              "x" + std::to_string(size));
  return raster_to_map(r);
}

FeatureMap read_radar_f32(const std::filesystem::path& path, int size) {
  const auto bytes = read_bytes(path);
  const std::size_t n = 3ull * size * size;
  require(bytes.size() == n * 4, ErrorCode::kShapeMismatch,
          path.string() + ": radar file has " + std::to_string(bytes.size()) +
              " bytes, expected " + std::to_string(n * 4) + " (3x" +
              std::to_string(size) + "x" + std::to_string(size) + " f32)");
  FeatureMap out({1, 3, size, size});
  auto d = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = bytes.data() + 4 * i;
    const std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                               std::uint32_t(p[2]) << 16 |
                               std::uint32_t(p[3]) << 24;
    d[i] = std::bit_cast<float>(bits);
  }
  require(out.all_finite(), ErrorCode::kParse,
          path.string() + ": radar contains non-finite values");
  return out;
}

void write_radar_f32(const FeatureMap& radar,
                     const std::filesystem::path& path) {
  require(radar.n() == 1 && radar.c() == 3, ErrorCode::kShapeMismatch,
          "radar must be (1, 3, H, W), got " + radar.shape().str());
  std::vector<std::uint8_t> bytes;
  bytes.reserve(radar.data().size() * 4);
  for (float v : radar.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(bits >> (8 * i)));
  }
  write_bytes(bytes, path);
}

FeatureMap read_radar(const std::filesystem::path& path, int size) {
  const auto ext = path.extension().string();
  if (ext == ".f32" || ext == ".raw") return read_radar_f32(path, size);
  const Raster r = read_pnm(path);
  require(r.channels == 3, ErrorCode::kShapeMismatch,
          path.string() + ": radar raster needs 3 channels (P6)");
  require(r.width == size && r.height == size, ErrorCode::kShapeMismatch,
          path.string() + ": radar is " + std::to_string(r.width) + "x" +
              std::to_string(r.height) + ", expected " + std::to_string(size) +
              "x" + std::to_string(size));
  return raster_to_map(r);
}

Raster mask_to_raster(const BinaryMask& m) {
  Raster r{m.width, m.height, 1, {}};
  r.data.resize(m.bits.size());
  for (std::size_t i = 0; i < m.bits.size(); ++i) r.data[i] = m.bits[i] ? 255 : 0;
  return r;
}

BinaryMask raster_to_mask(const Raster& r) {
  require(r.channels == 1, ErrorCode::kShapeMismatch,
          "mask raster must be grayscale (P5)");
  BinaryMask m;
  m.height = r.height;
  m.width = r.width;
  m.bits.resize(r.data.size());
  for (std::size_t i = 0; i < r.data.size(); ++i) m.bits[i] = r.data[i] ? 1 : 0;
  return m;
}

}  // namespace nanomvg
