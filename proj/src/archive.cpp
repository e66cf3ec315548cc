#include "nanomvg/archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nanomvg/error.hpp"
#include "nanomvg/kv.hpp"

namespace nanomvg {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'V', 'G'};

std::uint32_t load_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

float load_f32(const std::uint8_t* p) {
  const std::uint32_t bits = load_u32(p);
  return std::bit_cast<float>(bits);
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(shape[i]);
  }
  return s;
}

ArchiveEntry parse_manifest_line(const std::string& line, int line_no) {
  std::istringstream in(line);
  std::string name, dtype, shape, offset, extra;
  const std::string where = "manifest line " + std::to_string(line_no);
  if (!(in >> name >> dtype >> shape >> offset) || (in >> extra)) {
    fail(ErrorCode::kMalformedManifest,
         where + ": expected 'name dtype shape offset'");
  }
  require(dtype == "f32", ErrorCode::kMalformedManifest,
          where + ": unsupported dtype '" + dtype + "'");
  ArchiveEntry e;
  e.name = name;
  try {
    e.shape = parse_int_list(name, shape);
    const long long off = parse_int(name, offset);
    require(off >= 0, ErrorCode::kMalformedManifest,
            where + ": negative offset");
    e.offset = static_cast<std::uint64_t>(off);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kParse) throw;
    fail(ErrorCode::kMalformedManifest, where + ": " + err.what());
  }
  require(!e.shape.empty(), ErrorCode::kMalformedManifest,
          where + ": empty shape");
  for (int d : e.shape) {
    require(d > 0, ErrorCode::kMalformedManifest,
            where + ": non-positive dimension in '" + name + "'");
  }
  return e;
}

}  // namespace

std::size_t ArchiveEntry::count() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

bool operator==(const ArchiveEntry& a, const ArchiveEntry& b) {
  return a.name == b.name && a.shape == b.shape && a.offset == b.offset;
}

bool operator==(const WeightArchive& a, const WeightArchive& b) {
  return a.manifest == b.manifest && a.blob == b.blob;
}

const ArchiveEntry* WeightArchive::find(const std::string& name) const {
  for (const auto& e : manifest) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<float> WeightArchive::read(const ArchiveEntry& e) const {
  require(e.offset + e.byte_size() <= blob.size(), ErrorCode::kBlobOutOfBounds,
          "blob out of bounds: '" + e.name + "' ends at byte " +
              std::to_string(e.offset + e.byte_size()) + " of " +
              std::to_string(blob.size()));
  std::vector<float> out(e.count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = load_f32(blob.data() + e.offset + 4 * i);
  }
  return out;
}

void WeightArchive::add(const std::string& name, const std::vector<int>& shape,
                        std::span<const float> values) {
  require(find(name) == nullptr, ErrorCode::kDuplicateParameter,
          "duplicate parameter '" + name + "'");
  ArchiveEntry e{name, shape, blob.size()};
  require(e.count() == values.size(), ErrorCode::kShapeMismatch,
          "'" + name + "': shape " + shape_str(shape) + " does not match " +
              std::to_string(values.size()) + " values");
  for (float v : values) store_u32(blob, std::bit_cast<std::uint32_t>(v));
  manifest.push_back(std::move(e));
}

void WeightArchive::validate() const {
  std::vector<const ArchiveEntry*> order;
  std::set<std::string> names;
  for (const auto& e : manifest) {
    require(names.insert(e.name).second, ErrorCode::kDuplicateParameter,
            "duplicate parameter '" + e.name + "'");
    require(e.offset + e.byte_size() <= blob.size(),
            ErrorCode::kBlobOutOfBounds,
            "blob out of bounds: '" + e.name + "' ends at byte " +
                std::to_string(e.offset + e.byte_size()) + " of " +
                std::to_string(blob.size()));
    order.push_back(&e);
  }
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto* prev = order[i - 1];
    require(prev->offset + prev->byte_size() <= order[i]->offset,
            ErrorCode::kOverlappingEntries,
            "overlapping entries '" + prev->name + "' and '" +
                order[i]->name + "'");
  }
}

std::vector<std::uint8_t> serialize_archive(const WeightArchive& archive) {
  archive.validate();
  std::string manifest;
  for (const auto& e : archive.manifest) {
    manifest += e.name + " f32 " + shape_str(e.shape) + " " +
                std::to_string(e.offset) + "\n";
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  store_u32(out, kArchiveVersion);
  store_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), archive.blob.begin(), archive.blob.end());
  return out;
}

WeightArchive parse_archive(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0,
          ErrorCode::kBadMagic, "bad magic: not an NMVG archive");
  require(bytes.size() >= 12, ErrorCode::kMalformedManifest,
          "archive header truncated");
  const std::uint32_t version = load_u32(bytes.data() + 4);
  require(version == kArchiveVersion, ErrorCode::kUnsupportedVersion,
          "unsupported archive version " + std::to_string(version));
  const std::uint64_t manifest_len = load_u32(bytes.data() + 8);
  require(12 + manifest_len <= bytes.size(), ErrorCode::kMalformedManifest,
          "manifest length " + std::to_string(manifest_len) +
              " exceeds file size");
  const std::string manifest(
      reinterpret_cast<const char*>(bytes.data() + 12), manifest_len);

  WeightArchive archive;
  std::istringstream in(manifest);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    archive.manifest.push_back(parse_manifest_line(line, line_no));
  }
  archive.blob.assign(bytes.begin() + 12 + manifest_len, bytes.end());
  archive.validate();
  return archive;
}

WeightArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_archive(bytes);
}

void save_archive(const WeightArchive& archive,
                  const std::filesystem::path& path) {
  const auto bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

void ArchiveWriter::visit(const std::string& name, ParamKind,
                          std::span<float> data,
                          const std::vector<int>& shape, int) {
  out_.add(name, shape, data);
}

void ArchiveReader::visit(const std::string& name, ParamKind,
                          std::span<float> data,
                          const std::vector<int>& shape, int) {
  require(used_.insert(name).second, ErrorCode::kDuplicateParameter,
          "parameter '" + name + "' bound twice");
  const ArchiveEntry* e = in_.find(name);
  require(e != nullptr, ErrorCode::kMissingParameter,
          "archive is missing parameter '" + name + "'");
  require(e->shape == shape, ErrorCode::kShapeMismatch,
          "'" + name + "': archive shape " + shape_str(e->shape) +
              ", model expects " + shape_str(shape));
  const std::vector<float> values = in_.read(*e);
  std::copy(values.begin(), values.end(), data.begin());
}

void ArchiveReader::finish() const {
  for (const auto& e : in_.manifest) {
    require(used_.count(e.name) != 0, ErrorCode::kUnexpectedParameter,
            "archive has unexpected parameter '" + e.name + "'");
  }
}

}  // namespace nanomvg
