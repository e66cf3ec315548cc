#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nanomvg/params.hpp"

namespace nanomvg {

inline constexpr std::uint32_t kArchiveVersion = 1;

struct ArchiveEntry {
  std::string name;
  std::vector<int> shape;
  std::uint64_t offset = 0;  // bytes from the start of the blob

  std::size_t count() const;
  std::uint64_t byte_size() const { return count() * sizeof(float); }
};

// On disk: "NMVG", u32 version, u32 manifest byte length, UTF-8 manifest
// (`name f32 d0,d1,... offset` per line), then the little-endian f32 blob.
struct WeightArchive {
  std::vector<ArchiveEntry> manifest;
  std::vector<std::uint8_t> blob;

  const ArchiveEntry* find(const std::string& name) const;
  std::vector<float> read(const ArchiveEntry& e) const;
  void add(const std::string& name, const std::vector<int>& shape,
           std::span<const float> values);
  // Offsets in bounds, non-overlapping, names unique.
  void validate() const;

  friend bool operator==(const WeightArchive& a, const WeightArchive& b);
};

bool operator==(const ArchiveEntry& a, const ArchiveEntry& b);

std::vector<std::uint8_t> serialize_archive(const WeightArchive& archive);
WeightArchive parse_archive(std::span<const std::uint8_t> bytes);
WeightArchive load_archive(const std::filesystem::path& path);
void save_archive(const WeightArchive& archive,
                  const std::filesystem::path& path);

// Appends every visited parameter to an archive.
class ArchiveWriter : public ParamVisitor {
 public:
  explicit ArchiveWriter(WeightArchive& out) : out_(out) {}
  void visit(const std::string& name, ParamKind kind, std::span<float> data,
             const std::vector<int>& shape, int fan_in) override;

 private:
  WeightArchive& out_;
};

// Fills visited parameters from an archive. Missing names and shape
// mismatches throw immediately; finish() rejects archive entries that no
// parameter claimed.
class ArchiveReader : public ParamVisitor {
 public:
  explicit ArchiveReader(const WeightArchive& in) : in_(in) {}
  void visit(const std::string& name, ParamKind kind, std::span<float> data,
             const std::vector<int>& shape, int fan_in) override;
  void finish() const;

 private:
  const WeightArchive& in_;
  std::set<std::string> used_;
};

}  // namespace nanomvg
