#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cosmix/types.hpp"

namespace cosmix {

// Raw on-disk label id -> class id (or kIgnoreLabel). The table is total over
// whatever ids actually occur: looking up an unmapped id is a remap_error.
struct RemapTable {
  std::map<std::uint16_t, std::int32_t> to_class;

  std::int32_t remap(std::uint16_t raw) const;
};

// Inverse direction, used when writing label files back out.
struct InverseRemapTable {
  std::map<std::int32_t, std::uint16_t> to_raw;

  std::uint16_t remap(std::int32_t class_id) const;
};

// Builds the inverse of `table`. When several raw ids map to one class the
// smallest raw id wins.
InverseRemapTable invert(const RemapTable& table);

// Parses a remap config: one `raw_id = class_name` entry per line, where the
// value is either a name from `classes` or the literal IGNORE. '#' comments
// and blank lines are allowed.
RemapTable parse_remap(const std::string& text, const ClassSet& classes);
RemapTable load_remap_file(const std::filesystem::path& path, const ClassSet& classes);
std::string serialize_remap(const RemapTable& table, const ClassSet& classes);

// Binary scan file: little-endian, four float32 per point (x, y, z, intensity).
PointCloud read_scan(const std::filesystem::path& path);
void write_scan(const std::filesystem::path& path, const PointCloud& cloud);

// Binary label file: little-endian uint32 per point, semantic id in the low
// 16 bits (the high 16 carry an instance id and are masked off).
LabelSet read_labels(const std::filesystem::path& path, const RemapTable& remap);
void write_labels(const std::filesystem::path& path, const LabelSet& labels,
                  const InverseRemapTable& inverse);

// probs[c] = points labeled c / total non-ignored points, over every frame.
ClassFrequencyDistribution compute_class_frequency(const Dataset& dataset);

// Loads `dir/velodyne/*.bin` (sorted by filename) and, when with_labels is
// set, the matching `dir/labels/*.label` files.
Dataset load_dataset(const std::filesystem::path& dir, const RemapTable& remap, bool with_labels);

// Sorted scan file stems ("000000", "000001", ...) present in dir/velodyne.
std::vector<std::string> list_frame_stems(const std::filesystem::path& dir);

}  // namespace cosmix
