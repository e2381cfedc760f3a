#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cosmix/error.hpp"

namespace cosmix {

// Reserved sentinel for unlabeled / discarded points. Never a member of the
// class set; excluded from frequency statistics, losses, and IoU.
constexpr std::int32_t kIgnoreLabel = -1;

struct Vec3 {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
};

// N points with 3D coordinates in meters and optional per-point intensity
// in [0,1]. Coordinates are kept as 32-bit floats to match the on-disk scan
// format; reductions over them happen in double.
struct PointCloud {
  std::vector<Vec3> coords;
  std::vector<float> intensity;  // empty, or exactly coords.size() entries

  std::size_t size() const { return coords.size(); }
  bool empty() const { return coords.empty(); }
  bool has_intensity() const { return !intensity.empty(); }

  // Throws data_error on NaN/Inf coordinates or a mismatched intensity length.
  void validate() const;
};

enum class LabelKind : std::uint8_t {
  GroundTruth,
  Pseudo,
  Mixed,
};

struct LabelSet {
  std::vector<std::int32_t> labels;
  LabelKind kind = LabelKind::GroundTruth;

  std::size_t size() const { return labels.size(); }
};

// A point cloud paired with aligned labels.
struct Frame {
  PointCloud cloud;
  LabelSet labels;

  std::size_t size() const { return cloud.size(); }
};

struct ClassSet {
  std::vector<std::int32_t> ids;    // unique, never kIgnoreLabel
  std::vector<std::string> names;   // parallel to ids

  std::size_t size() const { return ids.size(); }
  bool contains(std::int32_t id) const;
  // Position of id within ids; throws data_error if absent.
  std::size_t index_of(std::int32_t id) const;
  const std::string& name_of(std::int32_t id) const;

  void validate() const;
};

// Normalized per-class point frequency over a class set. Values sum to 1
// over the classes that occurred.
struct ClassFrequencyDistribution {
  std::map<std::int32_t, double> probs;

  double at(std::int32_t id) const {
    auto it = probs.find(id);
    return it == probs.end() ? 0.0 : it->second;
  }
};

// Row-major per-point probability (or score) matrix, one row per point.
struct ProbMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;  // rows * cols

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }

  static ProbMatrix zeros(std::size_t rows, std::size_t cols) {
    return ProbMatrix{rows, cols, std::vector<float>(rows * cols, 0.0f)};
  }
};

struct DatasetFrame {
  PointCloud cloud;
  std::optional<LabelSet> labels;
};

struct Dataset {
  std::vector<DatasetFrame> frames;

  std::size_t size() const { return frames.size(); }
  bool fully_labeled() const;
};

// Throws alignment_error unless labels.size() == cloud.size().
void check_aligned(const PointCloud& cloud, const LabelSet& labels);

struct ConcatResult {
  Frame frame;
  std::size_t boundary = 0;  // index of the first point that came from `b`
};

// Concatenates b's points (and labels) after a's. Output kind is Mixed when
// the inputs disagree, otherwise the shared kind.
ConcatResult concat(const Frame& a, const Frame& b);

// Keeps exactly the masked points, preserving relative order.
Frame subset(const PointCloud& cloud, const LabelSet& labels, const std::vector<std::uint8_t>& mask);

// Mask for points carrying the given class label.
std::vector<std::uint8_t> mask_for_class(const LabelSet& labels, std::int32_t class_id);

}  // namespace cosmix
