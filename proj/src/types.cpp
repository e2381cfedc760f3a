#include "cosmix/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cosmix {

void PointCloud::validate() const {
  if (has_intensity() && intensity.size() != coords.size()) {
    throw data_error("point cloud: intensity length " + std::to_string(intensity.size()) +
                     " does not match point count " + std::to_string(coords.size()));
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Vec3& p = coords[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw data_error("point cloud: non-finite coordinate at point " + std::to_string(i));
    }
  }
}

bool ClassSet::contains(std::int32_t id) const {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::size_t ClassSet::index_of(std::int32_t id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) {
    throw data_error("class id " + std::to_string(id) + " is not in the class set");
  }
  return static_cast<std::size_t>(it - ids.begin());
}

const std::string& ClassSet::name_of(std::int32_t id) const {
  return names[index_of(id)];
}

void ClassSet::validate() const {
  if (ids.size() != names.size()) {
    throw data_error("class set: ids and names differ in length");
  }
  std::set<std::int32_t> seen;
  for (std::int32_t id : ids) {
    if (id == kIgnoreLabel) {
      throw data_error("class set: the ignore sentinel cannot be a class id");
    }
    if (!seen.insert(id).second) {
      throw data_error("class set: duplicate class id " + std::to_string(id));
    }
  }
}

bool Dataset::fully_labeled() const {
  return std::all_of(frames.begin(), frames.end(),
                     [](const DatasetFrame& f) { return f.labels.has_value(); });
}

void check_aligned(const PointCloud& cloud, const LabelSet& labels) {
  if (cloud.size() != labels.size()) {
    throw alignment_error("label count " + std::to_string(labels.size()) +
                          " does not match point count " + std::to_string(cloud.size()));
  }
}

ConcatResult concat(const Frame& a, const Frame& b) {
  check_aligned(a.cloud, a.labels);
  check_aligned(b.cloud, b.labels);
  const bool both_have_intensity = (a.cloud.empty() || a.cloud.has_intensity()) &&
                                   (b.cloud.empty() || b.cloud.has_intensity());

  ConcatResult out;
  out.boundary = a.size();
  Frame& f = out.frame;
  f.cloud.coords.reserve(a.size() + b.size());
  f.cloud.coords.insert(f.cloud.coords.end(), a.cloud.coords.begin(), a.cloud.coords.end());
  f.cloud.coords.insert(f.cloud.coords.end(), b.cloud.coords.begin(), b.cloud.coords.end());
  if (both_have_intensity && (a.cloud.has_intensity() || b.cloud.has_intensity())) {
    f.cloud.intensity.reserve(a.size() + b.size());
    f.cloud.intensity.insert(f.cloud.intensity.end(), a.cloud.intensity.begin(), a.cloud.intensity.end());
    f.cloud.intensity.insert(f.cloud.intensity.end(), b.cloud.intensity.begin(), b.cloud.intensity.end());
  }
  f.labels.labels.reserve(a.size() + b.size());
  f.labels.labels.insert(f.labels.labels.end(), a.labels.labels.begin(), a.labels.labels.end());
  f.labels.labels.insert(f.labels.labels.end(), b.labels.labels.begin(), b.labels.labels.end());
  f.labels.kind = (a.labels.kind == b.labels.kind) ? a.labels.kind : LabelKind::Mixed;
  return out;
}

Frame subset(const PointCloud& cloud, const LabelSet& labels, const std::vector<std::uint8_t>& mask) {
  check_aligned(cloud, labels);
  if (mask.size() != cloud.size()) {
    throw alignment_error("mask length " + std::to_string(mask.size()) +
                          " does not match point count " + std::to_string(cloud.size()));
  }
  Frame out;
  out.labels.kind = labels.kind;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    out.cloud.coords.push_back(cloud.coords[i]);
    if (cloud.has_intensity()) out.cloud.intensity.push_back(cloud.intensity[i]);
    out.labels.labels.push_back(labels.labels[i]);
  }
  return out;
}

std::vector<std::uint8_t> mask_for_class(const LabelSet& labels, std::int32_t class_id) {
  std::vector<std::uint8_t> mask(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    mask[i] = labels.labels[i] == class_id ? 1 : 0;
  }
  return mask;
}

}  // namespace cosmix
