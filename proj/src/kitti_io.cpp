#include "cosmix/kitti_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cosmix {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kScanRecordBytes = 16;  // 4 x float32
constexpr std::size_t kLabelRecordBytes = 4;  // 1 x uint32

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32le(const unsigned char* p) {
  return std::bit_cast<float>(read_u32le(p));
}

void write_u32le(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v & 0xFF);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xFF);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xFF);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xFF);
}

void write_f32le(float v, unsigned char* p) {
  write_u32le(std::bit_cast<std::uint32_t>(v), p);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::int32_t RemapTable::remap(std::uint16_t raw) const {
  auto it = to_class.find(raw);
  if (it == to_class.end()) {
    throw remap_error("raw label id " + std::to_string(raw) + " has no remap entry");
  }
  return it->second;
}

std::uint16_t InverseRemapTable::remap(std::int32_t class_id) const {
  auto it = to_raw.find(class_id);
  if (it == to_raw.end()) {
    throw remap_error("class id " + std::to_string(class_id) + " has no inverse remap entry");
  }
  return it->second;
}

InverseRemapTable invert(const RemapTable& table) {
  InverseRemapTable inv;
  for (const auto& [raw, cls] : table.to_class) {
    inv.to_raw.emplace(cls, raw);  // first (smallest raw) entry wins
  }
  return inv;
}

RemapTable parse_remap(const std::string& text, const ClassSet& classes) {
  RemapTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw format_error("remap config line " + std::to_string(line_no) + ": expected 'raw = class'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    unsigned long raw = 0;
    try {
      std::size_t pos = 0;
      raw = std::stoul(key, &pos);
      if (pos != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw format_error("remap config line " + std::to_string(line_no) + ": bad raw id '" + key + "'");
    }
    if (raw > 0xFFFF) {
      throw format_error("remap config line " + std::to_string(line_no) + ": raw id out of uint16 range");
    }
    std::int32_t cls = kIgnoreLabel;
    if (value != "IGNORE") {
      auto it = std::find(classes.names.begin(), classes.names.end(), value);
      if (it == classes.names.end()) {
        throw remap_error("remap config line " + std::to_string(line_no) + ": unknown class '" + value + "'");
      }
      cls = classes.ids[static_cast<std::size_t>(it - classes.names.begin())];
    }
    table.to_class[static_cast<std::uint16_t>(raw)] = cls;
  }
  return table;
}

RemapTable load_remap_file(const fs::path& path, const ClassSet& classes) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open remap config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_remap(buf.str(), classes);
}

std::string serialize_remap(const RemapTable& table, const ClassSet& classes) {
  std::ostringstream out;
  for (const auto& [raw, cls] : table.to_class) {
    out << raw << " = " << (cls == kIgnoreLabel ? std::string("IGNORE") : classes.name_of(cls)) << "\n";
  }
  return out.str();
}

PointCloud read_scan(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open scan file: " + path.string());

  PointCloud cloud;
  std::array<unsigned char, kScanRecordBytes * 4096> buf;
  std::size_t total = 0;
  std::size_t index = 0;
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    total += got;
    if (got % kScanRecordBytes != 0 && in) {
      // mid-file short read should not happen on a regular file
      throw data_error("short read on scan file: " + path.string());
    }
    const std::size_t full = got / kScanRecordBytes;
    cloud.coords.reserve(cloud.coords.size() + full);
    cloud.intensity.reserve(cloud.intensity.size() + full);
    for (std::size_t r = 0; r < full; ++r, ++index) {
      const unsigned char* p = buf.data() + r * kScanRecordBytes;
      Vec3 v{read_f32le(p), read_f32le(p + 4), read_f32le(p + 8)};
      const float inten = read_f32le(p + 12);
      if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z) || !std::isfinite(inten)) {
        throw data_error("scan file " + path.string() + ": non-finite value at point " +
                         std::to_string(index));
      }
      cloud.coords.push_back(v);
      cloud.intensity.push_back(inten);
    }
  }
  if (total % kScanRecordBytes != 0) {
    throw format_error("scan file " + path.string() + ": size " + std::to_string(total) +
                       " is not a multiple of 16 bytes");
  }
  return cloud;
}

void write_scan(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open scan file for writing: " + path.string());
  std::array<unsigned char, kScanRecordBytes> rec;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    write_f32le(cloud.coords[i].x, rec.data());
    write_f32le(cloud.coords[i].y, rec.data() + 4);
    write_f32le(cloud.coords[i].z, rec.data() + 8);
    write_f32le(cloud.has_intensity() ? cloud.intensity[i] : 0.0f, rec.data() + 12);
    out.write(reinterpret_cast<const char*>(rec.data()), kScanRecordBytes);
  }
  if (!out) throw data_error("write failed: " + path.string());
}

LabelSet read_labels(const fs::path& path, const RemapTable& remap) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open label file: " + path.string());

  LabelSet out;
  out.kind = LabelKind::GroundTruth;
  std::array<unsigned char, kLabelRecordBytes * 16384> buf;
  std::size_t total = 0;
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    total += got;
    const std::size_t full = got / kLabelRecordBytes;
    out.labels.reserve(out.labels.size() + full);
    for (std::size_t r = 0; r < full; ++r) {
      const std::uint32_t word = read_u32le(buf.data() + r * kLabelRecordBytes);
      const std::uint16_t semantic = static_cast<std::uint16_t>(word & 0xFFFFu);
      out.labels.push_back(remap.remap(semantic));
    }
  }
  if (total % kLabelRecordBytes != 0) {
    throw format_error("label file " + path.string() + ": size " + std::to_string(total) +
                       " is not a multiple of 4 bytes");
  }
  return out;
}

void write_labels(const fs::path& path, const LabelSet& labels, const InverseRemapTable& inverse) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open label file for writing: " + path.string());
  std::array<unsigned char, kLabelRecordBytes> rec;
  for (std::int32_t cls : labels.labels) {
    const std::uint32_t word = inverse.remap(cls);
    write_u32le(word, rec.data());
    out.write(reinterpret_cast<const char*>(rec.data()), kLabelRecordBytes);
  }
  if (!out) throw data_error("write failed: " + path.string());
}

ClassFrequencyDistribution compute_class_frequency(const Dataset& dataset) {
  if (!dataset.fully_labeled()) {
    throw statistics_error("class frequency requires a fully labeled dataset");
  }
  std::map<std::int32_t, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const DatasetFrame& frame : dataset.frames) {
    check_aligned(frame.cloud, *frame.labels);
    for (std::int32_t label : frame.labels->labels) {
      if (label == kIgnoreLabel) continue;
      ++counts[label];
      ++total;
    }
  }
  if (total == 0) {
    throw statistics_error("class frequency: dataset has no labeled points");
  }
  ClassFrequencyDistribution dist;
  for (const auto& [cls, count] : counts) {
    dist.probs[cls] = static_cast<double>(count) / static_cast<double>(total);
  }
  return dist;
}

std::vector<std::string> list_frame_stems(const fs::path& dir) {
  const fs::path scans = dir / "velodyne";
  if (!fs::is_directory(scans)) {
    throw data_error("dataset directory has no velodyne/ subdirectory: " + dir.string());
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(scans)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

Dataset load_dataset(const fs::path& dir, const RemapTable& remap, bool with_labels) {
  Dataset out;
  for (const std::string& stem : list_frame_stems(dir)) {
    DatasetFrame frame;
    frame.cloud = read_scan(dir / "velodyne" / (stem + ".bin"));
    if (with_labels) {
      frame.labels = read_labels(dir / "labels" / (stem + ".label"), remap);
      if (frame.labels->size() != frame.cloud.size()) {
        throw alignment_error("frame " + stem + ": " + std::to_string(frame.labels->size()) +
                              " labels vs " + std::to_string(frame.cloud.size()) + " points");
      }
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace cosmix
