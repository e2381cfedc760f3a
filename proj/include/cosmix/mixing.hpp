#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "cosmix/rng.hpp"
#include "cosmix/selection.hpp"
#include "cosmix/types.hpp"

namespace cosmix {

// Per-patch augmentation: z-rotation, per-axis scaling, random downsampling.
// No translation, so patches stay concentric with the base cloud.
struct LocalAugConfig {
  double rotation_min = -std::numbers::pi / 2.0;
  double rotation_max = std::numbers::pi / 2.0;
  double scale_min = 0.95;
  double scale_max = 1.05;
  double keep_fraction = 0.5;  // round(keep * N) points survive

  void validate() const;
  static LocalAugConfig identity();
};

// Whole-cloud augmentation: one z-rotation, per-axis scaling, translation.
struct GlobalAugConfig {
  double rotation_min = -std::numbers::pi;
  double rotation_max = std::numbers::pi;
  double translation_min = -0.2;  // meters, per axis
  double translation_max = 0.2;
  double scale_min = 0.95;
  double scale_max = 1.05;

  void validate() const;
  static GlobalAugConfig identity();
};

// Concrete draws, separated from the application so tests can check bounds.
struct LocalDraw {
  double rotation = 0.0;
  double scale[3] = {1.0, 1.0, 1.0};
  std::size_t keep_count = 0;
  std::vector<std::size_t> kept_indices;  // ascending
};

struct GlobalDraw {
  double rotation = 0.0;
  double scale[3] = {1.0, 1.0, 1.0};
  double translation[3] = {0.0, 0.0, 0.0};
};

LocalDraw draw_local(const LocalAugConfig& cfg, std::size_t n_points, Rng& rng);
GlobalDraw draw_global(const GlobalAugConfig& cfg, Rng& rng);

Frame apply_local(const Frame& patch, const LocalDraw& draw);
Frame apply_global(const Frame& frame, const GlobalDraw& draw);

// Rotation/scale/downsample with fresh draws from rng. Empty patches pass
// through unchanged.
Frame local_augment(const Frame& patch, const LocalAugConfig& cfg, Rng& rng);

// One rigid z-rotation + translation + per-axis scaling over all points;
// labels pass through untouched.
Frame global_augment(const Frame& frame, const GlobalAugConfig& cfg, Rng& rng);

enum class PointOrigin : std::uint8_t {
  Base,
  SourcePatch,
  TargetPatch,
  SupervisedPatch,
};

struct MixedSample {
  PointCloud cloud;
  LabelSet labels;  // kind Mixed
  std::vector<PointOrigin> provenance;

  std::size_t size() const { return cloud.size(); }
};

// Optional labeled-target contribution for the semi-supervised setting.
struct SupervisedPatchInput {
  Frame frame;
  PatchSelection selection;
};

struct MixConfigs {
  LocalAugConfig local;
  GlobalAugConfig global;
};

// Source patches (per class, independently augmented) + optional supervised
// target patches + the full unlabeled target cloud carrying its pseudo
// labels, globally augmented as one cloud.
MixedSample mix_source_into_target(const Frame& source, const PatchSelection& source_sel,
                                   const PointCloud& target_cloud, const LabelSet& pseudo_labels,
                                   const std::optional<SupervisedPatchInput>& supervised,
                                   const MixConfigs& cfgs, Rng& rng);

// Mirror branch: confident pseudo-labeled target patches + optional
// supervised patches onto the full source cloud with its ground truth.
MixedSample mix_target_into_source(const PointCloud& target_cloud, const LabelSet& pseudo_labels,
                                   const PatchSelection& pseudo_sel, const Frame& source,
                                   const std::optional<SupervisedPatchInput>& supervised,
                                   const MixConfigs& cfgs, Rng& rng);

}  // namespace cosmix
