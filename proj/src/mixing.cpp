#include "cosmix/mixing.hpp"

#include <algorithm>
#include <cmath>

namespace cosmix {

void LocalAugConfig::validate() const {
  constexpr double pi = std::numbers::pi;
  if (rotation_min > rotation_max || rotation_min < -pi - 1e-12 || rotation_max > pi + 1e-12) {
    throw usage_error("local augmentation: rotation range must be within [-pi, pi]");
  }
  if (!(scale_min > 0.0) || scale_min > scale_max) {
    throw usage_error("local augmentation: scale range must be positive");
  }
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw usage_error("local augmentation: keep fraction must be in (0, 1]");
  }
}

LocalAugConfig LocalAugConfig::identity() {
  LocalAugConfig cfg;
  cfg.rotation_min = cfg.rotation_max = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  cfg.keep_fraction = 1.0;
  return cfg;
}

void GlobalAugConfig::validate() const {
  if (!std::isfinite(rotation_min) || !std::isfinite(rotation_max) || rotation_min > rotation_max) {
    throw usage_error("global augmentation: bad rotation range");
  }
  if (!std::isfinite(translation_min) || !std::isfinite(translation_max) ||
      translation_min > translation_max) {
    throw usage_error("global augmentation: bad translation range");
  }
  if (!(scale_min > 0.0) || scale_min > scale_max) {
    throw usage_error("global augmentation: scale range must be positive");
  }
}

GlobalAugConfig GlobalAugConfig::identity() {
  GlobalAugConfig cfg;
  cfg.rotation_min = cfg.rotation_max = 0.0;
  cfg.translation_min = cfg.translation_max = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  return cfg;
}

namespace {

Vec3 rotate_z(const Vec3& p, double cos_t, double sin_t) {
  return Vec3{static_cast<float>(cos_t * p.x - sin_t * p.y),
              static_cast<float>(sin_t * p.x + cos_t * p.y), p.z};
}

}  // namespace

LocalDraw draw_local(const LocalAugConfig& cfg, std::size_t n_points, Rng& rng) {
  LocalDraw draw;
  draw.rotation = rng.uniform(cfg.rotation_min, cfg.rotation_max);
  for (int a = 0; a < 3; ++a) draw.scale[a] = rng.uniform(cfg.scale_min, cfg.scale_max);
  draw.keep_count = static_cast<std::size_t>(
      std::llround(cfg.keep_fraction * static_cast<double>(n_points)));
  if (draw.keep_count > n_points) draw.keep_count = n_points;

  if (draw.keep_count == n_points) {
    draw.kept_indices.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) draw.kept_indices[i] = i;
  } else {
    // Partial Fisher-Yates, then restore the original relative order.
    std::vector<std::size_t> idx(n_points);
    for (std::size_t i = 0; i < n_points; ++i) idx[i] = i;
    for (std::size_t i = 0; i < draw.keep_count; ++i) {
      const std::size_t j = i + rng.uniform_index(n_points - i);
      std::swap(idx[i], idx[j]);
    }
    draw.kept_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(draw.keep_count));
    std::sort(draw.kept_indices.begin(), draw.kept_indices.end());
  }
  return draw;
}

GlobalDraw draw_global(const GlobalAugConfig& cfg, Rng& rng) {
  GlobalDraw draw;
  draw.rotation = rng.uniform(cfg.rotation_min, cfg.rotation_max);
  for (int a = 0; a < 3; ++a) draw.scale[a] = rng.uniform(cfg.scale_min, cfg.scale_max);
  for (int a = 0; a < 3; ++a) draw.translation[a] = rng.uniform(cfg.translation_min, cfg.translation_max);
  return draw;
}

Frame apply_local(const Frame& patch, const LocalDraw& draw) {
  check_aligned(patch.cloud, patch.labels);
  const double cos_t = std::cos(draw.rotation);
  const double sin_t = std::sin(draw.rotation);

  Frame out;
  out.labels.kind = patch.labels.kind;
  out.cloud.coords.reserve(draw.kept_indices.size());
  out.labels.labels.reserve(draw.kept_indices.size());
  if (patch.cloud.has_intensity()) out.cloud.intensity.reserve(draw.kept_indices.size());
  for (std::size_t i : draw.kept_indices) {
    Vec3 p = rotate_z(patch.cloud.coords[i], cos_t, sin_t);
    p.x = static_cast<float>(p.x * draw.scale[0]);
    p.y = static_cast<float>(p.y * draw.scale[1]);
    p.z = static_cast<float>(p.z * draw.scale[2]);
    out.cloud.coords.push_back(p);
    if (patch.cloud.has_intensity()) out.cloud.intensity.push_back(patch.cloud.intensity[i]);
    out.labels.labels.push_back(patch.labels.labels[i]);
  }
  return out;
}

Frame apply_global(const Frame& frame, const GlobalDraw& draw) {
  check_aligned(frame.cloud, frame.labels);
  const double cos_t = std::cos(draw.rotation);
  const double sin_t = std::sin(draw.rotation);

  Frame out = frame;
  for (Vec3& p : out.cloud.coords) {
    p = rotate_z(p, cos_t, sin_t);
    p.x = static_cast<float>(p.x * draw.scale[0] + draw.translation[0]);
    p.y = static_cast<float>(p.y * draw.scale[1] + draw.translation[1]);
    p.z = static_cast<float>(p.z * draw.scale[2] + draw.translation[2]);
  }
  return out;
}

Frame local_augment(const Frame& patch, const LocalAugConfig& cfg, Rng& rng) {
  cfg.validate();
  if (patch.cloud.empty()) return patch;
  const LocalDraw draw = draw_local(cfg, patch.cloud.size(), rng);
  return apply_local(patch, draw);
}

Frame global_augment(const Frame& frame, const GlobalAugConfig& cfg, Rng& rng) {
  cfg.validate();
  const GlobalDraw draw = draw_global(cfg, rng);
  return apply_global(frame, draw);
}

namespace {

void check_selection(const PatchSelection& sel, const Frame& frame, const char* what) {
  if (sel.mask.size() != frame.size()) {
    throw alignment_error(std::string(what) + ": selection mask length " +
                          std::to_string(sel.mask.size()) + " does not match frame size " +
                          std::to_string(frame.size()));
  }
}

// Extracts each chosen class as its own patch, augments it independently,
// and appends it to the running mix.
void append_class_patches(Frame& mixed, std::vector<PointOrigin>& provenance, const Frame& donor,
                          const PatchSelection& sel, PointOrigin origin, const LocalAugConfig& cfg,
                          Rng& rng) {
  for (std::int32_t cls : sel.chosen_classes) {
    std::vector<std::uint8_t> class_mask(donor.size(), 0);
    for (std::size_t i = 0; i < donor.size(); ++i) {
      class_mask[i] = (sel.mask[i] && donor.labels.labels[i] == cls) ? 1 : 0;
    }
    Frame patch = subset(donor.cloud, donor.labels, class_mask);
    Frame augmented = local_augment(patch, cfg, rng);
    mixed = concat(mixed, augmented).frame;
    provenance.insert(provenance.end(), augmented.size(), origin);
  }
}

MixedSample finish_mix(Frame mixed, std::vector<PointOrigin> provenance, const Frame& base,
                       PointOrigin base_origin, const MixConfigs& cfgs, Rng& rng) {
  mixed = concat(mixed, base).frame;
  provenance.insert(provenance.end(), base.size(), base_origin);

  Frame augmented = global_augment(mixed, cfgs.global, rng);

  MixedSample out;
  out.cloud = std::move(augmented.cloud);
  out.labels = std::move(augmented.labels);
  out.labels.kind = LabelKind::Mixed;
  out.provenance = std::move(provenance);
  return out;
}

}  // namespace

MixedSample mix_source_into_target(const Frame& source, const PatchSelection& source_sel,
                                   const PointCloud& target_cloud, const LabelSet& pseudo_labels,
                                   const std::optional<SupervisedPatchInput>& supervised,
                                   const MixConfigs& cfgs, Rng& rng) {
  check_aligned(source.cloud, source.labels);
  check_aligned(target_cloud, pseudo_labels);
  check_selection(source_sel, source, "source selection");

  Frame mixed;
  mixed.labels.kind = LabelKind::Mixed;
  std::vector<PointOrigin> provenance;

  append_class_patches(mixed, provenance, source, source_sel, PointOrigin::SourcePatch, cfgs.local,
                       rng);
  if (supervised) {
    check_selection(supervised->selection, supervised->frame, "supervised selection");
    append_class_patches(mixed, provenance, supervised->frame, supervised->selection,
                         PointOrigin::SupervisedPatch, cfgs.local, rng);
  }

  Frame base{target_cloud, pseudo_labels};
  return finish_mix(std::move(mixed), std::move(provenance), base, PointOrigin::Base, cfgs, rng);
}

MixedSample mix_target_into_source(const PointCloud& target_cloud, const LabelSet& pseudo_labels,
                                   const PatchSelection& pseudo_sel, const Frame& source,
                                   const std::optional<SupervisedPatchInput>& supervised,
                                   const MixConfigs& cfgs, Rng& rng) {
  check_aligned(target_cloud, pseudo_labels);
  check_aligned(source.cloud, source.labels);
  Frame target{target_cloud, pseudo_labels};
  check_selection(pseudo_sel, target, "pseudo selection");
  for (std::size_t i = 0; i < pseudo_sel.mask.size(); ++i) {
    if (pseudo_sel.mask[i] && pseudo_labels.labels[i] == kIgnoreLabel) {
      throw selection_error("pseudo selection covers an unlabeled point at index " +
                            std::to_string(i));
    }
  }

  Frame mixed;
  mixed.labels.kind = LabelKind::Mixed;
  std::vector<PointOrigin> provenance;

  append_class_patches(mixed, provenance, target, pseudo_sel, PointOrigin::TargetPatch, cfgs.local,
                       rng);
  if (supervised) {
    check_selection(supervised->selection, supervised->frame, "supervised selection");
    append_class_patches(mixed, provenance, supervised->frame, supervised->selection,
                         PointOrigin::SupervisedPatch, cfgs.local, rng);
  }

  return finish_mix(std::move(mixed), std::move(provenance), source, PointOrigin::Base, cfgs, rng);
}

}  // namespace cosmix
