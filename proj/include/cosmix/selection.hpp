#pragma once

#include <vector>

#include "cosmix/rng.hpp"
#include "cosmix/types.hpp"

namespace cosmix {

struct SelectionConfig {
  double alpha = 0.5;  // class-selection ratio for source frames
  double mu = 0.5;     // class-selection ratio for supervised target frames
  double zeta = 0.85;  // pseudo-label confidence threshold

  void validate() const;
};

// A set of chosen classes plus the point mask they induce on one frame.
struct PatchSelection {
  std::vector<std::int32_t> chosen_classes;  // ascending, distinct
  std::vector<std::uint8_t> mask;            // true exactly on points of chosen classes

  std::size_t selected_points() const;
};

// Weighted random class sampling over the classes present in `labels`.
// Draws m = max(1, round(ratio * k)) distinct classes (k = classes present),
// each with weight 1 - dist[c] renormalized over the present classes, so
// infrequent classes are picked more often. Falls back to uniform weights if
// every present class has weight <= 0.
PatchSelection select_classes(const LabelSet& labels, const ClassFrequencyDistribution& dist,
                              double ratio, Rng& rng);

// Same contract with ratio = cfg.mu. The weights still come from the source
// distribution (see the config docs in the README).
PatchSelection select_supervised_target(const LabelSet& labels, const ClassFrequencyDistribution& dist,
                                        const SelectionConfig& cfg, Rng& rng);

// Keeps the argmax class for every point whose top probability is >= zeta,
// assigns kIgnoreLabel otherwise. `class_ids` maps matrix columns to class ids.
LabelSet filter_pseudo_labels(const ProbMatrix& class_probs, const std::vector<std::int32_t>& class_ids,
                              double zeta);

// Selection covering every class present among the non-ignored labels.
PatchSelection select_all_present(const LabelSet& labels);

}  // namespace cosmix
