#include "cosmix/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace cosmix {

void SelectionConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw usage_error("selection.alpha must be in (0, 1]");
  if (!(mu > 0.0 && mu <= 1.0)) throw usage_error("selection.mu must be in (0, 1]");
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw usage_error("selection.zeta must be in [0, 1]");
}

std::size_t PatchSelection::selected_points() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

namespace {

std::vector<std::int32_t> present_classes(const LabelSet& labels) {
  std::set<std::int32_t> present;
  for (std::int32_t l : labels.labels) {
    if (l != kIgnoreLabel) present.insert(l);
  }
  return {present.begin(), present.end()};
}

std::vector<std::uint8_t> mask_for_classes(const LabelSet& labels,
                                           const std::vector<std::int32_t>& classes) {
  std::vector<std::uint8_t> mask(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t l = labels.labels[i];
    if (l != kIgnoreLabel && std::binary_search(classes.begin(), classes.end(), l)) {
      mask[i] = 1;
    }
  }
  return mask;
}

}  // namespace

PatchSelection select_classes(const LabelSet& labels, const ClassFrequencyDistribution& dist,
                              double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw usage_error("class-selection ratio must be in (0, 1]");
  std::vector<std::int32_t> classes = present_classes(labels);
  if (classes.empty()) {
    throw selection_error("class selection: frame has no labeled points");
  }

  const std::size_t k = classes.size();
  const std::size_t m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(k))));

  std::vector<double> weights(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    weights[i] = 1.0 - dist.at(classes[i]);
    if (weights[i] < 0.0) weights[i] = 0.0;
    total += weights[i];
  }
  if (total <= 0.0) {
    std::fill(weights.begin(), weights.end(), 1.0);  // degenerate distribution
  }

  // Sequential renormalized draws without replacement.
  std::vector<std::int32_t> chosen;
  chosen.reserve(m);
  std::vector<std::size_t> alive(k);
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  for (std::size_t draw = 0; draw < m; ++draw) {
    double sum = 0.0;
    for (std::size_t idx : alive) sum += weights[idx];
    std::size_t pick_pos = 0;
    if (sum <= 0.0) {
      pick_pos = rng.uniform_index(alive.size());
    } else {
      const double u = rng.uniform() * sum;
      double acc = 0.0;
      pick_pos = alive.size() - 1;  // guards against accumulated rounding
      for (std::size_t i = 0; i < alive.size(); ++i) {
        acc += weights[alive[i]];
        if (u < acc) {
          pick_pos = i;
          break;
        }
      }
    }
    chosen.push_back(classes[alive[pick_pos]]);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pick_pos));
  }
  std::sort(chosen.begin(), chosen.end());

  PatchSelection out;
  out.chosen_classes = std::move(chosen);
  out.mask = mask_for_classes(labels, out.chosen_classes);
  return out;
}

PatchSelection select_supervised_target(const LabelSet& labels, const ClassFrequencyDistribution& dist,
                                        const SelectionConfig& cfg, Rng& rng) {
  return select_classes(labels, dist, cfg.mu, rng);
}

LabelSet filter_pseudo_labels(const ProbMatrix& class_probs, const std::vector<std::int32_t>& class_ids,
                              double zeta) {
  if (class_probs.cols != class_ids.size()) {
    throw model_output_error("probability matrix has " + std::to_string(class_probs.cols) +
                             " columns for " + std::to_string(class_ids.size()) + " classes");
  }
  LabelSet out;
  out.kind = LabelKind::Pseudo;
  out.labels.resize(class_probs.rows, kIgnoreLabel);
  for (std::size_t i = 0; i < class_probs.rows; ++i) {
    double sum = 0.0;
    double best = -1.0;
    std::size_t best_col = 0;
    for (std::size_t c = 0; c < class_probs.cols; ++c) {
      const double p = class_probs.at(i, c);
      if (!std::isfinite(p) || p < -1e-9 || p > 1.0 + 1e-6) {
        throw model_output_error("malformed probability at point " + std::to_string(i));
      }
      sum += p;
      if (p > best) {
        best = p;
        best_col = c;
      }
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw model_output_error("probability row " + std::to_string(i) + " sums to " +
                               std::to_string(sum));
    }
    if (best >= zeta) {
      out.labels[i] = class_ids[best_col];
    }
  }
  return out;
}

PatchSelection select_all_present(const LabelSet& labels) {
  PatchSelection out;
  out.chosen_classes = present_classes(labels);
  out.mask = mask_for_classes(labels, out.chosen_classes);
  return out;
}

}  // namespace cosmix
