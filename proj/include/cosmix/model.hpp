#pragma once

#include <filesystem>
#include <vector>

#include "cosmix/rng.hpp"
#include "cosmix/types.hpp"

namespace cosmix {

// Pointwise segmentation MLP: (x, y, z, range, intensity-or-zero) -> hidden
// -> hidden -> class logits, tanh activations. Each point is classified
// independently, so the network is permutation-equivariant by construction.
struct ModelConfig {
  int hidden = 64;
  int n_classes = 0;
  double coord_scale = 0.1;       // meters -> feature units
  bool dice_all_classes = false;  // average Dice over all classes, not just present ones

  void validate() const;
};

constexpr int kInputFeatures = 5;

// Dense parameters, stored flat (W1, b1, W2, b2, W3, b3; row-major). Kept in
// double for training; checkpoints serialize as float32.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(ModelConfig cfg, std::vector<double> values);

  static ModelParams random_init(const ModelConfig& cfg, Rng& rng);
  static std::size_t param_count(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Offsets into the flat vector.
  std::size_t w1() const { return 0; }
  std::size_t b1() const;
  std::size_t w2() const;
  std::size_t b2() const;
  std::size_t w3() const;
  std::size_t b3() const;

 private:
  ModelConfig cfg_;
  std::vector<double> values_;
};

// Per-point class probabilities (softmax rows). Throws numeric_error naming
// the layer if an activation goes non-finite.
ProbMatrix forward(const ModelParams& params, const PointCloud& cloud);

struct DiceResult {
  double loss = 0.0;
  std::vector<double> dprobs;  // dLoss/dprob, row-major N x C
};

// Soft multiclass Dice with epsilon = 1: per class c, d_c =
// (2*sum_i p_ic*g_ic + 1) / (sum_i p_ic + sum_i g_ic + 1) over non-ignored
// points; loss = 1 - mean of d_c. By default the mean runs over classes
// present in the labels; cfg.dice_all_classes switches to all of C.
DiceResult dice_loss(const ProbMatrix& probs, const LabelSet& labels, const ClassSet& classes,
                     bool over_all_classes = false);

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // per parameter, same layout as ModelParams
};

// Loss and analytic gradient of dice_loss(forward(cloud)) w.r.t. every
// parameter.
LossValue backward(const ModelParams& params, const PointCloud& cloud, const LabelSet& labels,
                   const ClassSet& classes);

ModelParams sgd_step(const ModelParams& params, const std::vector<double>& grad, double lr);

// theta' <- beta * theta' + (1 - beta) * theta, elementwise.
ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double beta);

// Versioned binary checkpoint; float32 payload, bit-exact round-trip.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cosmix
