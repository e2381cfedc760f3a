#include "cosmix/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace cosmix {

void ModelConfig::validate() const {
  if (hidden < 1) throw usage_error("model.hidden must be >= 1");
  if (n_classes < 2) throw usage_error("model.n_classes must be >= 2");
  if (!(coord_scale > 0.0)) throw usage_error("model.coord_scale must be > 0");
}

ModelParams::ModelParams(ModelConfig cfg, std::vector<double> values)
    : cfg_(cfg), values_(std::move(values)) {
  cfg_.validate();
  if (values_.size() != param_count(cfg_)) {
    throw data_error("model parameter vector has wrong length");
  }
}

std::size_t ModelParams::param_count(const ModelConfig& cfg) {
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t c = static_cast<std::size_t>(cfg.n_classes);
  return h * kInputFeatures + h + h * h + h + c * h + c;
}

std::size_t ModelParams::b1() const {
  return static_cast<std::size_t>(cfg_.hidden) * kInputFeatures;
}
std::size_t ModelParams::w2() const { return b1() + static_cast<std::size_t>(cfg_.hidden); }
std::size_t ModelParams::b2() const {
  return w2() + static_cast<std::size_t>(cfg_.hidden) * static_cast<std::size_t>(cfg_.hidden);
}
std::size_t ModelParams::w3() const { return b2() + static_cast<std::size_t>(cfg_.hidden); }
std::size_t ModelParams::b3() const {
  return w3() + static_cast<std::size_t>(cfg_.n_classes) * static_cast<std::size_t>(cfg_.hidden);
}

ModelParams ModelParams::random_init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> values(param_count(cfg), 0.0);
  const auto fill = [&rng, &values](std::size_t offset, std::size_t count, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) {
      values[offset + i] = rng.uniform(-limit, limit);
    }
  };
  ModelParams p(cfg, values);
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t c = static_cast<std::size_t>(cfg.n_classes);
  fill(p.w1(), h * kInputFeatures, kInputFeatures, cfg.hidden);
  fill(p.w2(), h * h, cfg.hidden, cfg.hidden);
  fill(p.w3(), c * h, cfg.hidden, cfg.n_classes);
  // biases stay zero
  return ModelParams(cfg, p.values());
}

namespace {

void point_features(const PointCloud& cloud, std::size_t i, double scale,
                    std::array<double, kInputFeatures>& out) {
  const Vec3& p = cloud.coords[i];
  const double x = p.x;
  const double y = p.y;
  const double z = p.z;
  out[0] = x * scale;
  out[1] = y * scale;
  out[2] = z * scale;
  out[3] = std::sqrt(x * x + y * y + z * z) * scale;
  out[4] = cloud.has_intensity() ? static_cast<double>(cloud.intensity[i]) : 0.0;
}

struct ForwardBuffers {
  std::vector<double> feats;   // N x 5
  std::vector<double> a1;      // N x H, tanh
  std::vector<double> a2;      // N x H, tanh
  std::vector<double> probs;   // N x C, softmax
};

void check_finite(const std::vector<double>& buf, const char* layer) {
  for (double v : buf) {
    if (!std::isfinite(v)) {
      throw numeric_error(std::string("non-finite activation in layer ") + layer);
    }
  }
}

ForwardBuffers run_forward(const ModelParams& params, const PointCloud& cloud) {
  if (cloud.empty()) throw data_error("forward: empty point cloud");
  cloud.validate();

  const ModelConfig& cfg = params.config();
  const std::size_t n = cloud.size();
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t c = static_cast<std::size_t>(cfg.n_classes);
  const double* v = params.values().data();
  const double* w1 = v + params.w1();
  const double* b1 = v + params.b1();
  const double* w2 = v + params.w2();
  const double* b2 = v + params.b2();
  const double* w3 = v + params.w3();
  const double* b3 = v + params.b3();

  ForwardBuffers buf;
  buf.feats.resize(n * kInputFeatures);
  buf.a1.resize(n * h);
  buf.a2.resize(n * h);
  buf.probs.resize(n * c);

  std::array<double, kInputFeatures> f{};
  for (std::size_t i = 0; i < n; ++i) {
    point_features(cloud, i, cfg.coord_scale, f);
    std::copy(f.begin(), f.end(), buf.feats.begin() + static_cast<std::ptrdiff_t>(i * kInputFeatures));

    double* a1 = buf.a1.data() + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double* row = w1 + j * kInputFeatures;
      double acc = b1[j];
      for (int k = 0; k < kInputFeatures; ++k) acc += row[k] * f[static_cast<std::size_t>(k)];
      a1[j] = std::tanh(acc);
    }

    double* a2 = buf.a2.data() + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double* row = w2 + j * h;
      double acc = b2[j];
      for (std::size_t k = 0; k < h; ++k) acc += row[k] * a1[k];
      a2[j] = std::tanh(acc);
    }

    double* probs = buf.probs.data() + i * c;
    double max_logit = -1e300;
    for (std::size_t j = 0; j < c; ++j) {
      const double* row = w3 + j * h;
      double acc = b3[j];
      for (std::size_t k = 0; k < h; ++k) acc += row[k] * a2[k];
      probs[j] = acc;
      max_logit = std::max(max_logit, acc);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[j] = std::exp(probs[j] - max_logit);
      sum += probs[j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[j] /= sum;
  }
  check_finite(buf.a1, "hidden1");
  check_finite(buf.a2, "hidden2");
  check_finite(buf.probs, "softmax");
  return buf;
}

// Label -> column index; kIgnoreLabel maps to -1.
std::vector<int> label_columns(const LabelSet& labels, const ClassSet& classes) {
  std::vector<int> cols(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t l = labels.labels[i];
    if (l != kIgnoreLabel) cols[i] = static_cast<int>(classes.index_of(l));
  }
  return cols;
}

constexpr double kDiceEpsilon = 1.0;

// Shared Dice core over double probabilities. Returns loss and fills dprobs
// (if non-null) with dLoss/dp.
double dice_core(const double* probs, std::size_t n, std::size_t c, const std::vector<int>& cols,
                 bool over_all_classes, std::vector<double>* dprobs) {
  std::vector<double> inter(c, 0.0);   // sum_i p_ic * g_ic
  std::vector<double> prob_sum(c, 0.0);
  std::vector<double> truth_sum(c, 0.0);
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cols[i] < 0) continue;
    ++evaluated;
    const double* row = probs + i * c;
    const std::size_t g = static_cast<std::size_t>(cols[i]);
    inter[g] += row[g];
    truth_sum[g] += 1.0;
    for (std::size_t j = 0; j < c; ++j) prob_sum[j] += row[j];
  }
  if (evaluated == 0) throw loss_error("dice loss: every point is ignored");

  std::vector<std::size_t> scored;
  for (std::size_t j = 0; j < c; ++j) {
    if (over_all_classes || truth_sum[j] > 0.0) scored.push_back(j);
  }

  double mean_dice = 0.0;
  std::vector<double> dnumer(c, 0.0);
  std::vector<double> ddenom(c, 0.0);
  for (std::size_t j : scored) {
    const double numer = 2.0 * inter[j] + kDiceEpsilon;
    const double denom = prob_sum[j] + truth_sum[j] + kDiceEpsilon;
    mean_dice += numer / denom;
    // d(numer/denom)/dp = (2*g*denom - numer) / denom^2, folded below
    dnumer[j] = 1.0 / denom;
    ddenom[j] = -numer / (denom * denom);
  }
  mean_dice /= static_cast<double>(scored.size());
  const double loss = 1.0 - mean_dice;

  if (dprobs) {
    dprobs->assign(n * c, 0.0);
    const double scale = -1.0 / static_cast<double>(scored.size());
    std::vector<std::uint8_t> is_scored(c, 0);
    for (std::size_t j : scored) is_scored[j] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (cols[i] < 0) continue;
      double* drow = dprobs->data() + i * c;
      const std::size_t g = static_cast<std::size_t>(cols[i]);
      for (std::size_t j = 0; j < c; ++j) {
        if (!is_scored[j]) continue;
        double d = ddenom[j];  // via prob_sum
        if (j == g) d += 2.0 * dnumer[j];
        drow[j] = scale * d;
      }
    }
  }
  return loss;
}

}  // namespace

ProbMatrix forward(const ModelParams& params, const PointCloud& cloud) {
  const ForwardBuffers buf = run_forward(params, cloud);
  const std::size_t c = static_cast<std::size_t>(params.config().n_classes);
  ProbMatrix out = ProbMatrix::zeros(cloud.size(), c);
  for (std::size_t i = 0; i < buf.probs.size(); ++i) {
    out.data[i] = static_cast<float>(buf.probs[i]);
  }
  return out;
}

DiceResult dice_loss(const ProbMatrix& probs, const LabelSet& labels, const ClassSet& classes,
                     bool over_all_classes) {
  if (probs.rows != labels.size()) {
    throw alignment_error("dice loss: probability rows do not match labels");
  }
  if (probs.cols != classes.size()) {
    throw alignment_error("dice loss: probability columns do not match class set");
  }
  std::vector<double> dense(probs.data.begin(), probs.data.end());
  const std::vector<int> cols = label_columns(labels, classes);
  DiceResult out;
  out.loss = dice_core(dense.data(), probs.rows, probs.cols, cols, over_all_classes, &out.dprobs);
  return out;
}

LossValue backward(const ModelParams& params, const PointCloud& cloud, const LabelSet& labels,
                   const ClassSet& classes) {
  check_aligned(cloud, labels);
  const ModelConfig& cfg = params.config();
  const ForwardBuffers buf = run_forward(params, cloud);
  const std::size_t n = cloud.size();
  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t c = static_cast<std::size_t>(cfg.n_classes);
  const std::vector<int> cols = label_columns(labels, classes);

  std::vector<double> dprobs;
  LossValue out;
  out.loss = dice_core(buf.probs.data(), n, c, cols, cfg.dice_all_classes, &dprobs);
  out.grad.assign(params.values().size(), 0.0);

  const double* v = params.values().data();
  const double* w2 = v + params.w2();
  const double* w3 = v + params.w3();
  double* gw1 = out.grad.data() + params.w1();
  double* gb1 = out.grad.data() + params.b1();
  double* gw2 = out.grad.data() + params.w2();
  double* gb2 = out.grad.data() + params.b2();
  double* gw3 = out.grad.data() + params.w3();
  double* gb3 = out.grad.data() + params.b3();

  std::vector<double> dlogits(c);
  std::vector<double> da2(h);
  std::vector<double> dz2(h);
  std::vector<double> da1(h);
  std::vector<double> dz1(h);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = buf.probs.data() + i * c;
    const double* dp = dprobs.data() + i * c;

    // softmax jacobian: dz_k = p_k * (dp_k - sum_j dp_j * p_j)
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += dp[j] * p[j];
    bool all_zero = true;
    for (std::size_t j = 0; j < c; ++j) {
      dlogits[j] = p[j] * (dp[j] - dot);
      if (dlogits[j] != 0.0) all_zero = false;
    }
    if (all_zero) continue;  // ignored points contribute nothing

    const double* a1 = buf.a1.data() + i * h;
    const double* a2 = buf.a2.data() + i * h;
    const double* f = buf.feats.data() + i * kInputFeatures;

    std::fill(da2.begin(), da2.end(), 0.0);
    for (std::size_t j = 0; j < c; ++j) {
      const double g = dlogits[j];
      gb3[j] += g;
      double* grow = gw3 + j * h;
      const double* row = w3 + j * h;
      for (std::size_t k = 0; k < h; ++k) {
        grow[k] += g * a2[k];
        da2[k] += g * row[k];
      }
    }

    std::fill(da1.begin(), da1.end(), 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const double g = da2[j] * (1.0 - a2[j] * a2[j]);  // tanh'
      dz2[j] = g;
      gb2[j] += g;
      double* grow = gw2 + j * h;
      const double* row = w2 + j * h;
      for (std::size_t k = 0; k < h; ++k) {
        grow[k] += g * a1[k];
        da1[k] += g * row[k];
      }
    }

    for (std::size_t j = 0; j < h; ++j) {
      const double g = da1[j] * (1.0 - a1[j] * a1[j]);
      dz1[j] = g;
      gb1[j] += g;
      double* grow = gw1 + j * kInputFeatures;
      for (int k = 0; k < kInputFeatures; ++k) {
        grow[k] += g * f[k];
      }
    }
  }
  for (double g : out.grad) {
    if (!std::isfinite(g)) throw numeric_error("non-finite gradient");
  }
  return out;
}

ModelParams sgd_step(const ModelParams& params, const std::vector<double>& grad, double lr) {
  if (grad.size() != params.values().size()) {
    throw data_error("sgd step: gradient length does not match parameter count");
  }
  std::vector<double> next = params.values();
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] -= lr * grad[i];
  }
  return ModelParams(params.config(), std::move(next));
}

ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double beta) {
  if (teacher.values().size() != student.values().size()) {
    throw data_error("ema update: parameter shapes differ");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw usage_error("ema beta must be in [0, 1]");
  std::vector<double> next(teacher.values().size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = beta * teacher.values()[i] + (1.0 - beta) * student.values()[i];
  }
  return ModelParams(teacher.config(), std::move(next));
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'S', 'M', 'X', 'C', 'K', 'P', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw format_error("checkpoint: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open checkpoint for writing: " + path.string());
  const ModelConfig& cfg = params.config();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, 1);  // version
  put_u32(out, kInputFeatures);
  put_u32(out, static_cast<std::uint32_t>(cfg.hidden));
  put_u32(out, static_cast<std::uint32_t>(cfg.n_classes));
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(cfg.coord_scale)));
  put_u32(out, cfg.dice_all_classes ? 1 : 0);
  const std::uint32_t h = static_cast<std::uint32_t>(cfg.hidden);
  const std::uint32_t c = static_cast<std::uint32_t>(cfg.n_classes);
  const std::uint32_t shapes[6][2] = {{h, kInputFeatures}, {h, 1}, {h, h}, {h, 1}, {c, h}, {c, 1}};
  put_u32(out, 6);
  for (const auto& s : shapes) {
    put_u32(out, s[0]);
    put_u32(out, s[1]);
  }
  for (double value : params.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
  }
  if (!out) throw data_error("checkpoint write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw format_error("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw format_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t input = get_u32(in);
  if (input != kInputFeatures) throw format_error("checkpoint: unexpected input feature count");
  ModelConfig cfg;
  cfg.hidden = static_cast<int>(get_u32(in));
  cfg.n_classes = static_cast<int>(get_u32(in));
  cfg.coord_scale = std::bit_cast<float>(get_u32(in));
  cfg.dice_all_classes = get_u32(in) != 0;
  const std::uint32_t n_tensors = get_u32(in);
  if (n_tensors != 6) throw format_error("checkpoint: unexpected tensor count");
  std::size_t expected = 0;
  for (std::uint32_t t = 0; t < n_tensors; ++t) {
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t colcount = get_u32(in);
    expected += static_cast<std::size_t>(rows) * colcount;
  }
  if (expected != ModelParams::param_count(cfg)) {
    throw format_error("checkpoint: shape table does not match header");
  }
  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    values[i] = std::bit_cast<float>(get_u32(in));
  }
  char extra;
  if (in.read(&extra, 1)) throw format_error("checkpoint: trailing bytes in " + path.string());
  return ModelParams(cfg, std::move(values));
}

}  // namespace cosmix
