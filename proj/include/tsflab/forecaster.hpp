#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "tsflab/series.hpp"

namespace tsflab {

enum class Architecture { linear, mlp };
enum class OptimizerKind { adam, sgd };
enum class TaskDirection { forecast, backcast };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  OptimizerKind optimizer = OptimizerKind::adam;
  int hidden = 32;  // mlp hidden width
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate < 0.0) throw Error(ErrorCode::invalid_argument, "learning rate must be >= 0");
    if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch size must be >= 1");
    if (hidden < 1) throw Error(ErrorCode::invalid_argument, "hidden width must be >= 1");
  }
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-12 -> 1.0 for constant channels
};

NormStats compute_norm_stats(const TimeSeriesDataset& train);

// SmoothL1 with delta = 1 on the prediction error e = p - y.
double smooth_l1_loss(double err);
double smooth_l1_grad(double err);

struct SmoothL1Result {
  std::vector<double> losses;
  std::vector<double> grads;  // d loss / d prediction
};
SmoothL1Result smooth_l1(const std::vector<double>& prediction, const std::vector<double>& target);

// Binary (window, channel) selection mask over a window list. Row-major N x C.
struct Mask {
  std::size_t windows = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> bits;

  static Mask ones(std::size_t n, std::size_t c) {
    Mask m;
    m.windows = n;
    m.channels = c;
    m.bits.assign(n * c, 1);
    return m;
  }
  static Mask zeros(std::size_t n, std::size_t c) {
    Mask m = ones(n, c);
    std::fill(m.bits.begin(), m.bits.end(), 0);
    return m;
  }
  bool get(std::size_t i, std::size_t c) const { return bits[i * channels + c] != 0; }
  void set(std::size_t i, std::size_t c, bool v) { bits[i * channels + c] = v ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
};

// Channel-independent reference forecaster. `linear` keeps one weight matrix
// per channel; `mlp` shares a two-layer tanh network across channels. Inputs
// are z-normalized with training statistics, outputs de-normalized on the way
// out of predict().
class Forecaster {
 public:
  Forecaster() = default;
  static Forecaster create(Architecture arch, int input_len, int output_len, std::size_t channels,
                           int hidden, NormStats norm, std::uint64_t init_seed);

  Architecture arch() const { return arch_; }
  int input_len() const { return input_len_; }
  int output_len() const { return output_len_; }
  std::size_t channels() const { return channels_; }
  int hidden() const { return hidden_; }
  const NormStats& norm() const { return norm_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // One channel, normalized in/out. `in` has input_len entries.
  void forward(const double* in, std::size_t channel, double* out) const;

  // Raw multivariate input (input_len x C) -> raw output (output_len x C).
  Matrix predict(const Matrix& input_raw) const;

  std::string to_json_string() const;
  static Forecaster from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static Forecaster load(const std::string& path);

 private:
  Architecture arch_ = Architecture::linear;
  int input_len_ = 0;
  int output_len_ = 0;
  std::size_t channels_ = 0;
  int hidden_ = 0;
  NormStats norm_;
  std::vector<double> params_;

  std::size_t linear_stride() const {
    return static_cast<std::size_t>(output_len_) * input_len_ + output_len_;
  }
};

struct TrainStats {
  double last_epoch_loss = 0.0;
  int skipped_batches = 0;
};

// Masked empirical objective over the given anchors:
//   L = sum_{i,c} m_{i,c} * meanSmoothL1(f_c(x_i), y_ic) / sum m_{i,c}
// in normalized space. Direction `backcast` swaps the roles of the windows:
// input = time-reversed future, target = time-reversed history.
double masked_loss_value(const Forecaster& model, const TimeSeriesDataset& segment,
                         const std::vector<int>& anchors, const WindowSpec& spec, const Mask& mask,
                         TaskDirection direction);
std::vector<double> masked_loss_gradient(const Forecaster& model, const TimeSeriesDataset& segment,
                                         const std::vector<int>& anchors, const WindowSpec& spec,
                                         const Mask& mask, TaskDirection direction);

// Seeded mini-batch training. All-masked batches are skipped and counted.
// Throws on non-finite loss.
TrainStats train_epochs(Forecaster& model, const TimeSeriesDataset& segment,
                        const std::vector<int>& anchors, const WindowSpec& spec, const Mask& mask,
                        const TrainConfig& config, int epochs,
                        TaskDirection direction = TaskDirection::forecast);

// Fresh model of the same architecture trained on all windows to map the
// time-reversed future to the time-reversed history.
Forecaster train_backcaster(Architecture arch, const TimeSeriesDataset& segment,
                            const std::vector<int>& anchors, const WindowSpec& spec, int t_b,
                            const TrainConfig& config, const NormStats& norm);

// Per-(window, channel) mean SmoothL1 in normalized space, N x C.
Matrix eval_losses(const Forecaster& model, const TimeSeriesDataset& segment,
                   const std::vector<int>& anchors, const WindowSpec& spec,
                   TaskDirection direction);

// Reverse-consistency loss of one window/channel under a trained backcaster.
double rcf_loss(const Forecaster& backcaster, const TimeSeriesDataset& segment, int anchor,
                int channel, const WindowSpec& spec);

}  // namespace tsflab
