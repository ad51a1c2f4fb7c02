#include "tsflab/forecaster.hpp"

#include <cmath>
#include <fstream>

#include "tsflab/rng.hpp"
#include <json.hpp>

namespace tsflab {

std::string to_string(Architecture a) { return a == Architecture::linear ? "linear" : "mlp"; }

Architecture architecture_from_string(const std::string& s) {
  if (s == "linear") return Architecture::linear;
  if (s == "mlp") return Architecture::mlp;
  throw Error(ErrorCode::invalid_argument, "unknown architecture: " + s);
}

NormStats compute_norm_stats(const TimeSeriesDataset& train) {
  NormStats st;
  st.mean.assign(train.cols(), 0.0);
  st.stddev.assign(train.cols(), 1.0);
  if (train.rows() == 0) return st;
  for (std::size_t c = 0; c < train.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < train.rows(); ++t) sum += train.at(t, c);
    const double mean = sum / static_cast<double>(train.rows());
    double sq = 0.0;
    for (std::size_t t = 0; t < train.rows(); ++t) {
      const double d = train.at(t, c) - mean;
      sq += d * d;
    }
    const double var = sq / static_cast<double>(train.rows());
    st.mean[c] = mean;
    st.stddev[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return st;
}

double smooth_l1_loss(double err) {
  const double a = std::abs(err);
  return a <= 1.0 ? 0.5 * err * err : a - 0.5;
}

double smooth_l1_grad(double err) {
  if (err > 1.0) return 1.0;
  if (err < -1.0) return -1.0;
  return err;
}

SmoothL1Result smooth_l1(const std::vector<double>& prediction, const std::vector<double>& target) {
  if (prediction.size() != target.size())
    throw Error(ErrorCode::invalid_argument, "smooth_l1 length mismatch");
  SmoothL1Result r;
  r.losses.resize(prediction.size());
  r.grads.resize(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double e = prediction[i] - target[i];
    r.losses[i] = smooth_l1_loss(e);
    r.grads[i] = smooth_l1_grad(e);
  }
  return r;
}

Forecaster Forecaster::create(Architecture arch, int input_len, int output_len,
                              std::size_t channels, int hidden, NormStats norm,
                              std::uint64_t init_seed) {
  if (input_len < 1 || output_len < 1 || channels == 0)
    throw Error(ErrorCode::invalid_argument, "bad forecaster dimensions");
  if (arch == Architecture::mlp && (hidden < 1 || hidden > 512))
    throw Error(ErrorCode::invalid_argument, "mlp hidden width must be in [1, 512]");
  if (norm.mean.size() != channels || norm.stddev.size() != channels)
    throw Error(ErrorCode::invalid_argument, "normalization stats do not match channel count");
  Forecaster f;
  f.arch_ = arch;
  f.input_len_ = input_len;
  f.output_len_ = output_len;
  f.channels_ = channels;
  f.hidden_ = arch == Architecture::mlp ? hidden : 0;
  f.norm_ = std::move(norm);
  if (arch == Architecture::linear) {
    f.params_.assign(channels * f.linear_stride(), 0.0);
  } else {
    const std::size_t n1 = static_cast<std::size_t>(hidden) * input_len + hidden;
    const std::size_t n2 = static_cast<std::size_t>(output_len) * hidden + output_len;
    f.params_.resize(n1 + n2);
    Rng rng(derive_seed(init_seed, "forecaster.init"));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_len));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::size_t k = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(hidden) * input_len; ++i)
      f.params_[k++] = rng.uniform(-s1, s1);
    for (int i = 0; i < hidden; ++i) f.params_[k++] = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(output_len) * hidden; ++i)
      f.params_[k++] = rng.uniform(-s2, s2);
    for (int i = 0; i < output_len; ++i) f.params_[k++] = 0.0;
  }
  return f;
}

void Forecaster::forward(const double* in, std::size_t channel, double* out) const {
  if (arch_ == Architecture::linear) {
    const double* w = params_.data() + channel * linear_stride();
    const double* b = w + static_cast<std::size_t>(output_len_) * input_len_;
    for (int j = 0; j < output_len_; ++j) {
      double acc = b[j];
      const double* row = w + static_cast<std::size_t>(j) * input_len_;
      for (int i = 0; i < input_len_; ++i) acc += row[i] * in[i];
      out[j] = acc;
    }
  } else {
    const std::size_t h = static_cast<std::size_t>(hidden_);
    const double* w1 = params_.data();
    const double* b1 = w1 + h * input_len_;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(output_len_) * h;
    double z[512];
    for (std::size_t k = 0; k < h; ++k) {
      double acc = b1[k];
      const double* row = w1 + k * input_len_;
      for (int i = 0; i < input_len_; ++i) acc += row[i] * in[i];
      z[k] = std::tanh(acc);
    }
    for (int j = 0; j < output_len_; ++j) {
      double acc = b2[j];
      const double* row = w2 + static_cast<std::size_t>(j) * h;
      for (std::size_t k = 0; k < h; ++k) acc += row[k] * z[k];
      out[j] = acc;
    }
  }
}

Matrix Forecaster::predict(const Matrix& input_raw) const {
  if (input_raw.rows != static_cast<std::size_t>(input_len_) || input_raw.cols != channels_)
    throw Error(ErrorCode::invalid_argument, "predict input shape mismatch");
  Matrix out(static_cast<std::size_t>(output_len_), channels_);
  std::vector<double> in(input_len_), y(output_len_);
  for (std::size_t c = 0; c < channels_; ++c) {
    const double mu = norm_.mean[c], sd = norm_.stddev[c];
    for (int i = 0; i < input_len_; ++i) in[i] = (input_raw.at(i, c) - mu) / sd;
    forward(in.data(), c, y.data());
    for (int j = 0; j < output_len_; ++j) out.at(j, c) = y[j] * sd + mu;
  }
  return out;
}

namespace {

// Normalized input/target extraction for one window/channel.
struct WindowIO {
  const TimeSeriesDataset* ds;
  const NormStats* norm;
  int l_in, l_out;
  TaskDirection dir;

  int input_len() const { return dir == TaskDirection::forecast ? l_in : l_out; }
  int output_len() const { return dir == TaskDirection::forecast ? l_out : l_in; }

  void input(int t, std::size_t c, double* out) const {
    const double mu = norm->mean[c], sd = norm->stddev[c];
    if (dir == TaskDirection::forecast) {
      for (int i = 0; i < l_in; ++i) out[i] = (ds->at(t - l_in + i, c) - mu) / sd;
    } else {
      for (int i = 0; i < l_out; ++i) out[i] = (ds->at(t + l_out - 1 - i, c) - mu) / sd;
    }
  }
  void target(int t, std::size_t c, double* out) const {
    const double mu = norm->mean[c], sd = norm->stddev[c];
    if (dir == TaskDirection::forecast) {
      for (int j = 0; j < l_out; ++j) out[j] = (ds->at(t + j, c) - mu) / sd;
    } else {
      for (int j = 0; j < l_in; ++j) out[j] = (ds->at(t - 1 - j, c) - mu) / sd;
    }
  }
};

void check_direction_shape(const Forecaster& model, const WindowIO& io) {
  if (model.input_len() != io.input_len() || model.output_len() != io.output_len())
    throw Error(ErrorCode::invalid_argument, "model shape does not match task direction");
}

// Accumulates the masked objective and (optionally) its parameter gradient
// over the windows at `positions` within `anchors`. Returns sum of selected
// per-channel mean losses; mask_count must be the number of selected pairs.
double accumulate(const Forecaster& model, const WindowIO& io, const std::vector<int>& anchors,
                  const std::vector<std::uint32_t>& positions, const Mask& mask,
                  std::size_t mask_count, std::vector<double>* grad) {
  const std::size_t channels = model.channels();
  const int in_len = model.input_len();
  const int out_len = model.output_len();
  const int hidden = model.hidden();
  const auto& params = model.params();

  std::vector<double> in(in_len), pred(out_len), dout(out_len), z(std::max(hidden, 1));
  const double inv = 1.0 / (static_cast<double>(mask_count) * out_len);
  double loss_sum = 0.0;

  for (auto pos : positions) {
    const int t = anchors[pos];
    for (std::size_t c = 0; c < channels; ++c) {
      if (!mask.get(pos, c)) continue;
      io.input(t, c, in.data());

      // Forward, remembering hidden activations for the mlp backward pass.
      if (model.arch() == Architecture::linear) {
        model.forward(in.data(), c, pred.data());
      } else {
        const std::size_t h = static_cast<std::size_t>(hidden);
        const double* w1 = params.data();
        const double* b1 = w1 + h * in_len;
        const double* w2 = b1 + h;
        const double* b2 = w2 + static_cast<std::size_t>(out_len) * h;
        for (std::size_t k = 0; k < h; ++k) {
          double acc = b1[k];
          const double* row = w1 + k * in_len;
          for (int i = 0; i < in_len; ++i) acc += row[i] * in[i];
          z[k] = std::tanh(acc);
        }
        for (int j = 0; j < out_len; ++j) {
          double acc = b2[j];
          const double* row = w2 + static_cast<std::size_t>(j) * h;
          for (std::size_t k = 0; k < h; ++k) acc += row[k] * z[k];
          pred[j] = acc;
        }
      }

      const double mu = model.norm().mean[c], sd = model.norm().stddev[c];
      double window_loss = 0.0;
      for (int j = 0; j < out_len; ++j) {
        double y;
        if (io.dir == TaskDirection::forecast)
          y = (io.ds->at(t + j, c) - mu) / sd;
        else
          y = (io.ds->at(t - 1 - j, c) - mu) / sd;
        const double e = pred[j] - y;
        window_loss += smooth_l1_loss(e);
        dout[j] = smooth_l1_grad(e) * inv;
      }
      loss_sum += window_loss / out_len;
      if (!grad) continue;

      if (model.arch() == Architecture::linear) {
        const std::size_t base =
            c * (static_cast<std::size_t>(out_len) * in_len + out_len);
        double* gw = grad->data() + base;
        double* gb = gw + static_cast<std::size_t>(out_len) * in_len;
        for (int j = 0; j < out_len; ++j) {
          const double d = dout[j];
          double* row = gw + static_cast<std::size_t>(j) * in_len;
          for (int i = 0; i < in_len; ++i) row[i] += d * in[i];
          gb[j] += d;
        }
      } else {
        const std::size_t h = static_cast<std::size_t>(hidden);
        const double* w2 = params.data() + h * in_len + h;
        double* gw1 = grad->data();
        double* gb1 = gw1 + h * in_len;
        double* gw2 = gb1 + h;
        double* gb2 = gw2 + static_cast<std::size_t>(out_len) * h;
        for (std::size_t k = 0; k < h; ++k) {
          double dz = 0.0;
          for (int j = 0; j < out_len; ++j) dz += dout[j] * w2[static_cast<std::size_t>(j) * h + k];
          const double da = dz * (1.0 - z[k] * z[k]);
          double* row = gw1 + k * in_len;
          for (int i = 0; i < in_len; ++i) row[i] += da * in[i];
          gb1[k] += da;
        }
        for (int j = 0; j < out_len; ++j) {
          const double d = dout[j];
          double* row = gw2 + static_cast<std::size_t>(j) * h;
          for (std::size_t k = 0; k < h; ++k) row[k] += d * z[k];
          gb2[j] += d;
        }
      }
    }
  }
  return loss_sum;
}

std::size_t mask_count_at(const Mask& mask, const std::vector<std::uint32_t>& positions,
                          std::size_t channels) {
  std::size_t n = 0;
  for (auto pos : positions)
    for (std::size_t c = 0; c < channels; ++c) n += mask.get(pos, c) ? 1 : 0;
  return n;
}

void validate_mask(const Mask& mask, std::size_t windows, std::size_t channels) {
  if (mask.windows != windows || mask.channels != channels)
    throw Error(ErrorCode::invalid_argument, "mask shape mismatch");
}

}  // namespace

double masked_loss_value(const Forecaster& model, const TimeSeriesDataset& segment,
                         const std::vector<int>& anchors, const WindowSpec& spec, const Mask& mask,
                         TaskDirection direction) {
  WindowIO io{&segment, &model.norm(), spec.l_in, spec.l_out, direction};
  check_direction_shape(model, io);
  validate_mask(mask, anchors.size(), segment.cols());
  std::vector<std::uint32_t> positions(anchors.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<std::uint32_t>(i);
  const std::size_t count = mask_count_at(mask, positions, segment.cols());
  if (count == 0) throw Error(ErrorCode::invalid_argument, "all-masked batch");
  const double sum = accumulate(model, io, anchors, positions, mask, count, nullptr);
  return sum / static_cast<double>(count);
}

std::vector<double> masked_loss_gradient(const Forecaster& model, const TimeSeriesDataset& segment,
                                         const std::vector<int>& anchors, const WindowSpec& spec,
                                         const Mask& mask, TaskDirection direction) {
  WindowIO io{&segment, &model.norm(), spec.l_in, spec.l_out, direction};
  check_direction_shape(model, io);
  validate_mask(mask, anchors.size(), segment.cols());
  std::vector<std::uint32_t> positions(anchors.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<std::uint32_t>(i);
  const std::size_t count = mask_count_at(mask, positions, segment.cols());
  if (count == 0) throw Error(ErrorCode::invalid_argument, "all-masked batch");
  std::vector<double> grad(model.params().size(), 0.0);
  accumulate(model, io, anchors, positions, mask, count, &grad);
  return grad;
}

TrainStats train_epochs(Forecaster& model, const TimeSeriesDataset& segment,
                        const std::vector<int>& anchors, const WindowSpec& spec, const Mask& mask,
                        const TrainConfig& config, int epochs, TaskDirection direction) {
  config.validate();
  WindowIO io{&segment, &model.norm(), spec.l_in, spec.l_out, direction};
  check_direction_shape(model, io);
  validate_mask(mask, anchors.size(), segment.cols());

  Rng rng(derive_seed(config.seed, "train.shuffle"));
  const std::size_t n = anchors.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);

  auto& params = model.params();
  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> m1, m2;
  if (config.optimizer == OptimizerKind::adam) {
    m1.assign(params.size(), 0.0);
    m2.assign(params.size(), 0.0);
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long step = 0;

  TrainStats stats;
  std::vector<std::uint32_t> batch;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      batch.assign(order.begin() + start, order.begin() + stop);
      const std::size_t count = mask_count_at(mask, batch, segment.cols());
      if (count == 0) {
        ++stats.skipped_batches;
        continue;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss_sum = accumulate(model, io, anchors, batch, mask, count, &grad);
      if (!std::isfinite(loss_sum))
        throw Error(ErrorCode::numeric, "training diverged: non-finite loss");
      epoch_loss += loss_sum;
      epoch_count += count;

      if (config.optimizer == OptimizerKind::adam) {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < params.size(); ++i) {
          m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
          m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
          params[i] -= config.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
        }
      } else {
        for (std::size_t i = 0; i < params.size(); ++i)
          params[i] -= config.learning_rate * grad[i];
      }
    }
    stats.last_epoch_loss = epoch_count ? epoch_loss / static_cast<double>(epoch_count) : 0.0;
  }
  return stats;
}

Forecaster train_backcaster(Architecture arch, const TimeSeriesDataset& segment,
                            const std::vector<int>& anchors, const WindowSpec& spec, int t_b,
                            const TrainConfig& config, const NormStats& norm) {
  if (t_b < 0) throw Error(ErrorCode::invalid_argument, "backcaster epochs must be >= 0");
  TrainConfig cfg = config;
  cfg.seed = derive_seed(config.seed, "backcaster");
  Forecaster b = Forecaster::create(arch, spec.l_out, spec.l_in, segment.cols(), cfg.hidden, norm,
                                    cfg.seed);
  if (t_b > 0) {
    const Mask all = Mask::ones(anchors.size(), segment.cols());
    train_epochs(b, segment, anchors, spec, all, cfg, t_b, TaskDirection::backcast);
  }
  return b;
}

Matrix eval_losses(const Forecaster& model, const TimeSeriesDataset& segment,
                   const std::vector<int>& anchors, const WindowSpec& spec,
                   TaskDirection direction) {
  WindowIO io{&segment, &model.norm(), spec.l_in, spec.l_out, direction};
  check_direction_shape(model, io);
  const std::size_t channels = segment.cols();
  const int out_len = model.output_len();
  Matrix losses(anchors.size(), channels);
  std::vector<double> in(model.input_len()), pred(out_len), target(out_len);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const int t = anchors[i];
    for (std::size_t c = 0; c < channels; ++c) {
      io.input(t, c, in.data());
      model.forward(in.data(), c, pred.data());
      io.target(t, c, target.data());
      double sum = 0.0;
      for (int j = 0; j < out_len; ++j) sum += smooth_l1_loss(pred[j] - target[j]);
      losses.at(i, c) = sum / out_len;
    }
  }
  return losses;
}

double rcf_loss(const Forecaster& backcaster, const TimeSeriesDataset& segment, int anchor,
                int channel, const WindowSpec& spec) {
  WindowIO io{&segment, &backcaster.norm(), spec.l_in, spec.l_out, TaskDirection::backcast};
  check_direction_shape(backcaster, io);
  std::vector<double> in(backcaster.input_len()), pred(backcaster.output_len()),
      target(backcaster.output_len());
  io.input(anchor, static_cast<std::size_t>(channel), in.data());
  backcaster.forward(in.data(), static_cast<std::size_t>(channel), pred.data());
  io.target(anchor, static_cast<std::size_t>(channel), target.data());
  double sum = 0.0;
  for (int j = 0; j < backcaster.output_len(); ++j) sum += smooth_l1_loss(pred[j] - target[j]);
  return sum / backcaster.output_len();
}

std::string Forecaster::to_json_string() const {
  nlohmann::ordered_json j;
  j["architecture"] = to_string(arch_);
  j["input_len"] = input_len_;
  j["output_len"] = output_len_;
  j["channels"] = channels_;
  j["hidden"] = hidden_;
  j["normalization"] = {{"mean", norm_.mean}, {"std", norm_.stddev}};
  j["params"] = params_;
  return j.dump(2);
}

Forecaster Forecaster::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::parse, std::string("checkpoint parse error: ") + e.what());
  }
  Forecaster f;
  f.arch_ = architecture_from_string(j.at("architecture").get<std::string>());
  f.input_len_ = j.at("input_len").get<int>();
  f.output_len_ = j.at("output_len").get<int>();
  f.channels_ = j.at("channels").get<std::size_t>();
  f.hidden_ = j.at("hidden").get<int>();
  f.norm_.mean = j.at("normalization").at("mean").get<std::vector<double>>();
  f.norm_.stddev = j.at("normalization").at("std").get<std::vector<double>>();
  f.params_ = j.at("params").get<std::vector<double>>();
  const std::size_t expected =
      f.arch_ == Architecture::linear
          ? f.channels_ * f.linear_stride()
          : static_cast<std::size_t>(f.hidden_) * f.input_len_ + f.hidden_ +
                static_cast<std::size_t>(f.output_len_) * f.hidden_ + f.output_len_;
  if (f.params_.size() != expected)
    throw Error(ErrorCode::parse, "checkpoint parameter count mismatch");
  return f;
}

void Forecaster::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << to_json_string() << '\n';
}

Forecaster Forecaster::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace tsflab
