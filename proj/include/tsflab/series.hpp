#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tsflab/error.hpp"

namespace tsflab {

// Dense row-major matrix of doubles. Small by design; all numerics in this
// project run on flat buffers.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

struct WindowSpec {
  int l_in = 12;
  int l_out = 12;

  void validate() const {
    if (l_in < 1 || l_out < 1)
      throw Error(ErrorCode::invalid_argument, "window lengths must be >= 1");
  }
  int window_len() const { return l_in + l_out; }
};

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;

  void validate() const;
};

// A T x C series. Values are immutable for consumers; mutation happens only
// through attack injection, which operates on an owned copy.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset() = default;
  TimeSeriesDataset(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
    default_channel_names();
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double at(std::size_t t, std::size_t c) const { return values_[t * cols_ + c]; }
  double& at(std::size_t t, std::size_t c) { return values_[t * cols_ + c]; }
  const std::vector<double>& values() const { return values_; }

  std::vector<std::string> channel_names;
  std::optional<std::string> frequency_hint;

  void default_channel_names() {
    channel_names.resize(cols_);
    for (std::size_t c = 0; c < cols_; ++c) channel_names[c] = "c" + std::to_string(c);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct ChannelWindow {
  std::vector<double> history;
  std::vector<double> future;

  // [history; future], history first.
  std::vector<double> full() const {
    std::vector<double> out(history);
    out.insert(out.end(), future.begin(), future.end());
    return out;
  }
};

struct SplitResult {
  TimeSeriesDataset train;
  TimeSeriesDataset val;
  TimeSeriesDataset test;
  std::size_t val_begin = 0;   // absolute row where val starts
  std::size_t test_begin = 0;  // absolute row where test starts
};

// UTF-8 CSV, comma separated, optional single header row. Rejects ragged rows
// and non-finite values, reporting 1-based row/column positions.
TimeSeriesDataset ingest_csv(const std::string& path, bool has_header);

void write_csv(const TimeSeriesDataset& ds, const std::string& path);

// Anchors t with l_in <= t <= T - l_out, ascending. History is [t-l_in, t),
// future is [t, t+l_out).
std::vector<int> make_windows(std::size_t rows, const WindowSpec& spec);

ChannelWindow channel_window(const TimeSeriesDataset& ds, int t, int c, const WindowSpec& spec);

// History rows for all channels at anchor t (l_in x C).
Matrix history_at(const TimeSeriesDataset& ds, int t, const WindowSpec& spec);
Matrix future_at(const TimeSeriesDataset& ds, int t, const WindowSpec& spec);

// Contiguous train/val/test segments. Train and val get floor(frac*T) rows,
// the remainder goes to test. Every segment must still admit at least one
// window under `spec`.
SplitResult split(const TimeSeriesDataset& ds, const SplitSpec& split_spec, const WindowSpec& spec);

}  // namespace tsflab
