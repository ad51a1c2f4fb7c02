#include "tsflab/series.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tsflab {

void SplitSpec::validate() const {
  if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0)
    throw Error(ErrorCode::invalid_argument, "split fractions must be positive");
  const double sum = train_frac + val_frac + test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::invalid_argument, "split fractions must sum to 1");
}

namespace {

// Strict field parse: the whole token must be consumed and the value finite.
double parse_field(const std::string& field, std::size_t row, std::size_t col) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw Error(ErrorCode::parse, "CSV parse failure at row " + std::to_string(row) +
                                      ", column " + std::to_string(col) + ": '" + field + "'");
  if (!std::isfinite(v))
    throw Error(ErrorCode::parse, "non-finite value at row " + std::to_string(row) + ", column " +
                                      std::to_string(col) + ": '" + field + "'");
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

TimeSeriesDataset ingest_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);

  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = has_header;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (header_pending) {
      header_pending = false;
      cols = fields.size();
      names.reserve(cols);
      for (auto& f : fields) names.push_back(trim(f));
      continue;
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols)
      throw Error(ErrorCode::parse, "row " + std::to_string(lineno) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(cols));
    std::vector<double> row(cols);
    for (std::size_t c = 0; c < cols; ++c) row[c] = parse_field(trim(fields[c]), lineno, c + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::parse, "no data rows in " + path);

  TimeSeriesDataset ds(rows.size(), cols);
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < cols; ++c) ds.at(t, c) = rows[t][c];
  if (!names.empty())
    ds.channel_names = names;
  return ds;
}

void write_csv(const TimeSeriesDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    if (c) out << ',';
    out << ds.channel_names[c];
  }
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      if (c) out << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", ds.at(t, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

std::vector<int> make_windows(std::size_t rows, const WindowSpec& spec) {
  spec.validate();
  const long long t_max = static_cast<long long>(rows) - spec.l_out;
  if (t_max < spec.l_in)
    throw Error(ErrorCode::invalid_argument,
                "dataset too short to window: T=" + std::to_string(rows) +
                    " < l_in+l_out=" + std::to_string(spec.window_len()));
  std::vector<int> anchors;
  anchors.reserve(static_cast<std::size_t>(t_max - spec.l_in + 1));
  for (long long t = spec.l_in; t <= t_max; ++t) anchors.push_back(static_cast<int>(t));
  return anchors;
}

ChannelWindow channel_window(const TimeSeriesDataset& ds, int t, int c, const WindowSpec& spec) {
  if (c < 0 || static_cast<std::size_t>(c) >= ds.cols())
    throw Error(ErrorCode::invalid_argument, "channel index out of range: " + std::to_string(c));
  if (t < spec.l_in || static_cast<std::size_t>(t + spec.l_out) > ds.rows())
    throw Error(ErrorCode::invalid_argument, "window anchor out of range: " + std::to_string(t));
  ChannelWindow w;
  w.history.resize(spec.l_in);
  w.future.resize(spec.l_out);
  for (int i = 0; i < spec.l_in; ++i) w.history[i] = ds.at(t - spec.l_in + i, c);
  for (int i = 0; i < spec.l_out; ++i) w.future[i] = ds.at(t + i, c);
  return w;
}

Matrix history_at(const TimeSeriesDataset& ds, int t, const WindowSpec& spec) {
  if (t < spec.l_in || static_cast<std::size_t>(t) > ds.rows())
    throw Error(ErrorCode::invalid_argument, "history anchor out of range: " + std::to_string(t));
  Matrix m(spec.l_in, ds.cols());
  for (int i = 0; i < spec.l_in; ++i)
    for (std::size_t c = 0; c < ds.cols(); ++c) m.at(i, c) = ds.at(t - spec.l_in + i, c);
  return m;
}

Matrix future_at(const TimeSeriesDataset& ds, int t, const WindowSpec& spec) {
  if (t < 0 || static_cast<std::size_t>(t + spec.l_out) > ds.rows())
    throw Error(ErrorCode::invalid_argument, "future anchor out of range: " + std::to_string(t));
  Matrix m(spec.l_out, ds.cols());
  for (int i = 0; i < spec.l_out; ++i)
    for (std::size_t c = 0; c < ds.cols(); ++c) m.at(i, c) = ds.at(t + i, c);
  return m;
}

namespace {

TimeSeriesDataset slice(const TimeSeriesDataset& ds, std::size_t begin, std::size_t len) {
  TimeSeriesDataset out(len, ds.cols());
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < ds.cols(); ++c) out.at(t, c) = ds.at(begin + t, c);
  out.channel_names = ds.channel_names;
  out.frequency_hint = ds.frequency_hint;
  return out;
}

}  // namespace

SplitResult split(const TimeSeriesDataset& ds, const SplitSpec& split_spec,
                  const WindowSpec& spec) {
  split_spec.validate();
  const std::size_t rows = ds.rows();
  // floor(frac*T); the epsilon absorbs products like 0.29*100 that land one
  // ulp below the intended integer.
  const auto floor_len = [rows](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(rows) + 1e-9));
  };
  const std::size_t train_len = floor_len(split_spec.train_frac);
  const std::size_t val_len = floor_len(split_spec.val_frac);
  if (train_len + val_len > rows)
    throw Error(ErrorCode::invalid_argument, "split fractions leave no test rows");
  const std::size_t test_len = rows - train_len - val_len;

  const auto min_len = static_cast<std::size_t>(spec.window_len());
  if (train_len < min_len || val_len < min_len || test_len < min_len)
    throw Error(ErrorCode::invalid_argument,
                "split segment shorter than l_in+l_out: train=" + std::to_string(train_len) +
                    " val=" + std::to_string(val_len) + " test=" + std::to_string(test_len));

  SplitResult r;
  r.train = slice(ds, 0, train_len);
  r.val = slice(ds, train_len, val_len);
  r.test = slice(ds, train_len + val_len, test_len);
  r.val_begin = train_len;
  r.test_begin = train_len + val_len;
  return r;
}

}  // namespace tsflab
