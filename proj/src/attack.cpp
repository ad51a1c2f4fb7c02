#include "tsflab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "tsflab/rng.hpp"
#include <json.hpp>

namespace tsflab {

std::string to_string(PatternShape s) {
  switch (s) {
    case PatternShape::cone: return "cone";
    case PatternShape::up_trend: return "up_trend";
    case PatternShape::up_and_down: return "up_and_down";
  }
  return "?";
}

std::string to_string(TriggerKind k) {
  return k == TriggerKind::random ? "random" : "manhattan";
}

PatternShape pattern_shape_from_string(const std::string& s) {
  if (s == "cone") return PatternShape::cone;
  if (s == "up_trend") return PatternShape::up_trend;
  if (s == "up_and_down") return PatternShape::up_and_down;
  throw Error(ErrorCode::invalid_argument, "unknown pattern shape: " + s);
}

TriggerKind trigger_kind_from_string(const std::string& s) {
  if (s == "random") return TriggerKind::random;
  if (s == "manhattan") return TriggerKind::manhattan;
  throw Error(ErrorCode::invalid_argument, "unknown trigger kind: " + s);
}

void AttackSpec::validate(const WindowSpec& window) const {
  if (eta_t <= 0.0 || eta_t > 1.0 || eta_s <= 0.0 || eta_s > 1.0)
    throw Error(ErrorCode::invalid_argument, "injection rates must lie in (0, 1]");
  if (l_tgr < 1 || l_ptn < 1)
    throw Error(ErrorCode::invalid_argument, "trigger/pattern lengths must be >= 1");
  if (l_tgr > window.l_in)
    throw Error(ErrorCode::invalid_argument, "l_tgr exceeds l_in");
  if (l_ptn > window.l_out)
    throw Error(ErrorCode::invalid_argument, "l_ptn exceeds l_out");
  if (delta_tgr < 0.0)
    throw Error(ErrorCode::invalid_argument, "delta_tgr must be >= 0");
}

bool AttackSpec::truncate_to_fit(const WindowSpec& window) {
  bool changed = false;
  if (l_tgr > window.l_in - 1) {
    l_tgr = window.l_in - 1;  // keep the baseline step inside the history
    changed = true;
  }
  if (l_ptn > window.l_out) {
    l_ptn = window.l_out;
    changed = true;
  }
  if (l_tgr < 1)
    throw Error(ErrorCode::invalid_argument, "l_in too short for any trigger");
  return changed;
}

std::vector<double> make_pattern_template(PatternShape shape, int l_ptn, double amplitude) {
  if (l_ptn < 2) throw Error(ErrorCode::invalid_argument, "pattern length must be >= 2");
  std::vector<double> p(l_ptn, 0.0);
  const int last = l_ptn - 1;
  auto interpolate = [&](int a, double va, int b, double vb) {
    for (int i = a; i <= b; ++i) {
      const double s = (b == a) ? 1.0 : static_cast<double>(i - a) / static_cast<double>(b - a);
      p[i] = va + (vb - va) * s;
    }
  };
  switch (shape) {
    case PatternShape::up_trend:
      interpolate(0, 0.0, last, amplitude);
      break;
    case PatternShape::cone: {
      const int peak = l_ptn / 2;
      interpolate(0, 0.0, peak, amplitude);
      interpolate(peak, amplitude, last, 0.0);
      break;
    }
    case PatternShape::up_and_down: {
      // Knots at fixed fractions; later knots win when positions collide.
      int k1 = l_ptn / 2, k2 = (3 * l_ptn) / 4;
      double v1 = amplitude, v2 = -amplitude / 2.0;
      if (k2 >= last) { k2 = last; v2 = 0.0; }
      if (k1 >= k2) { k1 = k2; v1 = v2; }
      interpolate(0, 0.0, k1, v1);
      interpolate(k1, v1, k2, v2);
      interpolate(k2, v2, last, 0.0);
      break;
    }
  }
  p[0] = 0.0;
  return p;
}

namespace {

std::size_t ceil_rate(double rate, std::size_t n) {
  const double raw = rate * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  if (k == 0) k = 1;
  return std::min(k, n);
}

}  // namespace

PoisonSites select_poison_sites(std::size_t t_train, std::size_t c, const AttackSpec& spec) {
  if (c == 0 || t_train == 0)
    throw Error(ErrorCode::invalid_argument, "empty training segment");
  const std::size_t n_channels = ceil_rate(spec.eta_s, c);
  const std::size_t n_sites = ceil_rate(spec.eta_t, t_train);
  const int w = spec.l_tgr + spec.l_ptn;

  // Valid anchors: baseline step t-l_tgr-1 >= 0 and pattern end t+l_ptn <= T.
  const long long t_min = spec.l_tgr + 1;
  const long long t_max = static_cast<long long>(t_train) - spec.l_ptn;
  // Anchors of k disjoint intervals map to a multiset via u_i = t_i - i*w.
  const long long slack =
      (t_max - t_min) - static_cast<long long>(w) * (static_cast<long long>(n_sites) - 1);
  if (t_max < t_min || slack < 0)
    throw Error(ErrorCode::invalid_argument,
                "cannot place " + std::to_string(n_sites) + " disjoint intervals of length " +
                    std::to_string(w) + " in a training segment of " + std::to_string(t_train));

  Rng rng(derive_seed(spec.seed, "attack.sites"));
  PoisonSites out;

  auto chans = rng.sample_without_replacement(static_cast<std::uint32_t>(c),
                                              static_cast<std::uint32_t>(n_channels));
  out.channels.assign(chans.begin(), chans.end());

  // Uniform multiset of size k over [0, slack]: choose k distinct values from
  // [0, slack + k) and subtract ranks.
  auto picks = rng.sample_without_replacement(static_cast<std::uint32_t>(slack + static_cast<long long>(n_sites)),
                                              static_cast<std::uint32_t>(n_sites));
  out.timestamps.reserve(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) {
    const long long u = static_cast<long long>(picks[i]) - static_cast<long long>(i);
    out.timestamps.push_back(static_cast<int>(t_min + u + static_cast<long long>(i) * w));
  }
  return out;
}

Matrix random_trigger(const AttackSpec& spec, std::size_t n_channels) {
  Rng rng(derive_seed(spec.seed, "attack.trigger"));
  Matrix g(static_cast<std::size_t>(spec.l_tgr), n_channels);
  for (auto& v : g.data) v = rng.uniform(-spec.delta_tgr, spec.delta_tgr);
  return g;
}

Matrix scale_trigger(const Matrix& normalized, const std::vector<double>& mean,
                     const std::vector<double>& stddev, const std::vector<int>& channels) {
  if (normalized.cols != channels.size())
    throw Error(ErrorCode::invalid_argument, "trigger/channel count mismatch");
  Matrix raw = normalized;
  for (std::size_t r = 0; r < raw.rows; ++r)
    for (std::size_t j = 0; j < raw.cols; ++j) {
      const auto c = static_cast<std::size_t>(channels[j]);
      raw.at(r, j) = mean[c] + normalized.at(r, j) * stddev[c];
    }
  return raw;
}

std::vector<double> manhattan_trigger(const TimeSeriesDataset& train,
                                      const std::vector<double>& pattern, int l_tgr, int c) {
  const int l_ptn = static_cast<int>(pattern.size());
  const long long first = l_tgr + 1;  // need baseline at u - l_tgr - 1 and trigger window before u
  const long long last = static_cast<long long>(train.rows()) - l_ptn;
  if (last < first)
    throw Error(ErrorCode::invalid_argument, "training segment too short for manhattan scan");

  long long best_u = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (long long u = first; u <= last; ++u) {
    const double baseline = train.at(static_cast<std::size_t>(u - l_tgr - 1), c);
    double d = 0.0;
    for (int i = 0; i < l_ptn; ++i)
      d += std::abs(train.at(static_cast<std::size_t>(u + i), c) - (baseline + pattern[i]));
    if (d < best_d) {
      best_d = d;
      best_u = u;
    }
  }
  std::vector<double> g(l_tgr);
  for (int i = 0; i < l_tgr; ++i)
    g[i] = train.at(static_cast<std::size_t>(best_u - l_tgr + i), c);
  return g;
}

PoisonRecord inject_train(TimeSeriesDataset& train, const PoisonSites& sites,
                          const Matrix& trigger_raw, const std::vector<double>& pattern,
                          const AttackSpec& spec) {
  const int l_tgr = spec.l_tgr;
  const auto l_ptn = static_cast<int>(pattern.size());
  if (trigger_raw.rows != static_cast<std::size_t>(l_tgr) ||
      trigger_raw.cols != sites.channels.size())
    throw Error(ErrorCode::invalid_argument, "trigger shape mismatch");

  PoisonRecord rec;
  rec.channels = sites.channels;
  rec.timestamps = sites.timestamps;
  rec.l_tgr = l_tgr;
  rec.l_ptn = l_ptn;
  rec.shape = spec.shape;
  rec.amplitude = spec.amplitude;
  rec.pattern = pattern;
  rec.train_len = train.rows();
  rec.num_channels = train.cols();

  for (int t : sites.timestamps) {
    if (t - l_tgr - 1 < 0 || static_cast<std::size_t>(t + l_ptn) > train.rows())
      throw Error(ErrorCode::invalid_argument,
                  "poison interval escapes training segment at t=" + std::to_string(t));
    for (int i = 0; i < l_tgr; ++i)
      for (std::size_t j = 0; j < sites.channels.size(); ++j)
        train.at(static_cast<std::size_t>(t - l_tgr + i), sites.channels[j]) = trigger_raw.at(i, j);
    for (std::size_t j = 0; j < sites.channels.size(); ++j) {
      const double baseline = train.at(static_cast<std::size_t>(t - l_tgr - 1), sites.channels[j]);
      for (int i = 0; i < l_ptn; ++i)
        train.at(static_cast<std::size_t>(t + i), sites.channels[j]) = baseline + pattern[i];
    }
    rec.triggers.push_back(trigger_raw);
    rec.intervals.emplace_back(t - l_tgr, t + l_ptn);
  }
  return rec;
}

void inject_test(Matrix& history, const Matrix& trigger_raw, const std::vector<int>& channels) {
  const auto l_tgr = trigger_raw.rows;
  if (l_tgr > history.rows)
    throw Error(ErrorCode::invalid_argument, "trigger longer than history");
  if (trigger_raw.cols != channels.size())
    throw Error(ErrorCode::invalid_argument, "trigger/channel count mismatch");
  const std::size_t offset = history.rows - l_tgr;
  for (std::size_t i = 0; i < l_tgr; ++i)
    for (std::size_t j = 0; j < channels.size(); ++j)
      history.at(offset + i, static_cast<std::size_t>(channels[j])) = trigger_raw.at(i, j);
}

Matrix target_for(const Matrix& history, const std::vector<double>& pattern,
                  const std::vector<int>& channels, int l_tgr) {
  if (static_cast<std::size_t>(l_tgr) + 1 > history.rows)
    throw Error(ErrorCode::invalid_argument, "history too short for baseline step");
  const std::size_t baseline_row = history.rows - l_tgr - 1;
  Matrix target(pattern.size(), channels.size());
  for (std::size_t j = 0; j < channels.size(); ++j) {
    const double baseline = history.at(baseline_row, static_cast<std::size_t>(channels[j]));
    for (std::size_t i = 0; i < pattern.size(); ++i) target.at(i, j) = baseline + pattern[i];
  }
  return target;
}

std::vector<WindowLabel> label_windows(const PoisonRecord& record, const std::vector<int>& anchors,
                                       const WindowSpec& spec) {
  const std::size_t n = anchors.size();
  const std::size_t c = record.num_channels;
  std::vector<WindowLabel> labels(n * c, WindowLabel::clean);

  std::vector<bool> attacked(c, false);
  for (int ch : record.channels) attacked[static_cast<std::size_t>(ch)] = true;
  std::vector<bool> is_anchor_site(record.train_len + 1, false);
  for (int t : record.timestamps) is_anchor_site[static_cast<std::size_t>(t)] = true;

  for (std::size_t i = 0; i < n; ++i) {
    const int t = anchors[i];
    const int w_begin = t - spec.l_in;
    const int w_end = t + spec.l_out;
    bool overlaps = false;
    for (const auto& [b, e] : record.intervals) {
      if (w_begin < e && b < w_end) {
        overlaps = true;
        break;
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      if (!attacked[ch]) continue;
      if (is_anchor_site[static_cast<std::size_t>(t)])
        labels[i * c + ch] = WindowLabel::trigger_poisoned;
      else if (overlaps)
        labels[i * c + ch] = WindowLabel::affected;
    }
  }
  return labels;
}

const Matrix& PoisonRecord::trigger_for_test() const {
  if (triggers.empty()) throw Error(ErrorCode::invalid_argument, "record has no triggers");
  return triggers.front();
}

std::string PoisonRecord::to_json_string() const {
  nlohmann::ordered_json j;
  j["channels"] = channels;
  j["timestamps"] = timestamps;
  j["l_tgr"] = l_tgr;
  j["l_ptn"] = l_ptn;
  j["template"] = {{"shape", to_string(shape)}, {"amplitude", amplitude}, {"values", pattern}};
  nlohmann::ordered_json trig = nlohmann::ordered_json::array();
  for (const auto& g : triggers) trig.push_back(g.data);
  j["triggers"] = trig;
  nlohmann::ordered_json iv = nlohmann::ordered_json::array();
  for (const auto& [b, e] : intervals) iv.push_back({b, e});
  j["intervals"] = iv;
  j["train_len"] = train_len;
  j["num_channels"] = num_channels;
  return j.dump(2);
}

PoisonRecord PoisonRecord::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::parse, std::string("poison record parse error: ") + e.what());
  }
  PoisonRecord rec;
  rec.channels = j.at("channels").get<std::vector<int>>();
  rec.timestamps = j.at("timestamps").get<std::vector<int>>();
  rec.l_tgr = j.at("l_tgr").get<int>();
  rec.l_ptn = j.at("l_ptn").get<int>();
  rec.shape = pattern_shape_from_string(j.at("template").at("shape").get<std::string>());
  rec.amplitude = j.at("template").at("amplitude").get<double>();
  rec.pattern = j.at("template").at("values").get<std::vector<double>>();
  for (const auto& t : j.at("triggers")) {
    Matrix g(static_cast<std::size_t>(rec.l_tgr), rec.channels.size());
    g.data = t.get<std::vector<double>>();
    if (g.data.size() != g.rows * g.cols)
      throw Error(ErrorCode::parse, "trigger size mismatch in poison record");
    rec.triggers.push_back(std::move(g));
  }
  for (const auto& iv : j.at("intervals"))
    rec.intervals.emplace_back(iv.at(0).get<int>(), iv.at(1).get<int>());
  rec.train_len = j.at("train_len").get<std::size_t>();
  rec.num_channels = j.at("num_channels").get<std::size_t>();
  return rec;
}

void PoisonRecord::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << to_json_string() << '\n';
}

PoisonRecord PoisonRecord::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace tsflab
