#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsflab/series.hpp"

namespace tsflab {

enum class PatternShape { cone, up_trend, up_and_down };
enum class TriggerKind { random, manhattan };

std::string to_string(PatternShape s);
std::string to_string(TriggerKind k);
PatternShape pattern_shape_from_string(const std::string& s);
TriggerKind trigger_kind_from_string(const std::string& s);

struct AttackSpec {
  double eta_t = 0.03;        // temporal injection rate
  double eta_s = 0.3;         // spatial injection rate
  int l_tgr = 12;             // trigger length
  int l_ptn = 12;             // pattern length
  double delta_tgr = 1.0;     // trigger amplitude budget, in per-channel std units
  PatternShape shape = PatternShape::cone;
  TriggerKind trigger_kind = TriggerKind::random;
  double amplitude = 1.0;     // pattern scale, data units
  std::uint64_t seed = 0;

  void validate(const WindowSpec& window) const;

  // Clamp l_tgr so the baseline step stays inside the history window and
  // l_ptn to the horizon. Returns true if anything changed.
  bool truncate_to_fit(const WindowSpec& window);
};

struct PoisonSites {
  std::vector<int> timestamps;  // ascending anchors t; interval [t-l_tgr, t+l_ptn)
  std::vector<int> channels;    // ascending attacked channel set S
};

enum class WindowLabel : std::uint8_t { clean = 0, trigger_poisoned = 1, affected = 2 };

struct PoisonRecord {
  std::vector<int> channels;      // S, ascending
  std::vector<int> timestamps;    // T_atk, ascending
  int l_tgr = 0;
  int l_ptn = 0;
  PatternShape shape = PatternShape::cone;
  double amplitude = 0.0;
  std::vector<double> pattern;            // template column, length l_ptn
  std::vector<Matrix> triggers;           // per site, l_tgr x |S| raw values
  std::vector<std::pair<int, int>> intervals;  // overwritten [begin, end) per site
  std::size_t train_len = 0;
  std::size_t num_channels = 0;

  const Matrix& trigger_for_test() const;  // the shared trigger (first site)
  std::string to_json_string() const;
  static PoisonRecord from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static PoisonRecord load(const std::string& path);
};

// Single template column; broadcast across attacked channels at injection.
// All shapes start at 0. cone peaks at amplitude at step floor(l_ptn/2) and
// returns to 0; up_trend ramps linearly to amplitude; up_and_down rises to
// amplitude at floor(l_ptn/2), dips to -amplitude/2 at floor(3*l_ptn/4), and
// ends at 0.
std::vector<double> make_pattern_template(PatternShape shape, int l_ptn, double amplitude);

// Sites: ceil(eta_t * t_train) anchors whose intervals [t-l_tgr, t+l_ptn) are
// pairwise disjoint and lie inside [0, t_train), with the baseline step
// t-l_tgr-1 >= 0. Channels: ceil(eta_s * c) drawn uniformly without
// replacement. Placement samples a uniform feasible configuration directly,
// so it succeeds whenever the requested density fits.
PoisonSites select_poison_sites(std::size_t t_train, std::size_t c, const AttackSpec& spec);

// Fixed trigger in normalized units, entries ~ U[-delta, delta], shared by
// all poisoned timestamps.
Matrix random_trigger(const AttackSpec& spec, std::size_t n_channels);

// Rescale a normalized trigger to raw data units with per-channel training
// statistics: raw = mean + u * std.
Matrix scale_trigger(const Matrix& normalized, const std::vector<double>& mean,
                     const std::vector<double>& stddev, const std::vector<int>& channels);

// Scan channel c of the training segment for the length-l_ptn run closest
// (L1) to baseline+pattern; return the preceding l_tgr raw values. Ties break
// toward the earliest position.
std::vector<double> manhattan_trigger(const TimeSeriesDataset& train, const std::vector<double>& pattern,
                                      int l_tgr, int c);

// Overwrite triggers and baseline+pattern futures at every site, in ascending
// site order, and record every touched cell. `trigger_raw` is l_tgr x |S|.
PoisonRecord inject_train(TimeSeriesDataset& train, const PoisonSites& sites,
                          const Matrix& trigger_raw, const std::vector<double>& pattern,
                          const AttackSpec& spec);

// Overwrite the last l_tgr history rows on the attacked channels.
void inject_test(Matrix& history, const Matrix& trigger_raw, const std::vector<int>& channels);

// Attacker target: baseline (history value just before the trigger span,
// per channel) plus the pattern, l_ptn x |S|.
Matrix target_for(const Matrix& history, const std::vector<double>& pattern,
                  const std::vector<int>& channels, int l_tgr);

// Per (window, channel) labels over the training segment's windows.
// trigger_poisoned: anchor in T_atk on an attacked channel; affected: window
// overlaps an overwritten interval on an attacked channel without being an
// anchor; clean otherwise. Row-major N x C.
std::vector<WindowLabel> label_windows(const PoisonRecord& record, const std::vector<int>& anchors,
                                       const WindowSpec& spec);

}  // namespace tsflab
