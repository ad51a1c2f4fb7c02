#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsflab/series.hpp"

namespace tsflab {

// Gaussian window over the full [history; future] index range, centered on
// the first future step (index l_in) so the transition region dominates.
struct GaussianWeights {
  std::vector<double> w;  // length l_in + l_out
  int center = 0;         // == l_in
  double sigma = 2.0;
};

GaussianWeights gaussian_weights(int l_in, int l_out, double sigma);

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // a zero weighted-variance window was involved
};

// Weighted Pearson correlation of two full windows. A constant window under
// the weights has no defined correlation; by convention it gets r = -1
// (maximal distance) and the degenerate flag.
PearsonResult weighted_pearson(std::span<const double> x, std::span<const double> y,
                               const GaussianWeights& w);

// d = 1 - r, in [0, 2].
double neighbor_distance(std::span<const double> x, std::span<const double> y,
                         const GaussianWeights& w);

struct Neighbor {
  std::uint32_t index;
  double dist;
};

// Per-channel, per-window sorted top-k_max neighbor lists under the weighted
// correlation distance. Built once, reused for every later selection pass.
class NeighborCache {
 public:
  NeighborCache() = default;
  NeighborCache(std::size_t windows, std::size_t channels, int k_max)
      : windows_(windows), channels_(channels), k_max_(k_max),
        entries_(windows * channels * static_cast<std::size_t>(k_max)),
        degenerate_(windows * channels, 0) {}

  std::size_t windows() const { return windows_; }
  std::size_t channels() const { return channels_; }
  int k_max() const { return k_max_; }

  std::span<const Neighbor> row(std::size_t channel, std::size_t window) const {
    return {entries_.data() + (channel * windows_ + window) * static_cast<std::size_t>(k_max_),
            static_cast<std::size_t>(k_max_)};
  }
  std::span<Neighbor> row_mut(std::size_t channel, std::size_t window) {
    return {entries_.data() + (channel * windows_ + window) * static_cast<std::size_t>(k_max_),
            static_cast<std::size_t>(k_max_)};
  }
  bool is_degenerate(std::size_t channel, std::size_t window) const {
    return degenerate_[channel * windows_ + window] != 0;
  }
  void set_degenerate(std::size_t channel, std::size_t window) {
    degenerate_[channel * windows_ + window] = 1;
  }

 private:
  std::size_t windows_ = 0;
  std::size_t channels_ = 0;
  int k_max_ = 0;
  std::vector<Neighbor> entries_;
  std::vector<std::uint8_t> degenerate_;
};

// Exhaustive pairwise build. Requires at least k_max + 1 windows. Ties break
// toward the smaller window index; self is excluded.
NeighborCache build_cache(const TimeSeriesDataset& segment, const std::vector<int>& anchors,
                          const WindowSpec& spec, const GaussianWeights& weights, int k_max);

// Mean distance to the K nearest cached neighbors of `window` that belong to
// `pool` (bit per window). Falls back to fewer than K members when the pool
// is thin, and to the unrestricted top-K when no cached neighbor is in the
// pool at all.
double neighborhood_score(const NeighborCache& cache, std::size_t channel, std::size_t window,
                          const std::vector<std::uint8_t>& pool, int k);

// Scores for every window of one channel against the same pool.
std::vector<double> neighborhood_scores(const NeighborCache& cache, std::size_t channel,
                                        const std::vector<std::uint8_t>& pool, int k);

}  // namespace tsflab
