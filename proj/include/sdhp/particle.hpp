#pragma once

#include "sdhp/pattern_stats.hpp"
#include "sdhp/shared_log.hpp"
#include "sdhp/types.hpp"

#include <memory>
#include <random>
#include <vector>

namespace sdhp {

/// One SMC hypothesis. Pattern statistics and kernels are held copy-on-write
/// so that resampled offspring share everything they have not changed since.
struct Particle {
  SharedLog<PatternId> assignments;
  SharedVector<std::shared_ptr<PatternStats>> patterns;
  SharedVector<TimeKernel> kernels;
  std::vector<PatternId> active;  // candidates for new posts; all patterns unless pruned
  double weight{1.0};
  double log_weight{0.0};
  double last_time{0.0};  // time of the last processed post
  std::mt19937_64 rng;

  [[nodiscard]] std::size_t pattern_count() const { return patterns.size(); }
  [[nodiscard]] std::size_t n_processed() const { return assignments.size(); }
  [[nodiscard]] const PatternStats& pattern(PatternId k) const { return *patterns[k]; }

  /// Unshares pattern k if another particle still references it.
  PatternStats& mutable_pattern(PatternId k) {
    auto& slot = patterns.mutate(k);
    if (slot.use_count() > 1) slot = std::make_shared<PatternStats>(*slot);
    return *slot;
  }
};

/// MAP output of an inference run.
struct ClusteringResult {
  std::vector<PatternId> assignments;
  std::vector<PatternSummary> patterns;  // indexed by label
  std::vector<double> weights;           // final particle weights
  std::size_t particle_index{0};
};

}  // namespace sdhp
