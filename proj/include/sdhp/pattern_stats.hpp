#pragma once

#include "sdhp/shared_log.hpp"
#include "sdhp/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sdhp {

/// Per-pattern word histogram C_v^s and its total C^s.
class WordCounts {
 public:
  [[nodiscard]] std::uint32_t count(WordId w) const {
    auto it = counts_.find(w);
    return it == counts_.end() ? 0u : it->second;
  }
  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] const std::unordered_map<WordId, std::uint32_t>& map() const { return counts_; }

  void add(const DocCounts& doc) {
    for (const auto& [w, c] : doc.counts) counts_[w] += c;
    total_ += doc.total;
  }
  void set(WordId w, std::uint32_t c) {
    auto& slot = counts_[w];
    total_ = total_ - slot + c;
    slot = c;
  }

  /// The k most frequent words, ties broken by ascending id.
  [[nodiscard]] std::vector<std::pair<WordId, std::uint32_t>> top(std::size_t k) const;

 private:
  std::unordered_map<WordId, std::uint32_t> counts_;
  std::uint64_t total_{0};
};

/// Spatial sufficient statistics of the located members of a pattern.
/// Keeps the raw sums and a Welford-style centered sum of squares; the latter
/// is what the likelihood uses, since raw sums cancel badly for metre-scale
/// coordinates far from the origin.
struct SpatialStats {
  std::size_t n{0};
  Vec2 sum;
  double sum_sq{0.0};   // Σ ‖r_i‖²
  Vec2 mean;
  double centered{0.0};  // Σ ‖r_i − mean‖²

  void add(Vec2 r) {
    ++n;
    sum += r;
    sum_sq += r.norm2();
    const Vec2 delta = r - mean;
    mean += delta / static_cast<double>(n);
    const Vec2 delta2 = r - mean;
    centered += delta.x * delta2.x + delta.y * delta2.y;
  }
};

/// All sufficient statistics of one latent pattern. The temporal part keeps,
/// for every τ in Ψ_τ, the running value S_τ(t_ref) = Σ_i exp(−(t_ref − t_i)/τ)
/// at the most recent event time t_ref, and the accumulated
/// Σ_{i≥2} log Σ_{j<i} exp(−(t_i − t_j)/τ) needed by the kernel likelihood.
class PatternStats {
 public:
  explicit PatternStats(std::shared_ptr<const std::vector<double>> taus);

  /// Adds a post. Throws StreamOrderError if post.t precedes the last event.
  void attach(const GeoPost& post, const DocCounts& doc);

  [[nodiscard]] std::size_t n_posts() const { return event_times_.size(); }
  [[nodiscard]] bool empty() const { return event_times_.empty(); }
  [[nodiscard]] const WordCounts& words() const { return words_; }
  [[nodiscard]] const SpatialStats& spatial() const { return spatial_; }
  [[nodiscard]] const SharedLog<double>& event_times() const { return event_times_; }
  [[nodiscard]] double first_time() const { return event_times_.front(); }
  [[nodiscard]] double last_time() const { return event_times_.back(); }

  [[nodiscard]] const std::vector<double>& taus() const { return *taus_; }
  [[nodiscard]] std::size_t tau_slot(double tau) const;  // throws if tau ∉ Ψ_τ
  [[nodiscard]] double reference_time() const { return t_ref_; }
  [[nodiscard]] double decay_value(std::size_t slot) const { return decay_[slot]; }
  [[nodiscard]] double log_excitation(std::size_t slot) const { return log_excitation_[slot]; }

  /// Σ_i exp(−(t − t_i)/τ) for t ≥ last event time, in O(1).
  [[nodiscard]] double decay_sum(std::size_t slot, double t) const;
  /// log of decay_sum, exact even when decay_sum underflows.
  [[nodiscard]] double log_decay_sum(std::size_t slot, double t) const;

  // Checkpoint restore only: overwrite the cached temporal state.
  struct RawState {
    std::vector<double> event_times;
    std::vector<double> decay;
    std::vector<double> log_excitation;
    double t_ref;
    WordCounts words;
    SpatialStats spatial;
  };
  [[nodiscard]] RawState raw_state() const;
  static PatternStats from_raw(std::shared_ptr<const std::vector<double>> taus, RawState state);

 private:
  std::shared_ptr<const std::vector<double>> taus_;
  WordCounts words_;
  SpatialStats spatial_;
  SharedLog<double> event_times_;
  double t_ref_{0.0};
  std::vector<double> decay_;
  std::vector<double> log_excitation_;
};

/// Value-returning form of PatternStats::attach.
[[nodiscard]] PatternStats attach_post(PatternStats stats, const GeoPost& post);

struct PatternSummary {
  PatternId label{0};
  std::size_t size{0};
  std::size_t n_located{0};
  std::optional<Vec2> mean;         // empty when every member's location is hidden
  std::optional<double> scale;      // σ̂_s
  std::vector<std::pair<WordId, std::uint32_t>> top_words;
  TimeKernel kernel;
  double first_time{0.0};
  double last_time{0.0};
  double time_span{0.0};
  std::vector<double> event_times;
};

/// Throws ValidationError on an empty pattern.
[[nodiscard]] PatternSummary pattern_summary(const PatternStats& stats, const TimeKernel& kernel,
                                             double beta_space, std::size_t top_k = 10);

}  // namespace sdhp
