#include "sdhp/pattern_stats.hpp"

#include "sdhp/error.hpp"
#include "sdhp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdhp {

std::vector<std::pair<WordId, std::uint32_t>> WordCounts::top(std::size_t k) const {
  std::vector<std::pair<WordId, std::uint32_t>> all(counts_.begin(), counts_.end());
  std::erase_if(all, [](const auto& p) { return p.second == 0; });
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  all.resize(n);
  return all;
}

PatternStats::PatternStats(std::shared_ptr<const std::vector<double>> taus)
    : taus_(std::move(taus)), decay_(taus_->size(), 0.0), log_excitation_(taus_->size(), 0.0) {}

std::size_t PatternStats::tau_slot(double tau) const {
  for (std::size_t k = 0; k < taus_->size(); ++k)
    if ((*taus_)[k] == tau) return k;
  throw ValidationError("time constant " + std::to_string(tau) + " is not in the allowed set");
}

double PatternStats::decay_sum(std::size_t slot, double t) const {
  if (empty()) return 0.0;
  return decay_[slot] * std::exp(-(t - t_ref_) / (*taus_)[slot]);
}

double PatternStats::log_decay_sum(std::size_t slot, double t) const {
  if (empty()) return -INFINITY;
  return std::log(decay_[slot]) - (t - t_ref_) / (*taus_)[slot];
}

void PatternStats::attach(const GeoPost& post, const DocCounts& doc) {
  if (!empty() && post.t < t_ref_)
    throw StreamOrderError("post at t=" + std::to_string(post.t) +
                           " precedes the pattern's last event at t=" + std::to_string(t_ref_));
  const bool first = empty();
  for (std::size_t k = 0; k < taus_->size(); ++k) {
    if (first) {
      decay_[k] = 1.0;
    } else {
      log_excitation_[k] += log_decay_sum(k, post.t);
      decay_[k] = decay_sum(k, post.t) + 1.0;
    }
  }
  t_ref_ = post.t;
  event_times_.push_back(post.t);
  words_.add(doc);
  if (!post.location_hidden) spatial_.add(post.r);
}

PatternStats::RawState PatternStats::raw_state() const {
  return {event_times_.to_vector(), decay_, log_excitation_, t_ref_, words_, spatial_};
}

PatternStats PatternStats::from_raw(std::shared_ptr<const std::vector<double>> taus, RawState state) {
  PatternStats s(std::move(taus));
  if (state.decay.size() != s.taus_->size() || state.log_excitation.size() != s.taus_->size())
    throw DataError("pattern state does not match the time-constant grid");
  for (double t : state.event_times) s.event_times_.push_back(t);
  s.decay_ = std::move(state.decay);
  s.log_excitation_ = std::move(state.log_excitation);
  s.t_ref_ = state.t_ref;
  s.words_ = std::move(state.words);
  s.spatial_ = state.spatial;
  return s;
}

PatternStats attach_post(PatternStats stats, const GeoPost& post) {
  stats.attach(post, DocCounts::from_words(post.words));
  return stats;
}

PatternSummary pattern_summary(const PatternStats& stats, const TimeKernel& kernel, double beta_space,
                               std::size_t top_k) {
  if (stats.empty()) throw ValidationError("cannot summarize an empty pattern");
  PatternSummary s;
  s.size = stats.n_posts();
  s.n_located = stats.spatial().n;
  if (s.n_located > 0) {
    s.mean = spatial_point_estimate(stats);
    s.scale = spatial_scale_estimate(stats, beta_space);
  }
  s.top_words = stats.words().top(top_k);
  s.kernel = kernel;
  s.first_time = stats.first_time();
  s.last_time = stats.last_time();
  s.time_span = s.last_time - s.first_time;
  s.event_times = stats.event_times().to_vector();
  return s;
}

}  // namespace sdhp
