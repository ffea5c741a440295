#pragma once

#include "sdhp/baselines.hpp"
#include "sdhp/generative.hpp"
#include "sdhp/particle.hpp"
#include "sdhp/smc.hpp"
#include "sdhp/types.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sdhp {

// ---------------------------------------------------------------------------
// Partition and parameter metrics

enum class NmiNormalization { arithmetic, geometric, max };

/// Normalized mutual information of two labelings of the same items.
/// Two single-cluster labelings score 1. Throws ValidationError on empty or
/// unequal-length input.
[[nodiscard]] double nmi(std::span<const PatternId> labels_true, std::span<const PatternId> labels_pred,
                         NmiNormalization norm = NmiNormalization::arithmetic);

/// δ_α = |α − α̂| / (|α + α̂| / 2).
[[nodiscard]] double alpha_precision(double alpha_true, double alpha_hat);

struct AlphaPrecisionRecord {
  PatternId inferred_label{0};
  PatternId true_label{0};  // majority true label among the members
  std::size_t size{0};
  double alpha_true{0.0};
  double alpha_hat{0.0};
  double delta{0.0};
};

/// δ_α for every inferred pattern with ≥ 2 posts, matched to the true pattern
/// holding the majority of its posts.
[[nodiscard]] std::vector<AlphaPrecisionRecord> alpha_precision_by_pattern(const ClusteringResult& result,
                                                                           std::span<const GeoPost> posts,
                                                                           std::span<const PatternParams> truth);

/// (t, λ_s(t)) on `grid`, by direct summation over the pattern's events ≤ t.
[[nodiscard]] std::vector<std::pair<double, double>> intensity_trace(const PatternSummary& pattern,
                                                                    std::span<const double> grid);

// ---------------------------------------------------------------------------
// Location prediction

struct PredictionRecord {
  std::size_t post_index{0};
  Vec2 predicted;
  Vec2 truth;
  std::size_t pattern_size{0};
  double sigma_hat{0.0};
  std::size_t trial{0};

  [[nodiscard]] double error() const { return std::sqrt((predicted - truth).norm2()); }
};

struct LocationProtocolConfig {
  std::size_t trials{100};
  double hide_fraction{0.02};
  double burn_in_fraction{0.2};
  EngineOptions engine;
  std::uint64_t seed{1};
};

/// Indices to hide in one trial: round(hide_fraction·N) posts drawn uniformly
/// without replacement from those after the burn-in prefix.
[[nodiscard]] std::vector<std::size_t> choose_hidden(std::size_t n_posts, double hide_fraction,
                                                     double burn_in_fraction, std::mt19937_64& rng);

/// One trial: hide the given posts, run inference, predict each hidden post
/// as the mean of the visible members of its MAP pattern.
[[nodiscard]] std::vector<PredictionRecord> prediction_trial(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                                             std::span<const std::size_t> hidden,
                                                             const EngineOptions& engine, std::uint64_t seed,
                                                             std::size_t trial);

/// Among several predictions of the same post keep the one from the tightest
/// pattern (lowest σ̂; earlier trial on ties). Output sorted by post index.
[[nodiscard]] std::vector<PredictionRecord> keep_tightest(std::span<const PredictionRecord> records);

/// All trials followed by keep_tightest. Throws ValidationError if the
/// dataset has no post after the burn-in prefix.
[[nodiscard]] std::vector<PredictionRecord> location_prediction_protocol(std::span<const GeoPost> posts,
                                                                         const Hyperparams& hyper,
                                                                         const LocationProtocolConfig& config);

enum class Selection { loose, tight };

[[nodiscard]] std::size_t selection_min_size(Selection s);

/// Records sorted by ascending σ̂ (ties: larger pattern first, then a seeded
/// shuffle), with those from patterns below the selection's size floor dropped.
[[nodiscard]] std::vector<PredictionRecord> select_records(std::span<const PredictionRecord> records, Selection s,
                                                           std::uint64_t seed = 1);

struct RmseResult {
  std::optional<double> normalized_rmse;  // empty: too few records survive
  std::size_t survivors{0};
  std::size_t used{0};
};

/// RMSE of the first ceil(4%) of select_records, divided by dataset_sigma.
[[nodiscard]] RmseResult rmse_selected(std::span<const PredictionRecord> records, Selection s, double dataset_sigma,
                                       std::uint64_t seed = 1);

/// sqrt(mean ‖r_i − r̄‖²) over all posts.
[[nodiscard]] double dataset_spatial_scale(std::span<const GeoPost> posts);

// ---------------------------------------------------------------------------
// Goodness of fit

/// A model that predicts each post from the ones before it.
class OneStepModel {
 public:
  virtual ~OneStepModel() = default;
  [[nodiscard]] virtual double log_location(const GeoPost& post) = 0;
  [[nodiscard]] virtual double log_content(const GeoPost& post) = 0;
  virtual void observe(const GeoPost& post) = 0;
};

/// Which quantities the assignment mixture conditions on, besides time.
enum class PredictiveConditioning {
  temporal_prior,  // p(s_n | s_<n, t_≤n) only
  cross_modal,     // also the other modality of post n (content for location, location for content)
};

/// One-step predictive of the sampler, from its MAP particle.
class SdhpOneStep final : public OneStepModel {
 public:
  SdhpOneStep(Hyperparams hyper, EngineOptions options, std::uint64_t seed,
              PredictiveConditioning conditioning = PredictiveConditioning::temporal_prior);
  double log_location(const GeoPost& post) override;
  double log_content(const GeoPost& post) override;
  void observe(const GeoPost& post) override;
  [[nodiscard]] const ParticleSystem& system() const { return system_; }
  /// Pattern count of the MAP particle after each observed post.
  [[nodiscard]] const std::vector<std::size_t>& pattern_counts() const { return counts_; }

 private:
  ParticleSystem system_;
  PredictiveConditioning conditioning_;
  std::vector<std::size_t> counts_;
};

/// GMM refit on the prefix at each step, with k from a schedule (k for the
/// prediction of post n is schedule[n − 1], 0-based n).
class GmmOneStep final : public OneStepModel {
 public:
  GmmOneStep(std::vector<std::size_t> k_schedule, double sigma2_min, std::uint64_t seed, EmOptions options = {});
  double log_location(const GeoPost& post) override;
  double log_content(const GeoPost& post) override;  // not a content model: throws
  void observe(const GeoPost& post) override;

 private:
  std::vector<std::size_t> schedule_;
  StreamingGmm gmm_;
  std::vector<Vec2> seen_;
};

/// Density 1 everywhere and 1/V per word.
class UniformOneStep final : public OneStepModel {
 public:
  explicit UniformOneStep(std::size_t vocab_size) : vocab_size_(vocab_size) {}
  double log_location(const GeoPost&) override { return 0.0; }
  double log_content(const GeoPost& post) override;
  void observe(const GeoPost&) override {}

 private:
  std::size_t vocab_size_;
};

struct GofWindow {
  std::size_t burn_in{500};  // posts 1..burn_in are never scored
  std::size_t end{2500};     // last scored post (1-based)
};

struct GofResult {
  double value{0.0};
  std::vector<std::size_t> evaluated;  // 0-based indices of scored posts
  std::size_t n_words{0};
};

/// Mean one-step-ahead spatial log predictive over posts burn_in+1..end.
/// Throws ValidationError if the stream is shorter than `end`.
[[nodiscard]] GofResult spatial_gof(std::span<const GeoPost> posts, OneStepModel& model, GofWindow window = {});

/// exp(−Σ log p(d_n | history) / total words) over posts burn_in+1..end.
[[nodiscard]] GofResult perplexity(std::span<const GeoPost> posts, OneStepModel& model, GofWindow window = {});

/// λ₀ for the DHP whose MAP pattern count on `prefix` comes closest to
/// `target_patterns`, by bisection in log λ₀.
[[nodiscard]] double tune_dhp_lambda0(std::span<const GeoPost> prefix, const Hyperparams& hyper,
                                      std::size_t target_patterns, const EngineOptions& options,
                                      std::uint64_t seed, std::size_t iterations = 30);

// ---------------------------------------------------------------------------
// Synthetic experiment helpers

struct MeanStderr {
  double mean{0.0};
  double stderr_{0.0};
  std::size_t n{0};
};

[[nodiscard]] MeanStderr mean_stderr(std::span<const double> values);

/// Labels of the posts as generated.
[[nodiscard]] std::vector<PatternId> true_labels(std::span<const GeoPost> posts);

/// Generates one dataset from `config` and returns the NMI of the MAP labels
/// of an inference run with `inference` hyperparameters.
[[nodiscard]] double synthetic_nmi_trial(const SynthConfig& config, const Hyperparams& inference,
                                         const EngineOptions& options, std::uint64_t inference_seed);

}  // namespace sdhp
