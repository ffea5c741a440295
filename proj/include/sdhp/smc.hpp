#pragma once

#include "sdhp/hawkes.hpp"
#include "sdhp/particle.hpp"
#include "sdhp/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace sdhp {

enum class RefitMode {
  all_patterns,   // every pattern with ≥ 2 posts, every step
  assigned_only,  // only the pattern that received the post (approximation)
  none,
};

enum class KernelInit {
  prior_mean,  // α = α_time/β_time, τ = min Ψ_τ
  prior_draw,  // α ~ Ga(α_time, β_time), τ ~ Uniform(Ψ_τ), from the particle's stream
};

struct EngineOptions {
  // false drops the spatial factor from proposal and weights (DHP).
  bool use_spatial{true};
  RefitMode refit{RefitMode::all_patterns};
  KernelInit kernel_init{KernelInit::prior_mean};
  // Every pattern uses this kernel and is never refit. Its τ must be in Ψ_τ.
  std::optional<TimeKernel> fixed_kernel;
  // Drop patterns whose bound α_s N_s e^{−Δt/τ_s} falls below
  // prune_epsilon·λ₀ from the candidate and intensity sums.
  bool prune{false};
  double prune_epsilon{1e-12};
  int threads{1};
};

/// Normalized proposal over the active patterns plus "new" (last entry).
struct Proposal {
  std::vector<PatternId> candidates;
  std::vector<double> probs;
  double log_q{0.0};            // log Σ_s p(s|·) p(d|·) p(r|·) before normalization
  double total_intensity{0.0};  // λ(t_n)
};

[[nodiscard]] Proposal proposal_distribution(const Particle& particle, const GeoPost& post, const DocCounts& doc,
                                             const Hyperparams& hyper, bool use_spatial = true);

/// log p(t_n | s_<n, t_<n) = log λ(t_n) − ∫_{t_{n−1}}^{t_n} λ(u) du, where
/// t_{n−1} is the particle's last processed time (0 before the first post).
[[nodiscard]] double log_temporal_density(const Particle& particle, double t, const Hyperparams& hyper);

/// log of p(t_n | ·) · Q_n.
[[nodiscard]] double log_incremental_weight(const Particle& particle, const GeoPost& post, double log_q,
                                            const Hyperparams& hyper);
[[nodiscard]] double incremental_weight(const Particle& particle, const GeoPost& post, double log_q,
                                        const Hyperparams& hyper);

/// 1 / Σ w_i².
[[nodiscard]] double ess(std::span<const double> weights);

/// Ancestor index for each of the weights.size() offspring, given the single
/// uniform offset u ∈ [0, 1). Offspring counts are ⌊P w_i⌋ or ⌈P w_i⌉.
[[nodiscard]] std::vector<std::size_t> systematic_resample_indices(std::span<const double> weights, double u);

/// Initial kernel for a freshly created pattern.
[[nodiscard]] TimeKernel initial_kernel(const Hyperparams& hyper, const EngineOptions& options,
                                        std::mt19937_64& rng);

/// The particle cloud of the online sampler.
class ParticleSystem {
 public:
  ParticleSystem(Hyperparams hyper, EngineOptions options = {}, std::uint64_t seed = 1);

  /// Processes one post: propose, weight, attach, refit, normalize, and
  /// resample when ESS < κ_thresh·|P|. Throws StreamOrderError on a post
  /// earlier than the previous one.
  void step(const GeoPost& post);

  /// Systematic resampling with the system's own stream.
  void resample();

  [[nodiscard]] std::size_t steps() const { return steps_; }
  [[nodiscard]] double last_time() const { return last_time_; }
  [[nodiscard]] std::size_t resample_count() const { return resamples_; }
  [[nodiscard]] const Hyperparams& hyper() const { return hyper_; }
  [[nodiscard]] const EngineOptions& options() const { return options_; }
  [[nodiscard]] std::span<const Particle> particles() const { return particles_; }
  [[nodiscard]] std::vector<double> weights() const;

  /// Index of the highest-weight particle (lowest index on ties).
  [[nodiscard]] std::size_t heaviest_particle() const;

  /// Approximate MAP: particles with identical assignment histories pool
  /// their weight, and the history with the largest pooled weight wins
  /// (ties to the lowest particle index). With distinct histories this is the
  /// highest-weight particle.
  [[nodiscard]] std::size_t map_particle() const;
  [[nodiscard]] ClusteringResult map_estimate() const;

  /// Result for one particle.
  [[nodiscard]] ClusteringResult result_for(std::size_t particle_index) const;

  void save(std::ostream& out) const;
  [[nodiscard]] static ParticleSystem load(std::istream& in);

 private:
  ParticleSystem() = default;
  void advance(Particle& particle, const GeoPost& post, const DocCounts& doc) const;
  void normalize();

  Hyperparams hyper_;
  EngineOptions options_;
  std::shared_ptr<const std::vector<double>> taus_;
  std::vector<Particle> particles_;
  std::mt19937_64 rng_;
  std::size_t steps_{0};
  std::size_t resamples_{0};
  double last_time_{0.0};
};

/// Runs a whole stream through a fresh system.
[[nodiscard]] ParticleSystem run_sdhp(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                      const EngineOptions& options = {}, std::uint64_t seed = 1);

}  // namespace sdhp
