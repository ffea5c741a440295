#pragma once

#include "sdhp/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace sdhp {

/// Explicit parameters of one generated pattern.
struct PatternParams {
  std::vector<double> theta;  // word distribution, length V
  Vec2 center;                // R_s
  double sigma{0.1};          // spatial scale σ_s
  TimeKernel kernel;
};

struct SynthConfig {
  Hyperparams hyper;
  std::size_t n_posts{1000};
  std::size_t n_words{7};
  // Fixed spatial scale for every pattern; when unset σ_s² is drawn from
  // Inv-Ga(1, β_space⁻¹).
  std::optional<double> sigma0{0.1};
  bool unit_square{true};
  std::uint64_t seed{1};
  // Fixed self-excitation for every pattern instead of a Ga(α_time, β_time)
  // draw. Zero gives a homogeneous Poisson stream of singleton patterns.
  std::optional<double> alpha_override;

  void validate() const;
};

/// Sampler state: realized patterns and their decay caches.
class GeneratorState {
 public:
  [[nodiscard]] double last_time() const { return last_time_; }
  [[nodiscard]] std::size_t n_events() const { return n_events_; }
  [[nodiscard]] const std::vector<PatternParams>& patterns() const { return patterns_; }
  /// Patterns with non-negligible intensity, in creation order.
  [[nodiscard]] const std::vector<PatternId>& live() const { return live_; }

  /// λ(t) = λ₀ + Σ_s λ_s(t) for t ≥ last_time().
  [[nodiscard]] double intensity(double t, double lambda0) const;
  /// λ_s(t) for one pattern.
  [[nodiscard]] double pattern_intensity(PatternId s, double t) const;

  PatternId add_pattern(PatternParams params);
  void record_event(PatternId s, double t);

 private:
  std::vector<PatternParams> patterns_;
  std::vector<double> decay_;  // Σ_i exp(−(t_ref − t_i)/τ_s) at t_ref
  std::vector<double> t_ref_;
  std::vector<PatternId> live_;  // patterns whose intensity is not yet negligible
  double last_time_{0.0};
  std::size_t n_events_{0};
};

struct ThinningStats {
  std::size_t proposals{0};
  double max_acceptance_ratio{0.0};
};

/// Next event time by Ogata thinning, using λ(t_{n−1}⁺) as the dominating
/// rate (exponential kernels only decay between events) and tightening the
/// bound after each rejection.
[[nodiscard]] double sample_event_time(const GeneratorState& state, const Hyperparams& hyper,
                                       std::mt19937_64& rng, ThinningStats* stats = nullptr);

/// Draws fresh pattern parameters from the priors (σ₀ override honoured).
[[nodiscard]] PatternParams sample_pattern_params(const SynthConfig& config, std::mt19937_64& rng);

/// New pattern with probability λ₀/λ(t), existing k with λ_k(t)/λ(t). A new
/// pattern's parameters are drawn and appended to `state`.
PatternId sample_assignment(GeneratorState& state, double t, const SynthConfig& config, std::mt19937_64& rng);

/// n_words iid words from θ and an isotropic normal location, redrawn until
/// inside [0,1]² when unit_square is set. Throws DataError after 10⁶ rejections.
[[nodiscard]] GeoPost emit_post(const PatternParams& params, PatternId label, double t, const SynthConfig& config,
                                std::mt19937_64& rng);

struct SyntheticDataset {
  std::vector<GeoPost> posts;
  std::vector<PatternParams> patterns;  // indexed by true label
  std::vector<double> intensity_trace;  // λ(t_n) seen by the sampler just before post n
  ThinningStats thinning;
};

[[nodiscard]] SyntheticDataset generate(const SynthConfig& config);

}  // namespace sdhp
