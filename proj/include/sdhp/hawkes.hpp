#pragma once

#include "sdhp/particle.hpp"
#include "sdhp/pattern_stats.hpp"
#include "sdhp/types.hpp"

#include <vector>

namespace sdhp {

/// α·exp(−dt/τ). Throws ValidationError for dt < 0.
[[nodiscard]] double kernel_eval(const TimeKernel& kernel, double dt);

/// λ_s(t) = α_s Σ_i exp(−(t − t_i)/τ_s), from the decay cache.
/// Throws StreamOrderError if t precedes the pattern's last event.
[[nodiscard]] double pattern_intensity(const PatternStats& stats, const TimeKernel& kernel, double t);

/// λ(t) = λ₀ + Σ_s λ_s(t) over the particle's active patterns.
[[nodiscard]] double total_intensity(const Particle& particle, const Hyperparams& hyper, double t);

struct AssignmentPrior {
  std::vector<PatternId> candidates;  // existing patterns; "new" is implicit and last
  std::vector<double> probs;          // size candidates.size() + 1
  std::vector<double> intensities;    // λ_k(t) per candidate
  double total{0.0};                  // λ(t)
};

/// p(s_n | s_<n, t_≤n): λ_k(t)/λ(t) for existing k, λ₀/λ(t) for a new pattern.
[[nodiscard]] AssignmentPrior assignment_prior(const Particle& particle, const Hyperparams& hyper, double t);

/// ∫_{t0}^{t1} λ_s(u) du. t1 may be +∞.
[[nodiscard]] double compensator(const PatternStats& stats, const TimeKernel& kernel, double t0, double t1);

struct AlphaFit {
  double alpha{0.0};
  double objective{0.0};
};

/// Floor applied when the closed-form numerator is not positive.
inline constexpr double kAlphaFloor = 1e-8;

/// Maximizes log Ga(α | α_time, β_time) + log p(T_s | α, τ) over α for a fixed
/// τ ∈ Ψ_τ, where the pattern likelihood counts every event after the first
/// as triggered by its predecessors and integrates the pattern intensity up
/// to t_now. Closed form α̂ = (N_s − 2 + α_time) / (β_time + B),
/// B = τ Σ_i (1 − exp(−(t_now − t_i)/τ)).
[[nodiscard]] AlphaFit alpha_map(const PatternStats& stats, double tau, double t_now, const Hyperparams& hyper);

/// The objective of alpha_map at an arbitrary α (exposed for grid checks).
[[nodiscard]] double alpha_objective(const PatternStats& stats, double alpha, double tau, double t_now,
                                     const Hyperparams& hyper);

/// Best (α̂(τ), τ) over Ψ_τ; ties go to the smaller τ.
[[nodiscard]] TimeKernel fit_time_kernel(const PatternStats& stats, double t_now, const Hyperparams& hyper);

}  // namespace sdhp
