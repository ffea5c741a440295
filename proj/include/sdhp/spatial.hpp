#pragma once

#include "sdhp/pattern_stats.hpp"
#include "sdhp/types.hpp"

namespace sdhp {

/// ξ = β_space + ½ Σ‖r_i − r̄‖². Requires stats.n ≥ 1.
[[nodiscard]] double spatial_xi(const SpatialStats& stats, double beta_space);

/// Log posterior predictive density of `query` under an isotropic Gaussian
/// with flat mean prior and Inv-Ga(1, β_space⁻¹) variance prior, both
/// integrated out:
///
///   N²/(2π(1+N)) · ξ⁻¹ · (1 + Δ/ξ)^−(1+N),  Δ = N/(2(N+1)) ‖query − r̄‖².
///
/// An empty pattern has density 1 by convention (log 0), so the score of a
/// new pattern does not depend on location.
[[nodiscard]] double spatial_log_marginal(const SpatialStats& stats, double beta_space, Vec2 query);

/// Mean of the located members. Throws ValidationError if there are none.
[[nodiscard]] Vec2 spatial_point_estimate(const PatternStats& stats);

/// σ̂_s = sqrt(ξ / N_s). Throws ValidationError if no member is located.
[[nodiscard]] double spatial_scale_estimate(const PatternStats& stats, double beta_space);

}  // namespace sdhp
