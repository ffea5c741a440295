#pragma once

#include "sdhp/pattern_stats.hpp"
#include "sdhp/types.hpp"

#include <cstddef>

namespace sdhp {

/// Thread-safe log Γ(x) for x > 0.
[[nodiscard]] double log_gamma(double x);

/// Collapsed Dirichlet-multinomial log marginal of `doc` given a pattern's
/// word counts (θ_s integrated out):
///
///   log Γ(C + Vθ₀) − log Γ(C + C^d + Vθ₀) + Σ_v [log Γ(C_v + C_v^d + θ₀) − log Γ(C_v + θ₀)]
///
/// Pass an empty WordCounts for the new-pattern case.
[[nodiscard]] double content_log_marginal(const WordCounts& pattern, const DocCounts& doc, double theta0,
                                          std::size_t vocab_size);

/// The same quantity by the chain rule of one-token predictives
/// (C_v + θ₀)/(C + Vθ₀), updating counts token by token. Independent route
/// used to cross-check content_log_marginal.
[[nodiscard]] double sequential_predictive_oracle(const WordCounts& pattern, const DocCounts& doc,
                                                  double theta0, std::size_t vocab_size);

}  // namespace sdhp
