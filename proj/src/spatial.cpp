#include "sdhp/spatial.hpp"

#include "sdhp/error.hpp"

#include <cmath>
#include <numbers>

namespace sdhp {

double spatial_xi(const SpatialStats& stats, double beta_space) {
  return beta_space + 0.5 * stats.centered;
}

double spatial_log_marginal(const SpatialStats& stats, double beta_space, Vec2 query) {
  if (!query.finite()) throw ValidationError("spatial query location must be finite");
  if (stats.n == 0) return 0.0;
  const double n = static_cast<double>(stats.n);
  const double xi = spatial_xi(stats, beta_space);
  const double delta = n / (2.0 * (n + 1.0)) * (query - stats.mean).norm2();
  return 2.0 * std::log(n) - std::log(2.0 * std::numbers::pi * (1.0 + n)) - std::log(xi) -
         (1.0 + n) * std::log1p(delta / xi);
}

Vec2 spatial_point_estimate(const PatternStats& stats) {
  if (stats.spatial().n == 0) throw ValidationError("pattern has no located members");
  return stats.spatial().mean;
}

double spatial_scale_estimate(const PatternStats& stats, double beta_space) {
  const auto& sp = stats.spatial();
  if (sp.n == 0) throw ValidationError("pattern has no located members");
  return std::sqrt(spatial_xi(sp, beta_space) / static_cast<double>(sp.n));
}

}  // namespace sdhp
