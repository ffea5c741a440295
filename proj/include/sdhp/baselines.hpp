#pragma once

#include "sdhp/particle.hpp"
#include "sdhp/smc.hpp"
#include "sdhp/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sdhp {

/// Dirichlet Hawkes Process: the same sampler with the spatial factor fixed
/// to 1 in proposal and weights.
[[nodiscard]] ParticleSystem run_dhp_system(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                            EngineOptions options = {}, std::uint64_t seed = 1);
[[nodiscard]] ClusteringResult run_dhp(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                       EngineOptions options = {}, std::uint64_t seed = 1);

struct GmmComponent {
  double weight{1.0};
  Vec2 mean;
  double variance{1.0};  // per axis, isotropic
};

struct GmmModel {
  std::vector<GmmComponent> components;
  double sigma2_min{0.0};
  double log_likelihood{0.0};  // on the data of the last fit
  std::size_t iterations{0};
};

struct EmOptions {
  double tolerance{1e-6};  // relative change of the log-likelihood
  std::size_t max_iterations{200};
};

/// log Σ_j w_j N(r | μ_j, v_j I).
[[nodiscard]] double gmm_predictive_logdensity(const GmmModel& model, Vec2 r);

/// Total log-likelihood of `points`.
[[nodiscard]] double gmm_log_likelihood(const GmmModel& model, std::span<const Vec2> points);

/// EM from `init` with every variance kept ≥ sigma2_min. When `trace` is given
/// it receives the log-likelihood before every M-step and after the last one.
[[nodiscard]] GmmModel gmm_em(std::span<const Vec2> points, GmmModel init, const EmOptions& options = {},
                              std::vector<double>* trace = nullptr);

/// k-means++ seeding of k components on `points`, keeping the components of
/// `warm` (if any) as the first centres. k is clamped to points.size().
[[nodiscard]] GmmModel gmm_seed(std::span<const Vec2> points, std::size_t k, double sigma2_min, std::mt19937_64& rng,
                                const GmmModel* warm = nullptr);

/// Refits a GMM on a growing prefix, warm-starting each fit from the last.
class StreamingGmm {
 public:
  StreamingGmm(double sigma2_min, std::uint64_t seed, EmOptions options = {});
  const GmmModel& fit(std::span<const Vec2> prefix, std::size_t k);
  [[nodiscard]] const GmmModel& model() const { return model_; }

 private:
  double sigma2_min_;
  EmOptions options_;
  std::mt19937_64 rng_;
  GmmModel model_;
  bool fitted_{false};
};

/// One fit per entry of k_schedule: model i is fitted on the first
/// first_prefix + i locations with k_schedule[i] components.
[[nodiscard]] std::vector<GmmModel> gmm_fit_stream(std::span<const Vec2> locations,
                                                   std::span<const std::size_t> k_schedule, double sigma2_min,
                                                   std::uint64_t seed = 1, std::size_t first_prefix = 1,
                                                   const EmOptions& options = {});

}  // namespace sdhp
