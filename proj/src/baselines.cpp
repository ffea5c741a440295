#include "sdhp/baselines.hpp"

#include "sdhp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sdhp {

ParticleSystem run_dhp_system(std::span<const GeoPost> posts, const Hyperparams& hyper, EngineOptions options,
                              std::uint64_t seed) {
  options.use_spatial = false;
  return run_sdhp(posts, hyper, options, seed);
}

ClusteringResult run_dhp(std::span<const GeoPost> posts, const Hyperparams& hyper, EngineOptions options,
                         std::uint64_t seed) {
  return run_dhp_system(posts, hyper, options, seed).map_estimate();
}

namespace {

double log_normal2(Vec2 r, Vec2 mean, double variance) {
  return -std::log(2.0 * std::numbers::pi * variance) - (r - mean).norm2() / (2.0 * variance);
}

double log_sum_exp(std::span<const double> v) {
  double best = -INFINITY;
  for (double x : v) best = std::max(best, x);
  if (!std::isfinite(best)) return best;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - best);
  return best + std::log(sum);
}

double pooled_axis_variance(std::span<const Vec2> points) {
  Vec2 mean;
  for (Vec2 p : points) mean += p;
  mean = mean / static_cast<double>(points.size());
  double ss = 0.0;
  for (Vec2 p : points) ss += (p - mean).norm2();
  return ss / (2.0 * static_cast<double>(points.size()));
}

}  // namespace

double gmm_predictive_logdensity(const GmmModel& model, Vec2 r) {
  std::vector<double> terms;
  terms.reserve(model.components.size());
  for (const auto& c : model.components)
    terms.push_back(std::log(c.weight) + log_normal2(r, c.mean, c.variance));
  return log_sum_exp(terms);
}

double gmm_log_likelihood(const GmmModel& model, std::span<const Vec2> points) {
  double ll = 0.0;
  for (Vec2 p : points) ll += gmm_predictive_logdensity(model, p);
  return ll;
}

GmmModel gmm_em(std::span<const Vec2> points, GmmModel model, const EmOptions& options, std::vector<double>* trace) {
  if (points.empty()) throw ValidationError("EM needs at least one point");
  const std::size_t n = points.size();
  const std::size_t k = model.components.size();
  std::vector<double> resp(n * k);
  std::vector<double> row(k);
  double previous = -INFINITY;
  model.iterations = 0;

  for (std::size_t iter = 0;; ++iter) {
    // E-step and log-likelihood of the current parameters.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const auto& c = model.components[j];
        row[j] = std::log(c.weight) + log_normal2(points[i], c.mean, c.variance);
      }
      const double lse = log_sum_exp(row);
      ll += lse;
      for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(row[j] - lse);
    }
    if (trace) trace->push_back(ll);
    model.log_likelihood = ll;
    const bool converged =
        std::isfinite(previous) && std::abs(ll - previous) <= options.tolerance * std::abs(previous);
    if (converged || iter >= options.max_iterations) break;
    previous = ll;

    // M-step.
    for (std::size_t j = 0; j < k; ++j) {
      double mass = 0.0;
      Vec2 sum;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + j];
        mass += r;
        sum += r * points[i];
      }
      auto& c = model.components[j];
      c.weight = mass / static_cast<double>(n);
      if (mass < 1e-12) {
        c.variance = std::max(c.variance, model.sigma2_min);
        continue;
      }
      c.mean = sum / mass;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += resp[i * k + j] * (points[i] - c.mean).norm2();
      c.variance = std::max(ss / (2.0 * mass), model.sigma2_min);
    }
    ++model.iterations;
  }
  return model;
}

GmmModel gmm_seed(std::span<const Vec2> points, std::size_t k, double sigma2_min, std::mt19937_64& rng,
                  const GmmModel* warm) {
  if (points.empty()) throw ValidationError("cannot seed a mixture without points");
  k = std::clamp<std::size_t>(k, 1, points.size());
  GmmModel model;
  model.sigma2_min = sigma2_min;
  const double base_var = std::max(pooled_axis_variance(points), sigma2_min);

  if (warm && !warm->components.empty()) {
    std::vector<GmmComponent> kept = warm->components;
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (kept.size() > k) kept.resize(k);
    model.components = std::move(kept);
  }

  std::vector<double> d2(points.size(), INFINITY);
  auto update_d2 = [&](Vec2 centre) {
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], (points[i] - centre).norm2());
  };
  for (const auto& c : model.components) update_d2(c.mean);
  if (model.components.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    const Vec2 first = points[pick(rng)];
    model.components.push_back({1.0, first, base_var});
    update_d2(first);
  }
  while (model.components.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> unif(0.0, total);
      double u = unif(rng);
      for (chosen = 0; chosen + 1 < points.size() && u >= d2[chosen]; ++chosen) u -= d2[chosen];
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
      chosen = pick(rng);
    }
    model.components.push_back({1.0, points[chosen], base_var});
    update_d2(points[chosen]);
  }

  double wsum = 0.0;
  for (auto& c : model.components) {
    c.variance = std::max(c.variance, sigma2_min);
    wsum += c.weight;
  }
  // Fresh components get the average weight; then renormalize.
  const double fresh = 1.0 / static_cast<double>(model.components.size());
  const std::size_t n_warm = warm ? std::min(warm->components.size(), k) : 0;
  wsum = 0.0;
  for (std::size_t j = 0; j < model.components.size(); ++j) {
    if (j >= n_warm) model.components[j].weight = fresh;
    wsum += model.components[j].weight;
  }
  for (auto& c : model.components) c.weight /= wsum;
  return model;
}

StreamingGmm::StreamingGmm(double sigma2_min, std::uint64_t seed, EmOptions options)
    : sigma2_min_(sigma2_min), options_(options), rng_(seed) {
  if (!(sigma2_min > 0.0)) throw ValidationError("GMM variance floor must be positive");
}

const GmmModel& StreamingGmm::fit(std::span<const Vec2> prefix, std::size_t k) {
  k = std::clamp<std::size_t>(k, 1, prefix.size());
  GmmModel init = gmm_seed(prefix, k, sigma2_min_, rng_, fitted_ ? &model_ : nullptr);
  model_ = gmm_em(prefix, std::move(init), options_);
  fitted_ = true;
  return model_;
}

std::vector<GmmModel> gmm_fit_stream(std::span<const Vec2> locations, std::span<const std::size_t> k_schedule,
                                     double sigma2_min, std::uint64_t seed, std::size_t first_prefix,
                                     const EmOptions& options) {
  if (first_prefix < 1) throw ValidationError("prefix length must be at least 1");
  if (first_prefix + k_schedule.size() - 1 > locations.size())
    throw ValidationError("k schedule runs past the available locations");
  StreamingGmm gmm(sigma2_min, seed, options);
  std::vector<GmmModel> out;
  out.reserve(k_schedule.size());
  for (std::size_t i = 0; i < k_schedule.size(); ++i)
    out.push_back(gmm.fit(locations.first(first_prefix + i), k_schedule[i]));
  return out;
}

}  // namespace sdhp
