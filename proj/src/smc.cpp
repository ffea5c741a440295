#include "sdhp/smc.hpp"

#include "sdhp/content.hpp"
#include "sdhp/error.hpp"
#include "sdhp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace sdhp {

Proposal proposal_distribution(const Particle& particle, const GeoPost& post, const DocCounts& doc,
                               const Hyperparams& hyper, bool use_spatial) {
  if (post.t < particle.last_time) throw StreamOrderError("post precedes the particle's last processed time");
  const AssignmentPrior prior = assignment_prior(particle, hyper, post.t);
  const bool spatial = use_spatial && !post.location_hidden;
  const double log_total = std::log(prior.total);

  Proposal q;
  q.candidates = prior.candidates;
  q.total_intensity = prior.total;
  q.probs.resize(q.candidates.size() + 1);

  double best = -INFINITY;
  for (std::size_t j = 0; j < q.candidates.size(); ++j) {
    const double lk = prior.intensities[j];
    if (!(lk > 0.0)) {
      q.probs[j] = -INFINITY;
      continue;
    }
    const PatternStats& stats = particle.pattern(q.candidates[j]);
    double score = std::log(lk) - log_total +
                   content_log_marginal(stats.words(), doc, hyper.theta0, hyper.vocab_size);
    if (spatial) score += spatial_log_marginal(stats.spatial(), hyper.beta_space, post.r);
    q.probs[j] = score;
    best = std::max(best, score);
  }
  // New pattern: empty counts, spatial density 1.
  const double new_score = std::log(hyper.lambda0) - log_total +
                           content_log_marginal(WordCounts{}, doc, hyper.theta0, hyper.vocab_size);
  q.probs.back() = new_score;
  best = std::max(best, new_score);

  double sum = 0.0;
  for (double& p : q.probs) sum += (p = std::exp(p - best));
  for (double& p : q.probs) p /= sum;
  q.log_q = best + std::log(sum);
  return q;
}

double log_temporal_density(const Particle& particle, double t, const Hyperparams& hyper) {
  const double t_prev = particle.last_time;
  if (t < t_prev) throw StreamOrderError("post precedes the particle's last processed time");
  double lambda = hyper.lambda0;
  double integral = hyper.lambda0 * (t - t_prev);
  for (PatternId k : particle.active) {
    const PatternStats& stats = particle.pattern(k);
    const TimeKernel& kernel = particle.kernels[k];
    lambda += pattern_intensity(stats, kernel, t);
    integral += compensator(stats, kernel, t_prev, t);
  }
  return std::log(lambda) - integral;
}

double log_incremental_weight(const Particle& particle, const GeoPost& post, double log_q,
                              const Hyperparams& hyper) {
  return log_temporal_density(particle, post.t, hyper) + log_q;
}

double incremental_weight(const Particle& particle, const GeoPost& post, double log_q, const Hyperparams& hyper) {
  return std::exp(log_incremental_weight(particle, post, log_q, hyper));
}

double ess(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return 1.0 / sq;
}

std::vector<std::size_t> systematic_resample_indices(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> ancestors(n);
  const double step = 1.0 / static_cast<double>(n);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double position = (u + static_cast<double>(m)) * step;
    while (position >= cumulative && i + 1 < n) cumulative += weights[++i];
    std::size_t pick = i;
    // Cumulative rounding can run past the last positive weight.
    while (pick > 0 && weights[pick] == 0.0) --pick;
    ancestors[m] = pick;
  }
  return ancestors;
}

TimeKernel initial_kernel(const Hyperparams& hyper, const EngineOptions& options, std::mt19937_64& rng) {
  if (options.fixed_kernel) return *options.fixed_kernel;
  if (options.kernel_init == KernelInit::prior_draw) {
    std::gamma_distribution<double> alpha(hyper.alpha_time, 1.0 / hyper.beta_time);
    std::uniform_int_distribution<std::size_t> tau(0, hyper.psi_tau.size() - 1);
    const double a = alpha(rng);
    return {a, hyper.psi_tau[tau(rng)]};
  }
  return {hyper.alpha_time / hyper.beta_time, hyper.psi_tau.front()};
}

ParticleSystem::ParticleSystem(Hyperparams hyper, EngineOptions options, std::uint64_t seed)
    : hyper_(std::move(hyper)), options_(options) {
  hyper_.validate();
  if (options_.fixed_kernel && !hyper_.tau_index(options_.fixed_kernel->tau))
    throw ValidationError("fixed kernel time constant must belong to psi_tau");
  if (options_.fixed_kernel && options_.fixed_kernel->alpha < 0.0)
    throw ValidationError("fixed kernel alpha must be non-negative");
  if (options_.threads < 1) throw ValidationError("thread count must be at least 1");
  taus_ = std::make_shared<const std::vector<double>>(hyper_.psi_tau);
  std::seed_seq master{seed, std::uint64_t{0x5d4f}};
  rng_.seed(master);
  particles_.resize(hyper_.n_particles);
  const double w = 1.0 / static_cast<double>(hyper_.n_particles);
  for (std::size_t p = 0; p < particles_.size(); ++p) {
    std::seed_seq ss{seed, std::uint64_t{p} + 1};
    particles_[p].rng.seed(ss);
    particles_[p].weight = w;
    particles_[p].log_weight = std::log(w);
  }
}

void ParticleSystem::advance(Particle& particle, const GeoPost& post, const DocCounts& doc) const {
  const Proposal q = proposal_distribution(particle, post, doc, hyper_, options_.use_spatial);
  particle.log_weight += log_incremental_weight(particle, post, q.log_q, hyper_);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(particle.rng);
  std::size_t choice = q.probs.size() - 1;
  for (std::size_t j = 0; j < q.probs.size(); ++j) {
    if (u < q.probs[j]) {
      choice = j;
      break;
    }
    u -= q.probs[j];
  }
  // Rounding can leave u past the last bucket; land on the last non-zero one.
  if (choice == q.probs.size() - 1 && q.probs.back() == 0.0) {
    while (choice > 0 && q.probs[choice] == 0.0) --choice;
  }

  PatternId s;
  if (choice == q.candidates.size()) {
    s = static_cast<PatternId>(particle.patterns.size());
    particle.patterns.push_back(std::make_shared<PatternStats>(taus_));
    particle.kernels.push_back(initial_kernel(hyper_, options_, particle.rng));
    particle.active.push_back(s);
  } else {
    s = q.candidates[choice];
  }
  particle.mutable_pattern(s).attach(post, doc);
  particle.assignments.push_back(s);
  particle.last_time = post.t;

  if (!options_.fixed_kernel) {
    if (options_.refit == RefitMode::all_patterns) {
      for (PatternId k : particle.active)
        if (particle.pattern(k).n_posts() >= 2) particle.kernels.mutate(k) = fit_time_kernel(particle.pattern(k), post.t, hyper_);
    } else if (options_.refit == RefitMode::assigned_only) {
      if (particle.pattern(s).n_posts() >= 2) particle.kernels.mutate(s) = fit_time_kernel(particle.pattern(s), post.t, hyper_);
    }
  }

  if (options_.prune) {
    const double floor = options_.prune_epsilon * hyper_.lambda0;
    std::erase_if(particle.active, [&](PatternId k) {
      const PatternStats& stats = particle.pattern(k);
      const TimeKernel& kernel = particle.kernels[k];
      const double bound = kernel.alpha * static_cast<double>(stats.n_posts()) *
                           std::exp(-(post.t - stats.last_time()) / kernel.tau);
      return bound < floor;
    });
  }
}

void ParticleSystem::normalize() {
  double best = -INFINITY;
  for (const Particle& p : particles_) best = std::max(best, p.log_weight);
  double sum = 0.0;
  for (const Particle& p : particles_) sum += std::exp(p.log_weight - best);
  const double log_norm = best + std::log(sum);
  for (Particle& p : particles_) {
    p.log_weight -= log_norm;
    p.weight = std::exp(p.log_weight);
  }
}

void ParticleSystem::step(const GeoPost& post) {
  validate_post(post);
  if (post.t < last_time_)
    throw StreamOrderError("post at t=" + std::to_string(post.t) + " arrives after t=" + std::to_string(last_time_));
  const DocCounts doc = DocCounts::from_words(post.words);

  const auto n = static_cast<std::ptrdiff_t>(particles_.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(options_.threads) if (options_.threads > 1)
#endif
  for (std::ptrdiff_t p = 0; p < n; ++p) advance(particles_[static_cast<std::size_t>(p)], post, doc);

  ++steps_;
  last_time_ = post.t;
  normalize();
  const std::vector<double> w = weights();
  if (ess(w) < hyper_.kappa_thresh * static_cast<double>(particles_.size())) resample();
}

void ParticleSystem::resample() {
  const std::vector<double> w = weights();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::vector<std::size_t> ancestors = systematic_resample_indices(w, unif(rng_));
  std::vector<Particle> next;
  next.reserve(particles_.size());
  const double uniform = 1.0 / static_cast<double>(particles_.size());
  for (std::size_t m = 0; m < ancestors.size(); ++m) {
    Particle child = particles_[ancestors[m]];
    // Random streams belong to the slot, so copies of one ancestor diverge.
    child.rng = particles_[m].rng;
    child.weight = uniform;
    child.log_weight = std::log(uniform);
    next.push_back(std::move(child));
  }
  particles_ = std::move(next);
  ++resamples_;
}

std::vector<double> ParticleSystem::weights() const {
  std::vector<double> w;
  w.reserve(particles_.size());
  for (const Particle& p : particles_) w.push_back(p.weight);
  return w;
}

std::size_t ParticleSystem::heaviest_particle() const {
  std::size_t best = 0;
  for (std::size_t p = 1; p < particles_.size(); ++p)
    if (particles_[p].weight > particles_[best].weight) best = p;
  return best;
}

std::size_t ParticleSystem::map_particle() const {
  std::map<std::vector<PatternId>, std::pair<double, std::size_t>> pooled;
  for (std::size_t p = 0; p < particles_.size(); ++p) {
    auto [it, inserted] = pooled.try_emplace(particles_[p].assignments.to_vector(), 0.0, p);
    it->second.first += particles_[p].weight;
  }
  std::size_t best = 0;
  double best_weight = -1.0;
  for (const auto& [history, entry] : pooled) {
    const auto [weight, first] = entry;
    if (weight > best_weight || (weight == best_weight && first < best)) {
      best_weight = weight;
      best = first;
    }
  }
  return best;
}

ClusteringResult ParticleSystem::result_for(std::size_t particle_index) const {
  const Particle& p = particles_.at(particle_index);
  ClusteringResult r;
  r.assignments = p.assignments.to_vector();
  r.patterns.reserve(p.patterns.size());
  for (PatternId k = 0; k < p.patterns.size(); ++k) {
    PatternSummary s = pattern_summary(*p.patterns[k], p.kernels[k], hyper_.beta_space);
    s.label = k;
    r.patterns.push_back(std::move(s));
  }
  r.weights = weights();
  r.particle_index = particle_index;
  return r;
}

ClusteringResult ParticleSystem::map_estimate() const {
  if (particles_.empty() || steps_ == 0) throw ValidationError("no posts processed; nothing to estimate");
  return result_for(map_particle());
}

ParticleSystem run_sdhp(std::span<const GeoPost> posts, const Hyperparams& hyper, const EngineOptions& options,
                        std::uint64_t seed) {
  ParticleSystem system(hyper, options, seed);
  for (const GeoPost& post : posts) system.step(post);
  return system;
}

}  // namespace sdhp
