#include "sdhp/hawkes.hpp"

#include "sdhp/content.hpp"
#include "sdhp/error.hpp"

#include <cmath>
#include <string>

namespace sdhp {

double kernel_eval(const TimeKernel& kernel, double dt) {
  if (dt < 0.0) throw ValidationError("kernel evaluated at negative elapsed time");
  return kernel.alpha * std::exp(-dt / kernel.tau);
}

double pattern_intensity(const PatternStats& stats, const TimeKernel& kernel, double t) {
  if (stats.empty()) return 0.0;
  if (t < stats.last_time())
    throw StreamOrderError("intensity queried at t=" + std::to_string(t) + " before the last event");
  return kernel.alpha * stats.decay_sum(stats.tau_slot(kernel.tau), t);
}

double total_intensity(const Particle& particle, const Hyperparams& hyper, double t) {
  double lambda = hyper.lambda0;
  for (PatternId k : particle.active) lambda += pattern_intensity(particle.pattern(k), particle.kernels[k], t);
  return lambda;
}

AssignmentPrior assignment_prior(const Particle& particle, const Hyperparams& hyper, double t) {
  AssignmentPrior prior;
  prior.candidates = particle.active;
  prior.intensities.reserve(prior.candidates.size());
  double total = hyper.lambda0;
  for (PatternId k : prior.candidates) {
    const double lk = pattern_intensity(particle.pattern(k), particle.kernels[k], t);
    prior.intensities.push_back(lk);
    total += lk;
  }
  prior.total = total;
  prior.probs.reserve(prior.candidates.size() + 1);
  for (double lk : prior.intensities) prior.probs.push_back(lk / total);
  prior.probs.push_back(hyper.lambda0 / total);
  return prior;
}

double compensator(const PatternStats& stats, const TimeKernel& kernel, double t0, double t1) {
  if (t1 < t0) throw ValidationError("compensator interval is reversed");
  if (stats.empty() || t0 == t1) return 0.0;
  if (t0 < stats.last_time()) throw StreamOrderError("compensator interval starts before the last event");
  const double at_t0 = stats.decay_sum(stats.tau_slot(kernel.tau), t0);
  // α τ S(t0) (1 − e^{−(t1−t0)/τ})
  const double fraction = std::isinf(t1) ? 1.0 : -std::expm1(-(t1 - t0) / kernel.tau);
  return kernel.alpha * kernel.tau * at_t0 * fraction;
}

namespace {

// B = τ Σ_i (1 − e^{−(t_now − t_i)/τ}).
double integrated_decay(const PatternStats& stats, std::size_t slot, double tau, double t_now) {
  return tau * (static_cast<double>(stats.n_posts()) - stats.decay_sum(slot, t_now));
}

double objective_at(const PatternStats& stats, std::size_t slot, double alpha, double tau, double t_now,
                    const Hyperparams& hyper) {
  const double n_triggered = static_cast<double>(stats.n_posts()) - 1.0;
  const double b = integrated_decay(stats, slot, tau, t_now);
  const double log_prior = hyper.alpha_time * std::log(hyper.beta_time) - log_gamma(hyper.alpha_time) +
                           (hyper.alpha_time - 1.0) * std::log(alpha) - hyper.beta_time * alpha;
  const double log_lik = n_triggered * std::log(alpha) + stats.log_excitation(slot) - alpha * b;
  return log_prior + log_lik;
}

void require_fit_input(const PatternStats& stats, double t_now) {
  if (stats.n_posts() < 2) throw ValidationError("kernel fit needs at least two events");
  if (t_now < stats.last_time()) throw StreamOrderError("kernel fit horizon precedes the last event");
}

}  // namespace

double alpha_objective(const PatternStats& stats, double alpha, double tau, double t_now,
                       const Hyperparams& hyper) {
  require_fit_input(stats, t_now);
  return objective_at(stats, stats.tau_slot(tau), alpha, tau, t_now, hyper);
}

AlphaFit alpha_map(const PatternStats& stats, double tau, double t_now, const Hyperparams& hyper) {
  require_fit_input(stats, t_now);
  const std::size_t slot = stats.tau_slot(tau);
  const double numerator = static_cast<double>(stats.n_posts()) - 2.0 + hyper.alpha_time;
  const double denominator = hyper.beta_time + integrated_decay(stats, slot, tau, t_now);
  double alpha = numerator / denominator;
  if (!(numerator > 0.0) || !(alpha > kAlphaFloor)) alpha = kAlphaFloor;
  return {alpha, objective_at(stats, slot, alpha, tau, t_now, hyper)};
}

TimeKernel fit_time_kernel(const PatternStats& stats, double t_now, const Hyperparams& hyper) {
  TimeKernel best;
  double best_objective = -INFINITY;
  bool have = false;
  for (double tau : hyper.psi_tau) {
    const AlphaFit fit = alpha_map(stats, tau, t_now, hyper);
    if (!have || fit.objective > best_objective) {
      best = {fit.alpha, tau};
      best_objective = fit.objective;
      have = true;
    }
  }
  return best;
}

}  // namespace sdhp
