#include "sdhp/generative.hpp"

#include "sdhp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdhp {

namespace {

// Patterns whose remaining intensity is below this fraction of λ₀ are dropped
// from the live set; exponential decay keeps them negligible forever.
constexpr double kNegligible = 1e-16;

}  // namespace

void SynthConfig::validate() const {
  hyper.validate();
  if (n_posts < 1) throw ValidationError("number of posts must be at least 1");
  if (n_words < 1) throw ValidationError("words per post must be at least 1");
  if (sigma0 && !(*sigma0 > 0.0 && std::isfinite(*sigma0))) throw ValidationError("sigma0 must be positive");
  if (alpha_override && !(*alpha_override >= 0.0 && std::isfinite(*alpha_override)))
    throw ValidationError("alpha override must be non-negative");
}

double GeneratorState::pattern_intensity(PatternId s, double t) const {
  const auto& k = patterns_[s].kernel;
  return k.alpha * decay_[s] * std::exp(-(t - t_ref_[s]) / k.tau);
}

double GeneratorState::intensity(double t, double lambda0) const {
  double lambda = lambda0;
  for (PatternId s : live_) lambda += pattern_intensity(s, t);
  return lambda;
}

PatternId GeneratorState::add_pattern(PatternParams params) {
  patterns_.push_back(std::move(params));
  decay_.push_back(0.0);
  t_ref_.push_back(last_time_);
  return static_cast<PatternId>(patterns_.size() - 1);
}

void GeneratorState::record_event(PatternId s, double t) {
  const auto& k = patterns_[s].kernel;
  const bool was_live = decay_[s] > 0.0;
  decay_[s] = decay_[s] * std::exp(-(t - t_ref_[s]) / k.tau) + 1.0;
  t_ref_[s] = t;
  last_time_ = t;
  ++n_events_;
  if (!was_live && k.alpha > 0.0) live_.push_back(s);
  // Prune against λ₀ = 1 scale; callers use λ₀ ≥ O(1) so the relative
  // contribution of a dropped pattern stays below ~1e-16.
  std::erase_if(live_, [&](PatternId p) { return pattern_intensity(p, t) < kNegligible; });
}

double sample_event_time(const GeneratorState& state, const Hyperparams& hyper, std::mt19937_64& rng,
                         ThinningStats* stats) {
  std::exponential_distribution<double> gap(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double t = state.last_time();
  double bound = state.intensity(t, hyper.lambda0);
  for (;;) {
    t += gap(rng) / bound;
    const double lambda = state.intensity(t, hyper.lambda0);
    const double ratio = lambda / bound;
    if (stats) {
      ++stats->proposals;
      stats->max_acceptance_ratio = std::max(stats->max_acceptance_ratio, ratio);
    }
    if (unif(rng) <= ratio) return t;
    bound = lambda;
  }
}

PatternParams sample_pattern_params(const SynthConfig& config, std::mt19937_64& rng) {
  const Hyperparams& h = config.hyper;
  PatternParams p;
  std::gamma_distribution<double> word_gamma(h.theta0, 1.0);
  p.theta.resize(h.vocab_size);
  double total = 0.0;
  for (double& v : p.theta) total += (v = word_gamma(rng));
  if (!(total > 0.0)) {
    // Every draw underflowed (tiny θ₀): the Dirichlet is then a vertex.
    std::uniform_int_distribution<std::size_t> pick(0, h.vocab_size - 1);
    std::fill(p.theta.begin(), p.theta.end(), 0.0);
    p.theta[pick(rng)] = 1.0;
  } else {
    for (double& v : p.theta) v /= total;
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  p.center = {unif(rng), unif(rng)};
  if (config.sigma0) {
    p.sigma = *config.sigma0;
  } else {
    std::gamma_distribution<double> precision(1.0, 1.0 / h.beta_space);
    p.sigma = 1.0 / std::sqrt(precision(rng));
  }
  if (config.alpha_override) {
    p.kernel.alpha = *config.alpha_override;
  } else {
    std::gamma_distribution<double> alpha(h.alpha_time, 1.0 / h.beta_time);
    p.kernel.alpha = alpha(rng);
  }
  std::uniform_int_distribution<std::size_t> tau_pick(0, h.psi_tau.size() - 1);
  p.kernel.tau = h.psi_tau[tau_pick(rng)];
  return p;
}

PatternId sample_assignment(GeneratorState& state, double t, const SynthConfig& config, std::mt19937_64& rng) {
  const double lambda0 = config.hyper.lambda0;
  const double total = state.intensity(t, lambda0);
  std::uniform_real_distribution<double> unif(0.0, total);
  double u = unif(rng);
  if (u < lambda0 || state.patterns().empty()) return state.add_pattern(sample_pattern_params(config, rng));
  u -= lambda0;
  PatternId last_positive = 0;
  bool any = false;
  for (PatternId s : state.live()) {
    const double lk = state.pattern_intensity(s, t);
    if (lk <= 0.0) continue;
    last_positive = s;
    any = true;
    if (u < lk) return s;
    u -= lk;
  }
  // Rounding left u just past the last bucket.
  if (any) return last_positive;
  return state.add_pattern(sample_pattern_params(config, rng));
}

GeoPost emit_post(const PatternParams& params, PatternId label, double t, const SynthConfig& config,
                  std::mt19937_64& rng) {
  GeoPost post;
  post.t = t;
  post.true_label = label;
  std::discrete_distribution<WordId> word(params.theta.begin(), params.theta.end());
  post.words.reserve(config.n_words);
  for (std::size_t i = 0; i < config.n_words; ++i) post.words.push_back(word(rng));

  std::normal_distribution<double> noise(0.0, params.sigma);
  constexpr std::size_t kMaxDraws = 1'000'000;
  for (std::size_t draw = 0; draw < kMaxDraws; ++draw) {
    post.r = {params.center.x + noise(rng), params.center.y + noise(rng)};
    if (!config.unit_square) return post;
    if (post.r.x >= 0.0 && post.r.x <= 1.0 && post.r.y >= 0.0 && post.r.y <= 1.0) return post;
  }
  throw DataError("location rejection sampling did not land in the unit square after 1e6 draws");
}

SyntheticDataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  GeneratorState state;
  SyntheticDataset out;
  out.posts.reserve(config.n_posts);
  out.intensity_trace.reserve(config.n_posts);
  for (std::size_t n = 0; n < config.n_posts; ++n) {
    const double t = sample_event_time(state, config.hyper, rng, &out.thinning);
    out.intensity_trace.push_back(state.intensity(t, config.hyper.lambda0));
    const PatternId s = sample_assignment(state, t, config, rng);
    out.posts.push_back(emit_post(state.patterns()[s], s, t, config, rng));
    state.record_event(s, t);
  }
  out.patterns = state.patterns();
  return out;
}

}  // namespace sdhp
