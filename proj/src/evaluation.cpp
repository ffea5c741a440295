#include "sdhp/evaluation.hpp"

#include "sdhp/content.hpp"
#include "sdhp/error.hpp"
#include "sdhp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace sdhp {

namespace {

double entropy(const std::unordered_map<PatternId, std::size_t>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{seed, salt};
  std::uint64_t out[1];
  seq.generate(reinterpret_cast<std::uint32_t*>(out), reinterpret_cast<std::uint32_t*>(out) + 2);
  return out[0];
}

}  // namespace

double nmi(std::span<const PatternId> labels_true, std::span<const PatternId> labels_pred, NmiNormalization norm) {
  if (labels_true.empty()) throw ValidationError("NMI of empty labelings is undefined");
  if (labels_true.size() != labels_pred.size()) throw ValidationError("NMI inputs differ in length");
  const double n = static_cast<double>(labels_true.size());
  std::unordered_map<PatternId, std::size_t> count_t, count_p;
  std::map<std::pair<PatternId, PatternId>, std::size_t> joint;
  for (std::size_t i = 0; i < labels_true.size(); ++i) {
    ++count_t[labels_true[i]];
    ++count_p[labels_pred[i]];
    ++joint[{labels_true[i], labels_pred[i]}];
  }
  const double ht = entropy(count_t, n);
  const double hp = entropy(count_p, n);
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pij = static_cast<double>(c) / n;
    const double pi = static_cast<double>(count_t[key.first]) / n;
    const double pj = static_cast<double>(count_p[key.second]) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  double denom = 0.0;
  switch (norm) {
    case NmiNormalization::arithmetic: denom = 0.5 * (ht + hp); break;
    case NmiNormalization::geometric: denom = std::sqrt(ht * hp); break;
    case NmiNormalization::max: denom = std::max(ht, hp); break;
  }
  if (ht == 0.0 && hp == 0.0) return 1.0;
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

double alpha_precision(double alpha_true, double alpha_hat) {
  if (alpha_true < 0.0 || alpha_hat < 0.0) throw ValidationError("self-excitation values must be non-negative");
  if (alpha_true == 0.0 && alpha_hat == 0.0) throw ValidationError("alpha precision undefined when both are zero");
  return std::abs(alpha_true - alpha_hat) / (std::abs(alpha_true + alpha_hat) / 2.0);
}

std::vector<AlphaPrecisionRecord> alpha_precision_by_pattern(const ClusteringResult& result,
                                                             std::span<const GeoPost> posts,
                                                             std::span<const PatternParams> truth) {
  if (result.assignments.size() != posts.size()) throw ValidationError("result and posts differ in length");
  std::vector<std::map<PatternId, std::size_t>> members(result.patterns.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!posts[i].true_label) throw ValidationError("posts carry no ground-truth labels");
    ++members[result.assignments[i]][*posts[i].true_label];
  }
  std::vector<AlphaPrecisionRecord> out;
  for (const PatternSummary& p : result.patterns) {
    if (p.size < 2) continue;
    PatternId majority = 0;
    std::size_t best = 0;
    for (const auto& [label, c] : members[p.label])
      if (c > best) {
        best = c;
        majority = label;
      }
    AlphaPrecisionRecord rec;
    rec.inferred_label = p.label;
    rec.true_label = majority;
    rec.size = p.size;
    rec.alpha_true = truth[majority].kernel.alpha;
    rec.alpha_hat = p.kernel.alpha;
    rec.delta = alpha_precision(rec.alpha_true, rec.alpha_hat);
    out.push_back(rec);
  }
  return out;
}

std::vector<std::pair<double, double>> intensity_trace(const PatternSummary& pattern, std::span<const double> grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(grid.size());
  for (double t : grid) {
    double lambda = 0.0;
    for (double ti : pattern.event_times) {
      if (ti > t) break;
      lambda += pattern.kernel.alpha * std::exp(-(t - ti) / pattern.kernel.tau);
    }
    out.emplace_back(t, lambda);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> choose_hidden(std::size_t n_posts, double hide_fraction, double burn_in_fraction,
                                       std::mt19937_64& rng) {
  const auto first = static_cast<std::size_t>(std::ceil(burn_in_fraction * static_cast<double>(n_posts)));
  if (first >= n_posts) throw ValidationError("dataset has no posts after the burn-in period");
  std::vector<std::size_t> eligible(n_posts - first);
  std::iota(eligible.begin(), eligible.end(), first);
  auto count = static_cast<std::size_t>(std::llround(hide_fraction * static_cast<double>(n_posts)));
  count = std::clamp<std::size_t>(count, 1, eligible.size());
  std::vector<std::size_t> hidden;
  hidden.reserve(count);
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(hidden), count, rng);
  return hidden;
}

std::vector<PredictionRecord> prediction_trial(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                               std::span<const std::size_t> hidden, const EngineOptions& engine,
                                               std::uint64_t seed, std::size_t trial) {
  std::vector<GeoPost> stream(posts.begin(), posts.end());
  for (std::size_t i : hidden) stream.at(i).location_hidden = true;
  const ParticleSystem system = run_sdhp(stream, hyper, engine, seed);
  const ClusteringResult result = system.map_estimate();
  std::vector<PredictionRecord> out;
  for (std::size_t i : hidden) {
    const PatternSummary& p = result.patterns[result.assignments[i]];
    if (!p.mean) continue;  // no visible member to predict from
    out.push_back({i, *p.mean, posts[i].r, p.size, *p.scale, trial});
  }
  return out;
}

std::vector<PredictionRecord> keep_tightest(std::span<const PredictionRecord> records) {
  std::map<std::size_t, PredictionRecord> best;
  for (const PredictionRecord& r : records) {
    auto [it, inserted] = best.try_emplace(r.post_index, r);
    if (inserted) continue;
    const PredictionRecord& cur = it->second;
    if (r.sigma_hat < cur.sigma_hat || (r.sigma_hat == cur.sigma_hat && r.trial < cur.trial)) it->second = r;
  }
  std::vector<PredictionRecord> out;
  out.reserve(best.size());
  for (auto& [idx, r] : best) out.push_back(r);
  return out;
}

std::vector<PredictionRecord> location_prediction_protocol(std::span<const GeoPost> posts, const Hyperparams& hyper,
                                                           const LocationProtocolConfig& config) {
  std::vector<PredictionRecord> all;
  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    std::mt19937_64 rng(mix_seed(config.seed, 2 * trial));
    const auto hidden = choose_hidden(posts.size(), config.hide_fraction, config.burn_in_fraction, rng);
    auto records = prediction_trial(posts, hyper, hidden, config.engine, mix_seed(config.seed, 2 * trial + 1), trial);
    all.insert(all.end(), records.begin(), records.end());
  }
  return keep_tightest(all);
}

std::size_t selection_min_size(Selection s) { return s == Selection::loose ? 7 : 11; }

std::vector<PredictionRecord> select_records(std::span<const PredictionRecord> records, Selection s,
                                             std::uint64_t seed) {
  std::vector<PredictionRecord> out(records.begin(), records.end());
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  std::stable_sort(out.begin(), out.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
    if (a.sigma_hat != b.sigma_hat) return a.sigma_hat < b.sigma_hat;
    return a.pattern_size > b.pattern_size;
  });
  const std::size_t floor = selection_min_size(s);
  std::erase_if(out, [&](const PredictionRecord& r) { return r.pattern_size < floor; });
  return out;
}

RmseResult rmse_selected(std::span<const PredictionRecord> records, Selection s, double dataset_sigma,
                         std::uint64_t seed) {
  if (!(dataset_sigma > 0.0)) throw ValidationError("dataset spatial scale must be positive");
  const auto kept = select_records(records, s, seed);
  RmseResult out;
  out.survivors = kept.size();
  if (kept.empty()) return out;
  out.used = static_cast<std::size_t>(std::ceil(0.04 * static_cast<double>(kept.size())));
  double ss = 0.0;
  for (std::size_t i = 0; i < out.used; ++i) ss += (kept[i].predicted - kept[i].truth).norm2();
  out.normalized_rmse = std::sqrt(ss / static_cast<double>(out.used)) / dataset_sigma;
  return out;
}

double dataset_spatial_scale(std::span<const GeoPost> posts) {
  if (posts.empty()) throw ValidationError("empty dataset");
  SpatialStats s;
  for (const GeoPost& p : posts) s.add(p.r);
  return std::sqrt(s.centered / static_cast<double>(s.n));
}

// ---------------------------------------------------------------------------

SdhpOneStep::SdhpOneStep(Hyperparams hyper, EngineOptions options, std::uint64_t seed,
                         PredictiveConditioning conditioning)
    : system_(std::move(hyper), options, seed), conditioning_(conditioning) {}

namespace {

// log Σ_k w_k f_k with log w_k ∝ prior_k (+ log g_k), normalized.
double log_mixture(std::span<const double> log_weights, std::span<const double> log_values) {
  double wmax = -INFINITY;
  for (double w : log_weights) wmax = std::max(wmax, w);
  double wsum = 0.0;
  for (double w : log_weights) wsum += std::exp(w - wmax);
  const double log_norm = wmax + std::log(wsum);
  double best = -INFINITY;
  std::vector<double> terms(log_weights.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    terms[k] = log_weights[k] - log_norm + log_values[k];
    best = std::max(best, terms[k]);
  }
  if (!std::isfinite(best)) return best;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

}  // namespace

double SdhpOneStep::log_location(const GeoPost& post) {
  const Hyperparams& h = system_.hyper();
  const Particle& p = system_.particles()[system_.heaviest_particle()];
  const AssignmentPrior prior = assignment_prior(p, h, post.t);
  const DocCounts doc = DocCounts::from_words(post.words);
  std::vector<double> lw, lv;
  for (std::size_t j = 0; j <= prior.candidates.size(); ++j) {
    const bool fresh = j == prior.candidates.size();
    double w = std::log(prior.probs[j]);
    if (conditioning_ == PredictiveConditioning::cross_modal)
      w += fresh ? content_log_marginal(WordCounts{}, doc, h.theta0, h.vocab_size)
                 : content_log_marginal(p.pattern(prior.candidates[j]).words(), doc, h.theta0, h.vocab_size);
    lw.push_back(w);
    lv.push_back(fresh ? 0.0 : spatial_log_marginal(p.pattern(prior.candidates[j]).spatial(), h.beta_space, post.r));
  }
  return log_mixture(lw, lv);
}

double SdhpOneStep::log_content(const GeoPost& post) {
  const Hyperparams& h = system_.hyper();
  const Particle& p = system_.particles()[system_.heaviest_particle()];
  const AssignmentPrior prior = assignment_prior(p, h, post.t);
  const DocCounts doc = DocCounts::from_words(post.words);
  const bool use_location = conditioning_ == PredictiveConditioning::cross_modal && system_.options().use_spatial;
  std::vector<double> lw, lv;
  for (std::size_t j = 0; j <= prior.candidates.size(); ++j) {
    const bool fresh = j == prior.candidates.size();
    double w = std::log(prior.probs[j]);
    if (use_location && !fresh)
      w += spatial_log_marginal(p.pattern(prior.candidates[j]).spatial(), h.beta_space, post.r);
    lw.push_back(w);
    lv.push_back(fresh ? content_log_marginal(WordCounts{}, doc, h.theta0, h.vocab_size)
                       : content_log_marginal(p.pattern(prior.candidates[j]).words(), doc, h.theta0, h.vocab_size));
  }
  return log_mixture(lw, lv);
}

void SdhpOneStep::observe(const GeoPost& post) {
  system_.step(post);
  counts_.push_back(system_.particles()[system_.heaviest_particle()].pattern_count());
}

GmmOneStep::GmmOneStep(std::vector<std::size_t> k_schedule, double sigma2_min, std::uint64_t seed,
                       EmOptions options)
    : schedule_(std::move(k_schedule)), gmm_(sigma2_min, seed, options) {}

double GmmOneStep::log_location(const GeoPost& post) {
  const std::size_t n = seen_.size();
  if (n == 0) return 0.0;
  if (n - 1 >= schedule_.size()) throw ValidationError("GMM component schedule is too short for the stream");
  const GmmModel& m = gmm_.fit(seen_, std::max<std::size_t>(schedule_[n - 1], 1));
  return gmm_predictive_logdensity(m, post.r);
}

double GmmOneStep::log_content(const GeoPost&) {
  throw ValidationError("the spatial mixture baseline has no content model");
}

void GmmOneStep::observe(const GeoPost& post) { seen_.push_back(post.r); }

double UniformOneStep::log_content(const GeoPost& post) {
  return -static_cast<double>(post.words.size()) * std::log(static_cast<double>(vocab_size_));
}

namespace {

void require_window(std::span<const GeoPost> posts, const GofWindow& window) {
  if (window.end <= window.burn_in) throw ValidationError("goodness-of-fit window is empty");
  if (posts.size() < window.end)
    throw ValidationError("goodness of fit needs at least " + std::to_string(window.end) + " posts, got " +
                          std::to_string(posts.size()));
}

}  // namespace

GofResult spatial_gof(std::span<const GeoPost> posts, OneStepModel& model, GofWindow window) {
  require_window(posts, window);
  GofResult out;
  double sum = 0.0;
  for (std::size_t n = 0; n < window.end; ++n) {
    if (n >= window.burn_in) {
      sum += model.log_location(posts[n]);
      out.evaluated.push_back(n);
    }
    model.observe(posts[n]);
  }
  out.value = sum / static_cast<double>(window.end - window.burn_in);
  return out;
}

GofResult perplexity(std::span<const GeoPost> posts, OneStepModel& model, GofWindow window) {
  require_window(posts, window);
  GofResult out;
  double sum = 0.0;
  for (std::size_t n = 0; n < window.end; ++n) {
    if (n >= window.burn_in) {
      sum += model.log_content(posts[n]);
      out.n_words += posts[n].words.size();
      out.evaluated.push_back(n);
    }
    model.observe(posts[n]);
  }
  out.value = std::exp(-sum / static_cast<double>(out.n_words));
  return out;
}

double tune_dhp_lambda0(std::span<const GeoPost> prefix, const Hyperparams& hyper, std::size_t target_patterns,
                        const EngineOptions& options, std::uint64_t seed, std::size_t iterations) {
  auto count_at = [&](double log_lambda) {
    Hyperparams h = hyper;
    h.lambda0 = std::exp(log_lambda);
    const ParticleSystem s = run_dhp_system(prefix, h, options, seed);
    return s.particles()[s.heaviest_particle()].pattern_count();
  };
  double lo = std::log(hyper.lambda0) - 10.0;
  double hi = std::log(hyper.lambda0) + 10.0;
  double best = std::log(hyper.lambda0);
  std::size_t best_gap = SIZE_MAX;
  for (std::size_t i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const std::size_t c = count_at(mid);
    const std::size_t gap = c > target_patterns ? c - target_patterns : target_patterns - c;
    if (gap < best_gap) {
      best_gap = gap;
      best = mid;
    }
    if (c == target_patterns) break;
    if (c < target_patterns)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(best);
}

// ---------------------------------------------------------------------------

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

std::vector<PatternId> true_labels(std::span<const GeoPost> posts) {
  std::vector<PatternId> out;
  out.reserve(posts.size());
  for (const GeoPost& p : posts) {
    if (!p.true_label) throw ValidationError("post carries no ground-truth label");
    out.push_back(*p.true_label);
  }
  return out;
}

double synthetic_nmi_trial(const SynthConfig& config, const Hyperparams& inference, const EngineOptions& options,
                           std::uint64_t inference_seed) {
  const SyntheticDataset data = generate(config);
  const ParticleSystem system = run_sdhp(data.posts, inference, options, inference_seed);
  const ClusteringResult r = system.map_estimate();
  return nmi(true_labels(data.posts), r.assignments);
}

}  // namespace sdhp
