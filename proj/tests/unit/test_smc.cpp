#include "helpers.hpp"

#include "sdhp/content.hpp"
#include "sdhp/error.hpp"
#include "sdhp/generative.hpp"
#include "sdhp/smc.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace sdhp;
using sdhp::test::post;

namespace {

std::vector<GeoPost> small_stream(std::size_t n, std::uint64_t seed = 5) {
  SynthConfig c;
  c.n_posts = n;
  c.seed = seed;
  c.sigma0 = 0.05;
  return generate(c).posts;
}

void check_normalized(const ParticleSystem& s) {
  double sum = 0.0;
  for (const auto& p : s.particles()) {
    sum += p.weight;
    CHECK(p.n_processed() == s.steps());
    std::size_t total = 0;
    for (std::size_t k = 0; k < p.pattern_count(); ++k) total += p.pattern(static_cast<PatternId>(k)).n_posts();
    CHECK(total == s.steps());
    for (std::size_t i = 0; i < p.assignments.size(); ++i) CHECK(p.assignments[i] < p.pattern_count());
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

}  // namespace

TEST_CASE("first post proposal") {
  Hyperparams h;
  Particle p;
  const GeoPost x = post(0.3, {1, 2, 2});
  const auto doc = DocCounts::from_words(x.words);
  const auto q = proposal_distribution(p, x, doc, h);
  REQUIRE(q.probs.size() == 1);
  CHECK(q.probs[0] == 1.0);
  CHECK(q.log_q == doctest::Approx(content_log_marginal({}, doc, h.theta0, h.vocab_size)));
}

TEST_CASE("hand-computed proposal") {
  Hyperparams h;
  h.lambda0 = 1.0;
  h.vocab_size = 2;
  h.theta0 = 1.0;
  Particle p;
  PatternStats s(test::taus());
  s.attach(post(0.0, {0}), DocCounts::from_words(std::vector<WordId>{0}));
  test::add_pattern(p, s, {1.0, 1.0});
  const GeoPost x = post(1e-13, {0}, {5.0, 5.0});
  const auto q = proposal_distribution(p, x, DocCounts::from_words(x.words), h, false);
  REQUIRE(q.probs.size() == 2);
  CHECK(q.probs[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-9));
  CHECK(q.log_q == doctest::Approx(std::log(0.5 * 2.0 / 3.0 + 0.5 * 0.5)).epsilon(1e-9));
}

TEST_CASE("proposal reduces to the assignment prior without content or space") {
  Hyperparams h;
  h.vocab_size = 1;
  Particle p;
  for (int k = 0; k < 3; ++k) {
    PatternStats s(test::taus());
    s.attach(post(0.1 * k, {0}, {k * 1.0, 0.0}), DocCounts::from_words(std::vector<WordId>{0}));
    test::add_pattern(p, s, {0.5 + k, 1.0});
  }
  const GeoPost x = post(0.5, {0, 0}, {0.3, 0.3});
  const auto q = proposal_distribution(p, x, DocCounts::from_words(x.words), h, false);
  const auto prior = assignment_prior(p, h, 0.5);
  for (std::size_t j = 0; j < q.probs.size(); ++j) CHECK(q.probs[j] == doctest::Approx(prior.probs[j]).epsilon(1e-12));
}

TEST_CASE("hidden location drops the spatial factor") {
  Hyperparams h;
  Particle p;
  PatternStats s(test::taus());
  s.attach(post(0.0, {0}, {0.0, 0.0}), DocCounts::from_words(std::vector<WordId>{0}));
  test::add_pattern(p, s, {1.0, 1.0});
  GeoPost x = post(0.5, {0}, {100.0, 100.0});
  x.location_hidden = true;
  const auto doc = DocCounts::from_words(x.words);
  const auto hidden = proposal_distribution(p, x, doc, h, true);
  const auto off = proposal_distribution(p, x, doc, h, false);
  CHECK(hidden.probs == off.probs);
  CHECK(hidden.log_q == off.log_q);
}

TEST_CASE("incremental weight of the first post") {
  Hyperparams h;
  Particle p;
  CHECK(std::exp(log_temporal_density(p, 0.1, h)) == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(incremental_weight(p, post(0.1), 0.0, h) == doctest::Approx(3.6788).epsilon(1e-4));
}

TEST_CASE("temporal density matches direct integration") {
  Hyperparams h;
  h.lambda0 = 2.0;
  Particle p;
  test::add_pattern(p, test::stats_at({0.0, 0.4}), {1.5, 1.0});
  test::add_pattern(p, test::stats_at({0.3}), {0.7, 1.0});
  p.last_time = 0.4;
  const double t = 1.3;
  auto lambda = [&](double u) {
    return 2.0 + 1.5 * (std::exp(-u) + std::exp(-(u - 0.4))) + 0.7 * std::exp(-(u - 0.3));
  };
  double integral = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) integral += lambda(0.4 + (i + 0.5) * (t - 0.4) / n) * (t - 0.4) / n;
  CHECK(log_temporal_density(p, t, h) == doctest::Approx(std::log(lambda(t)) - integral).epsilon(1e-8));
}

TEST_CASE("effective sample size") {
  CHECK(ess(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0));
  CHECK(ess(std::vector<double>{1, 0, 0, 0}) == 1.0);
  CHECK(ess(std::vector<double>{0.5, 0.5, 0, 0}) == doctest::Approx(2.0));
  CHECK(ess(std::vector<double>{1, 0, 0, 0}) < 0.9 * 4);
}

TEST_CASE("systematic resampling") {
  SUBCASE("uniform weights keep every particle") {
    const auto a = systematic_resample_indices(std::vector<double>(4, 0.25), 0.37);
    CHECK(a == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SUBCASE("all mass on one particle") {
    for (double u : {0.0, 0.5, 0.999999})
      CHECK(systematic_resample_indices(std::vector<double>{0, 0, 1, 0}, u) == std::vector<std::size_t>(4, 2));
  }
  SUBCASE("trailing zero weights are never chosen") {
    const auto a = systematic_resample_indices(std::vector<double>{0.5, 0.5 - 1e-17, 0, 0}, 0.9999999);
    for (std::size_t i : a) CHECK(i < 2);
  }
  SUBCASE("offspring counts are floor or ceil and unbiased") {
    const std::vector<double> w{0.05, 0.3, 0.125, 0.4, 0.125};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> mean(5, 0.0);
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      std::vector<int> count(5, 0);
      for (std::size_t i : systematic_resample_indices(w, unif(rng))) ++count[i];
      for (int i = 0; i < 5; ++i) {
        const double e = 5 * w[i];
        CHECK((count[i] == static_cast<int>(std::floor(e)) || count[i] == static_cast<int>(std::ceil(e))));
        mean[i] += count[i] / static_cast<double>(reps);
      }
    }
    for (int i = 0; i < 5; ++i) CHECK(std::abs(mean[i] - 5 * w[i]) < 0.03);
  }
}

TEST_CASE("initial kernel") {
  Hyperparams h;
  h.psi_tau = {0.5, 2.0};
  std::mt19937_64 rng(1);
  CHECK(initial_kernel(h, {}, rng) == TimeKernel{0.5, 0.5});
  EngineOptions o;
  o.fixed_kernel = TimeKernel{3.0, 2.0};
  CHECK(initial_kernel(h, o, rng) == TimeKernel{3.0, 2.0});
  o.fixed_kernel.reset();
  o.kernel_init = KernelInit::prior_draw;
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += initial_kernel(h, o, rng).alpha / 20000;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("steps keep weights normalized and histories consistent") {
  Hyperparams h;
  h.n_particles = 8;
  ParticleSystem s(h, {}, 3);
  for (const auto& x : small_stream(300)) {
    s.step(x);
    check_normalized(s);
  }
  CHECK(s.steps() == 300);
  CHECK(s.resample_count() > 0);
}

TEST_CASE("a single particle never resamples") {
  Hyperparams h;
  h.n_particles = 1;
  ParticleSystem s(h, {}, 3);
  for (const auto& x : small_stream(200)) s.step(x);
  CHECK(s.resample_count() == 0);
  CHECK(s.particles()[0].weight == 1.0);
  const auto r = s.map_estimate();
  CHECK(r.assignments == s.particles()[0].assignments.to_vector());
}

TEST_CASE("map estimate of an empty system is an error") {
  ParticleSystem s(Hyperparams{}, {}, 1);
  CHECK_THROWS_AS((void)s.map_estimate(), ValidationError);
}

TEST_CASE("out-of-order post is rejected") {
  ParticleSystem s(Hyperparams{}, {}, 1);
  s.step(post(1.0));
  CHECK_THROWS_AS(s.step(post(0.5)), StreamOrderError);
  CHECK_THROWS_AS(s.step(post(2.0, {})), ValidationError);
}

TEST_CASE("huge base rate makes every post new") {
  Hyperparams h;
  h.lambda0 = 1e12;
  const auto posts = small_stream(100);
  const auto r = run_sdhp(posts, h, {}, 2).map_estimate();
  for (std::size_t i = 0; i < r.assignments.size(); ++i) CHECK(r.assignments[i] == i);
}

TEST_CASE("result summaries agree with assignments") {
  const auto posts = small_stream(400);
  const auto r = run_sdhp(posts, Hyperparams{}, {}, 4).map_estimate();
  std::vector<std::size_t> sizes(r.patterns.size(), 0);
  for (PatternId a : r.assignments) ++sizes[a];
  std::size_t total = 0;
  for (const auto& p : r.patterns) {
    CHECK(p.size == sizes[p.label]);
    total += p.size;
  }
  CHECK(total == posts.size());
}

TEST_CASE("same seed, same result; thread count does not matter") {
  const auto posts = small_stream(300);
  Hyperparams h;
  h.n_particles = 8;
  EngineOptions one, four;
  four.threads = 4;
  const auto a = run_sdhp(posts, h, one, 11);
  const auto b = run_sdhp(posts, h, one, 11);
  const auto c = run_sdhp(posts, h, four, 11);
  for (std::size_t p = 0; p < 8; ++p) {
    CHECK(a.particles()[p].assignments == b.particles()[p].assignments);
    CHECK(a.particles()[p].assignments == c.particles()[p].assignments);
    CHECK(a.particles()[p].log_weight == c.particles()[p].log_weight);
  }
}

TEST_CASE("checkpoint resume is bit-for-bit") {
  const auto posts = small_stream(400);
  Hyperparams h;
  h.n_particles = 6;
  h.psi_tau = {0.1, 1.0};
  EngineOptions o;
  o.kernel_init = KernelInit::prior_draw;
  const auto full = run_sdhp(posts, h, o, 8);

  ParticleSystem first(h, o, 8);
  for (std::size_t i = 0; i < 173; ++i) first.step(posts[i]);
  std::stringstream buf;
  first.save(buf);
  ParticleSystem resumed = ParticleSystem::load(buf);
  CHECK(resumed.steps() == 173);
  for (std::size_t i = 173; i < posts.size(); ++i) resumed.step(posts[i]);

  CHECK(resumed.resample_count() == full.resample_count());
  for (std::size_t p = 0; p < 6; ++p) {
    const auto& x = resumed.particles()[p];
    const auto& y = full.particles()[p];
    CHECK(x.assignments == y.assignments);
    CHECK(x.log_weight == y.log_weight);
    CHECK(x.kernels == y.kernels);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::stringstream bad("{\"format\": \"other\"}");
  CHECK_THROWS_AS((void)ParticleSystem::load(bad), DataError);
  std::stringstream junk("not json");
  CHECK_THROWS_AS((void)ParticleSystem::load(junk), DataError);
}

TEST_CASE("resampled offspring do not share mutations") {
  Hyperparams h;
  h.n_particles = 16;
  h.kappa_thresh = 1.0;  // resample nearly every step
  ParticleSystem s(h, {}, 2);
  for (const auto& x : small_stream(200)) {
    s.step(x);
    check_normalized(s);
  }
  CHECK(s.resample_count() > 50);
}

TEST_CASE("fixed kernels are never refit") {
  Hyperparams h;
  EngineOptions o;
  o.fixed_kernel = TimeKernel{0.3, 1.0};
  const auto s = run_sdhp(small_stream(200), h, o, 1);
  for (const auto& p : s.particles())
    for (const auto& k : p.kernels) CHECK(k == TimeKernel{0.3, 1.0});
  o.fixed_kernel = TimeKernel{0.3, 2.0};
  CHECK_THROWS_AS(ParticleSystem(h, o, 1), ValidationError);
}

TEST_CASE("refit modes") {
  const auto posts = small_stream(200);
  EngineOptions o;
  o.refit = RefitMode::none;
  const auto s = run_sdhp(posts, Hyperparams{}, o, 1);
  for (const auto& p : s.particles())
    for (const auto& k : p.kernels) CHECK(k == TimeKernel{0.5, 1.0});
  o.refit = RefitMode::assigned_only;
  const auto a = run_sdhp(posts, Hyperparams{}, o, 1);
  check_normalized(a);
}

TEST_CASE("pruning shrinks the candidate list") {
  SynthConfig c;
  c.n_posts = 3000;
  c.seed = 2;
  c.alpha_override = 0.3;
  const auto posts = generate(c).posts;
  EngineOptions o;
  o.prune = true;
  const auto s = run_sdhp(posts, Hyperparams{}, o, 1);
  check_normalized(s);
  for (const auto& p : s.particles()) CHECK(p.active.size() < p.pattern_count());
}
