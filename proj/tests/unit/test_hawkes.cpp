#include "helpers.hpp"

#include "sdhp/error.hpp"
#include "sdhp/hawkes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace sdhp;
using sdhp::test::stats_at;

TEST_CASE("kernel evaluation") {
  CHECK(kernel_eval({2.0, 1.0}, 0.0) == 2.0);
  CHECK(kernel_eval({1.0, 2.0}, 2.0) == doctest::Approx(0.36788).epsilon(1e-5));
  CHECK(kernel_eval({0.0, 1.0}, 5.0) == 0.0);
  CHECK_THROWS_AS((void)kernel_eval({1.0, 1.0}, -0.1), ValidationError);
}

TEST_CASE("pattern intensity") {
  CHECK(pattern_intensity(PatternStats(test::taus()), {1.0, 1.0}, 3.0) == 0.0);
  CHECK(pattern_intensity(stats_at({0.0}), {2.0, 1.0}, 1.0) == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(pattern_intensity(stats_at({0.0, 1.0}), {1.0, 1.0}, 1.0) == doctest::Approx(std::exp(-1.0) + 1.0));
  CHECK_THROWS_AS((void)pattern_intensity(stats_at({0.0, 1.0}), {1.0, 1.0}, 0.5), StreamOrderError);
}

TEST_CASE("pattern intensity equals direct summation") {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> gap(1.0);
  std::vector<double> times;
  double t = 0;
  for (int i = 0; i < 300; ++i) times.push_back(t += gap(rng));
  const auto s = stats_at(times, {0.5, 4.0});
  for (double tau : {0.5, 4.0}) {
    const double q = t + 0.3;
    double direct = 0.0;
    for (double ti : times) direct += 0.7 * std::exp(-(q - ti) / tau);
    CHECK(std::abs(pattern_intensity(s, {0.7, tau}, q) - direct) <= 1e-9 * direct);
  }
}

TEST_CASE("total intensity and assignment prior") {
  Hyperparams h;
  SUBCASE("no patterns") {
    Particle p;
    CHECK(total_intensity(p, h, 5.0) == 10.0);
    const auto prior = assignment_prior(p, h, 5.0);
    REQUIRE(prior.probs.size() == 1);
    CHECK(prior.probs[0] == 1.0);
  }
  SUBCASE("one pattern") {
    h.lambda0 = 1.0;
    Particle p;
    test::add_pattern(p, stats_at({0.0}), {2.0, 1.0});
    CHECK(total_intensity(p, h, 1.0) == doctest::Approx(1.73576).epsilon(1e-5));
    CHECK(total_intensity(p, h, 50.0) >= h.lambda0);
  }
  SUBCASE("half and half just after an event") {
    h.lambda0 = 1.0;
    Particle p;
    test::add_pattern(p, stats_at({0.0}), {1.0, 1.0});
    const auto prior = assignment_prior(p, h, 1e-12);
    REQUIRE(prior.probs.size() == 2);
    CHECK(prior.probs[0] == doctest::Approx(0.5));
    CHECK(prior.probs[1] == doctest::Approx(0.5));
  }
  SUBCASE("sums to one") {
    Particle p;
    test::add_pattern(p, stats_at({0.0, 0.3}), {1.5, 1.0});
    test::add_pattern(p, stats_at({0.1}), {0.2, 1.0});
    test::add_pattern(p, stats_at({0.2, 0.25, 0.4}), {3.0, 1.0});
    const auto prior = assignment_prior(p, h, 0.5);
    double sum = 0.0;
    for (double x : prior.probs) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("compensator") {
  const auto s = stats_at({0.0});
  CHECK(compensator(s, {1.0, 1.0}, 0.0, 0.0) == 0.0);
  CHECK(compensator(s, {1.0, 1.0}, 0.0, INFINITY) == doctest::Approx(1.0));
  CHECK(compensator(s, {1.0, 1.0}, 0.0, 1.0) == doctest::Approx(0.63212).epsilon(1e-5));
  CHECK_THROWS_AS((void)compensator(s, {1.0, 1.0}, 1.0, 0.5), ValidationError);
}

TEST_CASE("compensator matches quadrature and is additive") {
  const auto s = stats_at({0.0, 0.4, 0.9, 1.3}, {0.7});
  const TimeKernel k{1.3, 0.7};
  // Composite Simpson on [1.3, 4.0].
  const int n = 2000;
  const double a = 1.3, b = 4.0, hstep = (b - a) / n;
  double simpson = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    simpson += w * pattern_intensity(s, k, a + i * hstep);
  }
  simpson *= hstep / 3.0;
  CHECK(compensator(s, k, a, b) == doctest::Approx(simpson).epsilon(1e-9));
  const double ab = compensator(s, k, 1.3, 2.1), bc = compensator(s, k, 2.1, 5.5), ac = compensator(s, k, 1.3, 5.5);
  CHECK(std::abs(ab + bc - ac) <= 1e-10 * ac);
}

TEST_CASE("alpha MAP closed form") {
  Hyperparams h;
  h.alpha_time = 2.0;
  h.beta_time = 1.0;
  const auto s = stats_at({0.0, 0.5});
  const AlphaFit fit = alpha_map(s, 1.0, 0.5, h);
  CHECK(fit.alpha == doctest::Approx(2.0 / (1.0 + (1.0 - std::exp(-0.5)))).epsilon(1e-12));
  CHECK(fit.alpha == doctest::Approx(1.4352).epsilon(1e-4));
  // grid argmax
  double best = 0.0, best_obj = -INFINITY;
  for (int i = 1; i <= 400000; ++i) {
    const double a = i * 1e-5;
    const double o = alpha_objective(s, a, 1.0, 0.5, h);
    if (o > best_obj) {
      best_obj = o;
      best = a;
    }
  }
  CHECK(std::abs(best - fit.alpha) <= 1e-5);
  CHECK(fit.objective >= best_obj - 1e-12);
}

TEST_CASE("alpha MAP goes to zero under a dominating prior") {
  Hyperparams h;
  h.alpha_time = 1.0;
  h.beta_time = 1e12;
  const auto fit = alpha_map(stats_at({0.0, 0.1, 0.2}), 1.0, 0.2, h);
  CHECK(fit.alpha == 1e-8);
}

TEST_CASE("alpha MAP floor and errors") {
  Hyperparams h;
  CHECK_THROWS_AS((void)alpha_map(stats_at({0.0}), 1.0, 0.0, h), ValidationError);
  CHECK_THROWS_AS((void)alpha_map(stats_at({0.0, 1.0}), 1.0, 0.5, h), StreamOrderError);
  CHECK_THROWS_AS((void)alpha_map(stats_at({0.0, 1.0}), 3.0, 1.0, h), ValidationError);
  h.beta_time = 1e300;
  CHECK(alpha_map(stats_at({0.0, 1.0}), 1.0, 1.0, h).alpha == kAlphaFloor);
}

TEST_CASE("objective at the closed form dominates nearby values") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Hyperparams h;
  h.psi_tau = {0.3, 1.0, 5.0};
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> times;
    double t = 0.0;
    const int n = 2 + static_cast<int>(u(rng) * 30);
    for (int i = 0; i < n; ++i) times.push_back(t += u(rng));
    h.alpha_time = 0.1 + 3 * u(rng);
    h.beta_time = 0.1 + 3 * u(rng);
    const auto s = stats_at(times, h.psi_tau);
    const double now = t + u(rng);
    for (double tau : h.psi_tau) {
      const auto fit = alpha_map(s, tau, now, h);
      for (double f : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0})
        CHECK(fit.objective >= alpha_objective(s, fit.alpha * f, tau, now, h));
    }
  }
}

TEST_CASE("fit_time_kernel") {
  Hyperparams h;
  SUBCASE("singleton grid") {
    const auto s = stats_at({0.0, 0.3, 0.5});
    const auto k = fit_time_kernel(s, 0.6, h);
    CHECK(k.tau == 1.0);
    CHECK(k.alpha == doctest::Approx(alpha_map(s, 1.0, 0.6, h).alpha));
  }
  SUBCASE("recovers a short time constant") {
    h.psi_tau = {1.0 / 24.0, 30.0};
    // A burst one hour apart, then two months of silence.
    std::vector<double> times;
    for (int i = 0; i < 50; ++i) times.push_back(i / 24.0);
    const auto s = stats_at(times, h.psi_tau);
    const double now = times.back() + 60.0;
    CHECK(alpha_map(s, 1.0 / 24.0, now, h).objective > alpha_map(s, 30.0, now, h).objective);
    CHECK(fit_time_kernel(s, now, h).tau == 1.0 / 24.0);
  }
  SUBCASE("ties go to the smaller time constant") {
    h.psi_tau = {1.0, 2.0};
    // Two simultaneous events at the fit time: both grids see identical data.
    const auto s = stats_at({3.0, 3.0}, h.psi_tau);
    CHECK(fit_time_kernel(s, 3.0, h).tau == 1.0);
  }
}
