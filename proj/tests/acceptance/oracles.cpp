#include "oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace oracle {

double content_chain(std::map<WordId, std::uint64_t> counts, const std::vector<WordId>& tokens, double theta0,
                     std::size_t vocab_size) {
  double total = 0.0;
  for (const auto& [w, c] : counts) total += static_cast<double>(c);
  double logp = 0.0;
  for (WordId w : tokens) {
    logp += std::log((static_cast<double>(counts[w]) + theta0) / (total + theta0 * static_cast<double>(vocab_size)));
    ++counts[w];
    total += 1.0;
  }
  return logp;
}

namespace {

using boost::math::quadrature::gauss_kronrod;

// log ∫ dσ⁻² Ga(σ⁻² | 1, β) ∫ d²R Π_i N(r_i | R, σ²I), dropping the factor β.
double log_evidence_quadrature(const std::vector<Vec2>& pts, double beta) {
  const double n = static_cast<double>(pts.size());
  Vec2 mean;
  for (Vec2 p : pts) mean += p / n;
  double sx = 0.0, sy = 0.0;
  for (Vec2 p : pts) {
    sx += (p.x - mean.x) * (p.x - mean.x);
    sy += (p.y - mean.y) * (p.y - mean.y);
  }
  // scale for the precision axis
  const double phi_star = n / (beta + 0.5 * (sx + sy));

  // ∫ exp(−φ Σ(x_i − R)²/2 + φ s/2) dR with R = m + z/√(nφ)
  auto inner = [&](double phi, bool x_axis) {
    const double m = x_axis ? mean.x : mean.y;
    const double s = x_axis ? sx : sy;
    const double scale = 1.0 / std::sqrt(n * phi);
    auto f = [&](double z) {
      const double R = m + z * scale;
      double q = 0.0;
      for (Vec2 p : pts) {
        const double d = (x_axis ? p.x : p.y) - R;
        q += d * d;
      }
      return std::exp(-0.5 * phi * (q - s));
    };
    return scale * gauss_kronrod<double, 31>::integrate(f, -14.0, 14.0, 8, 1e-14);
  };

  auto log_outer = [&](double u) {
    const double phi = phi_star * std::exp(u);
    return -beta * phi + n * std::log(phi / (2 * std::numbers::pi)) + std::log(phi) - 0.5 * phi * (sx + sy) +
           std::log(inner(phi, true)) + std::log(inner(phi, false));
  };
  const double g0 = log_outer(0.0);
  auto outer = [&](double u) {
    const double g = log_outer(u);
    return std::isfinite(g) ? std::exp(g - g0) : 0.0;
  };
  const double integral = gauss_kronrod<double, 61>::integrate(outer, -60.0, 8.0, 15, 1e-13);
  return g0 + std::log(integral);
}

}  // namespace

double spatial_predictive_quadrature(const std::vector<Vec2>& members, Vec2 query, double beta_space) {
  if (members.empty()) throw std::invalid_argument("quadrature needs at least one member");
  std::vector<Vec2> with = members;
  with.push_back(query);
  return std::exp(log_evidence_quadrature(with, beta_space) - log_evidence_quadrature(members, beta_space));
}

double spatial_log_evidence(const std::vector<Vec2>& members, double beta_space) {
  const double n = static_cast<double>(members.size());
  if (members.empty()) return 0.0;
  Vec2 mean;
  for (Vec2 p : members) mean += p / n;
  double ss = 0.0;
  for (Vec2 p : members) ss += (p - mean).norm2();
  const double xi = beta_space + 0.5 * ss;
  return std::log(beta_space) + (1.0 - n) * std::log(2 * std::numbers::pi) + std::lgamma(n) - std::log(n) -
         n * std::log(xi);
}

AlphaPosterior::AlphaPosterior(const std::vector<double>& times, double tau, double t_now, double alpha_time,
                               double beta_time)
    : events_(times.size()), alpha_time_(alpha_time), beta_time_(beta_time) {
  for (std::size_t i = 1; i < times.size(); ++i) {
    // log Σ_j exp(−(t_i − t_j)/τ), the nearest earlier event dominates
    const double top = -(times[i] - times[i - 1]) / tau;
    double inner = 0.0;
    for (std::size_t j = 0; j < i; ++j) inner += std::exp(-(times[i] - times[j]) / tau - top);
    log_excitation_ += top + std::log(inner);
  }
  for (double t : times) exposure_ += tau * (1.0 - std::exp(-(t_now - t) / tau));
}

double AlphaPosterior::operator()(double alpha) const {
  const double log_alpha = std::log(alpha);
  return (alpha_time_ - 1.0) * log_alpha - beta_time_ * alpha + static_cast<double>(events_ - 1) * log_alpha +
         log_excitation_ - alpha * exposure_;
}

namespace {

double log_joint(const std::vector<StreamPost>& posts, const std::vector<PatternId>& s, double lambda0, double alpha,
                 double tau, double theta0, std::size_t vocab, double beta) {
  const std::size_t n = posts.size();
  const PatternId k = *std::max_element(s.begin(), s.end()) + 1;
  double lj = 0.0;
  // temporal: Π λ_{s_n}(t_n) · exp(−∫₀^{t_N} λ)
  for (std::size_t i = 0; i < n; ++i) {
    double lam = 0.0;
    bool seen = false;
    for (std::size_t j = 0; j < i; ++j)
      if (s[j] == s[i]) {
        seen = true;
        lam += alpha * std::exp(-(posts[i].t - posts[j].t) / tau);
      }
    lj += std::log(seen ? lam : lambda0);
  }
  const double t_end = posts.back().t;
  double comp = lambda0 * t_end;
  for (const auto& p : posts) comp += alpha * tau * (1.0 - std::exp(-(t_end - p.t) / tau));
  lj -= comp;
  // content and space, pattern by pattern
  for (PatternId c = 0; c < k; ++c) {
    std::vector<WordId> tokens;
    std::vector<Vec2> where;
    for (std::size_t i = 0; i < n; ++i)
      if (s[i] == c) {
        tokens.insert(tokens.end(), posts[i].words.begin(), posts[i].words.end());
        where.push_back(posts[i].r);
      }
    lj += content_chain({}, tokens, theta0, vocab);
    lj += spatial_log_evidence(where, beta);
  }
  return lj;
}

void restricted_growth(std::size_t n, std::vector<PatternId>& cur, PatternId next_label,
                       std::vector<std::vector<PatternId>>& out) {
  if (cur.size() == n) {
    out.push_back(cur);
    return;
  }
  for (PatternId c = 0; c <= next_label; ++c) {
    cur.push_back(c);
    restricted_growth(n, cur, c == next_label ? next_label + 1 : next_label, out);
    cur.pop_back();
  }
}

}  // namespace

Enumeration enumerate_posterior(const std::vector<StreamPost>& posts, double lambda0, double alpha, double tau,
                                double theta0, std::size_t vocab_size, double beta_space) {
  Enumeration e;
  std::vector<PatternId> cur;
  restricted_growth(posts.size(), cur, 0, e.partitions);
  std::vector<double> lj;
  lj.reserve(e.partitions.size());
  for (const auto& s : e.partitions) lj.push_back(log_joint(posts, s, lambda0, alpha, tau, theta0, vocab_size, beta_space));
  const double best = *std::max_element(lj.begin(), lj.end());
  double z = 0.0;
  for (double v : lj) z += std::exp(v - best);
  for (double v : lj) e.probability.push_back(std::exp(v - best) / z);
  e.map_index = static_cast<std::size_t>(std::max_element(e.probability.begin(), e.probability.end()) -
                                         e.probability.begin());
  return e;
}

double sign_test_p(std::size_t k, std::size_t n) {
  double p = 0.0;
  for (std::size_t i = k; i <= n; ++i)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return p;
}


// Asymptotic Kolmogorov-Smirnov tail probability for statistic d on n samples.
double ks_p_value(double d, double n) {
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace oracle
