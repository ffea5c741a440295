#include "sdhp/types.hpp"

#include "sdhp/error.hpp"

#include <algorithm>
#include <string>

namespace sdhp {

void validate_post(const GeoPost& post) {
  if (!std::isfinite(post.t) || post.t < 0.0)
    throw ValidationError("post time must be finite and non-negative, got " + std::to_string(post.t));
  if (post.words.empty()) throw ValidationError("post has no words");
  if (!post.r.finite()) throw ValidationError("post location must be finite");
}

void Hyperparams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  require(lambda0 > 0.0 && std::isfinite(lambda0), "lambda0 must be positive");
  require(theta0 > 0.0 && std::isfinite(theta0), "theta0 must be positive");
  require(beta_space > 0.0 && std::isfinite(beta_space), "beta_space must be positive");
  require(alpha_time > 0.0 && std::isfinite(alpha_time), "alpha_time must be positive");
  require(beta_time > 0.0, "beta_time must be positive");
  require(!psi_tau.empty(), "psi_tau must be non-empty");
  for (std::size_t i = 0; i < psi_tau.size(); ++i) {
    require(psi_tau[i] > 0.0 && std::isfinite(psi_tau[i]), "psi_tau entries must be positive");
    require(i == 0 || psi_tau[i] > psi_tau[i - 1], "psi_tau must be strictly increasing");
  }
  require(n_particles >= 1, "n_particles must be at least 1");
  require(kappa_thresh > 0.0 && kappa_thresh <= 1.0, "kappa_thresh must lie in (0, 1]");
  require(vocab_size >= 1, "vocab_size must be at least 1");
}

std::optional<std::size_t> Hyperparams::tau_index(double tau) const {
  auto it = std::find(psi_tau.begin(), psi_tau.end(), tau);
  if (it == psi_tau.end()) return std::nullopt;
  return static_cast<std::size_t>(it - psi_tau.begin());
}

std::vector<double> calendar_time_constants() {
  return {1.0 / 24.0, 1.0, 7.0, 30.0, 91.0, 365.0};
}

DocCounts DocCounts::from_words(std::span<const WordId> words) {
  std::vector<WordId> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  DocCounts doc;
  for (WordId w : sorted) {
    if (!doc.counts.empty() && doc.counts.back().first == w)
      ++doc.counts.back().second;
    else
      doc.counts.emplace_back(w, 1u);
  }
  doc.total = static_cast<std::uint32_t>(sorted.size());
  return doc;
}

}  // namespace sdhp
