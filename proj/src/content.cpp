#include "sdhp/content.hpp"

#include <cmath>

namespace sdhp {

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double content_log_marginal(const WordCounts& pattern, const DocCounts& doc, double theta0,
                            std::size_t vocab_size) {
  const double prior_mass = static_cast<double>(vocab_size) * theta0;
  const double c_total = static_cast<double>(pattern.total());
  double lp = log_gamma(c_total + prior_mass) - log_gamma(c_total + doc.total + prior_mass);
  for (const auto& [w, c] : doc.counts) {
    const double cv = static_cast<double>(pattern.count(w));
    lp += log_gamma(cv + c + theta0) - log_gamma(cv + theta0);
  }
  return lp;
}

double sequential_predictive_oracle(const WordCounts& pattern, const DocCounts& doc, double theta0,
                                    std::size_t vocab_size) {
  const double prior_mass = static_cast<double>(vocab_size) * theta0;
  double seen = static_cast<double>(pattern.total());
  double lp = 0.0;
  for (const auto& [w, c] : doc.counts) {
    double cv = static_cast<double>(pattern.count(w));
    for (std::uint32_t j = 0; j < c; ++j) {
      lp += std::log((cv + theta0) / (seen + prior_mass));
      cv += 1.0;
      seen += 1.0;
    }
  }
  return lp;
}

}  // namespace sdhp
