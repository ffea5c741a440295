#pragma once

#include "sdhp/pattern_stats.hpp"
#include "sdhp/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace sdhp::test {

inline GeoPost post(double t, std::vector<WordId> words = {0}, Vec2 r = {}) {
  GeoPost p;
  p.t = t;
  p.words = std::move(words);
  p.r = r;
  return p;
}

inline std::shared_ptr<const std::vector<double>> taus(std::vector<double> v = {1.0}) {
  return std::make_shared<const std::vector<double>>(std::move(v));
}

inline PatternStats stats_at(std::vector<double> times, std::vector<double> tau = {1.0}) {
  PatternStats s(taus(std::move(tau)));
  for (double t : times) s.attach(post(t), DocCounts::from_words(std::vector<WordId>{0}));
  return s;
}

}  // namespace sdhp::test

#include "sdhp/particle.hpp"

namespace sdhp::test {

inline void add_pattern(Particle& p, PatternStats stats, TimeKernel kernel) {
  p.active.push_back(static_cast<PatternId>(p.patterns.size()));
  p.patterns.push_back(std::make_shared<PatternStats>(std::move(stats)));
  p.kernels.push_back(kernel);
}

}  // namespace sdhp::test

namespace sdhp::test {

/// A fresh, empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(SDHP_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Asymptotic Kolmogorov-Smirnov tail probability for statistic d on n samples.
inline double ks_p_value(double d, double n) {
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace sdhp::test
