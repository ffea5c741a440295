#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sdhp {

using WordId = std::uint32_t;
using PatternId = std::uint32_t;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  friend bool operator==(Vec2, Vec2) = default;

  [[nodiscard]] double norm2() const { return x * x + y * y; }
  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// One observed event of the stream.
struct GeoPost {
  double t{0.0};                  // days
  std::vector<WordId> words;      // order is irrelevant to the model
  Vec2 r;
  std::optional<PatternId> true_label;
  // Location withheld from the model (location prediction protocol). The
  // post still carries its time and content.
  bool location_hidden{false};
};

/// Throws ValidationError if `post` violates the GeoPost invariants.
void validate_post(const GeoPost& post);

/// Exponential triggering kernel alpha * exp(-dt / tau).
struct TimeKernel {
  double alpha{0.0};
  double tau{1.0};
  friend bool operator==(const TimeKernel&, const TimeKernel&) = default;
};

/// Model hyperparameters. Defaults are the common synthetic-experiment setup.
struct Hyperparams {
  double lambda0{10.0};
  double theta0{1.0};
  double beta_space{0.01};
  double alpha_time{0.1};
  double beta_time{0.2};
  std::vector<double> psi_tau{1.0};
  std::size_t n_particles{4};
  double kappa_thresh{0.9};
  std::size_t vocab_size{15};

  /// Throws ValidationError on the first violated constraint.
  void validate() const;

  /// Index of `tau` in psi_tau, if present (exact match).
  [[nodiscard]] std::optional<std::size_t> tau_index(double tau) const;
};

/// Ψ_τ for calendar-scale data, in days: hour, day, week, month, quarter, year.
std::vector<double> calendar_time_constants();

/// Word histogram of one document, sorted by word id.
struct DocCounts {
  std::vector<std::pair<WordId, std::uint32_t>> counts;
  std::uint32_t total{0};

  static DocCounts from_words(std::span<const WordId> words);
};

}  // namespace sdhp
