#pragma once

#include "sdhp/generative.hpp"
#include "sdhp/particle.hpp"
#include "sdhp/types.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdhp {

enum class TimeUnit { seconds, days };

/// One input record before tokenization and projection.
struct RawPost {
  double t{0.0};
  TimeUnit unit{TimeUnit::seconds};
  bool geographic{true};  // (a, b) = (lat, lon) in degrees, else planar (x, y)
  double a{0.0};
  double b{0.0};
  std::string text;
  std::optional<PatternId> label;
  std::size_t line{0};  // 1-based line of the source file
};

enum class InputFormat { jsonl, csv };

/// Format from the file extension (.jsonl/.json or .csv).
[[nodiscard]] InputFormat format_from_path(const std::filesystem::path& path);

/// Seconds since 1970-01-01T00:00:00Z for an ISO-8601 date-time such as
/// 2014-03-01T12:30:00Z, 2014-03-01 12:30:00.5+01:00 or 2014-03-01. Throws
/// DataError on anything else.
[[nodiscard]] double parse_iso8601(const std::string& s);

/// Reads every record, sorted by time (stable). Malformed rows are reported
/// together, each with its line number, in one DataError.
[[nodiscard]] std::vector<RawPost> load_posts(const std::filesystem::path& path, InputFormat format);
[[nodiscard]] std::vector<RawPost> load_posts(const std::filesystem::path& path);

/// Equirectangular projection to metres about a reference point.
struct Projection {
  bool geographic{false};
  double lat0{0.0};
  double lon0{0.0};

  static constexpr double kEarthRadius = 6371008.8;

  [[nodiscard]] Vec2 forward(double lat, double lon) const;
  /// (lat, lon) for a planar point; identity when not geographic.
  [[nodiscard]] std::pair<double, double> inverse(Vec2 r) const;
};

struct Corpus {
  std::vector<GeoPost> posts;
  std::vector<std::string> vocabulary;  // word id → token
  std::vector<std::string> removed;     // the filtered frequent tokens
  std::size_t dropped_empty{0};
  Projection projection;
  double time_origin{0.0};  // seconds of the earliest post, for seconds input
};

/// Lowercase whitespace tokens.
[[nodiscard]] std::vector<std::string> tokenize(const std::string& text);

/// Tokenizes, drops the top_k most frequent tokens (ties lexicographic) and
/// posts left without tokens, projects to metres about the centroid, and
/// converts times to days (relative to the earliest post for second input).
[[nodiscard]] Corpus preprocess(std::span<const RawPost> corpus, std::size_t top_k = 200);

struct ExportOptions {
  std::vector<PatternId> intensity_patterns;
  std::size_t intensity_points{200};
  std::size_t top_words{10};
};

/// Writes assignments.csv, patterns.csv and intensity_<label>.csv to `dir`.
void export_results(const ClusteringResult& result, const Corpus& corpus, const std::filesystem::path& dir,
                    const ExportOptions& options = {});

[[nodiscard]] std::vector<PatternId> read_assignments(const std::filesystem::path& path);

/// JSONL with keys day, x, y, text ("w<id>" tokens) and label.
void write_dataset(std::span<const GeoPost> posts, const std::filesystem::path& path);

/// One row per pattern: label, alpha, tau, center_x, center_y, sigma, theta.
void write_ground_truth(std::span<const PatternParams> patterns, const std::filesystem::path& path);
[[nodiscard]] std::vector<PatternParams> read_ground_truth(const std::filesystem::path& path);

/// Splits one RFC 4180 record. `line` must not contain a bare line break
/// outside quotes.
[[nodiscard]] std::vector<std::string> split_csv_record(const std::string& line);

}  // namespace sdhp
