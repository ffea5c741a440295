#include "sdhp/data_io.hpp"

#include "sdhp/error.hpp"
#include "sdhp/pattern_stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace sdhp {

namespace {

using nlohmann::json;

constexpr double kSecondsPerDay = 86400.0;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_number(const std::string& s, const char* what) {
  std::string trimmed = s;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
  std::size_t start = 0;
  while (start < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[start]))) ++start;
  double v = 0.0;
  const char* first = trimmed.data() + start;
  const char* last = trimmed.data() + trimmed.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw DataError(std::string("bad ") + what + ": '" + s + "'");
  return v;
}

int digits(const std::string& s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw DataError("bad ISO-8601 time: '" + s + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) throw DataError("bad ISO-8601 time: '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

// Days since 1970-01-01 of a proleptic Gregorian date.
long long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<long long>(era) * 146097 + static_cast<long long>(doe) - 719468;
}

struct FieldSet {
  std::optional<double> t_seconds, t_days;
  std::optional<double> lat, lon, x, y;
  std::optional<std::string> text;
  std::optional<PatternId> label;
};

RawPost finish(const FieldSet& f, std::size_t line) {
  RawPost p;
  p.line = line;
  if (f.t_days) {
    p.t = *f.t_days;
    p.unit = TimeUnit::days;
  } else if (f.t_seconds) {
    p.t = *f.t_seconds;
    p.unit = TimeUnit::seconds;
  } else {
    throw DataError("missing time");
  }
  if (!std::isfinite(p.t)) throw DataError("time is not finite");
  if (f.lat && f.lon) {
    if (std::abs(*f.lat) > 90.0) throw DataError("latitude out of range");
    if (std::abs(*f.lon) > 180.0) throw DataError("longitude out of range");
    p.geographic = true;
    p.a = *f.lat;
    p.b = *f.lon;
  } else if (f.x && f.y) {
    p.geographic = false;
    p.a = *f.x;
    p.b = *f.y;
  } else {
    throw DataError("missing location (lat/lon or x/y)");
  }
  if (!std::isfinite(p.a) || !std::isfinite(p.b)) throw DataError("location is not finite");
  if (!f.text) throw DataError("missing text");
  p.text = *f.text;
  p.label = f.label;
  return p;
}

double json_time(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_iso8601(v.get<std::string>());
  throw DataError("time must be a number or an ISO-8601 string");
}

double json_real(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_number(v.get<std::string>(), what);
  throw DataError(std::string(what) + " must be a number");
}

RawPost parse_json_record(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    throw DataError("not valid JSON");
  }
  if (!j.is_object()) throw DataError("record is not an object");
  FieldSet f;
  if (j.contains("day")) f.t_days = json_real(j["day"], "day");
  if (j.contains("t")) f.t_seconds = json_time(j["t"]);
  if (j.contains("lat")) f.lat = json_real(j["lat"], "lat");
  if (j.contains("lon")) f.lon = json_real(j["lon"], "lon");
  if (j.contains("x")) f.x = json_real(j["x"], "x");
  if (j.contains("y")) f.y = json_real(j["y"], "y");
  if (j.contains("text")) {
    if (!j["text"].is_string()) throw DataError("text must be a string");
    f.text = j["text"].get<std::string>();
  }
  if (j.contains("label") && !j["label"].is_null()) f.label = j["label"].get<PatternId>();
  return finish(f, line);
}

std::vector<RawPost> load_jsonl(std::istream& in, std::vector<std::string>& errors) {
  std::vector<RawPost> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(parse_json_record(line, n));
    } catch (const DataError& e) {
      errors.push_back("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

bool quotes_balanced(const std::string& s) { return std::count(s.begin(), s.end(), '"') % 2 == 0; }

std::vector<RawPost> load_csv(std::istream& in, std::vector<std::string>& errors) {
  std::vector<RawPost> out;
  std::string line;
  std::size_t n = 0;
  std::map<std::string, std::size_t> columns;
  std::size_t header_width = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::size_t start_line = n;
    std::string record = line;
    while (!quotes_balanced(record) && std::getline(in, line)) {
      ++n;
      record += '\n';
      record += line;
    }
    if (!record.empty() && record.back() == '\r') record.pop_back();
    if (record.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    try {
      cells = split_csv_record(record);
    } catch (const DataError& e) {
      errors.push_back("line " + std::to_string(start_line) + ": " + e.what());
      continue;
    }
    if (columns.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) columns[lower(cells[i])] = i;
      header_width = cells.size();
      continue;
    }
    try {
      if (cells.size() != header_width)
        throw DataError("expected " + std::to_string(header_width) + " fields, got " + std::to_string(cells.size()));
      auto cell = [&](const char* name) -> const std::string* {
        auto it = columns.find(name);
        return it == columns.end() ? nullptr : &cells[it->second];
      };
      FieldSet f;
      if (auto c = cell("day")) f.t_days = parse_number(*c, "day");
      if (auto c = cell("t")) {
        try {
          f.t_seconds = parse_number(*c, "time");
        } catch (const DataError&) {
          f.t_seconds = parse_iso8601(*c);
        }
      }
      if (auto c = cell("lat")) f.lat = parse_number(*c, "lat");
      if (auto c = cell("lon")) f.lon = parse_number(*c, "lon");
      if (auto c = cell("x")) f.x = parse_number(*c, "x");
      if (auto c = cell("y")) f.y = parse_number(*c, "y");
      if (auto c = cell("text")) f.text = *c;
      if (auto c = cell("label"); c && !c->empty()) f.label = static_cast<PatternId>(parse_number(*c, "label"));
      out.push_back(finish(f, start_line));
    } catch (const DataError& e) {
      errors.push_back("line " + std::to_string(start_line) + ": " + e.what());
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

InputFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return InputFormat::jsonl;
  if (ext == ".csv") return InputFormat::csv;
  throw ValidationError("cannot tell the format of " + path.string() + " from its extension");
}

double parse_iso8601(const std::string& s) {
  const int year = digits(s, 0, 4);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw DataError("bad ISO-8601 time: '" + s + "'");
  const int month = digits(s, 5, 2);
  const int day = digits(s, 8, 2);
  if (month < 1 || month > 12 || day < 1 || day > 31) throw DataError("bad ISO-8601 date: '" + s + "'");
  double seconds = 0.0;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') throw DataError("bad ISO-8601 time: '" + s + "'");
    const int hh = digits(s, pos + 1, 2);
    if (pos + 3 >= s.size() || s[pos + 3] != ':') throw DataError("bad ISO-8601 time: '" + s + "'");
    const int mm = digits(s, pos + 4, 2);
    pos += 6;
    double ss = 0.0;
    if (pos < s.size() && s[pos] == ':') {
      ss = digits(s, pos + 1, 2);
      pos += 3;
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        std::size_t end = pos + 1;
        while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
        if (end == pos + 1) throw DataError("bad ISO-8601 time: '" + s + "'");
        ss += parse_number("0." + s.substr(pos + 1, end - pos - 1), "fractional seconds");
        pos = end;
      }
    }
    if (hh > 24 || mm > 59 || ss >= 61.0) throw DataError("bad ISO-8601 time: '" + s + "'");
    seconds = hh * 3600.0 + mm * 60.0 + ss;
    if (pos < s.size()) {
      if (s[pos] == 'Z' && pos + 1 == s.size()) {
        ++pos;
      } else if ((s[pos] == '+' || s[pos] == '-') && (s.size() == pos + 6 || s.size() == pos + 5 || s.size() == pos + 3)) {
        const int sign = s[pos] == '+' ? 1 : -1;
        const int oh = digits(s, pos + 1, 2);
        int om = 0;
        if (s.size() == pos + 6) {
          if (s[pos + 3] != ':') throw DataError("bad ISO-8601 offset: '" + s + "'");
          om = digits(s, pos + 4, 2);
        } else if (s.size() == pos + 5) {
          om = digits(s, pos + 3, 2);
        }
        seconds -= sign * (oh * 3600.0 + om * 60.0);
        pos = s.size();
      } else {
        throw DataError("bad ISO-8601 time: '" + s + "'");
      }
    }
  }
  return static_cast<double>(days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day))) *
             kSecondsPerDay +
         seconds;
}

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty() || was_quoted) throw DataError("stray quote in field");
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw DataError("text after closing quote");
      cur += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  cells.push_back(std::move(cur));
  return cells;
}

std::vector<RawPost> load_posts(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> errors;
  std::vector<RawPost> posts = format == InputFormat::jsonl ? load_jsonl(in, errors) : load_csv(in, errors);
  if (!errors.empty()) {
    std::string msg = path.string() + ": " + std::to_string(errors.size()) + " malformed row(s)";
    for (const auto& e : errors) msg += "\n  " + e;
    throw DataError(msg);
  }
  if (posts.empty()) throw DataError(path.string() + ": no posts");
  std::stable_sort(posts.begin(), posts.end(), [](const RawPost& a, const RawPost& b) { return a.t < b.t; });
  return posts;
}

std::vector<RawPost> load_posts(const std::filesystem::path& path) { return load_posts(path, format_from_path(path)); }

Vec2 Projection::forward(double lat, double lon) const {
  if (!geographic) return {lat, lon};
  constexpr double deg = std::numbers::pi / 180.0;
  return {kEarthRadius * (lon - lon0) * deg * std::cos(lat0 * deg), kEarthRadius * (lat - lat0) * deg};
}

std::pair<double, double> Projection::inverse(Vec2 r) const {
  if (!geographic) return {r.x, r.y};
  constexpr double deg = std::numbers::pi / 180.0;
  return {lat0 + r.y / (kEarthRadius * deg), lon0 + r.x / (kEarthRadius * deg * std::cos(lat0 * deg))};
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(lower(tok));
  return out;
}

Corpus preprocess(std::span<const RawPost> corpus, std::size_t top_k) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  const bool geographic = corpus.front().geographic;
  const TimeUnit unit = corpus.front().unit;
  for (const RawPost& p : corpus) {
    if (p.geographic != geographic) throw DataError("line " + std::to_string(p.line) + ": mixed lat/lon and x/y");
    if (p.unit != unit) throw DataError("line " + std::to_string(p.line) + ": mixed time units");
  }

  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(corpus.size());
  std::unordered_map<std::string, std::size_t> freq;
  for (const RawPost& p : corpus) {
    tokens.push_back(tokenize(p.text));
    for (const auto& t : tokens.back()) ++freq[t];
  }

  Corpus out;
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t n_removed = std::min(top_k, ranked.size());
  for (std::size_t i = 0; i < n_removed; ++i) out.removed.push_back(ranked[i].first);
  std::sort(out.removed.begin(), out.removed.end());
  for (std::size_t i = n_removed; i < ranked.size(); ++i) out.vocabulary.push_back(ranked[i].first);
  std::sort(out.vocabulary.begin(), out.vocabulary.end());
  std::unordered_map<std::string, WordId> ids;
  for (std::size_t i = 0; i < out.vocabulary.size(); ++i) ids.emplace(out.vocabulary[i], static_cast<WordId>(i));

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    bool any = false;
    for (const auto& t : tokens[i]) any = any || ids.contains(t);
    if (any)
      kept.push_back(i);
    else
      ++out.dropped_empty;
  }
  if (kept.empty()) throw DataError("every post is empty after filtering frequent words");

  out.projection.geographic = geographic;
  if (geographic) {
    // Centroid of the surviving posts; longitude averaged as given, which is
    // adequate away from the antimeridian.
    double lat = 0.0, lon = 0.0;
    for (std::size_t i : kept) {
      lat += corpus[i].a;
      lon += corpus[i].b;
    }
    out.projection.lat0 = lat / static_cast<double>(kept.size());
    out.projection.lon0 = lon / static_cast<double>(kept.size());
  }
  double origin = INFINITY;
  for (std::size_t i : kept) origin = std::min(origin, corpus[i].t);
  out.time_origin = unit == TimeUnit::seconds ? origin : 0.0;

  for (std::size_t i : kept) {
    const RawPost& p = corpus[i];
    GeoPost g;
    g.t = unit == TimeUnit::seconds ? (p.t - origin) / kSecondsPerDay : p.t;
    for (const auto& t : tokens[i])
      if (auto it = ids.find(t); it != ids.end()) g.words.push_back(it->second);
    g.r = out.projection.forward(p.a, p.b);
    g.true_label = p.label;
    out.posts.push_back(std::move(g));
  }
  return out;
}

void export_results(const ClusteringResult& result, const Corpus& corpus, const std::filesystem::path& dir,
                    const ExportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open_out(dir / "assignments.csv");
    out << "post,pattern\n";
    for (std::size_t i = 0; i < result.assignments.size(); ++i) out << i << ',' << result.assignments[i] << '\n';
    if (!out) throw DataError("failed writing assignments.csv");
  }
  {
    auto out = open_out(dir / "patterns.csv");
    const bool geo = corpus.projection.geographic;
    out << "label,size,located," << (geo ? "mean_lat,mean_lon" : "mean_x,mean_y")
        << ",sigma,alpha,tau,first_time,last_time,time_span,top_words\n";
    for (const PatternSummary& p : result.patterns) {
      out << p.label << ',' << p.size << ',' << p.n_located << ',';
      if (p.mean) {
        const auto [a, b] = corpus.projection.inverse(*p.mean);
        out << a << ',' << b << ',';
      } else {
        out << ",,";
      }
      if (p.scale) out << *p.scale;
      out << ',' << p.kernel.alpha << ',' << p.kernel.tau << ',' << p.first_time << ',' << p.last_time << ','
          << p.time_span << ',';
      std::string words;
      for (std::size_t i = 0; i < p.top_words.size() && i < options.top_words; ++i) {
        if (i) words += ' ';
        const WordId w = p.top_words[i].first;
        words += w < corpus.vocabulary.size() ? corpus.vocabulary[w] : "w" + std::to_string(w);
      }
      out << csv_quote(words) << '\n';
    }
    if (!out) throw DataError("failed writing patterns.csv");
  }
  for (PatternId label : options.intensity_patterns) {
    if (label >= result.patterns.size()) throw ValidationError("no pattern " + std::to_string(label));
    const PatternSummary& p = result.patterns[label];
    const double t0 = p.first_time;
    const double t1 = p.last_time + 5.0 * p.kernel.tau;
    std::vector<double> grid;
    const std::size_t n = std::max<std::size_t>(options.intensity_points, 2);
    for (std::size_t i = 0; i < n; ++i) grid.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1));
    auto out = open_out(dir / ("intensity_" + std::to_string(label) + ".csv"));
    out << "t,intensity\n";
    for (double t : grid) {
      double lambda = 0.0;
      for (double ti : p.event_times) {
        if (ti > t) break;
        lambda += p.kernel.alpha * std::exp(-(t - ti) / p.kernel.tau);
      }
      out << t << ',' << lambda << '\n';
    }
    if (!out) throw DataError("failed writing intensity trace");
  }
}

std::vector<PatternId> read_assignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  std::vector<PatternId> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_record(line);
    if (cells.size() != 2) throw DataError(path.string() + ": line " + std::to_string(n) + ": expected 2 fields");
    const auto idx = static_cast<std::size_t>(parse_number(cells[0], "post index"));
    if (idx != out.size()) throw DataError(path.string() + ": line " + std::to_string(n) + ": post index out of order");
    out.push_back(static_cast<PatternId>(parse_number(cells[1], "pattern label")));
  }
  return out;
}

void write_dataset(std::span<const GeoPost> posts, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const GeoPost& p : posts) {
    std::string text;
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      if (i) text += ' ';
      text += 'w' + std::to_string(p.words[i]);
    }
    json j = {{"day", p.t}, {"x", p.r.x}, {"y", p.r.y}, {"text", text}};
    if (p.true_label) j["label"] = *p.true_label;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_ground_truth(std::span<const PatternParams> patterns, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "label,alpha,tau,center_x,center_y,sigma,theta\n";
  for (std::size_t s = 0; s < patterns.size(); ++s) {
    const PatternParams& p = patterns[s];
    out << s << ',' << p.kernel.alpha << ',' << p.kernel.tau << ',' << p.center.x << ',' << p.center.y << ','
        << p.sigma << ',';
    std::ostringstream theta;
    theta.precision(17);
    for (std::size_t w = 0; w < p.theta.size(); ++w) theta << (w ? " " : "") << p.theta[w];
    out << theta.str() << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<PatternParams> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  std::vector<PatternParams> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto cells = split_csv_record(line);
      if (cells.size() != 7) throw DataError("expected 7 fields");
      if (static_cast<std::size_t>(parse_number(cells[0], "label")) != out.size())
        throw DataError("labels must be 0, 1, 2, ... in order");
      PatternParams p;
      p.kernel = {parse_number(cells[1], "alpha"), parse_number(cells[2], "tau")};
      p.center = {parse_number(cells[3], "center_x"), parse_number(cells[4], "center_y")};
      p.sigma = parse_number(cells[5], "sigma");
      std::istringstream theta(cells[6]);
      std::string v;
      while (theta >> v) p.theta.push_back(parse_number(v, "theta"));
      out.push_back(std::move(p));
    } catch (const DataError& e) {
      throw DataError(path.string() + ": line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sdhp
