// Structured-text (JSON) snapshot of a ParticleSystem. Patterns shared
// between particles are written once and referenced by index, so a restored
// system has the same sharing and resumes bit-for-bit.

#include "sdhp/error.hpp"
#include "sdhp/smc.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace sdhp {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json encode_real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double decode_real(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  throw DataError("bad real value in checkpoint: " + s);
}

template <typename Engine>
std::string rng_state(const Engine& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

template <typename Engine>
void restore_rng(Engine& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw DataError("corrupt random stream state in checkpoint");
}

json encode_pattern(const PatternStats& stats) {
  const auto raw = stats.raw_state();
  json words = json::array();
  std::vector<std::pair<WordId, std::uint32_t>> sorted(raw.words.map().begin(), raw.words.map().end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [w, c] : sorted) words.push_back({w, c});
  const auto& sp = raw.spatial;
  return {{"event_times", raw.event_times},
          {"decay", raw.decay},
          {"log_excitation", raw.log_excitation},
          {"t_ref", raw.t_ref},
          {"words", words},
          {"spatial",
           {{"n", sp.n},
            {"sum", {sp.sum.x, sp.sum.y}},
            {"sum_sq", sp.sum_sq},
            {"mean", {sp.mean.x, sp.mean.y}},
            {"centered", sp.centered}}}};
}

PatternStats decode_pattern(const json& j, const std::shared_ptr<const std::vector<double>>& taus) {
  PatternStats::RawState raw;
  raw.event_times = j.at("event_times").get<std::vector<double>>();
  raw.decay = j.at("decay").get<std::vector<double>>();
  raw.log_excitation = j.at("log_excitation").get<std::vector<double>>();
  raw.t_ref = j.at("t_ref").get<double>();
  for (const auto& wc : j.at("words")) raw.words.set(wc.at(0).get<WordId>(), wc.at(1).get<std::uint32_t>());
  const auto& sp = j.at("spatial");
  raw.spatial.n = sp.at("n").get<std::size_t>();
  raw.spatial.sum = {sp.at("sum").at(0).get<double>(), sp.at("sum").at(1).get<double>()};
  raw.spatial.sum_sq = sp.at("sum_sq").get<double>();
  raw.spatial.mean = {sp.at("mean").at(0).get<double>(), sp.at("mean").at(1).get<double>()};
  raw.spatial.centered = sp.at("centered").get<double>();
  return PatternStats::from_raw(taus, std::move(raw));
}

const char* refit_name(RefitMode m) {
  switch (m) {
    case RefitMode::all_patterns: return "all";
    case RefitMode::assigned_only: return "assigned";
    case RefitMode::none: return "none";
  }
  return "all";
}

RefitMode refit_from(const std::string& s) {
  if (s == "all") return RefitMode::all_patterns;
  if (s == "assigned") return RefitMode::assigned_only;
  if (s == "none") return RefitMode::none;
  throw DataError("unknown refit mode in checkpoint: " + s);
}

}  // namespace

void ParticleSystem::save(std::ostream& out) const {
  json j;
  j["format"] = "sdhp-checkpoint";
  j["version"] = kCheckpointVersion;
  j["hyper"] = {{"lambda0", hyper_.lambda0},         {"theta0", hyper_.theta0},
                {"beta_space", hyper_.beta_space},   {"alpha_time", hyper_.alpha_time},
                {"beta_time", encode_real(hyper_.beta_time)},
                {"psi_tau", hyper_.psi_tau},         {"n_particles", hyper_.n_particles},
                {"kappa_thresh", hyper_.kappa_thresh}, {"vocab_size", hyper_.vocab_size}};
  json opts = {{"use_spatial", options_.use_spatial},
               {"refit", refit_name(options_.refit)},
               {"kernel_init", options_.kernel_init == KernelInit::prior_draw ? "draw" : "mean"},
               {"prune", options_.prune},
               {"prune_epsilon", options_.prune_epsilon},
               {"threads", options_.threads}};
  if (options_.fixed_kernel) opts["fixed_kernel"] = {options_.fixed_kernel->alpha, options_.fixed_kernel->tau};
  j["options"] = opts;
  j["steps"] = steps_;
  j["resamples"] = resamples_;
  j["last_time"] = last_time_;
  j["rng"] = rng_state(rng_);

  std::unordered_map<const PatternStats*, std::size_t> pool_index;
  json pool = json::array();
  json particles = json::array();
  for (const Particle& p : particles_) {
    json refs = json::array();
    for (const auto& ptr : p.patterns) {
      auto [it, inserted] = pool_index.try_emplace(ptr.get(), pool.size());
      if (inserted) pool.push_back(encode_pattern(*ptr));
      refs.push_back(it->second);
    }
    json kernels = json::array();
    for (const TimeKernel& k : p.kernels) kernels.push_back({k.alpha, k.tau});
    particles.push_back({{"assignments", p.assignments.to_vector()},
                         {"patterns", refs},
                         {"kernels", kernels},
                         {"active", p.active},
                         {"weight", p.weight},
                         {"log_weight", encode_real(p.log_weight)},
                         {"last_time", p.last_time},
                         {"rng", rng_state(p.rng)}});
  }
  j["pattern_pool"] = std::move(pool);
  j["particles"] = std::move(particles);
  out << j.dump() << '\n';
  if (!out) throw DataError("failed to write checkpoint");
}

ParticleSystem ParticleSystem::load(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "sdhp-checkpoint") throw DataError("not an sdhp checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) throw DataError("unsupported checkpoint version");

    ParticleSystem s;
    const auto& h = j.at("hyper");
    s.hyper_.lambda0 = h.at("lambda0").get<double>();
    s.hyper_.theta0 = h.at("theta0").get<double>();
    s.hyper_.beta_space = h.at("beta_space").get<double>();
    s.hyper_.alpha_time = h.at("alpha_time").get<double>();
    s.hyper_.beta_time = decode_real(h.at("beta_time"));
    s.hyper_.psi_tau = h.at("psi_tau").get<std::vector<double>>();
    s.hyper_.n_particles = h.at("n_particles").get<std::size_t>();
    s.hyper_.kappa_thresh = h.at("kappa_thresh").get<double>();
    s.hyper_.vocab_size = h.at("vocab_size").get<std::size_t>();
    s.hyper_.validate();

    const auto& o = j.at("options");
    s.options_.use_spatial = o.at("use_spatial").get<bool>();
    s.options_.refit = refit_from(o.at("refit").get<std::string>());
    s.options_.kernel_init = o.at("kernel_init") == "draw" ? KernelInit::prior_draw : KernelInit::prior_mean;
    s.options_.prune = o.at("prune").get<bool>();
    s.options_.prune_epsilon = o.at("prune_epsilon").get<double>();
    s.options_.threads = o.at("threads").get<int>();
    if (o.contains("fixed_kernel"))
      s.options_.fixed_kernel = TimeKernel{o["fixed_kernel"].at(0).get<double>(), o["fixed_kernel"].at(1).get<double>()};

    s.taus_ = std::make_shared<const std::vector<double>>(s.hyper_.psi_tau);
    s.steps_ = j.at("steps").get<std::size_t>();
    s.resamples_ = j.at("resamples").get<std::size_t>();
    s.last_time_ = j.at("last_time").get<double>();
    restore_rng(s.rng_, j.at("rng").get<std::string>());

    std::vector<std::shared_ptr<PatternStats>> pool;
    for (const auto& pj : j.at("pattern_pool"))
      pool.push_back(std::make_shared<PatternStats>(decode_pattern(pj, s.taus_)));

    for (const auto& pj : j.at("particles")) {
      Particle p;
      for (PatternId a : pj.at("assignments").get<std::vector<PatternId>>()) p.assignments.push_back(a);
      for (std::size_t ref : pj.at("patterns").get<std::vector<std::size_t>>()) p.patterns.push_back(pool.at(ref));
      for (const auto& k : pj.at("kernels")) p.kernels.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
      p.active = pj.at("active").get<std::vector<PatternId>>();
      p.weight = pj.at("weight").get<double>();
      p.log_weight = decode_real(pj.at("log_weight"));
      p.last_time = pj.at("last_time").get<double>();
      restore_rng(p.rng, pj.at("rng").get<std::string>());
      if (p.kernels.size() != p.patterns.size() || p.assignments.size() != s.steps_)
        throw DataError("inconsistent particle in checkpoint");
      s.particles_.push_back(std::move(p));
    }
    if (s.particles_.size() != s.hyper_.n_particles) throw DataError("checkpoint particle count mismatch");
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace sdhp
