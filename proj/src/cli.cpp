#include "sdhp/cli.hpp"

#include "sdhp/baselines.hpp"
#include "sdhp/data_io.hpp"
#include "sdhp/error.hpp"
#include "sdhp/evaluation.hpp"
#include "sdhp/generative.hpp"
#include "sdhp/smc.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace sdhp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Hyperparameter flags shared by every subcommand.
struct HyperFlags {
  Hyperparams hyper;
  std::size_t vocab{0};  // 0: take V from the data

  void add(CLI::App& app, bool data_vocab) {
    app.add_option("--lambda0", hyper.lambda0, "Base rate of new patterns")->capture_default_str();
    app.add_option("--theta0", hyper.theta0, "Symmetric Dirichlet prior on word distributions")->capture_default_str();
    app.add_option("--beta-space", hyper.beta_space, "Inverse-gamma scale of the spatial variance prior")
        ->capture_default_str();
    app.add_option("--alpha-time", hyper.alpha_time, "Gamma shape of the self-excitation prior")
        ->capture_default_str();
    app.add_option("--beta-time", hyper.beta_time, "Gamma rate of the self-excitation prior")->capture_default_str();
    app.add_option("--tau", hyper.psi_tau, "Candidate decay time constants (days)")->capture_default_str();
    app.add_flag_callback("--calendar-taus", [this] { hyper.psi_tau = calendar_time_constants(); },
                          "Use hour, day, week, month, quarter and year as candidate time constants");
    app.add_option("--particles", hyper.n_particles, "Number of particles")->capture_default_str();
    app.add_option("--kappa", hyper.kappa_thresh, "Resample when ESS falls below kappa times the particle count")
        ->capture_default_str();
    if (data_vocab)
      app.add_option("--vocab", vocab, "Vocabulary size (0: size of the filtered vocabulary)")->capture_default_str();
    else
      app.add_option("--vocab", hyper.vocab_size, "Vocabulary size")->capture_default_str();
  }

  [[nodiscard]] Hyperparams for_corpus(const Corpus& corpus) const {
    Hyperparams h = hyper;
    h.vocab_size = vocab > 0 ? vocab : corpus.vocabulary.size();
    if (h.vocab_size < corpus.vocabulary.size())
      throw ValidationError("--vocab is smaller than the vocabulary of the data (" +
                            std::to_string(corpus.vocabulary.size()) + ")");
    h.validate();
    return h;
  }
};

struct EngineFlags {
  EngineOptions options;
  bool spatial_off{false};
  std::string refit{"all"};
  std::string kernel_init{"mean"};

  void add(CLI::App& app, bool allow_spatial_off = true) {
    if (allow_spatial_off)
      app.add_flag("--spatial-off", spatial_off, "Ignore locations (Dirichlet Hawkes process)");
    app.add_option("--refit", refit, "Which kernels to refit after each post")
        ->check(CLI::IsMember({"all", "assigned", "none"}))
        ->capture_default_str();
    app.add_option("--kernel-init", kernel_init, "Kernel of a new pattern: prior mean or prior draw")
        ->check(CLI::IsMember({"mean", "draw"}))
        ->capture_default_str();
    app.add_flag("--prune", options.prune, "Skip patterns whose intensity is negligible");
    app.add_option("--prune-epsilon", options.prune_epsilon, "Negligible intensity, relative to lambda0")
        ->capture_default_str();
    app.add_option("--threads", options.threads, "Worker threads for the particle loop")->capture_default_str();
  }

  [[nodiscard]] EngineOptions get() const {
    EngineOptions o = options;
    o.use_spatial = !spatial_off;
    o.refit = refit == "all" ? RefitMode::all_patterns : refit == "assigned" ? RefitMode::assigned_only : RefitMode::none;
    o.kernel_init = kernel_init == "draw" ? KernelInit::prior_draw : KernelInit::prior_mean;
    if (o.threads < 1) throw ValidationError("--threads must be at least 1");
    if (!(o.prune_epsilon > 0.0)) throw ValidationError("--prune-epsilon must be positive");
    return o;
  }
};

struct InputFlags {
  std::string input;
  std::size_t top_k{200};

  void add(CLI::App& app) {
    app.add_option("-i,--input", input, "Post stream (.jsonl or .csv)")->required();
    app.add_option("--top-k", top_k, "Drop this many most frequent words (0 for synthetic data)")
        ->capture_default_str();
  }

  [[nodiscard]] Corpus load() const { return preprocess(load_posts(input), top_k); }
};

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    body(out);
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------

struct GenerateCmd {
  HyperFlags hyper;
  SynthConfig config;
  double sigma0{0.1};
  bool sigma_prior{false};
  std::optional<double> alpha;
  bool unbounded{false};
  std::string out;
  std::string truth;

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("generate", "Sample a synthetic post stream");
    hyper.add(*app, false);
    app->add_option("--n", config.n_posts, "Number of posts")->capture_default_str();
    app->add_option("--n-words", config.n_words, "Words per post")->capture_default_str();
    app->add_option("--sigma0", sigma0, "Spatial scale of every pattern")->capture_default_str();
    app->add_flag("--sigma-prior", sigma_prior, "Draw each pattern's spatial scale from the prior instead");
    app->add_option("--alpha", alpha, "Fixed self-excitation for every pattern");
    app->add_flag("--unbounded", unbounded, "Do not confine locations to the unit square");
    app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    app->add_option("-o,--out", out, "Output stream (.jsonl)")->required();
    app->add_option("--truth", truth, "Ground-truth pattern file (default: <out>.truth.csv)");
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    config.hyper = hyper.hyper;
    config.sigma0 = sigma_prior ? std::nullopt : std::optional<double>(sigma0);
    config.alpha_override = alpha;
    config.unit_square = !unbounded;
    config.validate();
    const SyntheticDataset data = generate(config);
    const fs::path truth_path = truth.empty() ? fs::path(out + ".truth.csv") : fs::path(truth);
    write_dataset(data.posts, out);
    write_ground_truth(data.patterns, truth_path);
    os << json{{"posts", data.posts.size()}, {"patterns", data.patterns.size()}, {"out", out},
               {"truth", truth_path.string()}}.dump()
       << '\n';
  }
};

struct InferCmd {
  HyperFlags hyper;
  EngineFlags engine;
  InputFlags input;
  std::uint64_t seed{1};
  std::string out;
  std::string checkpoint;
  std::size_t checkpoint_every{0};
  std::string resume;
  std::optional<std::size_t> stop_after;
  std::vector<PatternId> intensity;

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("infer", "Cluster a post stream into spatiotemporal patterns");
    hyper.add(*app, true);
    engine.add(*app);
    input.add(*app);
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("-o,--out", out, "Output directory")->required();
    app->add_option("--checkpoint", checkpoint, "Checkpoint file written during and after the run");
    app->add_option("--checkpoint-every", checkpoint_every, "Write the checkpoint every this many posts")
        ->capture_default_str();
    app->add_option("--resume", resume, "Continue from this checkpoint");
    app->add_option("--stop-after", stop_after, "Stop after this many posts in total");
    app->add_option("--intensity", intensity, "Pattern labels whose intensity trace is exported");
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    if (checkpoint_every > 0 && checkpoint.empty()) throw ValidationError("--checkpoint-every needs --checkpoint");
    const Corpus corpus = input.load();
    const Hyperparams h = hyper.for_corpus(corpus);
    const EngineOptions opts = engine.get();

    std::optional<ParticleSystem> system;
    if (!resume.empty()) {
      std::ifstream in(resume, std::ios::binary);
      if (!in) throw DataError("cannot open " + resume);
      system.emplace(ParticleSystem::load(in));
      if (system->steps() > corpus.posts.size()) throw DataError("checkpoint is ahead of the input stream");
    } else {
      system.emplace(h, opts, seed);
    }
    auto save = [&] {
      write_atomic(checkpoint, [&](std::ostream& o) { system->save(o); });
    };
    const std::size_t end = std::min(corpus.posts.size(), stop_after.value_or(corpus.posts.size()));
    for (std::size_t n = system->steps(); n < end; ++n) {
      system->step(corpus.posts[n]);
      if (checkpoint_every > 0 && system->steps() % checkpoint_every == 0) save();
    }
    if (!checkpoint.empty()) save();

    const ClusteringResult result = system->map_estimate();
    ExportOptions ex;
    ex.intensity_patterns = intensity;
    export_results(result, corpus, out, ex);
    os << json{{"posts", system->steps()},
               {"patterns", result.patterns.size()},
               {"resamples", system->resample_count()},
               {"dropped_empty", corpus.dropped_empty},
               {"vocab", h.vocab_size},
               {"out", out}}
              .dump()
       << '\n';
  }
};

struct NmiCmd {
  std::string input;
  std::string assignments;
  std::string normalization{"arithmetic"};

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("nmi", "NMI of inferred labels against the labels in a dataset");
    app->add_option("-i,--input", input, "Labelled post stream")->required();
    app->add_option("-a,--assignments", assignments, "assignments.csv from infer")->required();
    app->add_option("--normalization", normalization, "Entropy mean used as normalizer")
        ->check(CLI::IsMember({"arithmetic", "geometric", "max"}))
        ->capture_default_str();
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    const auto raw = load_posts(input);
    std::vector<PatternId> truth;
    for (const RawPost& p : raw) {
      if (!p.label) throw DataError(input + ": line " + std::to_string(p.line) + ": no label");
      truth.push_back(*p.label);
    }
    const auto pred = read_assignments(assignments);
    const NmiNormalization norm = normalization == "geometric" ? NmiNormalization::geometric
                                  : normalization == "max"     ? NmiNormalization::max
                                                               : NmiNormalization::arithmetic;
    os << json{{"nmi", nmi(truth, pred, norm)}, {"posts", truth.size()}}.dump() << '\n';
  }
};

struct SweepCmd {
  HyperFlags hyper;
  EngineFlags engine;
  SynthConfig base;
  double sigma0{0.1};
  std::string param{"sigma0"};
  std::vector<double> values;
  std::size_t trials{20};
  bool compare_dhp{false};
  bool beta_from_sigma{false};
  std::string out;

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("sweep", "Mean NMI with standard errors over a grid of synthetic regimes");
    hyper.add(*app, false);
    engine.add(*app, false);
    app->add_option("--param", param, "Swept quantity")
        ->check(CLI::IsMember({"sigma0", "n-words", "n"}))
        ->capture_default_str();
    app->add_option("--values", values, "Grid values")->required();
    app->add_option("--trials", trials, "Trials per grid value")->capture_default_str();
    app->add_option("--n", base.n_posts, "Number of posts")->capture_default_str();
    app->add_option("--n-words", base.n_words, "Words per post")->capture_default_str();
    app->add_option("--sigma0", sigma0, "Spatial scale of every pattern")->capture_default_str();
    app->add_flag("--compare-dhp", compare_dhp, "Also run the Dirichlet Hawkes process on the same datasets");
    app->add_flag("--beta-space-from-sigma0", beta_from_sigma, "Set beta-space to sigma0 squared for inference");
    app->add_option("--seed", base.seed, "Random seed")->capture_default_str();
    app->add_option("-o,--out", out, "Output table (default: standard output)");
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    if (trials == 0) throw ValidationError("--trials must be positive");
    const EngineOptions opts = engine.get();
    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw DataError("cannot write " + out);
    }
    std::ostream& table = out.empty() ? os : file;
    table << "param,value,trials,sdhp_mean,sdhp_stderr";
    if (compare_dhp) table << ",dhp_mean,dhp_stderr";
    table << '\n';
    for (std::size_t v = 0; v < values.size(); ++v) {
      SynthConfig config = base;
      config.hyper = hyper.hyper;
      config.sigma0 = sigma0;
      if (param == "sigma0") config.sigma0 = values[v];
      if (param == "n-words") config.n_words = static_cast<std::size_t>(values[v]);
      if (param == "n") config.n_posts = static_cast<std::size_t>(values[v]);
      Hyperparams inference = config.hyper;
      if (beta_from_sigma) inference.beta_space = *config.sigma0 * *config.sigma0;
      std::vector<double> sdhp_scores, dhp_scores;
      for (std::size_t t = 0; t < trials; ++t) {
        SynthConfig c = config;
        c.seed = derive_seed(base.seed, v, t);
        c.validate();
        const SyntheticDataset data = generate(c);
        const auto labels = true_labels(data.posts);
        const std::uint64_t inference_seed = derive_seed(base.seed, v, t + trials);
        sdhp_scores.push_back(nmi(labels, run_sdhp(data.posts, inference, opts, inference_seed).map_estimate().assignments));
        if (compare_dhp)
          dhp_scores.push_back(nmi(labels, run_dhp(data.posts, inference, opts, inference_seed).assignments));
      }
      const MeanStderr s = mean_stderr(sdhp_scores);
      table << param << ',' << values[v] << ',' << trials << ',' << s.mean << ',' << s.stderr_;
      if (compare_dhp) {
        const MeanStderr d = mean_stderr(dhp_scores);
        table << ',' << d.mean << ',' << d.stderr_;
      }
      table << '\n' << std::flush;
    }
  }
};

std::size_t size_bucket(std::size_t n) {
  if (n <= 5) return 0;
  if (n <= 20) return 1;
  if (n <= 100) return 2;
  return 3;
}

struct DeltaAlphaCmd {
  HyperFlags hyper;
  EngineFlags engine;
  InputFlags input;
  std::string truth;
  std::uint64_t seed{1};
  std::string out;

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("delta-alpha", "Self-excitation precision per inferred pattern");
    hyper.add(*app, true);
    engine.add(*app);
    input.add(*app);
    app->add_option("--truth", truth, "Ground-truth pattern file from generate")->required();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("-o,--out", out, "Per-pattern table (default: standard output)");
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    const Corpus corpus = input.load();
    const Hyperparams h = hyper.for_corpus(corpus);
    const auto params = read_ground_truth(truth);
    const ClusteringResult result = run_sdhp(corpus.posts, h, engine.get(), seed).map_estimate();
    const auto records = alpha_precision_by_pattern(result, corpus.posts, params);
    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw DataError("cannot write " + out);
    }
    std::ostream& table = out.empty() ? os : file;
    table << "pattern,true_pattern,size,alpha_true,alpha_hat,delta\n";
    std::array<std::vector<double>, 4> buckets;
    for (const auto& r : records) {
      table << r.inferred_label << ',' << r.true_label << ',' << r.size << ',' << r.alpha_true << ',' << r.alpha_hat
            << ',' << r.delta << '\n';
      buckets[size_bucket(r.size)].push_back(r.delta);
    }
    static const char* names[] = {"2-5", "6-20", "21-100", ">100"};
    json summary = json::array();
    for (std::size_t b = 0; b < 4; ++b) {
      json row = {{"bucket", names[b]}, {"patterns", buckets[b].size()}};
      if (!buckets[b].empty()) {
        auto& v = buckets[b];
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        row["median_delta"] = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
      }
      summary.push_back(row);
    }
    if (!out.empty()) os << json{{"buckets", summary}}.dump() << '\n';
  }
};

struct PredictCmd {
  HyperFlags hyper;
  EngineFlags engine;
  InputFlags input;
  LocationProtocolConfig config;
  std::string records;

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("predict", "Hidden-location prediction with loose and tight selection");
    hyper.add(*app, true);
    engine.add(*app, false);
    input.add(*app);
    app->add_option("--trials", config.trials, "Number of hiding trials")->capture_default_str();
    app->add_option("--hide", config.hide_fraction, "Fraction of posts hidden per trial")->capture_default_str();
    app->add_option("--burn-in", config.burn_in_fraction, "Leading fraction of posts never hidden")
        ->capture_default_str();
    app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    app->add_option("--records", records, "Write every kept prediction to this file");
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    if (config.trials == 0) throw ValidationError("--trials must be positive");
    if (!(config.hide_fraction > 0.0 && config.hide_fraction < 1.0)) throw ValidationError("--hide must be in (0, 1)");
    if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 1.0))
      throw ValidationError("--burn-in must be in [0, 1)");
    const Corpus corpus = input.load();
    const Hyperparams h = hyper.for_corpus(corpus);
    config.engine = engine.get();
    const auto kept = location_prediction_protocol(corpus.posts, h, config);
    const double sigma = dataset_spatial_scale(corpus.posts);
    if (!records.empty()) {
      std::ofstream f(records);
      if (!f) throw DataError("cannot write " + records);
      f.precision(17);
      f << "post,trial,pred_x,pred_y,true_x,true_y,pattern_size,sigma_hat,error\n";
      for (const auto& r : kept)
        f << r.post_index << ',' << r.trial << ',' << r.predicted.x << ',' << r.predicted.y << ',' << r.truth.x << ','
          << r.truth.y << ',' << r.pattern_size << ',' << r.sigma_hat << ',' << r.error() << '\n';
    }
    json res = {{"predictions", kept.size()}, {"dataset_sigma", sigma}};
    for (Selection s : {Selection::loose, Selection::tight}) {
      const RmseResult r = rmse_selected(kept, s, sigma, config.seed);
      const char* name = s == Selection::loose ? "loose" : "tight";
      res[name] = {{"rmse", r.normalized_rmse ? json(*r.normalized_rmse) : json("insufficient")},
                   {"survivors", r.survivors},
                   {"used", r.used}};
    }
    os << res.dump() << '\n';
  }
};

struct GofCmd {
  HyperFlags hyper;
  EngineFlags engine;
  InputFlags input;
  GofWindow window;
  std::vector<std::string> models{"sdhp", "dhp", "gmm", "uniform"};
  std::uint64_t seed{1};

  void add(CLI::App& parent, std::function<void()>& action, std::ostream& os) {
    auto* app = parent.add_subcommand("gof", "Spatial goodness of fit and perplexity of one-step predictions");
    hyper.add(*app, true);
    engine.add(*app, false);
    input.add(*app);
    app->add_option("--burn-in", window.burn_in, "Posts never scored")->capture_default_str();
    app->add_option("--end", window.end, "Last scored post")->capture_default_str();
    app->add_option("--models", models, "Models to score")
        ->delimiter(',')
        ->check(CLI::IsMember({"sdhp", "dhp", "gmm", "uniform"}))
        ->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->callback([this, &action, &os] { action = [this, &os] { run(os); }; });
  }

  void run(std::ostream& os) {
    const Corpus corpus = input.load();
    const Hyperparams h = hyper.for_corpus(corpus);
    const EngineOptions opts = engine.get();
    const auto& posts = corpus.posts;
    if (posts.size() < window.end)
      throw ValidationError("goodness of fit needs at least " + std::to_string(window.end) + " posts, got " +
                            std::to_string(posts.size()));
    auto wants = [&](const char* m) { return std::find(models.begin(), models.end(), m) != models.end(); };
    const bool need_sdhp = wants("sdhp") || wants("dhp") || wants("gmm");

    json res = json::object();
    std::vector<std::size_t> counts;
    if (need_sdhp) {
      SdhpOneStep sdhp_loc(h, opts, seed);
      const GofResult g = spatial_gof(posts, sdhp_loc, window);
      SdhpOneStep sdhp_txt(h, opts, seed);
      const GofResult p = perplexity(posts, sdhp_txt, window);
      counts = sdhp_loc.pattern_counts();
      if (wants("sdhp")) res["sdhp"] = {{"spatial_gof", g.value}, {"perplexity", p.value}};
    }
    if (wants("dhp")) {
      const std::size_t target = counts.at(window.burn_in - 1);
      Hyperparams dh = h;
      dh.lambda0 = tune_dhp_lambda0(std::span(posts).first(window.burn_in), h, target, opts, seed);
      EngineOptions dopts = opts;
      dopts.use_spatial = false;
      SdhpOneStep dhp(dh, dopts, seed);
      const GofResult p = perplexity(posts, dhp, window);
      res["dhp"] = {{"perplexity", p.value}, {"lambda0", dh.lambda0}};
    }
    if (wants("gmm")) {
      GmmOneStep gmm(counts, 2.0 * h.beta_space, seed);
      res["gmm"] = {{"spatial_gof", spatial_gof(posts, gmm, window).value}};
    }
    if (wants("uniform")) {
      UniformOneStep u(h.vocab_size);
      res["uniform"] = {{"spatial_gof", spatial_gof(posts, u, window).value},
                        {"perplexity", perplexity(posts, u, window).value}};
    }
    res["window"] = {window.burn_in, window.end};
    os << res.dump() << '\n';
  }
};

void report(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatiotemporal pattern discovery in geolocated post streams"};
  app.set_config("--config", "", "Configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  std::function<void()> action;
  GenerateCmd generate_cmd;
  InferCmd infer_cmd;
  PredictCmd predict_cmd;
  GofCmd gof_cmd;
  NmiCmd nmi_cmd;
  SweepCmd sweep_cmd;
  DeltaAlphaCmd delta_cmd;
  PredictCmd eval_predict_cmd;
  GofCmd eval_gof_cmd;

  generate_cmd.add(app, action, out);
  infer_cmd.add(app, action, out);
  predict_cmd.add(app, action, out);
  gof_cmd.add(app, action, out);
  auto* evaluate = app.add_subcommand("evaluate", "Metrics and experimental protocols");
  evaluate->require_subcommand(1);
  nmi_cmd.add(*evaluate, action, out);
  sweep_cmd.add(*evaluate, action, out);
  delta_cmd.add(*evaluate, action, out);
  eval_predict_cmd.add(*evaluate, action, out);
  eval_gof_cmd.add(*evaluate, action, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    report(err, "usage", e.what());
    return 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ValidationError& e) {
    report(err, "validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    report(err, "runtime", e.what());
    return 2;
  }
}

}  // namespace sdhp::cli
