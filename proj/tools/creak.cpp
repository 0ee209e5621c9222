// creak: synthetic corpus generation, feature extraction, LOSO evaluation and
// report rendering from the command line.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "creak/config.hpp"
#include "creak/pipeline.hpp"
#include "creak/run_log.hpp"
#include "creak/synth.hpp"

namespace fs = std::filesystem;
using namespace creak;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Interval parse_interval(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 2) throw UsageError("interval must be LO,HI: " + s);
  try {
    return {std::stod(parts[0]), std::stod(parts[1])};
  } catch (const std::exception&) {
    throw UsageError("interval must be LO,HI: " + s);
  }
}

struct CommonOptions {
  std::string config;
  std::string manifest;
  std::string out;
  std::string cache_dir;
  std::size_t jobs = ThreadPool::default_size();
  bool quiet = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--manifest", manifest, "Manifest CSV; replaces the config's corpus")->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", out, "Output directory");
    cmd->add_option("--cache-dir", cache_dir, "Feature cache directory");
    cmd->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("-q,--quiet", quiet, "No progress logging");
  }

  // File values first, then flags.
  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? default_config() : load_config(config);
    if (!manifest.empty()) {
      cfg.manifest = fs::path(manifest);
      cfg.synthetic.reset();
    }
    if (!out.empty()) cfg.output_dir = out;
    if (!cache_dir.empty()) cfg.cache_dir = fs::path(cache_dir);
    return cfg;
  }
};

int cmd_synth(const SyntheticCorpusSpec& spec, const std::string& out, bool quiet) {
  ThreadPool pool;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec, out, &pool);
  std::size_t low = 0;
  for (const auto& e : corpus.entries) low += binarize(e)->label == CreakLabel::Low;
  std::cout << "manifest: " << corpus.manifest_path.string() << '\n'
            << "recordings: " << corpus.entries.size() << " (low " << low << ", high " << corpus.entries.size() - low
            << ")\n";
  if (!quiet) std::cerr << "[creak] wrote " << corpus.entries.size() << " WAV files to " << out << '\n';
  return 0;
}

int cmd_extract(const CommonOptions& o, const std::string& features) {
  ExperimentConfig cfg = o.resolve();
  if (!features.empty()) {
    cfg.feature_kinds.clear();
    for (const auto& f : split_list(features)) cfg.feature_kinds.push_back(feature_kind_from_string(f));
  }
  validate(cfg);
  ThreadPool pool(o.jobs);
  const pipeline::Context ctx{&pool, pipeline::stderr_logger(o.quiet)};
  const auto pc = pipeline::prepare_corpus(cfg, ctx);
  const FeatureCache cache(pipeline::resolve_cache_dir(cfg), cfg.preprocess, cfg.features);
  pipeline::ExtractionStats stats;
  const auto tables =
      pipeline::extract_features(pc.samples, cfg.feature_kinds, cfg.preprocess, cfg.features, &cache, ctx, &stats);
  std::cout << "recordings: " << pc.samples.size() << " (" << stats.cache_hits << " cached, " << stats.computed
            << " computed)\n"
            << "cache: " << cache.directory().string() << '\n';
  for (const auto& [kind, table] : tables) std::cout << to_string(kind) << ": " << table.x.cols() << '\n';
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& features, const std::string& classifiers,
                 const std::string& seeds) {
  ExperimentConfig cfg = o.resolve();
  if (!features.empty()) {
    cfg.feature_kinds.clear();
    for (const auto& f : split_list(features)) cfg.feature_kinds.push_back(feature_kind_from_string(f));
  }
  if (!classifiers.empty()) {
    std::vector<ml::ClassifierSpec> picked;
    for (const auto& name : split_list(classifiers)) {
      const auto kind = ml::classifier_kind_from_string(name);
      auto it = std::find_if(cfg.classifiers.begin(), cfg.classifiers.end(),
                             [&](const ml::ClassifierSpec& s) { return s.kind == kind; });
      picked.push_back(it != cfg.classifiers.end() ? *it : ml::default_spec(kind));
    }
    cfg.classifiers = std::move(picked);
  }
  if (!seeds.empty()) {
    cfg.seeds.clear();
    for (const auto& s : split_list(seeds)) {
      try {
        cfg.seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw UsageError("bad seed: " + s);
      }
    }
  }
  ThreadPool pool(o.jobs);
  const pipeline::Context ctx{&pool, pipeline::stderr_logger(o.quiet)};
  const auto summary = pipeline::run_evaluate(cfg, ctx);
  std::cout << "report: " << (cfg.output_dir / "report.md").string() << '\n';
  if (!summary.grid.report.all_succeeded()) {
    std::cerr << "error: " << summary.grid.failures.size() << " grid cell(s) failed\n";
    return kExitFailure;
  }
  return 0;
}

int cmd_report(const std::string& logs, std::string out) {
  const auto report = eval::report_from_logs(logs);
  if (out.empty()) out = fs::path(logs).parent_path().string();
  if (out.empty()) out = ".";
  fs::create_directories(out);
  pipeline::write_text(fs::path(out) / "report.md", eval::render_report(report, eval::ReportFormat::Markdown));
  pipeline::write_text(fs::path(out) / "report.csv", eval::render_report(report, eval::ReportFormat::Csv));
  std::cout << "report: " << (fs::path(out) / "report.md").string() << '\n';
  return report.all_succeeded() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Creaky voice classification experiments"};
  app.require_subcommand(1);

  SyntheticCorpusSpec spec;
  std::string synth_out, low, high;
  bool synth_quiet = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("-n,--n-per-class", spec.n_per_class, "Recordings per class")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
  synth->add_option("--sample-rate", spec.sample_rate, "Sample rate in Hz")->capture_default_str();
  synth->add_option("--duration", spec.duration_s, "Seconds per recording")->capture_default_str();
  synth->add_option("--low", low, "Creak fraction interval of the low class, LO,HI");
  synth->add_option("--high", high, "Creak fraction interval of the high class, LO,HI");
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_flag("-q,--quiet", synth_quiet, "No progress logging");

  CommonOptions extract_opts;
  std::string extract_features;
  auto* extract = app.add_subcommand("extract", "Preprocess recordings and fill the feature cache");
  extract_opts.add_to(extract);
  extract->add_option("--features", extract_features, "Comma-separated feature kinds");

  CommonOptions eval_opts;
  std::string eval_features, eval_classifiers, eval_seeds;
  auto* evaluate = app.add_subcommand("evaluate", "Run the LOSO feature x classifier grid");
  eval_opts.add_to(evaluate);
  evaluate->add_option("--features", eval_features, "Comma-separated feature kinds");
  evaluate->add_option("--classifiers", eval_classifiers, "Comma-separated classifiers");
  evaluate->add_option("--seeds", eval_seeds, "Comma-separated seeds");

  std::string logs_dir, report_out;
  auto* report = app.add_subcommand("report", "Re-render the report from run logs");
  report->add_option("--logs", logs_dir, "Directory of run logs")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", report_out, "Output directory (default: parent of --logs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) {
      if (!low.empty()) spec.creak_fraction_low = parse_interval(low);
      if (!high.empty()) spec.creak_fraction_high = parse_interval(high);
      try {
        validate(spec);
      } catch (const InvalidInput& e) {
        throw UsageError(e.what());
      }
      return cmd_synth(spec, synth_out, synth_quiet);
    }
    if (*extract) return cmd_extract(extract_opts, extract_features);
    if (*evaluate) return cmd_evaluate(eval_opts, eval_features, eval_classifiers, eval_seeds);
    if (*report) return cmd_report(logs_dir, report_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
