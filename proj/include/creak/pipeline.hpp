#pragma once

// End-to-end experiment driver: corpus -> preprocessing -> cached feature
// extraction -> LOSO grid -> report files and run logs.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "creak/config.hpp"
#include "creak/corpus.hpp"
#include "creak/eval.hpp"
#include "creak/feature_cache.hpp"
#include "creak/features.hpp"
#include "creak/preprocess.hpp"
#include "creak/report.hpp"
#include "creak/run_log.hpp"
#include "creak/synth.hpp"
#include "creak/thread_pool.hpp"
#include "creak/wav.hpp"

namespace creak::pipeline {

inline constexpr char kCacheEnv[] = "CREAK_CACHE_DIR";

using Logger = std::function<void(const std::string&)>;

inline Logger stderr_logger(bool quiet) {
  if (quiet) return [](const std::string&) {};
  return [](const std::string& msg) { std::cerr << "[creak] " << msg << '\n'; };
}

struct Context {
  ThreadPool* pool = nullptr;
  Logger log = [](const std::string&) {};
};

// Cache directory: the environment override, then the config value, then
// <output_dir>/cache.
inline std::filesystem::path resolve_cache_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
  if (cfg.cache_dir) return *cfg.cache_dir;
  return cfg.output_dir / "cache";
}

struct PreparedCorpus {
  std::filesystem::path manifest;
  std::vector<LabeledSample> samples;  // balanced, manifest order
  std::size_t n_entries = 0;
  std::size_t excluded = 0;
};

// A synthetic corpus is generated once into <output_dir>/corpus and reused
// while its spec echo matches.
inline std::filesystem::path materialize_synthetic(const SyntheticCorpusSpec& spec, const std::filesystem::path& dir,
                                                   const Context& ctx) {
  const auto manifest = dir / "manifest.csv";
  const auto echo = dir / "synth_spec.json";
  if (std::filesystem::exists(manifest) && std::filesystem::exists(echo)) {
    try {
      if (eval::read_json_file(echo).get<SyntheticCorpusSpec>() == spec) {
        ctx.log("reusing synthetic corpus in " + dir.string());
        return manifest;
      }
    } catch (const std::exception&) {
    }
  }
  ctx.log("generating synthetic corpus (" + std::to_string(2 * spec.n_per_class) + " recordings) in " + dir.string());
  std::filesystem::remove(echo);
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec, dir, ctx.pool);
  eval::write_json_file(echo, json(spec));
  return corpus.manifest_path;
}

inline PreparedCorpus prepare_corpus(const ExperimentConfig& cfg, const Context& ctx) {
  PreparedCorpus pc;
  pc.manifest = cfg.synthetic ? materialize_synthetic(*cfg.synthetic, cfg.output_dir / "corpus", ctx) : *cfg.manifest;
  const auto entries = load_manifest(pc.manifest);
  pc.n_entries = entries.size();
  BinarizedCorpus bc = binarize_all(entries);
  pc.excluded = bc.excluded.size();
  pc.samples = balance_classes(bc.samples, cfg.balance_seed);
  ctx.log(std::to_string(entries.size()) + " manifest entries, " + std::to_string(pc.excluded) +
          " excluded at mean rating 2.0, " + std::to_string(pc.samples.size()) + " kept after balancing (" +
          std::to_string(count_label(pc.samples, CreakLabel::Low)) + " low / " +
          std::to_string(count_label(pc.samples, CreakLabel::High)) + " high)");
  return pc;
}

struct ExtractionStats {
  std::size_t cache_hits = 0;  // recordings served entirely from cache
  std::size_t computed = 0;
};

// Feature tables for the requested kinds, rows in sample order. With a cache
// present, all three kinds are stored whenever a recording is processed.
inline std::map<FeatureKind, eval::FeatureTable> extract_features(const std::vector<LabeledSample>& samples,
                                                                  const std::vector<FeatureKind>& kinds,
                                                                  const PreprocessConfig& pre,
                                                                  const FeatureConfig& feat, const FeatureCache* cache,
                                                                  const Context& ctx, ExtractionStats* stats = nullptr) {
  validate(feat, pre.target_rate);
  const SpectralAnalyzer analyzer(feat, pre.target_rate);
  const std::size_t n = samples.size();
  std::vector<std::array<std::optional<SampleFeatureVector>, 3>> rows(n);
  std::vector<char> hit(n, 0);

  parallel_for(ctx.pool, n, [&](std::size_t i) {
    const auto& path = samples[i].entry.path;
    auto& slot = rows[i];
    try {
      bool all = cache != nullptr;
      if (cache)
        for (auto k : kinds) {
          slot[static_cast<std::size_t>(k)] = cache->load(path, k);
          if (!slot[static_cast<std::size_t>(k)]) all = false;
        }
      if (all) {
        hit[i] = 1;
        return;
      }
      const Waveform w = preprocess(wav::read(path), pre);
      auto vs = extract_all(w, analyzer);
      for (auto& v : vs) {
        if (cache) cache->store(path, v);
        slot[static_cast<std::size_t>(v.kind)] = std::move(v);
      }
    } catch (const std::exception& e) {
      throw Error("recording " + path.string() + " (speaker " + samples[i].entry.speaker_id + "): " + e.what());
    }
  });

  std::map<FeatureKind, eval::FeatureTable> out;
  for (auto k : kinds) {
    eval::FeatureTable t;
    t.kind = k;
    t.x = Matrix(n, feature_dim(k, feat));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = rows[i][static_cast<std::size_t>(k)];
      check_dimension(*v, feat);
      std::copy(v->values.begin(), v->values.end(), t.x.row(i).begin());
      t.y.push_back(samples[i].label);
      t.speakers.push_back(samples[i].entry.speaker_id);
    }
    out.emplace(k, std::move(t));
  }
  if (stats) {
    for (char h : hit) stats->cache_hits += h;
    stats->computed = n - stats->cache_hits;
  }
  return out;
}

struct GridOutcome {
  eval::ExperimentReport report;
  std::vector<eval::RunResult> runs;
  std::map<std::pair<ml::ClassifierKind, FeatureKind>, std::string> failures;
};

inline void check_unique(const ExperimentConfig& cfg) {
  std::set<FeatureKind> f(cfg.feature_kinds.begin(), cfg.feature_kinds.end());
  if (f.size() != cfg.feature_kinds.size()) throw InvalidInput("config: duplicate feature kind");
  std::set<ml::ClassifierKind> c;
  for (const auto& s : cfg.classifiers)
    if (!c.insert(s.kind).second) throw InvalidInput(std::string("config: duplicate classifier ") + ml::to_string(s.kind));
}

// Every (classifier, feature) cell is attempted; a failing cell is recorded
// and the grid continues. Rows and columns use the canonical order, so the
// report does not depend on how the config lists them.
inline GridOutcome evaluate_grid(const ExperimentConfig& cfg, const std::map<FeatureKind, eval::FeatureTable>& tables,
                                 const Context& ctx) {
  check_unique(cfg);
  std::vector<ml::ClassifierKind> rows;
  for (auto k : ml::kAllClassifierKinds)
    for (const auto& s : cfg.classifiers)
      if (s.kind == k) rows.push_back(k);
  std::vector<FeatureKind> cols;
  for (auto k : kAllFeatureKinds)
    if (std::find(cfg.feature_kinds.begin(), cfg.feature_kinds.end(), k) != cfg.feature_kinds.end()) cols.push_back(k);
  GridOutcome g{eval::ExperimentReport(rows, cols), {}, {}};
  eval::RunOptions opt;
  opt.pool = ctx.pool;
  for (const auto& spec : cfg.classifiers)
    for (auto kind : cfg.feature_kinds) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto runs = eval::run_experiment(tables.at(kind), spec, cfg.seeds, opt);
        const auto s = eval::aggregate(runs);
        g.report.set(spec.kind, kind, s.mean_percent, s.std_percent);
        g.runs.insert(g.runs.end(), runs.begin(), runs.end());
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ctx.log(std::string(ml::to_string(spec.kind)) + " x " + to_string(kind) + ": " +
                eval::format_cell(s.mean_percent, s.std_percent) + " (" + eval::format_1dp(secs) + " s)");
      } catch (const std::exception& e) {
        g.report.set_failed(spec.kind, kind, e.what());
        g.failures[{spec.kind, kind}] = e.what();
        ctx.log(std::string(ml::to_string(spec.kind)) + " x " + to_string(kind) + ": FAILED: " + e.what());
      }
    }
  return g;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// report.md, report.csv, logs/ (replaced wholesale) and config.effective.json.
inline void write_outputs(const ExperimentConfig& cfg, const GridOutcome& g) {
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  const auto logs = dir / "logs";
  if (std::filesystem::exists(logs))
    for (const auto& e : std::filesystem::directory_iterator(logs))
      if (e.path().extension() == ".json") std::filesystem::remove(e.path());
  std::filesystem::create_directories(logs);
  for (const auto& r : g.runs)
    eval::write_json_file(logs / eval::run_log_name(r.feature, r.classifier, r.seed), eval::run_to_json(r));
  for (const auto& [key, err] : g.failures)
    eval::write_json_file(logs / eval::failure_log_name(key.second, key.first),
                          eval::failure_to_json(key.second, key.first, err));
  write_text(dir / "report.md", eval::render_report(g.report, eval::ReportFormat::Markdown));
  write_text(dir / "report.csv", eval::render_report(g.report, eval::ReportFormat::Csv));
  eval::write_json_file(dir / "config.effective.json", config_to_json(cfg));
}

struct EvaluateSummary {
  GridOutcome grid;
  PreparedCorpus corpus;
};

inline EvaluateSummary run_evaluate(const ExperimentConfig& cfg, const Context& ctx) {
  validate(cfg);
  check_unique(cfg);
  PreparedCorpus pc = prepare_corpus(cfg, ctx);
  const FeatureCache cache(resolve_cache_dir(cfg), cfg.preprocess, cfg.features);
  ExtractionStats stats;
  const auto tables = extract_features(pc.samples, cfg.feature_kinds, cfg.preprocess, cfg.features, &cache, ctx, &stats);
  ctx.log("features: " + std::to_string(stats.cache_hits) + " cached, " + std::to_string(stats.computed) + " computed");
  GridOutcome g = evaluate_grid(cfg, tables, ctx);
  write_outputs(cfg, g);
  ctx.log("wrote " + (cfg.output_dir / "report.md").string());
  return {std::move(g), std::move(pc)};
}

}  // namespace creak::pipeline
