#pragma once

// Leave-one-speaker-out evaluation and accuracy aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "creak/corpus.hpp"
#include "creak/error.hpp"
#include "creak/features.hpp"
#include "creak/ml/classifier.hpp"
#include "creak/thread_pool.hpp"

namespace creak::eval {

struct Fold {
  std::string test_speaker;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// One fold per distinct speaker, ordered by speaker id.
inline std::vector<Fold> loso_folds(const std::vector<std::string>& speakers) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < speakers.size(); ++i) groups[speakers[i]].push_back(i);
  if (groups.size() < 2) throw InvalidInput("loso_folds: need at least two distinct speakers");
  std::vector<Fold> folds;
  folds.reserve(groups.size());
  for (const auto& [speaker, idx] : groups) {
    Fold f;
    f.test_speaker = speaker;
    f.test_indices = idx;
    for (std::size_t i = 0; i < speakers.size(); ++i)
      if (speakers[i] != speaker) f.train_indices.push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

inline std::vector<Fold> loso_folds(const std::vector<LabeledSample>& samples) {
  std::vector<std::string> speakers;
  speakers.reserve(samples.size());
  for (const auto& s : samples) speakers.push_back(s.entry.speaker_id);
  return loso_folds(speakers);
}

// Features of one kind for every sample, with labels and speaker ids.
struct FeatureTable {
  FeatureKind kind = FeatureKind::Spectrogram;
  Matrix x;
  std::vector<CreakLabel> y;
  std::vector<std::string> speakers;
};

struct Prediction {
  std::size_t fold = 0;
  std::size_t sample = 0;
  std::string speaker;
  CreakLabel truth = CreakLabel::Low;
  CreakLabel predicted = CreakLabel::Low;

  bool correct() const { return truth == predicted; }
  bool operator==(const Prediction&) const = default;
};

struct RunResult {
  FeatureKind feature = FeatureKind::Spectrogram;
  ml::ClassifierKind classifier = ml::ClassifierKind::DecisionTree;
  std::uint64_t seed = 0;
  std::vector<Prediction> predictions;  // fold order, then sample order
  double accuracy = 0.0;
};

inline double accuracy_of(const std::vector<Prediction>& preds) {
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& p : preds) ok += p.correct();
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

// What the scaler of one fold saw; used to audit for test leakage.
struct FoldAudit {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  ml::ZScoreScaler scaler;
  std::vector<std::size_t> rows_read;
};

using AuditSink = std::function<void(const Fold&, const FoldAudit&)>;

namespace detail {

inline std::vector<Prediction> run_fold(const FeatureTable& t, const Fold& fold, std::size_t fold_index,
                                        const ml::ClassifierSpec& spec, FoldAudit* audit) {
  std::vector<std::size_t> touched;
  ml::ZScoreScaler scaler = ml::fit_scaler(t.x, fold.train_indices, audit ? &touched : nullptr);

  ml::Dataset train;
  train.x = scaler.transform(t.x.select_rows(fold.train_indices));
  train.y.reserve(fold.train_indices.size());
  for (std::size_t i : fold.train_indices) train.y.push_back(t.y[i]);

  ml::TrainedModel model;
  model.spec = spec;
  try {
    model.classifier = ml::train_classifier(spec, train);
  } catch (const std::exception& e) {
    throw TrainingError(std::string("fold ") + std::to_string(fold_index) + " (test speaker " + fold.test_speaker +
                        "): " + e.what());
  }
  model.scaler = scaler;

  std::vector<Prediction> out;
  for (std::size_t i : fold.test_indices)
    out.push_back({fold_index, i, fold.test_speaker, t.y[i], ml::predict(model, t.x.row(i))});
  if (audit) {
    audit->fold = fold_index;
    audit->scaler = std::move(scaler);
    audit->rows_read = std::move(touched);
  }
  return out;
}

}  // namespace detail

struct RunOptions {
  ThreadPool* pool = nullptr;
  AuditSink audit;  // called serially, in fold order, after each run
  // Reuse the first run for classifiers that ignore the seed; their results
  // are identical for every seed.
  bool reuse_seed_independent = true;
};

// For each seed: per fold, fit the scaler on training rows only, train, and
// predict the held-out speaker. Accuracy pools all held-out predictions.
inline std::vector<RunResult> run_experiment(const FeatureTable& table, const ml::ClassifierSpec& spec,
                                             const std::vector<std::uint64_t>& seeds, const RunOptions& opt = {}) {
  if (seeds.empty()) throw InvalidInput("run_experiment: empty seed list");
  if (table.x.rows() != table.y.size() || table.y.size() != table.speakers.size())
    throw InvalidInput("run_experiment: feature, label and speaker counts differ");
  const std::vector<Fold> folds = loso_folds(table.speakers);

  std::vector<RunResult> results;
  for (std::uint64_t seed : seeds) {
    if (opt.reuse_seed_independent && !ml::uses_seed(spec.kind) && !results.empty() && !opt.audit) {
      RunResult copy = results.front();
      copy.seed = seed;
      results.push_back(std::move(copy));
      continue;
    }
    ml::ClassifierSpec s = spec;
    s.seed = seed;
    std::vector<std::vector<Prediction>> per_fold(folds.size());
    std::vector<FoldAudit> audits(opt.audit ? folds.size() : 0);
    parallel_for(opt.pool, folds.size(), [&](std::size_t f) {
      per_fold[f] = detail::run_fold(table, folds[f], f, s, opt.audit ? &audits[f] : nullptr);
    });
    if (opt.audit)
      for (std::size_t f = 0; f < folds.size(); ++f) {
        audits[f].seed = seed;
        opt.audit(folds[f], audits[f]);
      }

    RunResult r;
    r.feature = table.kind;
    r.classifier = spec.kind;
    r.seed = seed;
    for (auto& p : per_fold) r.predictions.insert(r.predictions.end(), p.begin(), p.end());
    r.accuracy = accuracy_of(r.predictions);
    results.push_back(std::move(r));
  }
  return results;
}

// ---- aggregation -----------------------------------------------------------------

// Rounds half away from zero at `decimals` places, tolerant of binary
// representation error (71.05 -> 71.1).
inline double round_half_up(double x, int decimals = 1) {
  const double scale = std::pow(10.0, decimals);
  const double v = std::abs(x) * scale;
  const double r = std::floor(v + 0.5 + 1e-9) / scale;
  return x < 0 ? -r : r;
}

inline std::string format_1dp(double x) {
  char buf[64];
  const double r = round_half_up(x, 1);
  std::snprintf(buf, sizeof buf, "%.1f", r == 0.0 ? 0.0 : r);
  return buf;
}

// Mean and population std of per-run accuracies, in percent, unrounded.
struct CellStats {
  double mean_percent = 0.0;
  double std_percent = 0.0;
  std::size_t runs = 0;
};

inline CellStats aggregate(const std::vector<RunResult>& results) {
  if (results.empty()) throw InvalidInput("aggregate: no runs");
  CellStats s;
  s.runs = results.size();
  double sum = 0.0;
  for (const auto& r : results) sum += 100.0 * r.accuracy;
  s.mean_percent = sum / static_cast<double>(results.size());
  double var = 0.0;
  for (const auto& r : results) {
    const double d = 100.0 * r.accuracy - s.mean_percent;
    var += d * d;
  }
  s.std_percent = std::sqrt(var / static_cast<double>(results.size()));
  return s;
}

// "71.1±9.1"
inline std::string format_cell(double mean_percent, double std_percent) {
  return format_1dp(mean_percent) + "±" + format_1dp(std_percent);
}

}  // namespace creak::eval
