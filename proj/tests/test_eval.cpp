#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "creak/run_log.hpp"

using namespace creak;
using namespace creak::eval;
namespace fs = std::filesystem;

namespace {

constexpr auto L = CreakLabel::Low;
constexpr auto H = CreakLabel::High;

// n_speakers speakers, each with per_speaker samples alternating Low/High.
// Features are unit Gaussian noise.
FeatureTable noise_table(std::size_t n_speakers, std::size_t per_speaker, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  FeatureTable t;
  t.kind = FeatureKind::Mfcc;
  t.x = Matrix(n_speakers * per_speaker, dim);
  for (std::size_t s = 0; s < n_speakers; ++s)
    for (std::size_t k = 0; k < per_speaker; ++k) {
      const std::size_t i = s * per_speaker + k;
      for (std::size_t j = 0; j < dim; ++j) t.x(i, j) = rng.normal();
      t.y.push_back(k % 2 ? H : L);
      t.speakers.push_back("spk" + std::to_string(s));
    }
  return t;
}

RunResult run_with_accuracy(double acc) {
  RunResult r;
  r.accuracy = acc;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

// ---- folds -----------------------------------------------------------------

TEST(Loso, SmallExample) {
  const auto folds = loso_folds(std::vector<std::string>{"B", "A", "B", "C", "A"});
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[0].test_speaker, "A");
  EXPECT_EQ(folds[0].test_indices, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(folds[0].train_indices, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(folds[2].test_speaker, "C");
  EXPECT_EQ(folds[2].test_indices, (std::vector<std::size_t>{3}));
}

TEST(Loso, NeedsTwoSpeakers) {
  EXPECT_THROW(loso_folds(std::vector<std::string>{"A", "A"}), InvalidInput);
  EXPECT_THROW(loso_folds(std::vector<std::string>{}), InvalidInput);
}

TEST(Loso, FoldsPartitionSamplesAndSeparateSpeakers) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(80);
    const std::size_t n_spk = 2 + rng.below(12);
    std::vector<std::string> speakers(n);
    for (std::size_t i = 0; i < n; ++i) speakers[i] = "s" + std::to_string(i < n_spk ? i : rng.below(n_spk));
    const auto folds = loso_folds(speakers);
    EXPECT_EQ(folds.size(), std::set<std::string>(speakers.begin(), speakers.end()).size());
    std::vector<int> tested(n, 0);
    for (const auto& f : folds) {
      EXPECT_EQ(f.train_indices.size() + f.test_indices.size(), n);
      for (auto i : f.test_indices) {
        ++tested[i];
        EXPECT_EQ(speakers[i], f.test_speaker);
      }
      for (auto i : f.train_indices) EXPECT_NE(speakers[i], f.test_speaker);
      EXPECT_TRUE(std::is_sorted(f.train_indices.begin(), f.train_indices.end()));
    }
    EXPECT_TRUE(std::all_of(tested.begin(), tested.end(), [](int c) { return c == 1; }));
    for (std::size_t k = 1; k < folds.size(); ++k) EXPECT_LT(folds[k - 1].test_speaker, folds[k].test_speaker);
  }
}

// ---- experiment --------------------------------------------------------------

TEST(Experiment, ScalerSeesOnlyTrainingRows) {
  const FeatureTable t = noise_table(5, 6, 4, 2);
  const auto folds = loso_folds(t.speakers);
  std::size_t calls = 0;
  RunOptions opt;
  opt.audit = [&](const Fold& fold, const FoldAudit& a) {
    ++calls;
    EXPECT_EQ(a.rows_read, fold.train_indices);
    for (auto i : fold.test_indices)
      EXPECT_EQ(std::count(a.rows_read.begin(), a.rows_read.end(), i), 0);
    // Mean recomputed from the training rows alone.
    for (std::size_t j = 0; j < t.x.cols(); ++j) {
      double m = 0.0;
      for (auto i : fold.train_indices) m += t.x(i, j);
      EXPECT_NEAR(a.scaler.mean[j], m / static_cast<double>(fold.train_indices.size()), 1e-12);
    }
  };
  run_experiment(t, ml::default_spec(ml::ClassifierKind::LogisticRegression), {0, 1}, opt);
  EXPECT_EQ(calls, 2 * folds.size());
}

TEST(Experiment, PerturbingHeldOutRowsLeavesScalerBitIdentical) {
  const FeatureTable t = noise_table(4, 5, 3, 12);
  const auto folds = loso_folds(t.speakers);
  const auto spec = ml::default_spec(ml::ClassifierKind::DecisionTree);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FeatureTable moved = t;
    for (auto i : folds[f].test_indices)
      for (std::size_t j = 0; j < t.x.cols(); ++j) moved.x(i, j) = 1e6 * moved.x(i, j) - 42.0;
    FoldAudit a, b;
    eval::detail::run_fold(t, folds[f], f, spec, &a);
    eval::detail::run_fold(moved, folds[f], f, spec, &b);
    EXPECT_EQ(a.scaler, b.scaler);
  }
}

TEST(Experiment, OracleColumnGivesPerfectTree) {
  FeatureTable t = noise_table(9, 10, 20, 3);
  for (std::size_t i = 0; i < t.y.size(); ++i) t.x(i, 7) = t.y[i] == H ? 1.0 : 0.0;
  const auto runs = run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {0, 1, 2});
  ASSERT_EQ(runs.size(), 3u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.predictions.size(), t.y.size());
  }
  const auto s = aggregate(runs);
  EXPECT_EQ(s.mean_percent, 100.0);
  EXPECT_EQ(s.std_percent, 0.0);
}

TEST(Experiment, NoiseFeaturesStayNearChance) {
  const FeatureTable t = noise_table(12, 16, 10, 4);
  for (auto kind : {ml::ClassifierKind::LogisticRegression, ml::ClassifierKind::DecisionTree,
                    ml::ClassifierKind::RandomForest}) {
    auto spec = ml::default_spec(kind);
    spec.n_estimators = 30;
    const auto s = aggregate(run_experiment(t, spec, {0, 1, 2}));
    EXPECT_GE(s.mean_percent, 30.0) << ml::to_string(kind);
    EXPECT_LE(s.mean_percent, 70.0) << ml::to_string(kind);
  }
}

TEST(Experiment, PredictionsInFoldThenSampleOrder) {
  const FeatureTable t = noise_table(4, 5, 3, 5);
  const auto r = run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {0}).front();
  const auto folds = loso_folds(t.speakers);
  std::size_t k = 0;
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (auto i : folds[f].test_indices) {
      EXPECT_EQ(r.predictions[k].fold, f);
      EXPECT_EQ(r.predictions[k].sample, i);
      EXPECT_EQ(r.predictions[k].truth, t.y[i]);
      ++k;
    }
  EXPECT_EQ(k, t.y.size());
}

TEST(Experiment, PoolAndSerialAgree) {
  const FeatureTable t = noise_table(6, 8, 5, 6);
  ThreadPool pool(4);
  auto spec = ml::default_spec(ml::ClassifierKind::RandomForest);
  spec.n_estimators = 15;
  const auto a = run_experiment(t, spec, {0, 1});
  const auto b = run_experiment(t, spec, {0, 1}, RunOptions{&pool, {}, true});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].predictions, b[i].predictions);
    EXPECT_EQ(a[i].accuracy, b[i].accuracy);
  }
}

TEST(Experiment, SeedIndependentReuseMatchesRecompute) {
  const FeatureTable t = noise_table(5, 6, 4, 7);
  const auto spec = ml::default_spec(ml::ClassifierKind::LogisticRegression);
  const auto reused = run_experiment(t, spec, {3, 4});
  const auto fresh = run_experiment(t, spec, {3, 4}, RunOptions{nullptr, {}, false});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(reused[i].seed, fresh[i].seed);
    EXPECT_EQ(reused[i].predictions, fresh[i].predictions);
  }
}

TEST(Experiment, BadInputs) {
  FeatureTable t = noise_table(3, 4, 2, 8);
  EXPECT_THROW(run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {}), InvalidInput);
  t.speakers.pop_back();
  EXPECT_THROW(run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {0}), InvalidInput);
}

TEST(Experiment, SingleClassTrainingFoldReportsFold) {
  FeatureTable t = noise_table(2, 4, 2, 9);
  for (std::size_t i = 0; i < 4; ++i) t.y[i] = L;  // speaker 0 all Low
  for (std::size_t i = 4; i < 8; ++i) t.y[i] = H;  // speaker 1 all High
  try {
    run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {0});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("fold 0 (test speaker spk0)"), std::string::npos) << e.what();
  }
}

// ---- aggregation and formatting ---------------------------------------------

TEST(Aggregate, TwoRuns) {
  const auto s = aggregate({run_with_accuracy(0.70), run_with_accuracy(0.72)});
  EXPECT_NEAR(s.mean_percent, 71.0, 1e-9);
  EXPECT_NEAR(s.std_percent, 1.0, 1e-9);
  EXPECT_EQ(format_cell(s.mean_percent, s.std_percent), "71.0±1.0");
}

TEST(Aggregate, SingleRunHasZeroStd) {
  const auto s = aggregate({run_with_accuracy(0.5)});
  EXPECT_EQ(s.std_percent, 0.0);
  EXPECT_EQ(s.runs, 1u);
  EXPECT_THROW(aggregate({}), InvalidInput);
}

TEST(Format, RoundsHalfUp) {
  EXPECT_EQ(format_cell(71.1, 9.1), "71.1±9.1");
  EXPECT_EQ(format_1dp(0.25), "0.3");
  EXPECT_EQ(format_1dp(64.94285714), "64.9");
  EXPECT_EQ(format_1dp(66.35), "66.4");
  EXPECT_EQ(format_1dp(5.11), "5.1");
  EXPECT_EQ(format_1dp(100.0), "100.0");
  EXPECT_EQ(format_1dp(-0.01), "0.0");
  // Accuracies that are k/90 in percent.
  for (int k = 0; k <= 90; ++k) {
    const double pct = 100.0 * k / 90.0;
    const double r = round_half_up(pct, 1);
    EXPECT_LE(std::abs(r - pct), 0.05 + 1e-9);
  }
}

// ---- report --------------------------------------------------------------------

namespace {

ExperimentReport reference_grid() {
  using C = ml::ClassifierKind;
  using F = FeatureKind;
  ExperimentReport r({ml::kAllClassifierKinds.begin(), ml::kAllClassifierKinds.end()},
                     {kAllFeatureKinds.begin(), kAllFeatureKinds.end()});
  const struct {
    C c;
    double v[3][2];
  } rows[] = {
      {C::SvmLinear, {{58.9, 8.2}, {58.9, 8.2}, {62.2, 12.0}}},
      {C::SvmRbf, {{57.8, 8.6}, {67.8, 10.8}, {61.1, 9.2}}},
      {C::LogisticRegression, {{61.1, 10.2}, {66.7, 12.1}, {60.0, 7.6}}},
      {C::AdaBoost, {{64.4, 8.4}, {71.1, 9.1}, {54.4, 9.2}}},
      {C::RandomForest, {{64.4, 7.9}, {67.8, 5.9}, {58.9, 10.7}}},
      {C::DecisionTree, {{61.1, 7.9}, {66.7, 8.4}, {71.1, 5.11}}},
      {C::Mlp, {{52.3, 11.9}, {55.6, 9.4}, {53.3, 10.7}}},
  };
  const F cols[] = {F::Spectrogram, F::MelSpectrogram, F::Mfcc};
  for (const auto& row : rows)
    for (int k = 0; k < 3; ++k) r.set(row.c, cols[k], row.v[k][0], row.v[k][1]);
  return r;
}

}  // namespace

TEST(Report, ReferenceGridAverages) {
  const auto r = reference_grid();
  using C = ml::ClassifierKind;
  const std::pair<C, const char*> row_avgs[] = {{C::SvmLinear, "60.0"},    {C::SvmRbf, "62.2"},
                                                {C::LogisticRegression, "62.6"}, {C::AdaBoost, "63.3"},
                                                {C::RandomForest, "63.7"}, {C::DecisionTree, "66.3"},
                                                {C::Mlp, "53.7"}};
  for (const auto& [c, want] : row_avgs) EXPECT_EQ(format_1dp(*r.row_average(c)), want) << ml::to_string(c);
  EXPECT_EQ(format_1dp(*r.column_average(FeatureKind::Spectrogram)), "60.0");
  EXPECT_EQ(format_1dp(*r.column_average(FeatureKind::MelSpectrogram)), "64.9");
  EXPECT_EQ(format_1dp(*r.column_average(FeatureKind::Mfcc)), "60.1");
  EXPECT_EQ(*r.best_mean(), 71.1);
}

TEST(Report, MarkdownLayout) {
  const std::string md = render_report(reference_grid(), ReportFormat::Markdown);
  EXPECT_EQ(md.substr(0, md.find('\n')),
            "| Classifier | Spectrogram | Mel-spectrogram | MFCCs | Average over features |");
  EXPECT_NE(md.find("| DT | 61.1±7.9 | 66.7±8.4 | **71.1**±5.1 | 66.3 |\n"), std::string::npos) << md;
  EXPECT_NE(md.find("| Adaboost | 64.4±8.4 | **71.1**±9.1 | 54.4±9.2 | 63.3 |\n"), std::string::npos);
  EXPECT_NE(md.find("| Average over classifiers | 60.0 | 64.9 | 60.1 | -- |\n"), std::string::npos);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2 + 7 + 1);
  EXPECT_EQ(md.find("**", md.find("| MLP")), std::string::npos);
}

TEST(Report, CsvLayout) {
  const std::string csv = render_report(reference_grid(), ReportFormat::Csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "classifier,feature,mean,std");
  EXPECT_NE(csv.find("\ndt,mfcc,71.1,5.1\n"), std::string::npos) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 21);
}

TEST(Report, IncompleteGridRejected) {
  ExperimentReport r({ml::ClassifierKind::DecisionTree}, {FeatureKind::Mfcc, FeatureKind::Spectrogram});
  r.set(ml::ClassifierKind::DecisionTree, FeatureKind::Mfcc, 50.0, 1.0);
  EXPECT_FALSE(r.complete());
  EXPECT_THROW(render_report(r, ReportFormat::Markdown), InvalidInput);
}

TEST(Report, FailedCellsAndAllZero) {
  ExperimentReport r({ml::ClassifierKind::DecisionTree, ml::ClassifierKind::Mlp}, {FeatureKind::Mfcc});
  r.set(ml::ClassifierKind::DecisionTree, FeatureKind::Mfcc, 0.0, 0.0);
  r.set(ml::ClassifierKind::Mlp, FeatureKind::Mfcc, 0.0, 0.0);
  const std::string md = render_report(r, ReportFormat::Markdown);
  EXPECT_NE(md.find("| DT | **0.0**±0.0 | 0.0 |"), std::string::npos) << md;

  r.set_failed(ml::ClassifierKind::Mlp, FeatureKind::Mfcc, "boom");
  EXPECT_TRUE(r.complete());
  EXPECT_FALSE(r.all_succeeded());
  const std::string md2 = render_report(r, ReportFormat::Markdown);
  EXPECT_NE(md2.find("| MLP | FAILED | -- |"), std::string::npos) << md2;
  EXPECT_NE(md2.find("| Average over classifiers | -- | -- |"), std::string::npos);
  EXPECT_NE(render_report(r, ReportFormat::Csv).find("mlp,mfcc,failed,failed"), std::string::npos);
}

// ---- run logs ---------------------------------------------------------------------

TEST(RunLog, RoundTrip) {
  const FeatureTable t = noise_table(3, 4, 3, 10);
  const auto r = run_experiment(t, ml::default_spec(ml::ClassifierKind::DecisionTree), {6}).front();
  const RunResult back = run_from_json(json::parse(run_to_json(r).dump()));
  EXPECT_EQ(back.predictions, r.predictions);
  EXPECT_EQ(back.accuracy, r.accuracy);
  EXPECT_EQ(back.seed, 6u);
  EXPECT_EQ(back.feature, FeatureKind::Mfcc);
  EXPECT_EQ(run_log_name(FeatureKind::Mfcc, ml::ClassifierKind::DecisionTree, 6), "mfcc__dt__seed6.json");
  EXPECT_THROW(run_from_json(json{{"feature", "mfcc"}}), InvalidInput);
}

TEST(RunLog, ReportFromLogsMatchesDirectAggregation) {
  const FeatureTable t = noise_table(4, 6, 3, 11);
  const fs::path dir = fresh_dir("creak_eval_logs");
  ExperimentReport direct({ml::ClassifierKind::LogisticRegression, ml::ClassifierKind::DecisionTree},
                          {FeatureKind::Mfcc});
  // Written in the opposite of canonical order; the report must not care.
  for (auto kind : {ml::ClassifierKind::DecisionTree, ml::ClassifierKind::LogisticRegression}) {
    const auto runs = run_experiment(t, ml::default_spec(kind), {0, 1, 2});
    for (const auto& r : runs) write_json_file(dir / run_log_name(r.feature, r.classifier, r.seed), run_to_json(r));
    const auto s = aggregate(runs);
    direct.set(kind, FeatureKind::Mfcc, s.mean_percent, s.std_percent);
  }
  write_json_file(dir / failure_log_name(FeatureKind::Spectrogram, ml::ClassifierKind::Mlp),
                  failure_to_json(FeatureKind::Spectrogram, ml::ClassifierKind::Mlp, "diverged"));
  const ExperimentReport from_logs = report_from_logs(dir);
  EXPECT_EQ(from_logs.rows(), (std::vector<ml::ClassifierKind>{ml::ClassifierKind::LogisticRegression,
                                                               ml::ClassifierKind::DecisionTree,
                                                               ml::ClassifierKind::Mlp}));
  EXPECT_EQ(from_logs.columns(), (std::vector<FeatureKind>{FeatureKind::Spectrogram, FeatureKind::Mfcc}));
  for (auto c : direct.rows()) {
    const Cell* a = direct.find(c, FeatureKind::Mfcc);
    const Cell* b = from_logs.find(c, FeatureKind::Mfcc);
    ASSERT_NE(b, nullptr);
    EXPECT_EQ(a->mean_percent, b->mean_percent);
    EXPECT_EQ(a->std_percent, b->std_percent);
  }
  EXPECT_TRUE(from_logs.find(ml::ClassifierKind::Mlp, FeatureKind::Spectrogram)->failed);
  fs::remove_all(dir);
}

TEST(RunLog, EmptyOrMissingDirectory) {
  const fs::path dir = fresh_dir("creak_eval_empty");
  EXPECT_THROW(report_from_logs(dir), InvalidInput);
  EXPECT_THROW(report_from_logs(dir / "nope"), IoError);
  fs::remove_all(dir);
}
