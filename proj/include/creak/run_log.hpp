#pragma once

// Per-run JSON logs. Each log holds enough to recompute its accuracy, and a
// directory of logs is enough to rebuild the whole report.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "creak/error.hpp"
#include "creak/eval.hpp"
#include "creak/report.hpp"

namespace creak::eval {

using json = nlohmann::json;

inline std::string run_log_name(FeatureKind f, ml::ClassifierKind c, std::uint64_t seed) {
  return std::string(to_string(f)) + "__" + ml::to_string(c) + "__seed" + std::to_string(seed) + ".json";
}

inline std::string failure_log_name(FeatureKind f, ml::ClassifierKind c) {
  return std::string(to_string(f)) + "__" + ml::to_string(c) + "__failed.json";
}

inline json run_to_json(const RunResult& r) {
  json preds = json::array();
  for (const auto& p : r.predictions)
    preds.push_back({{"fold", p.fold},
                     {"sample", p.sample},
                     {"speaker", p.speaker},
                     {"true", to_string(p.truth)},
                     {"predicted", to_string(p.predicted)}});
  return json{{"status", "ok"},
              {"feature", to_string(r.feature)},
              {"classifier", ml::to_string(r.classifier)},
              {"seed", r.seed},
              {"accuracy", r.accuracy},
              {"predictions", preds}};
}

inline json failure_to_json(FeatureKind f, ml::ClassifierKind c, const std::string& error) {
  return json{{"status", "failed"}, {"feature", to_string(f)}, {"classifier", ml::to_string(c)}, {"error", error}};
}

// Accuracy is recomputed from the predictions, not taken from the file.
inline RunResult run_from_json(const json& j) {
  try {
    RunResult r;
    r.feature = feature_kind_from_string(j.at("feature").get<std::string>());
    r.classifier = ml::classifier_kind_from_string(j.at("classifier").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("predictions")) {
      Prediction pr;
      pr.fold = p.at("fold").get<std::size_t>();
      pr.sample = p.at("sample").get<std::size_t>();
      pr.speaker = p.at("speaker").get<std::string>();
      pr.truth = label_from_string(p.at("true").get<std::string>());
      pr.predicted = label_from_string(p.at("predicted").get<std::string>());
      r.predictions.push_back(std::move(pr));
    }
    r.accuracy = accuracy_of(r.predictions);
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("run log: ") + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

// Rebuilds the grid from every *.json log in `dir`. Rows and columns follow
// the canonical order, restricted to what the logs contain.
inline ExperimentReport report_from_logs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("log directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::map<std::pair<ml::ClassifierKind, FeatureKind>, std::vector<RunResult>> runs;
  std::map<std::pair<ml::ClassifierKind, FeatureKind>, std::string> failures;
  for (const auto& f : files) {
    const json j = read_json_file(f);
    if (!j.is_object() || !j.contains("status")) continue;
    if (j.at("status") == "failed") {
      const auto fk = feature_kind_from_string(j.at("feature").get<std::string>());
      const auto ck = ml::classifier_kind_from_string(j.at("classifier").get<std::string>());
      failures[{ck, fk}] = j.value("error", std::string("failed"));
    } else {
      RunResult r = run_from_json(j);
      runs[{r.classifier, r.feature}].push_back(std::move(r));
    }
  }
  if (runs.empty() && failures.empty()) throw InvalidInput("no run logs in " + dir.string());

  std::vector<ml::ClassifierKind> rows;
  std::vector<FeatureKind> cols;
  auto present = [&](ml::ClassifierKind c, FeatureKind f) { return runs.count({c, f}) || failures.count({c, f}); };
  for (auto c : ml::kAllClassifierKinds)
    if (std::any_of(kAllFeatureKinds.begin(), kAllFeatureKinds.end(), [&](FeatureKind f) { return present(c, f); }))
      rows.push_back(c);
  for (auto f : kAllFeatureKinds)
    if (std::any_of(rows.begin(), rows.end(), [&](ml::ClassifierKind c) { return present(c, f); })) cols.push_back(f);

  ExperimentReport report(rows, cols);
  for (auto c : rows)
    for (auto f : cols) {
      if (auto it = failures.find({c, f}); it != failures.end()) {
        report.set_failed(c, f, it->second);
      } else if (auto rt = runs.find({c, f}); rt != runs.end()) {
        std::sort(rt->second.begin(), rt->second.end(),
                  [](const RunResult& a, const RunResult& b) { return a.seed < b.seed; });
        const CellStats s = aggregate(rt->second);
        report.set(c, f, s.mean_percent, s.std_percent);
      } else {
        report.set_failed(c, f, "no logs");
      }
    }
  return report;
}

}  // namespace creak::eval
