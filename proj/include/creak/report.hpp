#pragma once

// Accuracy grid (classifier rows x feature columns) and its Markdown / CSV
// renderings. Row and column averages are recomputed from the rounded cell
// means shown in the table.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "creak/error.hpp"
#include "creak/eval.hpp"

namespace creak::eval {

struct Cell {
  bool failed = false;
  std::string error;  // set when failed
  double mean_percent = 0.0;
  double std_percent = 0.0;
};

class ExperimentReport {
 public:
  ExperimentReport(std::vector<ml::ClassifierKind> rows, std::vector<FeatureKind> cols)
      : rows_(std::move(rows)), cols_(std::move(cols)) {}

  const std::vector<ml::ClassifierKind>& rows() const { return rows_; }
  const std::vector<FeatureKind>& columns() const { return cols_; }

  void set(ml::ClassifierKind r, FeatureKind c, Cell cell) { cells_[{r, c}] = std::move(cell); }
  void set(ml::ClassifierKind r, FeatureKind c, double mean_percent, double std_percent) {
    set(r, c, Cell{false, {}, mean_percent, std_percent});
  }
  void set_failed(ml::ClassifierKind r, FeatureKind c, std::string error) { set(r, c, Cell{true, std::move(error), 0, 0}); }

  const Cell* find(ml::ClassifierKind r, FeatureKind c) const {
    const auto it = cells_.find({r, c});
    return it == cells_.end() ? nullptr : &it->second;
  }

  bool complete() const {
    for (auto r : rows_)
      for (auto c : cols_)
        if (!find(r, c)) return false;
    return true;
  }

  bool all_succeeded() const {
    for (const auto& [k, v] : cells_)
      if (v.failed) return false;
    return complete();
  }

  // Rounded mean of one cell as displayed.
  static double shown(const Cell& c) { return round_half_up(c.mean_percent, 1); }

  // Average over features for a classifier row; nullopt if any cell failed.
  std::optional<double> row_average(ml::ClassifierKind r) const {
    double sum = 0.0;
    for (auto c : cols_) {
      const Cell* cell = find(r, c);
      if (!cell || cell->failed) return std::nullopt;
      sum += shown(*cell);
    }
    return sum / static_cast<double>(cols_.size());
  }

  std::optional<double> column_average(FeatureKind c) const {
    double sum = 0.0;
    for (auto r : rows_) {
      const Cell* cell = find(r, c);
      if (!cell || cell->failed) return std::nullopt;
      sum += shown(*cell);
    }
    return sum / static_cast<double>(rows_.size());
  }

  // Largest displayed mean among successful cells.
  std::optional<double> best_mean() const {
    std::optional<double> best;
    for (const auto& [k, v] : cells_)
      if (!v.failed && (!best || shown(v) > *best)) best = shown(v);
    return best;
  }

 private:
  std::vector<ml::ClassifierKind> rows_;
  std::vector<FeatureKind> cols_;
  std::map<std::pair<ml::ClassifierKind, FeatureKind>, Cell> cells_;
};

enum class ReportFormat { Markdown, Csv };

inline std::string render_report(const ExperimentReport& report, ReportFormat format) {
  if (!report.complete()) throw InvalidInput("render_report: grid is incomplete");
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "classifier,feature,mean,std\n";
    for (auto r : report.rows())
      for (auto c : report.columns()) {
        const Cell& cell = *report.find(r, c);
        out << ml::to_string(r) << ',' << to_string(c) << ',';
        if (cell.failed)
          out << "failed,failed\n";
        else
          out << format_1dp(cell.mean_percent) << ',' << format_1dp(cell.std_percent) << '\n';
      }
    return out.str();
  }

  const auto best = report.best_mean();
  auto avg = [](const std::optional<double>& v) { return v ? format_1dp(*v) : std::string("--"); };

  out << "| Classifier |";
  for (auto c : report.columns()) out << ' ' << display_name(c) << " |";
  out << " Average over features |\n|---|";
  for (std::size_t i = 0; i < report.columns().size(); ++i) out << "---|";
  out << "---|\n";
  for (auto r : report.rows()) {
    out << "| " << ml::display_name(r) << " |";
    for (auto c : report.columns()) {
      const Cell& cell = *report.find(r, c);
      if (cell.failed) {
        out << " FAILED |";
        continue;
      }
      const std::string m = format_1dp(cell.mean_percent);
      const bool is_best = best && ExperimentReport::shown(cell) == *best;
      out << ' ' << (is_best ? "**" + m + "**" : m) << "±" << format_1dp(cell.std_percent) << " |";
    }
    out << ' ' << avg(report.row_average(r)) << " |\n";
  }
  out << "| Average over classifiers |";
  for (auto c : report.columns()) out << ' ' << avg(report.column_average(c)) << " |";
  out << " -- |\n";
  return out.str();
}

}  // namespace creak::eval
