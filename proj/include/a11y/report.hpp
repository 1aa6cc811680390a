#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a11y/judge.hpp"
#include "a11y/nlpmetrics.hpp"
#include "a11y/perf.hpp"

namespace a11y {

struct ReportTable {
  std::string title;
  std::string row_header;  // heading of the label column
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<std::optional<double>>> cells;  // [row][column]; nullopt renders "n/a"
  std::vector<std::string> footnotes;

  void validate() const;  // InvalidArgument on shape mismatch
  bool operator==(const ReportTable&) const = default;
};

enum class ExportFormat { CSV, Markdown, JSON };

std::string_view extension(ExportFormat f);  // "csv", "md", "json"

// Six significant digits, half-up on the shortest round-trip decimal form,
// trailing zeros dropped ("0.75", "3.50275", "10604.3").
std::string format_sig6(double v);

std::string export_table(const ReportTable& table, ExportFormat format);
ReportTable import_table_json(std::string_view text);
nlohmann::json to_json(const ReportTable& table);
ReportTable table_from_json(const nlohmann::json& j);

// Row label shared by building and auditing: "<Environment>: <Strategy>".
std::string nlp_row_label(Environment env, PromptStrategy s);
// "<Environment> <model>" with " / <Strategy>" appended when present.
std::string framework_row_label(const FrameworkGroupKey& key);

inline constexpr std::string_view kSpiceFootnote =
    "SPICE: n/a (scene-graph metric not computed by this harness).";

// One model's metric means, rows = strategy within environment (Indoor first),
// columns = BLEU-1, BLEU-4, METEOR, ROUGE-L, CIDEr. Throws NoScores.
ReportTable build_nlp_table(const std::vector<MetricGroup>& groups, const std::string& model_label);

// Rows = environment x model (Outdoor first), columns = the rubric's four
// dimensions plus an optional trailing mean (MCF_Score / NAF_Score / Mean).
ReportTable build_framework_table(const std::vector<FrameworkGroup>& groups, Rubric rubric, bool with_mean = true);

// Precision comparison layout: metric rows, one column per (model, precision) group.
ReportTable build_perf_table(const PrecisionComparison& cmp);

struct AuditResult {
  std::size_t cells_checked = 0;
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

// Recomputes every table cell directly from per-video records.
AuditResult audit_nlp_table(const ReportTable& table, const std::vector<VideoMetrics>& per_video,
                            const std::string& model_label, double tolerance = 1e-9);
AuditResult audit_framework_table(const ReportTable& table, const std::vector<JudgeRecord>& per_video,
                                  double tolerance = 1e-9);

}  // namespace a11y
