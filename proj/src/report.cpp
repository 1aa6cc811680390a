#include "a11y/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "a11y/error.hpp"

namespace a11y {

using nlohmann::json;

void ReportTable::validate() const {
  if (cells.size() != row_labels.size()) {
    throw Error(Errc::InvalidArgument, "table '" + title + "': " + std::to_string(cells.size()) + " rows of cells for " +
                                           std::to_string(row_labels.size()) + " labels");
  }
  for (const auto& row : cells) {
    if (row.size() != column_labels.size()) {
      throw Error(Errc::InvalidArgument, "table '" + title + "': row width " + std::to_string(row.size()) +
                                             " != " + std::to_string(column_labels.size()) + " columns");
    }
  }
}

std::string_view extension(ExportFormat f) {
  switch (f) {
    case ExportFormat::CSV: return "csv";
    case ExportFormat::Markdown: return "md";
    case ExportFormat::JSON: return "json";
  }
  return "txt";
}

std::string format_sig6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (v == 0.0) return "0";

  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  std::string s(buf, res.ptr);
  const bool negative = s.front() == '-';
  if (negative) s.erase(0, 1);
  const auto e_pos = s.find('e');
  int exponent = std::stoi(s.substr(e_pos + 1));
  std::string digits;
  for (char c : s.substr(0, e_pos)) {
    if (c != '.') digits += c;
  }

  constexpr std::size_t kSig = 6;
  if (digits.size() > kSig) {
    const bool up = digits[kSig] >= '5';
    digits.resize(kSig);
    if (up) {
      int i = static_cast<int>(kSig) - 1;
      while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') digits[static_cast<std::size_t>(i--)] = '0';
      if (i < 0) {
        digits.insert(digits.begin(), '1');
        digits.resize(kSig);
        ++exponent;
      } else {
        ++digits[static_cast<std::size_t>(i)];
      }
    }
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();

  std::string out = negative ? "-" : "";
  if (exponent < -4 || exponent >= static_cast<int>(kSig)) {
    out += digits[0];
    if (digits.size() > 1) out += "." + digits.substr(1);
    char ebuf[16];
    std::snprintf(ebuf, sizeof ebuf, "e%+03d", exponent);
    out += ebuf;
  } else if (exponent < 0) {
    out += "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
  } else {
    const auto int_len = static_cast<std::size_t>(exponent) + 1;
    if (digits.size() <= int_len) {
      out += digits + std::string(int_len - digits.size(), '0');
    } else {
      out += digits.substr(0, int_len) + "." + digits.substr(int_len);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// export

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string to_csv(const ReportTable& t) {
  std::string out = csv_field(t.row_header);
  for (const auto& c : t.column_labels) out += "," + csv_field(c);
  out += "\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out += csv_field(t.row_labels[r]);
    for (const auto& cell : t.cells[r]) {
      out += ",";
      if (cell) out += format_sig6(*cell);
    }
    out += "\n";
  }
  return out;
}

std::string to_markdown(const ReportTable& t) {
  const std::size_t cols = t.column_labels.size() + 1;
  std::vector<std::vector<std::string>> grid;
  grid.push_back({md_escape(t.row_header)});
  for (const auto& c : t.column_labels) grid.back().push_back(md_escape(c));
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    std::vector<std::string> row{md_escape(t.row_labels[r])};
    for (const auto& cell : t.cells[r]) row.push_back(cell ? format_sig6(*cell) : "n/a");
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(cols, 3);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < cols; ++c) width[c] = std::max(width[c], row[c].size());
  }

  std::string out;
  if (!t.title.empty()) out += "### " + t.title + "\n\n";
  auto emit = [&](const std::vector<std::string>& row) {
    out += "|";
    for (std::size_t c = 0; c < cols; ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      out += " " + (c == 0 ? row[c] + pad : pad + row[c]) + " |";
    }
    out += "\n";
  };
  emit(grid[0]);
  out += "|";
  for (std::size_t c = 0; c < cols; ++c) {
    out += c == 0 ? " " + std::string(width[c], '-') + " |" : " " + std::string(width[c] - 1, '-') + ": |";
  }
  out += "\n";
  for (std::size_t r = 1; r < grid.size(); ++r) emit(grid[r]);
  if (!t.footnotes.empty()) {
    out += "\n";
    for (const auto& f : t.footnotes) out += "- " + f + "\n";
  }
  return out;
}

}  // namespace

json to_json(const ReportTable& t) {
  json cells = json::array();
  for (const auto& row : t.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
    cells.push_back(std::move(r));
  }
  return json{{"title", t.title},
              {"row_header", t.row_header},
              {"row_labels", t.row_labels},
              {"column_labels", t.column_labels},
              {"cells", cells},
              {"footnotes", t.footnotes}};
}

ReportTable table_from_json(const json& j) {
  ReportTable t;
  t.title = j.at("title").get<std::string>();
  t.row_header = j.value("row_header", "");
  t.row_labels = j.at("row_labels").get<std::vector<std::string>>();
  t.column_labels = j.at("column_labels").get<std::vector<std::string>>();
  for (const auto& row : j.at("cells")) {
    std::vector<std::optional<double>> r;
    for (const auto& c : row) r.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
    t.cells.push_back(std::move(r));
  }
  t.footnotes = j.value("footnotes", std::vector<std::string>{});
  t.validate();
  return t;
}

std::string export_table(const ReportTable& table, ExportFormat format) {
  table.validate();
  switch (format) {
    case ExportFormat::CSV: return to_csv(table);
    case ExportFormat::Markdown: return to_markdown(table);
    case ExportFormat::JSON: break;
  }
  return to_json(table).dump(2) + "\n";
}

ReportTable import_table_json(std::string_view text) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ParseError, "report table JSON is malformed");
  try {
    return table_from_json(doc);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("report table JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// builders

std::string nlp_row_label(Environment env, PromptStrategy s) {
  std::string e(to_string(env));
  e[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(e[0])));
  return e + ": " + std::string(display_name(s));
}

std::string framework_row_label(const FrameworkGroupKey& key) {
  std::string e(to_string(key.environment));
  e[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(e[0])));
  std::string out = e + " " + key.model_label;
  if (key.strategy) out += " / " + std::string(display_name(*key.strategy));
  return out;
}

ReportTable build_nlp_table(const std::vector<MetricGroup>& groups, const std::string& model_label) {
  ReportTable t;
  t.title = "Standard NLP metrics: " + model_label;
  t.row_header = "Environment: Strategy";
  for (auto name : kMetricNames) t.column_labels.emplace_back(name);
  for (Environment env : {Environment::Indoor, Environment::Outdoor}) {
    for (PromptStrategy s : kAllStrategies) {
      for (const auto& g : groups) {
        if (g.key.model_label != model_label || g.key.environment != env || g.key.strategy != s) continue;
        t.row_labels.push_back(nlp_row_label(env, s));
        std::vector<std::optional<double>> row;
        for (double v : as_array(g.mean)) row.emplace_back(v);
        t.cells.push_back(std::move(row));
      }
    }
  }
  if (t.row_labels.empty()) throw Error(Errc::NoScores, "no NLP scores for model '" + model_label + "'");
  t.footnotes.emplace_back(kSpiceFootnote);
  t.footnotes.emplace_back("Scores on a 0-1 scale; CIDEr without the x10 factor.");
  return t;
}

ReportTable build_framework_table(const std::vector<FrameworkGroup>& groups, Rubric rubric, bool with_mean) {
  std::vector<const FrameworkGroup*> picked;
  for (const auto& g : groups) {
    if (g.rubric == rubric) picked.push_back(&g);
  }
  if (picked.empty()) throw Error(Errc::NoScores, "no " + std::string(to_string(rubric)) + " judge scores");
  std::stable_sort(picked.begin(), picked.end(), [](const FrameworkGroup* a, const FrameworkGroup* b) {
    // Outdoor rows first, then by model and strategy
    const auto rank = [](Environment e) { return e == Environment::Outdoor ? 0 : 1; };
    return std::tuple(rank(a->key.environment), a->key.model_label, a->key.strategy) <
           std::tuple(rank(b->key.environment), b->key.model_label, b->key.strategy);
  });
  const bool weighted = std::any_of(picked.begin(), picked.end(), [](auto* g) { return g->weighted.has_value(); });

  ReportTable t;
  switch (rubric) {
    case Rubric::MCF: t.title = "Multi-Context BLV Framework"; break;
    case Rubric::NAF: t.title = "Navigational Assistance Framework"; break;
    case Rubric::A11y: t.title = "Accessibility rubric"; break;
  }
  t.row_header = "Dataset Model";
  for (auto l : rubric_labels(rubric)) t.column_labels.emplace_back(l);
  if (with_mean) t.column_labels.emplace_back(rubric == Rubric::MCF ? "MCF_Score" : rubric == Rubric::NAF ? "NAF_Score" : "Mean");
  if (weighted) t.column_labels.emplace_back("Weighted");
  for (const auto* g : picked) {
    t.row_labels.push_back(framework_row_label(g->key));
    std::vector<std::optional<double>> row(g->means.begin(), g->means.end());
    if (with_mean) row.emplace_back(g->overall);
    if (weighted) row.push_back(g->weighted);
    t.cells.push_back(std::move(row));
  }
  t.footnotes.push_back("Judge scores on a 1-10 scale, averaged per dimension over videos.");
  if (weighted) t.footnotes.push_back("Weighted: configured dimension weights, normalized by their sum.");
  return t;
}

ReportTable build_perf_table(const PrecisionComparison& cmp) {
  if (cmp.groups.empty()) throw Error(Errc::NoScores, "no performance records");
  ReportTable t;
  t.title = "Performance comparison by precision";
  t.row_header = "Metric";
  for (const auto& g : cmp.groups) t.column_labels.push_back(g.model_label + " " + g.precision);
  auto add = [&](const std::string& label, auto getter) {
    t.row_labels.push_back(label);
    std::vector<std::optional<double>> row;
    for (const auto& g : cmp.groups) row.push_back(getter(g));
    t.cells.push_back(std::move(row));
  };
  using G = PrecisionGroup;
  add("LATENCY (ms)", [](const G& g) { return std::optional<double>(g.total_latency_ms); });
  add("PEAK DRAM USAGE (MB)", [](const G& g) { return g.peak_rss_mb; });
  add("MODEL SIZE (MB)", [](const G& g) { return g.model_size_mb; });
  add("TOKEN PER SECOND", [](const G& g) { return g.tokens_per_s; });
  add("TIME TO FIRST TOKEN (ms)", [](const G& g) { return std::optional<double>(g.ttft_ms); });
  add("TIME PER OUTPUT TOKEN (ms)", [](const G& g) { return g.tpot_ms; });
  add("TOKEN GENERATION TIME (ms)", [](const G& g) { return g.generation_ms; });
  add("OUTPUT TOKENS", [](const G& g) { return std::optional<double>(g.tokens_out); });

  t.footnotes.push_back("Medians over post-warmup repetitions; MB = 2^20 bytes.");
  for (const auto& r : cmp.ratios) {
    std::string note = r.model_label + " INT8/FP32: tpot x" + format_sig6(r.tpot_ratio) + ", generation x" +
                       format_sig6(r.generation_ratio) + ", tokens x" + format_sig6(r.tokens_ratio) + ", latency x" +
                       format_sig6(r.latency_ratio);
    if (r.longer_output_anomaly) note += " (longer-output anomaly: faster per token, longer generation)";
    t.footnotes.push_back(std::move(note));
  }
  return t;
}

// ---------------------------------------------------------------------------
// audit

namespace {

void check_cell(AuditResult& out, const ReportTable& t, std::size_t r, std::size_t c, double expected, double tol) {
  ++out.cells_checked;
  const auto& cell = t.cells[r][c];
  if (!cell || std::fabs(*cell - expected) > tol) {
    out.mismatches.push_back(t.row_labels[r] + " / " + t.column_labels[c] + ": table " +
                             (cell ? format_sig6(*cell) : std::string("n/a")) + ", recomputed " +
                             format_sig6(expected));
  }
}

}  // namespace

AuditResult audit_nlp_table(const ReportTable& table, const std::vector<VideoMetrics>& per_video,
                            const std::string& model_label, double tolerance) {
  AuditResult out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    std::array<double, 5> sum{};
    std::size_t n = 0;
    for (const auto& v : per_video) {
      if (v.model_label != model_label || nlp_row_label(v.environment, v.strategy) != table.row_labels[r]) continue;
      sum[0] += v.metrics.bleu1;
      sum[1] += v.metrics.bleu4;
      sum[2] += v.metrics.meteor;
      sum[3] += v.metrics.rouge_l;
      sum[4] += v.metrics.cider;
      ++n;
    }
    seen.insert(table.row_labels[r]);
    if (n == 0) {
      out.mismatches.push_back(table.row_labels[r] + ": no per-video records");
      continue;
    }
    for (std::size_t c = 0; c < 5 && c < table.column_labels.size(); ++c) {
      check_cell(out, table, r, c, sum[c] / static_cast<double>(n), tolerance);
    }
  }
  for (const auto& v : per_video) {
    if (v.model_label == model_label && !seen.count(nlp_row_label(v.environment, v.strategy))) {
      out.mismatches.push_back("record " + v.video_id + " has no row in the table");
    }
  }
  return out;
}

AuditResult audit_framework_table(const ReportTable& table, const std::vector<JudgeRecord>& per_video,
                                  double tolerance) {
  AuditResult out;
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    std::array<double, 4> sum{};
    double overall = 0.0;
    std::size_t n = 0;
    for (const auto& rec : per_video) {
      FrameworkGroupKey plain{rec.model_label, rec.environment, std::nullopt};
      FrameworkGroupKey with{rec.model_label, rec.environment, rec.strategy};
      if (framework_row_label(plain) != table.row_labels[r] && framework_row_label(with) != table.row_labels[r]) continue;
      const auto v = dimension_values(rec.outcome.scores);
      for (std::size_t d = 0; d < 4; ++d) sum[d] += v[d];
      overall += four_way_mean(v);
      ++n;
    }
    if (n == 0) {
      out.mismatches.push_back(table.row_labels[r] + ": no per-video records");
      continue;
    }
    for (std::size_t c = 0; c < 4; ++c) check_cell(out, table, r, c, sum[c] / static_cast<double>(n), tolerance);
    if (table.column_labels.size() > 4 && table.column_labels[4] != "Weighted") {
      check_cell(out, table, r, 4, overall / static_cast<double>(n), tolerance);
    }
  }
  return out;
}

}  // namespace a11y
