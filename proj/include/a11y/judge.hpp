#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "a11y/error.hpp"
#include "a11y/inference.hpp"
#include "a11y/manifest.hpp"
#include "a11y/prompts.hpp"

namespace a11y {

// LLM-as-judge scoring on three four-dimension rubrics, each dimension a real
// in [1,10].
//   MCF:  spatial, social, action, ambience
//   NAF:  descriptiveness, objectivity, accuracy, clarity
//   A11y: descriptive, objective, accurate, clear

enum class Rubric { MCF, NAF, A11y };

inline constexpr std::array<Rubric, 3> kAllRubrics = {Rubric::MCF, Rubric::NAF, Rubric::A11y};

std::string_view to_string(Rubric r);  // "mcf", "naf", "a11y"
Rubric parse_rubric(std::string_view name);
const std::array<std::string_view, 4>& rubric_keys(Rubric r);
const std::array<std::string_view, 4>& rubric_labels(Rubric r);  // column headings

inline constexpr double kMinScore = 1.0;
inline constexpr double kMaxScore = 10.0;

struct MCFScores {
  double spatial = 0, social = 0, action = 0, ambience = 0;
  double mcf_score = 0;  // (spatial + social + action + ambience) / 4
};

struct NAFScores {
  double descriptiveness = 0, objectivity = 0, accuracy = 0, clarity = 0;
  double naf_score = 0;
};

struct A11yScores {
  double descriptive = 0, objective = 0, accurate = 0, clear = 0;
};

using JudgeScores = std::variant<MCFScores, NAFScores, A11yScores>;

Rubric rubric_of(const JudgeScores& s);
std::array<double, 4> dimension_values(const JudgeScores& s);
// Left-to-right sum of the four values divided by 4.
double four_way_mean(const std::array<double, 4>& v);
JudgeScores make_scores(Rubric rubric, const std::array<double, 4>& values);

struct JudgeRequest {
  Rubric rubric = Rubric::MCF;
  std::string candidate;
  std::string ground_truth;
  std::string video_id;
};

struct RubricTemplate {
  Rubric rubric = Rubric::MCF;
  std::string text;
};

// Dimension definitions substituted for {dimensions}.
std::string dimension_definitions(Rubric r);
// Built-in templates; they ship as data/judge_<rubric>.txt.
RubricTemplate default_rubric_template(Rubric r);
RubricTemplate load_rubric_template(const std::filesystem::path& path, Rubric r);

// Substitutes {candidate}, {ground_truth}, {dimensions} and optionally {keys}.
// The first three must be present (TemplateMissingPlaceholder).
std::string build_judge_prompt(const JudgeRequest& req, const RubricTemplate& tmpl);

// Extracts the first parseable JSON object in `raw` and validates the rubric's
// four keys (case-insensitive). Throws NoJsonFound, MissingKey, NonNumeric or
// OutOfRange.
JudgeScores parse_scores(std::string_view raw, Rubric rubric);

class JudgeUnparseableError : public Error {
 public:
  JudgeUnparseableError(const std::string& message, std::vector<std::string> raw)
      : Error(Errc::JudgeUnparseable, message), raw_attempts(std::move(raw)) {}
  std::vector<std::string> raw_attempts;
};

struct JudgeOutcome {
  JudgeScores scores;
  int attempts = 1;
  std::vector<std::string> transcripts;  // raw reply per attempt
};

inline constexpr int kDefaultJudgeSeed = 1234;

std::string corrective_suffix(Rubric r);

// Judge calls run at temperature 0 with a fixed seed. Unparseable replies are
// re-asked up to `retries` times with corrective_suffix() appended.
JudgeOutcome judge_one(const JudgeRequest& req, const InferenceClient& client, int retries,
                       const RubricTemplate& tmpl);
JudgeOutcome judge_one(const JudgeRequest& req, const BackendConfig& cfg, int retries);
BackendConfig judge_backend(BackendConfig cfg);

// One judged video, persisted as a JSONL line with raw transcripts.
struct JudgeRecord {
  std::string video_id;
  std::string model_label;
  PromptStrategy strategy = PromptStrategy::PromptOnly;
  Environment environment = Environment::Indoor;
  JudgeOutcome outcome;
};

nlohmann::json to_json(const JudgeRecord& r);
JudgeRecord judge_record_from_json(const nlohmann::json& j);

struct FrameworkGroupKey {
  std::string model_label;
  Environment environment = Environment::Indoor;
  std::optional<PromptStrategy> strategy;  // set when grouping by strategy

  auto operator<=>(const FrameworkGroupKey&) const = default;
};

struct FrameworkGroup {
  FrameworkGroupKey key;
  Rubric rubric = Rubric::MCF;
  std::array<double, 4> means{};
  double overall = 0.0;                 // four_way_mean(means)
  std::optional<double> weighted;       // present when weights were supplied
  std::size_t count = 0;
};

struct AggregateOptions {
  bool by_strategy = false;
  // Optional per-dimension weights; normalized by their sum.
  std::optional<std::array<double, 4>> weights;
};

// Per-dimension arithmetic means grouped by (model_label, environment[, strategy]).
// All records must share one rubric. Empty input throws EmptyGroup.
std::vector<FrameworkGroup> aggregate_framework(const std::vector<JudgeRecord>& per_video,
                                                const AggregateOptions& opts = {});

}  // namespace a11y
