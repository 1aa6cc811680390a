#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "a11y/inference.hpp"
#include "a11y/judge.hpp"
#include "a11y/keyframes.hpp"
#include "a11y/manifest.hpp"
#include "a11y/perf.hpp"
#include "a11y/prompts.hpp"

namespace a11y {

inline constexpr const char* kGenUrlEnv = "A11YBENCH_GEN_URL";
inline constexpr const char* kJudgeUrlEnv = "A11YBENCH_JUDGE_URL";

struct JudgeSettings {
  BackendConfig backend;
  int retries = 2;
  std::vector<Rubric> rubrics = {kAllRubrics.begin(), kAllRubrics.end()};
  std::map<Rubric, std::filesystem::path> templates;  // overrides of the built-ins
  std::optional<std::array<double, 4>> mcf_weights;
  std::optional<std::array<double, 4>> naf_weights;
};

struct BenchSettings {
  std::vector<BenchBackend> backends;
  std::vector<std::string> videos;  // empty = every manifest entry
  PromptStrategy strategy = PromptStrategy::PromptContextAD;
  int repetitions = 3;
  int warmup_runs = 1;
  int memory_sample_interval_ms = 50;
};

// Parsed JSON run configuration. Relative paths resolve against the config
// file's directory.
struct RunConfig {
  nlohmann::json raw;  // effective document (env overrides applied); digested for the run ledger
  std::filesystem::path manifest_path;
  std::filesystem::path output_dir;
  KeyframeParams keyframes;
  std::vector<PromptStrategy> strategies = {kAllStrategies.begin(), kAllStrategies.end()};
  std::optional<std::filesystem::path> guidelines_path;
  std::optional<std::filesystem::path> base_prompt_path;
  BackendConfig generation;
  std::optional<JudgeSettings> judge;
  std::optional<BenchSettings> bench;

  // ConfigInvalid when referenced files are missing or settings are out of range.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                               const EnvLookup& env = process_env);
RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

struct PipelineOptions {
  std::string run_id;  // empty = "run-" + first 12 hex digits of the config digest
  int jobs = 1;
  bool force = false;
  bool dry_run = false;
  std::vector<PromptStrategy> strategies;  // overrides the config list when non-empty
};

struct StageReport {
  std::string stage;
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<std::string> plan;  // one line per work item (dry runs)
};

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Every item runs even
// if others throw; the exceptions are returned by index.
std::vector<std::pair<std::size_t, std::exception_ptr>> parallel_for(std::size_t n, int jobs,
                                                                     const std::function<void(std::size_t)>& fn);

// Stage orchestration over <output_dir>/<run_id>/:
//   keyframes/<video>/            extract
//   generations/<strategy>/<video>.json
//   judge/<rubric>/<strategy>/<video>.json
//   per_video/{nlp,judge_<rubric>,perf}.jsonl
//   tables/*.{csv,md,json}
// and the run ledger <output_dir>/runs/<run_id>.json.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, PipelineOptions opts, std::ostream& log);

  StageReport extract();
  StageReport generate();
  StageReport score_nlp();
  StageReport score_judge();
  StageReport bench();
  StageReport report();

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const std::string& run_id() const { return run_id_; }
  const DatasetManifest& manifest() const { return manifest_; }
  const std::vector<PromptStrategy>& strategies() const { return strategies_; }

 private:
  void finish_stage(const StageReport& rep, const std::string& output);
  void require_keyframes(const std::vector<const VideoEntry*>& entries) const;
  PromptBundle prompt_for(const VideoEntry& entry, PromptStrategy s, const KeyframeSet& kf) const;
  std::filesystem::path generation_path(PromptStrategy s, const std::string& id) const;

  RunConfig cfg_;
  PipelineOptions opts_;
  std::ostream& log_;
  DatasetManifest manifest_;
  std::vector<PromptStrategy> strategies_;
  GuidelineSet guidelines_;
  std::string base_prompt_;
  std::string run_id_;
  std::string digest_;
  std::filesystem::path run_dir_;
};

// Filesystem-safe form of a label.
std::string safe_name(const std::string& label);

}  // namespace a11y
