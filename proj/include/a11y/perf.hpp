#pragma once

#include <sys/types.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "a11y/inference.hpp"
#include "a11y/keyframes.hpp"
#include "a11y/prompts.hpp"

namespace a11y {

inline constexpr double kBytesPerMB = 1024.0 * 1024.0;

// "FP32", "INT8" or any other label (normalized to upper case).
std::string normalize_precision(std::string_view name);

struct PerfRecord {
  std::string model_label;
  std::string precision = "FP32";
  std::string video_id;
  int repetition = 0;

  double load_ms = 0.0;
  std::string load_source = "none";  // "backend", "launch" or "none"
  double prompt_eval_ms = 0.0;
  bool prompt_eval_estimated = false;  // derived from ttft - tpot
  double ttft_ms = 0.0;
  std::optional<double> tpot_ms;
  std::optional<double> generation_ms;  // tpot_ms * tokens_out
  double decode_span_ms = 0.0;          // last arrival - first arrival
  double total_latency_ms = 0.0;        // load_ms + (last arrival - request start)
  double overhead_ms = 0.0;             // total - (load + prompt_eval + generation)
  int tokens_out = 0;
  std::optional<double> tokens_per_s;
  std::optional<double> peak_rss_mb;
  std::optional<double> model_size_mb;
  bool insufficient_tokens = false;  // tokens_out < 2, tpot undefined
};

nlohmann::json to_json(const PerfRecord& r);
PerfRecord perf_record_from_json(const nlohmann::json& j);

// Timing decomposition of one streamed request:
//   ttft           = first arrival - request start
//   tpot           = (last - first) / (tokens_out - 1), tokens_out >= 2
//   generation     = tpot * tokens_out
//   tokens_per_s   = 1000 / tpot
//   prompt_eval    = backend value, else max(0, ttft - tpot), else ttft
//   total_latency  = load + (last - request start)
// Throws InvalidTrace for traces without per-token timing, unordered
// arrivals, or a zero decode span.
PerfRecord derive_record(const TokenTimingTrace& trace, int tokens_out, double load_ms,
                         std::optional<double> prompt_eval_ms, std::optional<double> peak_rss_mb,
                         std::optional<double> model_size_mb);

// Evenly spaced trace: first token at `ttft_ms`, then one every `tpot_ms`.
TokenTimingTrace synthetic_trace(double ttft_ms, double tpot_ms, int tokens);

// ---------------------------------------------------------------------------
// memory

inline constexpr int kMinSampleIntervalMs = 10;
inline constexpr int kMaxSampleIntervalMs = 1000;
void validate_sample_interval(int interval_ms);  // InvalidArgument outside [10, 1000]

// Samples VmRSS of `pid` on a background thread, keeping a running maximum.
// The first sample is taken in the constructor (ProcessNotObservable if it
// fails); sampling ends on stop() or when the process goes away.
class MemorySampler {
 public:
  MemorySampler(pid_t pid, int interval_ms);
  ~MemorySampler();
  MemorySampler(const MemorySampler&) = delete;
  MemorySampler& operator=(const MemorySampler&) = delete;

  void stop();
  // Blocks until the observed process is gone.
  void join();
  std::uint64_t peak_bytes() const { return peak_.load(); }
  double peak_mb() const { return static_cast<double>(peak_bytes()) / kBytesPerMB; }
  std::size_t samples() const { return samples_.load(); }

 private:
  void loop();

  pid_t pid_;
  int interval_ms_;
  std::atomic<std::uint64_t> peak_{0};
  std::atomic<std::size_t> samples_{0};
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

// Blocks until `pid` exits and returns its peak RSS in MB.
double sample_peak_memory(pid_t pid, int interval_ms);

// Peak of a replayed RSS timeline (time ms, bytes; a step function holding each
// value until the next point) sampled at t = 0, interval, 2 * interval, ...
// up to the last timeline point.
std::uint64_t peak_from_timeline(const std::vector<std::pair<double, std::uint64_t>>& timeline, double interval_ms);

// ---------------------------------------------------------------------------
// benchmarking

struct LaunchSpec {
  // Placeholders: {model}, {port}, {host}
  std::string command_template;
  std::optional<std::filesystem::path> working_dir;
  double health_timeout_s = 120.0;
  int health_poll_ms = 50;
};

struct BenchBackend {
  BackendConfig backend;
  std::string model_label;
  std::string precision = "FP32";
  std::optional<std::filesystem::path> model_path;
  std::optional<LaunchSpec> launch;
  std::optional<pid_t> observe_pid;  // sample an already running server
};

nlohmann::json to_json(const BenchBackend& b);
BenchBackend bench_backend_from_json(const nlohmann::json& j);

struct BenchPlan {
  std::vector<BenchBackend> backends;
  std::vector<std::string> videos;
  PromptStrategy strategy = PromptStrategy::PromptContextAD;
  int repetitions = 3;
  int warmup_runs = 1;
  int memory_sample_interval_ms = 50;

  void validate() const;
};

struct BenchInput {
  PromptBundle bundle;
  KeyframeSet keyframes;
};

using BenchInputSource = std::function<BenchInput(const std::string& video_id)>;

struct BenchLogs {
  std::filesystem::path dir;  // launched backends write <label>-<precision>.stdout/.stderr here
};

// Serial: one request in flight at a time. Emits one record per (backend,
// video, repetition) after warmups.
std::vector<PerfRecord> run_bench(const BenchPlan& plan, const BenchInputSource& inputs,
                                  const std::optional<BenchLogs>& logs = std::nullopt);

double median(std::vector<double> values);

struct PrecisionGroup {
  std::string model_label;
  std::string precision;
  std::size_t records = 0;
  double total_latency_ms = 0.0;
  std::optional<double> peak_rss_mb;
  std::optional<double> model_size_mb;
  std::optional<double> tokens_per_s;
  double ttft_ms = 0.0;
  std::optional<double> tpot_ms;
  std::optional<double> generation_ms;
  double tokens_out = 0.0;
};

struct PrecisionRatio {
  std::string model_label;
  double tpot_ratio = 0.0;        // INT8 / FP32
  double generation_ratio = 0.0;
  double tokens_ratio = 0.0;
  double latency_ratio = 0.0;
  bool longer_output_anomaly = false;  // tpot ratio < 1 and generation ratio > 1
};

struct PrecisionComparison {
  std::vector<PrecisionGroup> groups;  // ordered by (model_label, precision)
  std::vector<PrecisionRatio> ratios;
};

// Medians per (model_label, precision) and INT8/FP32 ratios per model.
// Throws NotEnoughGroups with fewer than two groups.
PrecisionComparison compare_precisions(const std::vector<PerfRecord>& records);

}  // namespace a11y
