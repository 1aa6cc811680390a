#include "a11y/perf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>

#include "a11y/error.hpp"
#include "a11y/process.hpp"

namespace a11y {

using nlohmann::json;

std::string normalize_precision(std::string_view name) {
  std::string out(name);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (out.empty()) throw Error(Errc::InvalidArgument, "empty precision label");
  return out;
}

PerfRecord derive_record(const TokenTimingTrace& trace, int tokens_out, double load_ms,
                         std::optional<double> prompt_eval_ms, std::optional<double> peak_rss_mb,
                         std::optional<double> model_size_mb) {
  if (tokens_out < 1) throw Error(Errc::InvalidArgument, "tokens_out must be >= 1");
  if (trace.low_resolution_timing) {
    throw Error(Errc::InvalidTrace, "non-streamed response carries no per-token timing");
  }
  const auto& arr = trace.token_arrivals;
  if (arr.empty()) throw Error(Errc::InvalidTrace, "trace has no token arrivals");
  if (static_cast<int>(arr.size()) != tokens_out) {
    throw Error(Errc::InvalidTrace, "trace holds " + std::to_string(arr.size()) + " arrivals for " +
                                        std::to_string(tokens_out) + " tokens");
  }
  if (arr.front() < trace.request_start || !std::is_sorted(arr.begin(), arr.end())) {
    throw Error(Errc::InvalidTrace, "token arrivals are not ordered after the request start");
  }
  if (load_ms < 0.0) throw Error(Errc::InvalidArgument, "load_ms must be >= 0");

  PerfRecord r;
  r.tokens_out = tokens_out;
  r.load_ms = load_ms;
  r.ttft_ms = arr.front() - trace.request_start;
  r.decode_span_ms = arr.back() - arr.front();
  r.peak_rss_mb = peak_rss_mb;
  r.model_size_mb = model_size_mb;

  if (tokens_out >= 2) {
    if (r.decode_span_ms <= 0.0) throw Error(Errc::InvalidTrace, "zero-duration trace: tpot would be 0");
    const double tpot = r.decode_span_ms / (tokens_out - 1);
    r.tpot_ms = tpot;
    r.generation_ms = tpot * tokens_out;
    r.tokens_per_s = 1000.0 / tpot;
  } else {
    r.insufficient_tokens = true;
  }

  if (prompt_eval_ms) {
    r.prompt_eval_ms = *prompt_eval_ms;
  } else {
    // the first token's decode is counted in generation_ms
    r.prompt_eval_ms = std::max(0.0, r.ttft_ms - r.tpot_ms.value_or(0.0));
    r.prompt_eval_estimated = true;
  }
  r.total_latency_ms = load_ms + (arr.back() - trace.request_start);
  r.overhead_ms = r.total_latency_ms - (r.load_ms + r.prompt_eval_ms + r.generation_ms.value_or(0.0));
  return r;
}

TokenTimingTrace synthetic_trace(double ttft_ms, double tpot_ms, int tokens) {
  TokenTimingTrace t;
  t.request_start = 0.0;
  t.first_token_at = ttft_ms;
  for (int i = 0; i < tokens; ++i) t.token_arrivals.push_back(ttft_ms + tpot_ms * i);
  return t;
}

namespace {

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

json to_json(const PerfRecord& r) {
  json j{{"model_label", r.model_label},
         {"precision", r.precision},
         {"video_id", r.video_id},
         {"repetition", r.repetition},
         {"load_ms", r.load_ms},
         {"load_source", r.load_source},
         {"prompt_eval_ms", r.prompt_eval_ms},
         {"prompt_eval_estimated", r.prompt_eval_estimated},
         {"ttft_ms", r.ttft_ms},
         {"decode_span_ms", r.decode_span_ms},
         {"total_latency_ms", r.total_latency_ms},
         {"overhead_ms", r.overhead_ms},
         {"tokens_out", r.tokens_out},
         {"insufficient_tokens", r.insufficient_tokens}};
  put_opt(j, "tpot_ms", r.tpot_ms);
  put_opt(j, "generation_ms", r.generation_ms);
  put_opt(j, "tokens_per_s", r.tokens_per_s);
  put_opt(j, "peak_rss_mb", r.peak_rss_mb);
  put_opt(j, "model_size_mb", r.model_size_mb);
  return j;
}

PerfRecord perf_record_from_json(const json& j) {
  PerfRecord r;
  r.model_label = j.at("model_label").get<std::string>();
  r.precision = j.at("precision").get<std::string>();
  r.video_id = j.value("video_id", "");
  r.repetition = j.value("repetition", 0);
  r.load_ms = j.at("load_ms").get<double>();
  r.load_source = j.value("load_source", "none");
  r.prompt_eval_ms = j.at("prompt_eval_ms").get<double>();
  r.prompt_eval_estimated = j.value("prompt_eval_estimated", false);
  r.ttft_ms = j.at("ttft_ms").get<double>();
  r.decode_span_ms = j.value("decode_span_ms", 0.0);
  r.total_latency_ms = j.at("total_latency_ms").get<double>();
  r.overhead_ms = j.value("overhead_ms", 0.0);
  r.tokens_out = j.at("tokens_out").get<int>();
  r.insufficient_tokens = j.value("insufficient_tokens", false);
  r.tpot_ms = get_opt<double>(j, "tpot_ms");
  r.generation_ms = get_opt<double>(j, "generation_ms");
  r.tokens_per_s = get_opt<double>(j, "tokens_per_s");
  r.peak_rss_mb = get_opt<double>(j, "peak_rss_mb");
  r.model_size_mb = get_opt<double>(j, "model_size_mb");
  return r;
}

// ---------------------------------------------------------------------------
// memory

void validate_sample_interval(int interval_ms) {
  if (interval_ms < kMinSampleIntervalMs || interval_ms > kMaxSampleIntervalMs) {
    throw Error(Errc::InvalidArgument, "memory sample interval " + std::to_string(interval_ms) +
                                           " ms outside [" + std::to_string(kMinSampleIntervalMs) + ", " +
                                           std::to_string(kMaxSampleIntervalMs) + "]");
  }
}

MemorySampler::MemorySampler(pid_t pid, int interval_ms) : pid_(pid), interval_ms_(interval_ms) {
  validate_sample_interval(interval_ms);
  const auto first = read_rss_bytes(pid);
  if (!first) throw Error(Errc::ProcessNotObservable, "cannot read memory statistics of pid " + std::to_string(pid));
  peak_ = *first;
  samples_ = 1;
  thread_ = std::thread([this] { loop(); });
}

MemorySampler::~MemorySampler() { stop(); }

void MemorySampler::loop() {
  auto next = std::chrono::steady_clock::now();
  while (!stop_.load()) {
    next += std::chrono::milliseconds(interval_ms_);
    std::this_thread::sleep_until(next);
    if (stop_.load()) break;
    const auto rss = read_rss_bytes(pid_);
    if (!rss) break;
    ++samples_;
    for (auto prev = peak_.load(); *rss > prev && !peak_.compare_exchange_weak(prev, *rss);) {
    }
  }
}

void MemorySampler::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void MemorySampler::join() {
  if (thread_.joinable()) thread_.join();
}

double sample_peak_memory(pid_t pid, int interval_ms) {
  MemorySampler sampler(pid, interval_ms);
  sampler.join();
  return sampler.peak_mb();
}

std::uint64_t peak_from_timeline(const std::vector<std::pair<double, std::uint64_t>>& timeline, double interval_ms) {
  if (!(interval_ms > 0.0)) throw Error(Errc::InvalidArgument, "sampling interval must be positive");
  if (timeline.empty()) return 0;
  std::uint64_t peak = 0;
  const double end = timeline.back().first;
  std::size_t idx = 0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * interval_ms;
    if (t > end) break;
    while (idx + 1 < timeline.size() && timeline[idx + 1].first <= t) ++idx;
    if (timeline[idx].first <= t) peak = std::max(peak, timeline[idx].second);
  }
  return peak;
}

// ---------------------------------------------------------------------------
// benchmarking

json to_json(const BenchBackend& b) {
  json j{{"backend", to_json(b.backend)}, {"model_label", b.model_label}, {"precision", b.precision}};
  if (b.model_path) j["model_path"] = b.model_path->string();
  if (b.launch) {
    json l{{"command", b.launch->command_template},
           {"health_timeout_s", b.launch->health_timeout_s},
           {"health_poll_ms", b.launch->health_poll_ms}};
    if (b.launch->working_dir) l["working_dir"] = b.launch->working_dir->string();
    j["launch"] = l;
  }
  if (b.observe_pid) j["observe_pid"] = *b.observe_pid;
  return j;
}

BenchBackend bench_backend_from_json(const json& j) {
  BenchBackend b;
  b.backend = backend_from_json(j.at("backend"));
  b.model_label = j.value("model_label", b.backend.model_name);
  b.precision = normalize_precision(j.value("precision", "FP32"));
  if (j.contains("model_path")) b.model_path = j.at("model_path").get<std::string>();
  if (j.contains("launch")) {
    const auto& l = j.at("launch");
    LaunchSpec spec;
    spec.command_template = l.at("command").get<std::string>();
    if (l.contains("working_dir")) spec.working_dir = l.at("working_dir").get<std::string>();
    spec.health_timeout_s = l.value("health_timeout_s", spec.health_timeout_s);
    spec.health_poll_ms = l.value("health_poll_ms", spec.health_poll_ms);
    b.launch = spec;
  }
  if (j.contains("observe_pid")) b.observe_pid = j.at("observe_pid").get<pid_t>();
  return b;
}

void BenchPlan::validate() const {
  if (backends.empty()) throw Error(Errc::ConfigInvalid, "bench plan has no backends");
  if (videos.empty()) throw Error(Errc::ConfigInvalid, "bench plan has no videos");
  if (repetitions < 1) throw Error(Errc::ConfigInvalid, "repetitions must be >= 1");
  if (warmup_runs < 0) throw Error(Errc::ConfigInvalid, "warmup_runs must be >= 0");
  try {
    validate_sample_interval(memory_sample_interval_ms);
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  for (const auto& b : backends) {
    b.backend.validate();
    if (b.model_label.empty()) throw Error(Errc::ConfigInvalid, "bench backend without model_label");
  }
}

namespace {

std::pair<std::string, std::string> host_port_of(const std::string& url) {
  std::string rest = url.substr(url.find("://") == std::string::npos ? 0 : url.find("://") + 3);
  rest = rest.substr(0, rest.find('/'));
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) return {rest, "80"};
  return {rest.substr(0, colon), rest.substr(colon + 1)};
}

struct LaunchedBackend {
  std::optional<ChildProcess> child;
  double load_ms = 0.0;
};

LaunchedBackend launch_backend(const BenchBackend& b, const std::optional<BenchLogs>& logs) {
  const auto& spec = *b.launch;
  const auto [host, port] = host_port_of(b.backend.endpoint_url);
  const auto argv = expand_command(spec.command_template,
                                   {{"model", b.model_path ? b.model_path->string() : std::string()},
                                    {"port", port},
                                    {"host", host}});
  SpawnOptions opts;
  opts.working_dir = spec.working_dir;
  if (logs) {
    const auto stem = b.model_label + "-" + b.precision;
    std::filesystem::create_directories(logs->dir);
    opts.stdout_path = logs->dir / (stem + ".stdout");
    opts.stderr_path = logs->dir / (stem + ".stderr");
  }
  LaunchedBackend out;
  const double t0 = monotonic_ms();
  out.child.emplace(ChildProcess::spawn(argv, opts));

  BackendConfig probe = b.backend;
  probe.max_retries = 0;
  probe.timeout_s = std::max(1.0, static_cast<double>(spec.health_poll_ms) / 1000.0 * 20.0);
  const double deadline = t0 + spec.health_timeout_s * 1000.0;
  for (;;) {
    if (!out.child->running()) {
      throw Error(Errc::BackendLaunchFailed, "backend '" + b.model_label + "' exited before becoming healthy");
    }
    try {
      health_check(probe);
      break;
    } catch (const Error&) {
    }
    if (monotonic_ms() > deadline) {
      throw Error(Errc::BackendLaunchFailed, "backend '" + b.model_label + "' not healthy after " +
                                                 std::to_string(spec.health_timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(spec.health_poll_ms));
  }
  out.load_ms = monotonic_ms() - t0;
  return out;
}

}  // namespace

std::vector<PerfRecord> run_bench(const BenchPlan& plan, const BenchInputSource& inputs,
                                  const std::optional<BenchLogs>& logs) {
  plan.validate();
  std::vector<PerfRecord> out;
  for (const auto& b : plan.backends) {
    BackendConfig cfg = b.backend;
    cfg.max_inflight = 1;
    cfg.stream = true;

    std::optional<double> model_size;
    if (b.model_path) {
      std::error_code ec;
      const auto bytes = std::filesystem::file_size(*b.model_path, ec);
      if (!ec) model_size = static_cast<double>(bytes) / kBytesPerMB;
    }

    LaunchedBackend launched;
    std::unique_ptr<MemorySampler> sampler;
    if (b.launch) {
      launched = launch_backend(b, logs);
      sampler = std::make_unique<MemorySampler>(launched.child->pid(), plan.memory_sample_interval_ms);
    } else if (b.observe_pid) {
      sampler = std::make_unique<MemorySampler>(*b.observe_pid, plan.memory_sample_interval_ms);
    }

    InferenceClient client(cfg);
    for (const auto& video : plan.videos) {
      const BenchInput input = inputs(video);
      for (int rep = 0; rep < plan.warmup_runs + plan.repetitions; ++rep) {
        const auto result = client.generate(input.bundle, input.keyframes);
        if (rep < plan.warmup_runs) continue;

        double load_ms = 0.0;
        std::string load_source = "none";
        if (result.trace.load_ms) {
          load_ms = *result.trace.load_ms;
          load_source = "backend";
        } else if (b.launch) {
          load_ms = launched.load_ms;
          load_source = "launch";
        }
        std::optional<double> peak;
        if (sampler) peak = sampler->peak_mb();
        PerfRecord r = derive_record(result.trace, result.tokens_out, load_ms, result.trace.prompt_eval_ms, peak,
                                     model_size);
        r.model_label = b.model_label;
        r.precision = normalize_precision(b.precision);
        r.video_id = video;
        r.repetition = rep - plan.warmup_runs;
        r.load_source = load_source;
        out.push_back(std::move(r));
      }
    }
    if (sampler) sampler->stop();
    if (launched.child) launched.child->terminate();
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptyGroup, "median of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

namespace {

std::optional<double> median_opt(const std::vector<PerfRecord>& rs, std::optional<double> PerfRecord::*field) {
  std::vector<double> v;
  for (const auto& r : rs) {
    if (r.*field) v.push_back(*(r.*field));
  }
  if (v.empty()) return std::nullopt;
  return median(std::move(v));
}

double median_of(const std::vector<PerfRecord>& rs, double PerfRecord::*field) {
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(r.*field);
  return median(std::move(v));
}

}  // namespace

PrecisionComparison compare_precisions(const std::vector<PerfRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<PerfRecord>> groups;
  for (const auto& r : records) groups[{r.model_label, normalize_precision(r.precision)}].push_back(r);
  if (groups.size() < 2) {
    throw Error(Errc::NotEnoughGroups, "precision comparison needs >= 2 (model, precision) groups, got " +
                                           std::to_string(groups.size()));
  }
  PrecisionComparison out;
  std::map<std::pair<std::string, std::string>, const PrecisionGroup*> index;
  for (const auto& [key, rs] : groups) {
    PrecisionGroup g;
    g.model_label = key.first;
    g.precision = key.second;
    g.records = rs.size();
    g.total_latency_ms = median_of(rs, &PerfRecord::total_latency_ms);
    g.ttft_ms = median_of(rs, &PerfRecord::ttft_ms);
    g.peak_rss_mb = median_opt(rs, &PerfRecord::peak_rss_mb);
    g.model_size_mb = median_opt(rs, &PerfRecord::model_size_mb);
    g.tokens_per_s = median_opt(rs, &PerfRecord::tokens_per_s);
    g.tpot_ms = median_opt(rs, &PerfRecord::tpot_ms);
    g.generation_ms = median_opt(rs, &PerfRecord::generation_ms);
    std::vector<double> toks;
    for (const auto& r : rs) toks.push_back(r.tokens_out);
    g.tokens_out = median(std::move(toks));
    out.groups.push_back(std::move(g));
  }
  for (const auto& g : out.groups) index[{g.model_label, g.precision}] = &g;

  for (const auto& g : out.groups) {
    if (g.precision != "FP32") continue;
    auto it = index.find({g.model_label, "INT8"});
    if (it == index.end()) continue;
    const PrecisionGroup& q = *it->second;
    PrecisionRatio ratio;
    ratio.model_label = g.model_label;
    auto div = [](std::optional<double> a, std::optional<double> b) {
      return a && b && *b != 0.0 ? *a / *b : std::nan("");
    };
    ratio.tpot_ratio = div(q.tpot_ms, g.tpot_ms);
    ratio.generation_ratio = div(q.generation_ms, g.generation_ms);
    ratio.tokens_ratio = div(q.tokens_out, g.tokens_out);
    ratio.latency_ratio = div(q.total_latency_ms, g.total_latency_ms);
    ratio.longer_output_anomaly = ratio.tpot_ratio < 1.0 && ratio.generation_ratio > 1.0;
    out.ratios.push_back(ratio);
  }
  return out;
}

}  // namespace a11y
