#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a11y/error.hpp"
#include "a11y/keyframes.hpp"
#include "a11y/prompts.hpp"

namespace a11y {

enum class ApiFlavor { OpenAIChat, LlamaServer };

std::string_view to_string(ApiFlavor f);
ApiFlavor parse_api_flavor(std::string_view name);

struct BackendConfig {
  std::string endpoint_url = "http://127.0.0.1:8080";
  ApiFlavor api_flavor = ApiFlavor::OpenAIChat;
  std::string model_name;
  int max_tokens = 512;
  double temperature = 0.0;
  double timeout_s = 120.0;
  int max_retries = 2;
  bool stream = true;
  std::optional<int> seed;
  int max_inflight = 1;     // 1 == serial
  int max_image_edge = 1024;

  void validate() const;  // throws ConfigInvalid
};

nlohmann::json to_json(const BackendConfig& cfg);
BackendConfig backend_from_json(const nlohmann::json& j);

// Milliseconds on the steady clock. Only this clock feeds timing traces.
double monotonic_ms();

struct TokenTimingTrace {
  double request_start = 0.0;  // monotonic ms
  double first_token_at = 0.0;
  std::vector<double> token_arrivals;
  std::optional<double> prompt_eval_ms;  // backend-reported
  std::optional<double> load_ms;         // backend-reported
  bool low_resolution_timing = false;    // non-streaming response

  bool operator==(const TokenTimingTrace&) const = default;
};

nlohmann::json to_json(const TokenTimingTrace& t);
TokenTimingTrace trace_from_json(const nlohmann::json& j);

struct GenerationResult {
  std::string video_id;
  PromptStrategy strategy = PromptStrategy::PromptOnly;
  std::string text;
  int tokens_out = 0;
  TokenTimingTrace trace;
  BackendConfig backend;
  int attempts = 1;
};

nlohmann::json to_json(const GenerationResult& r);
GenerationResult generation_from_json(const nlohmann::json& j);

// A mid-stream failure. The text received so far is kept for diagnostics.
class StreamAbortedError : public Error {
 public:
  StreamAbortedError(const std::string& message, std::string partial)
      : Error(Errc::StreamAborted, message), partial_text(std::move(partial)) {}
  std::string partial_text;
};

struct ImagePart {
  std::string mime_type;
  std::string base64;
  int width = 0;
  int height = 0;

  std::string data_url() const { return "data:" + mime_type + ";base64," + base64; }
};

// PNG/JPEG only. Images whose longest side exceeds `max_edge` are downscaled
// (aspect preserved, longest side == max_edge) and re-encoded as PNG.
ImagePart encode_image_payload(const std::filesystem::path& path, int max_edge = 1024);

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<ImagePart> images;
};

struct Completion {
  std::string text;
  TokenTimingTrace trace;
  int attempts = 1;
};

// Incremental decoder for a streamed completion body. Feeding the same bytes
// in any chunking yields the same text and token count.
class StreamAccumulator {
 public:
  explicit StreamAccumulator(ApiFlavor flavor, bool streaming = true) : flavor_(flavor), streaming_(streaming) {}

  // `at_ms` is the arrival time stamped on every token decoded from `chunk`.
  void feed(std::string_view chunk, double at_ms);
  // Call once the body is complete (flushes a trailing event, parses
  // non-streamed bodies).
  void finish(double at_ms);

  const std::string& text() const { return text_; }
  const std::vector<double>& arrivals() const { return arrivals_; }
  std::optional<double> prompt_eval_ms() const { return prompt_ms_; }
  std::optional<double> load_ms() const { return load_ms_; }
  bool done() const { return done_; }
  std::size_t bytes_seen() const { return bytes_; }

 private:
  void dispatch(const std::string& data, double at_ms);
  void on_line(std::string_view line, double at_ms);

  ApiFlavor flavor_;
  bool streaming_;
  std::string pending_;  // partial line
  std::string event_data_;
  std::string raw_;      // whole body, non-streaming mode
  std::string text_;
  std::vector<double> arrivals_;
  std::optional<double> prompt_ms_;
  std::optional<double> load_ms_;
  bool done_ = false;
  std::size_t bytes_ = 0;
};

struct HealthReport {
  std::string model_name;
  std::optional<int> context_length;
  double round_trip_ms = 0.0;
};

// Bounded in-flight gate shared by every request through one client.
class InflightLimiter {
 public:
  explicit InflightLimiter(int limit) : limit_(limit < 1 ? 1 : limit) {}
  void acquire();
  void release();
  int peak() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
  int peak_ = 0;
};

class InferenceClient {
 public:
  explicit InferenceClient(BackendConfig cfg);

  const BackendConfig& config() const { return cfg_; }

  HealthReport health_check() const;
  Completion complete(const ChatRequest& req) const;
  GenerationResult generate(const PromptBundle& bundle, const KeyframeSet& images) const;

  // Highest number of concurrent requests observed.
  int peak_inflight() const { return limiter_->peak(); }

 private:
  Completion complete_once(const ChatRequest& req) const;

  BackendConfig cfg_;
  std::string host_;
  int port_ = 80;
  std::string base_path_;
  std::shared_ptr<InflightLimiter> limiter_;
};

HealthReport health_check(const BackendConfig& cfg);
GenerationResult generate(const PromptBundle& bundle, const KeyframeSet& images, const BackendConfig& cfg);

// Request body for `req` in the configured flavor (exposed for tests).
nlohmann::json build_request_body(const ChatRequest& req, const BackendConfig& cfg);

}  // namespace a11y
