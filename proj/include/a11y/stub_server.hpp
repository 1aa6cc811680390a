#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace a11y {

// Deterministic local backend speaking the OpenAI chat flavor (plus the
// llama.cpp /completion route). Timing is scheduled from the moment a request
// arrives: token k is sent at first_token_delay_ms + k * inter_token_ms.
struct StubConfig {
  enum class Mode {
    Script,       // replies from `script`, one entry per request, last repeats
    JudgeScores,  // JSON carrying every rubric key, scores hashed from the request
    EchoContext,  // repeats the "Current Description:" block, else first script line
  };

  std::string model_name = "stub-model";
  Mode mode = Mode::Script;
  std::vector<std::string> script = {"A person walks across a room and sits down at a table."};
  // When non-empty, streamed verbatim as the token sequence (overrides mode).
  std::vector<std::string> tokens;
  int first_token_delay_ms = 0;
  int inter_token_ms = 0;
  int health_delay_ms = 0;
  int context_length = 4096;
  // Reported in llama-style "timings" on the final event when >= 0.
  double prompt_ms = -1.0;
  // The first `fail_first_n` completion requests answer with `fail_status`.
  int fail_first_n = 0;
  int fail_status = 503;
};

// Splits text into stream tokens: each token is a word with its leading
// whitespace, so concatenation restores the text exactly.
std::vector<std::string> split_stream_tokens(const std::string& text);

class StubServer {
 public:
  explicit StubServer(StubConfig cfg);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  // Binds 127.0.0.1 on `port` (0 = ephemeral) and serves on a background thread.
  void start(int port = 0);
  void stop();
  // Blocks serving on the calling thread (for the standalone tool).
  void listen_blocking(const std::string& host, int port);

  int port() const { return port_; }
  std::string url() const;
  int completion_requests() const { return completions_.load(); }
  std::vector<std::string> request_bodies() const;
  int peak_concurrency() const { return peak_concurrency_.load(); }

 private:
  struct Impl;
  void install_routes();
  std::string reply_for(const std::string& body, int request_index) const;

  StubConfig cfg_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> completions_{0};
  std::atomic<int> active_{0};
  std::atomic<int> peak_concurrency_{0};
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
};

}  // namespace a11y
