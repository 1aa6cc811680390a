#include "a11y/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "a11y/image.hpp"
#include "a11y/io.hpp"

namespace a11y {

using nlohmann::json;

std::string_view to_string(ApiFlavor f) { return f == ApiFlavor::OpenAIChat ? "openai" : "llama-server"; }

ApiFlavor parse_api_flavor(std::string_view name) {
  if (name == "openai" || name == "openai-chat") return ApiFlavor::OpenAIChat;
  if (name == "llama-server" || name == "llama") return ApiFlavor::LlamaServer;
  throw Error(Errc::ConfigInvalid, "unknown api_flavor \"" + std::string(name) + "\" (openai|llama-server)");
}

void BackendConfig::validate() const {
  if (endpoint_url.rfind("http://", 0) != 0) {
    throw Error(Errc::ConfigInvalid, "endpoint_url must start with http:// (got \"" + endpoint_url + "\")");
  }
  if (max_tokens < 1) throw Error(Errc::ConfigInvalid, "max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw Error(Errc::ConfigInvalid, "temperature must be >= 0");
  if (!(timeout_s > 0.0)) throw Error(Errc::ConfigInvalid, "timeout_s must be > 0");
  if (max_retries < 0) throw Error(Errc::ConfigInvalid, "max_retries must be >= 0");
  if (max_inflight < 1) throw Error(Errc::ConfigInvalid, "max_inflight must be >= 1");
  if (max_image_edge < 16) throw Error(Errc::ConfigInvalid, "max_image_edge must be >= 16");
}

json to_json(const BackendConfig& cfg) {
  json j{{"endpoint_url", cfg.endpoint_url},
         {"api_flavor", to_string(cfg.api_flavor)},
         {"model_name", cfg.model_name},
         {"max_tokens", cfg.max_tokens},
         {"temperature", cfg.temperature},
         {"timeout_s", cfg.timeout_s},
         {"max_retries", cfg.max_retries},
         {"stream", cfg.stream},
         {"max_inflight", cfg.max_inflight},
         {"max_image_edge", cfg.max_image_edge}};
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  return j;
}

BackendConfig backend_from_json(const json& j) {
  BackendConfig cfg;
  try {
    cfg.endpoint_url = j.value("endpoint_url", cfg.endpoint_url);
    cfg.api_flavor = parse_api_flavor(j.value("api_flavor", std::string("openai")));
    cfg.model_name = j.value("model_name", cfg.model_name);
    cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.stream = j.value("stream", cfg.stream);
    cfg.max_inflight = j.value("max_inflight", cfg.max_inflight);
    cfg.max_image_edge = j.value("max_image_edge", cfg.max_image_edge);
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) cfg.seed = it->get<int>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("backend: ") + e.what());
  }
  return cfg;
}

double monotonic_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

json to_json(const TokenTimingTrace& t) {
  json j{{"request_start", t.request_start},
         {"first_token_at", t.first_token_at},
         {"token_arrivals", t.token_arrivals},
         {"low_resolution_timing", t.low_resolution_timing}};
  j["prompt_eval_ms"] = t.prompt_eval_ms ? json(*t.prompt_eval_ms) : json(nullptr);
  j["load_ms"] = t.load_ms ? json(*t.load_ms) : json(nullptr);
  return j;
}

TokenTimingTrace trace_from_json(const json& j) {
  TokenTimingTrace t;
  t.request_start = j.at("request_start").get<double>();
  t.first_token_at = j.at("first_token_at").get<double>();
  t.token_arrivals = j.at("token_arrivals").get<std::vector<double>>();
  t.low_resolution_timing = j.value("low_resolution_timing", false);
  if (auto it = j.find("prompt_eval_ms"); it != j.end() && !it->is_null()) t.prompt_eval_ms = it->get<double>();
  if (auto it = j.find("load_ms"); it != j.end() && !it->is_null()) t.load_ms = it->get<double>();
  return t;
}

json to_json(const GenerationResult& r) {
  return json{{"video_id", r.video_id},
              {"strategy", to_string(r.strategy)},
              {"text", r.text},
              {"tokens_out", r.tokens_out},
              {"attempts", r.attempts},
              {"trace", to_json(r.trace)},
              {"backend", to_json(r.backend)}};
}

GenerationResult generation_from_json(const json& j) {
  GenerationResult r;
  try {
    r.video_id = j.at("video_id").get<std::string>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.text = j.at("text").get<std::string>();
    r.tokens_out = j.at("tokens_out").get<int>();
    r.attempts = j.value("attempts", 1);
    r.trace = trace_from_json(j.at("trace"));
    r.backend = backend_from_json(j.at("backend"));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("generation record: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Images

ImagePart encode_image_payload(const std::filesystem::path& path, int max_edge) {
  std::string raw;
  try {
    raw = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::IoError, e.what());
  }
  std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size());
  const auto format = sniff_image_format(bytes);
  if (format == ImageFormat::Unknown) throw Error(Errc::UnsupportedFormat, path.string());

  auto image = decode_image(bytes);
  ImagePart part;
  const int longest = std::max(image.width, image.height);
  if (longest > max_edge) {
    const double scale = static_cast<double>(max_edge) / longest;
    int w = image.width >= image.height ? max_edge : std::max(1, static_cast<int>(std::lround(image.width * scale)));
    int h = image.height > image.width ? max_edge : std::max(1, static_cast<int>(std::lround(image.height * scale)));
    auto scaled = resize_image(image, w, h);
    auto png = encode_png(scaled);
    part.mime_type = "image/png";
    part.base64 = base64_encode(png);
    part.width = w;
    part.height = h;
  } else {
    part.mime_type = format == ImageFormat::Png ? "image/png" : "image/jpeg";
    part.base64 = base64_encode(bytes);
    part.width = image.width;
    part.height = image.height;
  }
  return part;
}

// ---------------------------------------------------------------------------
// Stream decoding

void StreamAccumulator::feed(std::string_view chunk, double at_ms) {
  bytes_ += chunk.size();
  if (!streaming_) {
    raw_.append(chunk);
    return;
  }
  pending_.append(chunk);
  std::size_t start = 0;
  for (auto nl = pending_.find('\n', start); nl != std::string::npos; nl = pending_.find('\n', start)) {
    std::string_view line(pending_.data() + start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    on_line(line, at_ms);
    start = nl + 1;
  }
  pending_.erase(0, start);
}

void StreamAccumulator::on_line(std::string_view line, double at_ms) {
  if (line.empty()) {
    if (!event_data_.empty()) {
      dispatch(event_data_, at_ms);
      event_data_.clear();
    }
    return;
  }
  if (line.front() == ':') return;  // comment / keep-alive
  if (line.rfind("data:", 0) == 0) {
    auto payload = line.substr(5);
    if (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);
    if (!event_data_.empty()) event_data_ += '\n';
    event_data_.append(payload);
  }
}

namespace {

void capture_timings(const json& doc, std::optional<double>& prompt_ms, std::optional<double>& load_ms) {
  auto it = doc.find("timings");
  if (it == doc.end() || !it->is_object()) return;
  if (auto p = it->find("prompt_ms"); p != it->end() && p->is_number()) prompt_ms = p->get<double>();
  if (auto l = it->find("load_ms"); l != it->end() && l->is_number()) load_ms = l->get<double>();
}

std::string error_text(const json& doc) {
  const auto& err = doc.at("error");
  if (err.is_object() && err.contains("message") && err["message"].is_string()) return err["message"].get<std::string>();
  return err.dump();
}

}  // namespace

void StreamAccumulator::dispatch(const std::string& data, double at_ms) {
  if (done_) return;
  if (data == "[DONE]") {
    done_ = true;
    return;
  }
  auto doc = json::parse(data, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return;
  if (doc.contains("error")) throw Error(Errc::BackendError, "stream error: " + error_text(doc));

  std::string piece;
  if (flavor_ == ApiFlavor::OpenAIChat) {
    auto choices = doc.find("choices");
    if (choices != doc.end() && choices->is_array() && !choices->empty()) {
      const auto& c0 = (*choices)[0];
      if (auto d = c0.find("delta"); d != c0.end() && d->is_object()) {
        if (auto content = d->find("content"); content != d->end() && content->is_string()) {
          piece = content->get<std::string>();
        }
      }
    }
    capture_timings(doc, prompt_ms_, load_ms_);  // llama.cpp's OpenAI route adds these
  } else {
    if (auto content = doc.find("content"); content != doc.end() && content->is_string()) {
      piece = content->get<std::string>();
    }
    capture_timings(doc, prompt_ms_, load_ms_);
    if (doc.value("stop", false)) done_ = true;
  }
  if (!piece.empty()) {
    text_ += piece;
    arrivals_.push_back(at_ms);
  }
}

void StreamAccumulator::finish(double at_ms) {
  if (!streaming_) {
    auto doc = json::parse(raw_, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::BackendError, "malformed response body");
    if (doc.contains("error")) throw Error(Errc::BackendError, error_text(doc));
    std::string content;
    if (flavor_ == ApiFlavor::OpenAIChat) {
      try {
        content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception&) {
        throw Error(Errc::BackendError, "response lacks choices[0].message.content");
      }
    } else {
      content = doc.value("content", std::string());
    }
    capture_timings(doc, prompt_ms_, load_ms_);
    text_ = content;
    if (!text_.empty()) arrivals_.push_back(at_ms);
    done_ = true;
    return;
  }
  if (!pending_.empty()) {
    on_line(pending_, at_ms);
    pending_.clear();
  }
  if (!event_data_.empty()) {
    dispatch(event_data_, at_ms);
    event_data_.clear();
  }
}

// ---------------------------------------------------------------------------

void InflightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void InflightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

int InflightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

namespace {

struct SlotGuard {
  InflightLimiter& limiter;
  explicit SlotGuard(InflightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~SlotGuard() { limiter.release(); }
};

void configure(httplib::Client& cli, double timeout_s) {
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  cli.set_keep_alive(false);
}

// Connection-phase failures are the only ones worth retrying.
bool is_connect_failure(httplib::Error e) {
  return e == httplib::Error::Connection || e == httplib::Error::ConnectionTimeout ||
         e == httplib::Error::BindIPAddress;
}

Error transport_error(httplib::Error e, double elapsed_ms, double timeout_s, const std::string& where) {
  const std::string detail = where + ": " + httplib::to_string(e);
  if (e == httplib::Error::ConnectionTimeout) return Error(Errc::Timeout, detail);
  if (e == httplib::Error::Connection || e == httplib::Error::BindIPAddress) return Error(Errc::ConnectError, detail);
  if (elapsed_ms >= timeout_s * 1000.0 * 0.9) return Error(Errc::Timeout, detail + " after " + std::to_string(elapsed_ms) + " ms");
  return Error(Errc::BackendError, detail);
}

// Marks failures that happened before any request bytes were exchanged.
class ConnectPhaseError : public Error {
 public:
  explicit ConnectPhaseError(const Error& e) : Error(e) {}
};

std::string join_path(const std::string& base, std::string_view route) { return base + std::string(route); }

}  // namespace

InferenceClient::InferenceClient(BackendConfig cfg)
    : cfg_(std::move(cfg)), limiter_(std::make_shared<InflightLimiter>(cfg_.max_inflight)) {
  cfg_.validate();
  std::string rest = cfg_.endpoint_url.substr(7);
  auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  base_path_ = slash == std::string::npos ? "" : rest.substr(slash);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (cfg_.api_flavor == ApiFlavor::OpenAIChat && base_path_.size() >= 3 &&
      base_path_.compare(base_path_.size() - 3, 3, "/v1") == 0) {
    base_path_.resize(base_path_.size() - 3);
  }
  auto colon = authority.rfind(':');
  if (colon == std::string::npos) {
    host_ = authority;
  } else {
    host_ = authority.substr(0, colon);
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::ConfigInvalid, "bad port in " + cfg_.endpoint_url);
    }
  }
  if (host_.empty()) throw Error(Errc::ConfigInvalid, "no host in " + cfg_.endpoint_url);
}

HealthReport InferenceClient::health_check() const {
  httplib::Client cli(host_, port_);
  configure(cli, cfg_.timeout_s);
  HealthReport report;
  const double start = monotonic_ms();

  auto get = [&](const std::string& route) {
    auto res = cli.Get(join_path(base_path_, route));
    if (!res) throw transport_error(res.error(), monotonic_ms() - start, cfg_.timeout_s, "GET " + route);
    return res;
  };

  if (cfg_.api_flavor == ApiFlavor::OpenAIChat) {
    auto res = get("/v1/models");
    if (res->status < 200 || res->status >= 300) {
      throw Error(Errc::BackendError, "GET /v1/models -> " + std::to_string(res->status) + ": " + res->body);
    }
    auto doc = json::parse(res->body, nullptr, false);
    std::vector<std::string> ids;
    if (!doc.is_discarded() && doc.contains("data") && doc["data"].is_array()) {
      for (const auto& m : doc["data"]) {
        if (m.contains("id") && m["id"].is_string()) ids.push_back(m["id"].get<std::string>());
        if (!report.context_length && m.contains("meta") && m["meta"].is_object()) {
          if (auto n = m["meta"].find("n_ctx_train"); n != m["meta"].end() && n->is_number_integer()) {
            report.context_length = n->get<int>();
          }
        }
      }
    }
    if (!cfg_.model_name.empty() && std::find(ids.begin(), ids.end(), cfg_.model_name) != ids.end()) {
      report.model_name = cfg_.model_name;
    } else if (!ids.empty()) {
      report.model_name = ids.front();
    } else {
      report.model_name = cfg_.model_name;
    }
  } else {
    auto res = get("/health");
    if (res->status < 200 || res->status >= 300) {
      throw Error(Errc::BackendError, "GET /health -> " + std::to_string(res->status) + ": " + res->body);
    }
    report.model_name = cfg_.model_name;
    auto props = cli.Get(join_path(base_path_, "/props"));
    if (props && props->status == 200) {
      auto doc = json::parse(props->body, nullptr, false);
      if (!doc.is_discarded() && doc.is_object()) {
        if (auto s = doc.find("default_generation_settings"); s != doc.end() && s->is_object()) {
          if (auto n = s->find("n_ctx"); n != s->end() && n->is_number_integer()) report.context_length = n->get<int>();
        }
        if (auto p = doc.find("model_path"); p != doc.end() && p->is_string() && report.model_name.empty()) {
          report.model_name = p->get<std::string>();
        }
      }
    }
  }
  report.round_trip_ms = monotonic_ms() - start;
  return report;
}

json build_request_body(const ChatRequest& req, const BackendConfig& cfg) {
  json body;
  if (cfg.api_flavor == ApiFlavor::OpenAIChat) {
    json messages = json::array();
    if (!req.system_text.empty()) messages.push_back({{"role", "system"}, {"content", req.system_text}});
    if (req.images.empty()) {
      messages.push_back({{"role", "user"}, {"content", req.user_text}});
    } else {
      json content = json::array();
      content.push_back({{"type", "text"}, {"text", req.user_text}});
      for (const auto& img : req.images) {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", img.data_url()}}}});
      }
      messages.push_back({{"role", "user"}, {"content", std::move(content)}});
    }
    body = {{"model", cfg.model_name},
            {"messages", std::move(messages)},
            {"max_tokens", cfg.max_tokens},
            {"temperature", cfg.temperature},
            {"stream", cfg.stream}};
  } else {
    // llama.cpp /completion with mtmd media markers, one per image.
    std::string prompt;
    if (!req.system_text.empty()) prompt += req.system_text + "\n\n";
    for (std::size_t i = 0; i < req.images.size(); ++i) prompt += "<__media__>\n";
    prompt += req.user_text;
    json prompt_obj{{"prompt_string", prompt}};
    if (!req.images.empty()) {
      json media = json::array();
      for (const auto& img : req.images) media.push_back(img.base64);
      prompt_obj["multimodal_data"] = std::move(media);
    }
    body = {{"prompt", std::move(prompt_obj)},
            {"n_predict", cfg.max_tokens},
            {"temperature", cfg.temperature},
            {"stream", cfg.stream},
            {"cache_prompt", false}};
  }
  if (cfg.seed) body["seed"] = *cfg.seed;
  return body;
}

Completion InferenceClient::complete_once(const ChatRequest& req) const {
  httplib::Client cli(host_, port_);
  configure(cli, cfg_.timeout_s);

  httplib::Request hreq;
  hreq.method = "POST";
  hreq.path = join_path(base_path_, cfg_.api_flavor == ApiFlavor::OpenAIChat ? "/v1/chat/completions" : "/completion");
  hreq.body = build_request_body(req, cfg_).dump();
  hreq.set_header("Content-Type", "application/json");
  hreq.set_header("Accept", cfg_.stream ? "text/event-stream" : "application/json");

  StreamAccumulator acc(cfg_.api_flavor, cfg_.stream);
  int status = 0;
  std::string error_body;
  std::optional<Error> stream_error;
  hreq.response_handler = [&](const httplib::Response& res) {
    status = res.status;
    return true;
  };
  hreq.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    const double now = monotonic_ms();
    if (status < 200 || status >= 300) {
      error_body.append(data, len);
      return true;
    }
    try {
      acc.feed({data, len}, now);
    } catch (const Error& e) {
      stream_error = e;
      return false;
    }
    return true;
  };

  Completion out;
  out.trace.request_start = monotonic_ms();
  auto result = cli.send(hreq);
  const double end = monotonic_ms();

  if (stream_error) throw *stream_error;
  if (result.error() != httplib::Error::Success) {
    if (acc.bytes_seen() > 0) {
      throw StreamAbortedError(httplib::to_string(result.error()) + " after " + std::to_string(acc.arrivals().size()) +
                                   " tokens",
                               acc.text());
    }
    auto err = transport_error(result.error(), end - out.trace.request_start, cfg_.timeout_s, "POST " + hreq.path);
    if (is_connect_failure(result.error())) throw ConnectPhaseError(err);
    throw err;
  }
  if (status < 200 || status >= 300) {
    throw Error(Errc::BackendError, "POST " + hreq.path + " -> " + std::to_string(status) + ": " + error_body);
  }
  acc.finish(end);
  if (acc.text().empty()) throw Error(Errc::BackendError, "empty completion");

  out.text = acc.text();
  out.trace.token_arrivals = acc.arrivals();
  out.trace.first_token_at = out.trace.token_arrivals.front();
  out.trace.prompt_eval_ms = acc.prompt_eval_ms();
  out.trace.load_ms = acc.load_ms();
  out.trace.low_resolution_timing = !cfg_.stream;
  return out;
}

Completion InferenceClient::complete(const ChatRequest& req) const {
  SlotGuard slot(*limiter_);
  for (int attempt = 0;; ++attempt) {
    try {
      auto c = complete_once(req);
      c.attempts = attempt + 1;
      return c;
    } catch (const ConnectPhaseError& e) {
      if (attempt >= cfg_.max_retries) {
        std::string msg = e.what();
        msg.erase(0, msg.find(": ") + 2);  // drop the code prefix Error() adds again
        throw Error(e.code(), msg + " (" + std::to_string(attempt + 1) + " attempts)");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << std::min(attempt, 5)));
    }
  }
}

GenerationResult InferenceClient::generate(const PromptBundle& bundle, const KeyframeSet& images) const {
  ChatRequest req;
  req.system_text = bundle.system_text;
  req.user_text = bundle.user_text;
  for (const auto& path : images.images) req.images.push_back(encode_image_payload(path, cfg_.max_image_edge));
  if (req.images.empty()) throw Error(Errc::EmptySequence, bundle.video_id + ": keyframe images not written");

  auto completion = complete(req);
  GenerationResult r;
  r.video_id = bundle.video_id;
  r.strategy = bundle.strategy;
  r.text = std::move(completion.text);
  r.trace = std::move(completion.trace);
  r.tokens_out = static_cast<int>(r.trace.token_arrivals.size());
  r.backend = cfg_;
  r.attempts = completion.attempts;
  return r;
}

HealthReport health_check(const BackendConfig& cfg) { return InferenceClient(cfg).health_check(); }

GenerationResult generate(const PromptBundle& bundle, const KeyframeSet& images, const BackendConfig& cfg) {
  return InferenceClient(cfg).generate(bundle, images);
}

}  // namespace a11y
