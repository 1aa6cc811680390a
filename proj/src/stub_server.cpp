#include "a11y/stub_server.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "a11y/error.hpp"

namespace a11y {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct StubServer::Impl {
  httplib::Server server;
};

std::vector<std::string> split_stream_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\n' || text[j] == '\t')) ++j;
    while (j < text.size() && text[j] != ' ' && text[j] != '\n' && text[j] != '\t') ++j;
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string user_text_of(const json& body) {
  std::string text;
  if (auto msgs = body.find("messages"); msgs != body.end() && msgs->is_array()) {
    for (const auto& m : *msgs) {
      if (m.value("role", "") != "user") continue;
      const auto& c = m["content"];
      if (c.is_string()) {
        text += c.get<std::string>();
      } else if (c.is_array()) {
        for (const auto& part : c) {
          if (part.value("type", "") == "text") text += part.value("text", "");
        }
      }
    }
  } else if (auto p = body.find("prompt"); p != body.end()) {
    if (p->is_string()) text = p->get<std::string>();
    if (p->is_object()) text = p->value("prompt_string", "");
  }
  return text;
}

std::string judge_reply(const std::string& body) {
  static const char* kKeys[] = {"spatial",     "social",      "action",   "ambience",  "descriptiveness", "objectivity",
                                "accuracy",    "clarity",     "descriptive", "objective", "accurate",        "clear"};
  json scores = json::object();
  const auto h = fnv1a(body);
  for (std::size_t k = 0; k < std::size(kKeys); ++k) {
    const auto mix = fnv1a(std::string(kKeys[k]) + std::to_string(h));
    scores[kKeys[k]] = 1.0 + static_cast<double>(mix % 91) / 10.0;  // 1.0 .. 10.0
  }
  return scores.dump();
}

std::string echo_context(const std::string& user_text) {
  const std::string header = "Current Description:\n";
  auto pos = user_text.find(header);
  if (pos == std::string::npos) return {};
  pos += header.size();
  auto end = user_text.find("\n\n", pos);
  std::string block = user_text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
  for (auto& c : block) {
    if (c == '\n') c = ' ';
  }
  return block;
}

}  // namespace

StubServer::StubServer(StubConfig cfg) : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>()) { install_routes(); }

StubServer::~StubServer() { stop(); }

std::string StubServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::vector<std::string> StubServer::request_bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

std::string StubServer::reply_for(const std::string& body, int request_index) const {
  const auto doc = json::parse(body, nullptr, false);
  const std::string user = doc.is_discarded() ? std::string() : user_text_of(doc);
  const std::string fallback = cfg_.script.empty() ? std::string("ok") : cfg_.script.front();
  switch (cfg_.mode) {
    case StubConfig::Mode::JudgeScores:
      return judge_reply(user);
    case StubConfig::Mode::EchoContext: {
      auto echoed = echo_context(user);
      return echoed.empty() ? fallback : echoed;
    }
    case StubConfig::Mode::Script:
      break;
  }
  if (cfg_.script.empty()) return fallback;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(request_index), cfg_.script.size() - 1);
  return cfg_.script[idx];
}

void StubServer::install_routes() {
  auto& srv = impl_->server;

  auto health_wait = [this] {
    if (cfg_.health_delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.health_delay_ms));
  };

  srv.Get("/v1/models", [this, health_wait](const httplib::Request&, httplib::Response& res) {
    health_wait();
    json doc{{"object", "list"},
             {"data", json::array({{{"id", cfg_.model_name},
                                    {"object", "model"},
                                    {"meta", {{"n_ctx_train", cfg_.context_length}}}}})}};
    res.set_content(doc.dump(), "application/json");
  });
  srv.Get("/health", [health_wait](const httplib::Request&, httplib::Response& res) {
    health_wait();
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  srv.Get("/props", [this](const httplib::Request&, httplib::Response& res) {
    json doc{{"default_generation_settings", {{"n_ctx", cfg_.context_length}}}, {"model_path", cfg_.model_name}};
    res.set_content(doc.dump(), "application/json");
  });

  auto completion = [this](bool openai) {
    return [this, openai](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = Clock::now();
      const int index = completions_.fetch_add(1);
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(req.body);
      }
      if (index < cfg_.fail_first_n) {
        res.status = cfg_.fail_status;
        res.set_content(R"({"error":{"message":"injected failure"}})", "application/json");
        return;
      }
      auto body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) {
        res.status = 400;
        res.set_content(R"({"error":{"message":"malformed JSON"}})", "application/json");
        return;
      }
      const bool stream = body.value("stream", false);
      auto tokens = cfg_.tokens.empty() ? split_stream_tokens(reply_for(req.body, index)) : cfg_.tokens;
      const auto due = [this, t0](std::size_t k) {
        return t0 + std::chrono::milliseconds(cfg_.first_token_delay_ms) +
               std::chrono::milliseconds(static_cast<long long>(k) * cfg_.inter_token_ms);
      };

      const int now_active = active_.fetch_add(1) + 1;
      for (int prev = peak_concurrency_.load(); now_active > prev && !peak_concurrency_.compare_exchange_weak(prev, now_active);) {
      }

      auto timings = [this]() {
        json t = json::object();
        if (cfg_.prompt_ms >= 0.0) t["prompt_ms"] = cfg_.prompt_ms;
        return t;
      };

      if (!stream) {
        std::string text;
        for (const auto& t : tokens) text += t;
        std::this_thread::sleep_until(due(tokens.empty() ? 0 : tokens.size() - 1));
        json doc;
        if (openai) {
          doc = {{"id", "stub"},
                 {"object", "chat.completion"},
                 {"model", cfg_.model_name},
                 {"choices", json::array({{{"index", 0},
                                           {"message", {{"role", "assistant"}, {"content", text}}},
                                           {"finish_reason", "stop"}}})},
                 {"usage", {{"completion_tokens", tokens.size()}}}};
        } else {
          doc = {{"content", text}, {"stop", true}, {"tokens_predicted", tokens.size()}};
        }
        if (cfg_.prompt_ms >= 0.0) doc["timings"] = timings();
        active_.fetch_sub(1);
        res.set_content(doc.dump(), "application/json");
        return;
      }

      struct State {
        std::vector<std::string> tokens;
        std::size_t next = 0;
      };
      auto state = std::make_shared<State>(State{std::move(tokens)});
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, state, due, openai, timings](std::size_t, httplib::DataSink& sink) {
            if (state->next < state->tokens.size()) {
              std::this_thread::sleep_until(due(state->next));
              const auto& tok = state->tokens[state->next++];
              json ev;
              if (openai) {
                ev = {{"id", "stub"},
                      {"object", "chat.completion.chunk"},
                      {"model", cfg_.model_name},
                      {"choices", json::array({{{"index", 0}, {"delta", {{"content", tok}}}, {"finish_reason", nullptr}}})}};
              } else {
                ev = {{"content", tok}, {"stop", false}};
              }
              std::string line = "data: " + ev.dump() + "\n\n";
              return sink.write(line.data(), line.size());
            }
            std::string tail;
            if (openai) {
              json fin{{"id", "stub"},
                       {"object", "chat.completion.chunk"},
                       {"model", cfg_.model_name},
                       {"choices", json::array({{{"index", 0}, {"delta", json::object()}, {"finish_reason", "stop"}}})}};
              if (cfg_.prompt_ms >= 0.0) fin["timings"] = timings();
              tail = "data: " + fin.dump() + "\n\ndata: [DONE]\n\n";
            } else {
              json fin{{"content", ""}, {"stop", true}, {"timings", timings()}};
              tail = "data: " + fin.dump() + "\n\n";
            }
            sink.write(tail.data(), tail.size());
            sink.done();
            return true;
          },
          [this](bool) { active_.fetch_sub(1); });
    };
  };

  srv.Post("/v1/chat/completions", completion(true));
  srv.Post("/completion", completion(false));
}

void StubServer::start(int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    port_ = srv.bind_to_any_port("127.0.0.1");
  } else {
    if (!srv.bind_to_port("127.0.0.1", port)) throw Error(Errc::IoError, "stub: cannot bind port " + std::to_string(port));
    port_ = port;
  }
  if (port_ <= 0) throw Error(Errc::IoError, "stub: bind failed");
  thread_ = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
}

void StubServer::listen_blocking(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (!srv.bind_to_port(host, port)) throw Error(Errc::IoError, "stub: cannot bind " + host + ":" + std::to_string(port));
  port_ = port;
  srv.listen_after_bind();
}

void StubServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace a11y
