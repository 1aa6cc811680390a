// Local deterministic backend for tests and demos.
//
//   a11y-stub-server --port 8089 --mode judge
//   a11y-stub-server --port 0 --port-file /tmp/port --first-token-delay-ms 500 --inter-token-ms 100

#include <csignal>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "a11y/stub_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Scripted OpenAI-compatible backend"};
  a11y::StubConfig cfg;
  int port = 0;
  std::string port_file;
  std::string mode = "script";
  std::vector<std::string> script;
  app.add_option("--port", port, "Port on 127.0.0.1 (0 = ephemeral)");
  app.add_option("--port-file", port_file, "Write the bound port here once listening");
  app.add_option("--mode", mode, "script | judge | echo")->check(CLI::IsMember({"script", "judge", "echo"}));
  app.add_option("--script", script, "Reply text, one per request (repeatable; last repeats)");
  app.add_option("--tokens", cfg.tokens, "Exact stream tokens (repeatable)");
  app.add_option("--model", cfg.model_name, "Model name reported by /v1/models");
  app.add_option("--first-token-delay-ms", cfg.first_token_delay_ms);
  app.add_option("--inter-token-ms", cfg.inter_token_ms);
  app.add_option("--health-delay-ms", cfg.health_delay_ms);
  app.add_option("--prompt-ms", cfg.prompt_ms, "Reported prompt evaluation time");
  app.add_option("--fail-first-n", cfg.fail_first_n);
  app.add_option("--fail-status", cfg.fail_status);
  CLI11_PARSE(app, argc, argv);

  if (!script.empty()) cfg.script = script;
  if (mode == "judge") cfg.mode = a11y::StubConfig::Mode::JudgeScores;
  if (mode == "echo") cfg.mode = a11y::StubConfig::Mode::EchoContext;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // server threads inherit the mask

  try {
    a11y::StubServer server(cfg);
    server.start(port);
    if (!port_file.empty()) {
      std::ofstream(port_file + ".tmp") << server.port() << "\n";
      std::rename((port_file + ".tmp").c_str(), port_file.c_str());
    }
    std::cout << "listening on " << server.url() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
