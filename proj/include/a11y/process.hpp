#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace a11y {

// Splits a command template on whitespace and substitutes {name} placeholders
// inside each argument. No shell is involved, so paths with spaces survive.
std::vector<std::string> expand_command(const std::string& command_template,
                                        const std::vector<std::pair<std::string, std::string>>& vars);

struct SpawnOptions {
  std::optional<std::filesystem::path> stdout_path;
  std::optional<std::filesystem::path> stderr_path;
  std::optional<std::filesystem::path> working_dir;
};

// Owns a child process. Destruction kills and reaps a still-running child.
class ChildProcess {
 public:
  // Throws BackendLaunchFailed carrying errno text when the program cannot be
  // started (ENOENT surfaces as "not found").
  static ChildProcess spawn(const std::vector<std::string>& argv, const SpawnOptions& opts = {});

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const { return pid_; }
  bool running();
  // Blocks until exit; returns the exit status (128 + signal for signals).
  int wait();
  std::optional<int> wait_for(std::chrono::milliseconds timeout);
  void terminate();

 private:
  explicit ChildProcess(pid_t pid) : pid_(pid) {}
  void reap(int status);

  pid_t pid_ = -1;
  std::optional<int> exit_status_;
};

// Resolves a program name against PATH (or returns it when it contains '/').
std::optional<std::filesystem::path> find_program(const std::string& name);

// Resident set size of `pid` in bytes from /proc, or nullopt when the process
// is gone or is a zombie.
std::optional<std::uint64_t> read_rss_bytes(pid_t pid);

}  // namespace a11y
