#include "a11y/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include "a11y/error.hpp"

extern char** environ;

namespace a11y {

namespace fs = std::filesystem;

std::vector<std::string> expand_command(const std::string& command_template,
                                        const std::vector<std::pair<std::string, std::string>>& vars) {
  std::vector<std::string> argv;
  std::istringstream in(command_template);
  std::string token;
  while (in >> token) {
    for (const auto& [name, value] : vars) {
      const std::string needle = "{" + name + "}";
      for (auto pos = token.find(needle); pos != std::string::npos; pos = token.find(needle, pos + value.size())) {
        token.replace(pos, needle.size(), value);
      }
    }
    argv.push_back(token);
  }
  return argv;
}

std::optional<fs::path> find_program(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return fs::path(name);
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::istringstream dirs(path_env ? path_env : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) dir = ".";
    fs::path candidate = fs::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return std::nullopt;
}

ChildProcess ChildProcess::spawn(const std::vector<std::string>& argv, const SpawnOptions& opts) {
  if (argv.empty()) throw Error(Errc::BackendLaunchFailed, "empty command");

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  struct ActionsGuard {
    posix_spawn_file_actions_t* a;
    ~ActionsGuard() { posix_spawn_file_actions_destroy(a); }
  } guard{&actions};

  const std::string devnull = "/dev/null";
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, devnull.c_str(), O_RDONLY, 0);
  const std::string out = opts.stdout_path ? opts.stdout_path->string() : devnull;
  const std::string err = opts.stderr_path ? opts.stderr_path->string() : devnull;
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::string cwd;
  if (opts.working_dir) {
    cwd = opts.working_dir->string();
    // glibc >= 2.29
    posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());
  }

  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  if (rc != 0) {
    throw Error(Errc::BackendLaunchFailed,
                argv[0] + ": " + (rc == ENOENT ? std::string("not found") : std::string(std::strerror(rc))));
  }
  return ChildProcess(pid);
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)), exit_status_(other.exit_status_) {}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    terminate();
    pid_ = std::exchange(other.pid_, -1);
    exit_status_ = other.exit_status_;
  }
  return *this;
}

ChildProcess::~ChildProcess() { terminate(); }

void ChildProcess::reap(int status) {
  if (WIFEXITED(status)) {
    exit_status_ = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    exit_status_ = 128 + WTERMSIG(status);
  } else {
    exit_status_ = -1;
  }
}

bool ChildProcess::running() {
  if (pid_ < 0 || exit_status_) return false;
  int status = 0;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    reap(status);
    return false;
  }
  return r == 0;
}

int ChildProcess::wait() {
  if (pid_ < 0) return -1;
  if (exit_status_) return *exit_status_;
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0) {
    if (errno != EINTR) {
      exit_status_ = -1;
      return -1;
    }
  }
  reap(status);
  return *exit_status_;
}

std::optional<int> ChildProcess::wait_for(std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (running()) {
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return exit_status_;
}

void ChildProcess::terminate() {
  if (pid_ < 0 || exit_status_) return;
  if (running()) {
    ::kill(pid_, SIGTERM);
    if (!wait_for(std::chrono::milliseconds(2000))) {
      ::kill(pid_, SIGKILL);
      wait();
    }
  }
}

std::optional<std::uint64_t> read_rss_bytes(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/status");
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::uint64_t kb = 0;
      fields >> kb;
      return kb * 1024;
    }
  }
  return std::nullopt;  // zombie: no memory map left
}

}  // namespace a11y
