#include <gtest/gtest.h>

#include <cstdio>
#include <sys/wait.h>

#include "a11y/io.hpp"
#include "a11y/manifest.hpp"
#include "support.hpp"

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result run_cli(const std::string& args) {
  const std::string cmd = "'" + a11ytest::cli_path().string() + "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[512];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct CliWorkspace {
  a11ytest::TempDir tmp;
  CliWorkspace() {
    a11ytest::write_color_video(tmp / "a.avi", a11ytest::cut_schedule(20, {10}), 10.0);
    a11y::DatasetManifest m;
    m.name = "cli";
    m.entries = {{"a", tmp / "a.avi", a11y::Environment::Indoor, {"A door opens."}, std::nullopt}};
    a11y::save_manifest(m, tmp / "manifest.json");
    a11y::write_json_file(tmp / "run.json",
                          {{"manifest", "manifest.json"},
                           {"keyframes", {{"sample_fps", 10}, {"k", 2}, {"dumper", a11ytest::framedump_template()}}},
                           {"generation", {{"endpoint_url", "http://127.0.0.1:9"}, {"model_name", "m"}}}});
  }
  std::string config() const { return "--config '" + (tmp / "run.json").string() + "'"; }
};

}  // namespace

TEST(Cli, HelpExitsZero) {
  const auto r = run_cli("--help");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("score-judge"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").status, 2);
  EXPECT_EQ(run_cli("frobnicate").status, 2);
  EXPECT_EQ(run_cli("--jobs 0 extract").status, 2);
}

TEST(Cli, MissingConfigIsAConfigError) {
  const auto r = run_cli("--config /nonexistent/run.json validate");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("error: "), std::string::npos);
}

TEST(Cli, ValidateSummarizesTheRun) {
  CliWorkspace w;
  const auto r = run_cli(w.config() + " --run-id cli1 validate");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("1 videos"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("lack ground truth"), std::string::npos);
  EXPECT_NE(r.output.find("cli1"), std::string::npos);
}

TEST(Cli, StageOrderIsEnforced) {
  CliWorkspace w;
  const auto gen = run_cli(w.config() + " --run-id o generate");
  EXPECT_EQ(gen.status, 3) << gen.output;
  EXPECT_NE(gen.output.find("extract"), std::string::npos);

  const auto ex = run_cli(w.config() + " --run-id o extract");
  EXPECT_EQ(ex.status, 0) << ex.output;
  EXPECT_TRUE(std::filesystem::exists(w.tmp / "out" / "o" / "keyframes" / "a"));
  const auto again = run_cli(w.config() + " --run-id o extract");
  EXPECT_NE(again.output.find("skipped 1"), std::string::npos) << again.output;

  EXPECT_EQ(run_cli(w.config() + " --run-id o score-nlp").status, 3);
}

TEST(Cli, UnreachableBackendExitsWithBackendClass) {
  CliWorkspace w;
  ASSERT_EQ(run_cli(w.config() + " --run-id b extract").status, 0);
  const auto r = run_cli(w.config() + " --run-id b generate");
  EXPECT_EQ(r.status, 5) << r.output;
}

TEST(Cli, DryRunPlansOnly) {
  CliWorkspace w;
  const auto r = run_cli(w.config() + " --run-id d --dry-run extract");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("dry run"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(w.tmp / "out"));
}
