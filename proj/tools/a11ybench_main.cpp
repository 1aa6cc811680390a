// a11ybench: stage-by-stage driver for the description benchmark.
//
//   a11ybench --config run.json extract
//   a11ybench --config run.json generate --strategy prompt-ad --jobs 4
//   a11ybench --config run.json report

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "a11y/error.hpp"
#include "a11y/pipeline.hpp"

namespace {

struct Args {
  std::string config = "a11ybench.json";
  std::string run_id;
  int jobs = 1;
  bool force = false;
  bool dry_run = false;
  std::vector<std::string> strategies;
};

a11y::Pipeline open_pipeline(const Args& args) {
  a11y::PipelineOptions opts;
  opts.run_id = args.run_id;
  opts.jobs = args.jobs;
  opts.force = args.force;
  opts.dry_run = args.dry_run;
  for (const auto& s : args.strategies) opts.strategies.push_back(a11y::parse_strategy(s));
  return a11y::Pipeline(a11y::load_run_config(args.config), opts, std::cout);
}

int validate(const Args& args) {
  auto p = open_pipeline(args);
  const auto& m = p.manifest();
  std::cout << "config ok\n"
            << "  manifest: " << m.name << ", " << m.entries.size() << " videos (indoor "
            << m.count(a11y::Environment::Indoor) << ", outdoor " << m.count(a11y::Environment::Outdoor) << ")\n";
  const auto missing = m.missing_ground_truth();
  if (!missing.empty()) std::cout << "  warning: " << missing.size() << " video(s) lack ground truth\n";
  std::cout << "  strategies:";
  for (auto s : p.strategies()) std::cout << ' ' << a11y::to_string(s);
  std::cout << "\n  run: " << p.run_id() << " -> " << p.run_dir().string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accessible video description benchmark"};
  app.require_subcommand(1);
  Args args;
  app.add_option("--config", args.config, "Run configuration (JSON)");
  app.add_option("--run-id", args.run_id, "Run identifier (default derives from the config digest)");
  app.add_option("--jobs", args.jobs, "Parallel workers for extraction, generation and judging")
      ->check(CLI::Range(1, 256));
  app.add_flag("--force", args.force, "Redo items that already have artifacts");
  app.add_flag("--dry-run", args.dry_run, "Print the work plan and write nothing");
  app.add_option("--strategy", args.strategies, "Prompt strategy (repeatable)");
  app.fallthrough();

  struct Cmd {
    const char* name;
    const char* help;
    a11y::StageReport (a11y::Pipeline::*run)();
  };
  const Cmd cmds[] = {
      {"extract", "Extract keyframes from every manifest video", &a11y::Pipeline::extract},
      {"generate", "Generate descriptions for each strategy", &a11y::Pipeline::generate},
      {"score-nlp", "Score generations with BLEU, METEOR, ROUGE-L and CIDEr", &a11y::Pipeline::score_nlp},
      {"score-judge", "Score generations with the judge rubrics", &a11y::Pipeline::score_judge},
      {"bench", "Profile latency and memory of the configured backends", &a11y::Pipeline::bench},
      {"report", "Assemble tables from per-video records", &a11y::Pipeline::report},
  };
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const auto& c : cmds) subs.emplace_back(app.add_subcommand(c.name, c.help), &c);
  auto* validate_cmd = app.add_subcommand("validate", "Check the configuration and manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(a11y::ErrorClass::Config);
  }

  try {
    if (validate_cmd->parsed()) return validate(args);
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      auto p = open_pipeline(args);
      (p.*(cmd->run))();
    }
    return 0;
  } catch (const a11y::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(a11y::error_class(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
