#include "a11y/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

#include "a11y/io.hpp"
#include "a11y/nlpmetrics.hpp"
#include "a11y/report.hpp"

namespace a11y {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string safe_name(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

// ---------------------------------------------------------------------------
// config

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::array<double, 4> weights_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 4) throw Error(Errc::ConfigInvalid, std::string(what) + " needs 4 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw Error(Errc::ConfigInvalid, "unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace

RunConfig run_config_from_json(const json& doc_in, const fs::path& base_dir, const EnvLookup& env) {
  if (!doc_in.is_object()) throw Error(Errc::ConfigInvalid, "config must be a JSON object");
  json doc = doc_in;
  RunConfig cfg;
  try {
    check_keys(doc, {"manifest", "output_dir", "keyframes", "strategies", "guidelines", "base_prompt", "generation",
                     "judge", "bench"},
               "config");
    if (!doc.contains("manifest")) throw Error(Errc::ConfigInvalid, "config lacks \"manifest\"");
    cfg.manifest_path = resolve(base_dir, doc["manifest"].get<std::string>());
    cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));

    if (auto it = doc.find("keyframes"); it != doc.end()) {
      check_keys(*it, {"sample_fps", "window_len", "k", "dumper"}, "keyframes");
      cfg.keyframes.sample_fps = it->value("sample_fps", cfg.keyframes.sample_fps);
      cfg.keyframes.window_len = it->value("window_len", cfg.keyframes.window_len);
      cfg.keyframes.k = it->value("k", cfg.keyframes.k);
      cfg.keyframes.dumper_template = it->value("dumper", cfg.keyframes.dumper_template);
    }
    if (auto it = doc.find("strategies"); it != doc.end()) {
      cfg.strategies.clear();
      for (const auto& s : *it) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (doc.contains("guidelines")) cfg.guidelines_path = resolve(base_dir, doc["guidelines"].get<std::string>());
    if (doc.contains("base_prompt")) cfg.base_prompt_path = resolve(base_dir, doc["base_prompt"].get<std::string>());

    if (auto url = env(kGenUrlEnv)) doc["generation"]["endpoint_url"] = *url;
    if (doc.contains("generation")) cfg.generation = backend_from_json(doc["generation"]);

    if (auto it = doc.find("judge"); it != doc.end()) {
      check_keys(*it, {"backend", "retries", "rubrics", "templates", "mcf_weights", "naf_weights"}, "judge");
      if (auto url = env(kJudgeUrlEnv)) (*it)["backend"]["endpoint_url"] = *url;
      JudgeSettings js;
      js.backend = backend_from_json(it->value("backend", json::object()));
      js.retries = it->value("retries", js.retries);
      if (it->contains("rubrics")) {
        js.rubrics.clear();
        for (const auto& r : (*it)["rubrics"]) js.rubrics.push_back(parse_rubric(r.get<std::string>()));
      }
      if (it->contains("templates")) {
        for (const auto& [k, v] : (*it)["templates"].items()) js.templates[parse_rubric(k)] = resolve(base_dir, v.get<std::string>());
      }
      if (it->contains("mcf_weights")) js.mcf_weights = weights_from((*it)["mcf_weights"], "mcf_weights");
      if (it->contains("naf_weights")) js.naf_weights = weights_from((*it)["naf_weights"], "naf_weights");
      cfg.judge = js;
    }

    if (auto it = doc.find("bench"); it != doc.end()) {
      check_keys(*it, {"backends", "videos", "strategy", "repetitions", "warmup_runs", "memory_sample_interval_ms"},
                 "bench");
      BenchSettings bs;
      for (const auto& b : it->value("backends", json::array())) {
        auto bb = bench_backend_from_json(b);
        if (bb.model_path) bb.model_path = resolve(base_dir, bb.model_path->string());
        if (bb.launch && bb.launch->working_dir) bb.launch->working_dir = resolve(base_dir, bb.launch->working_dir->string());
        bs.backends.push_back(std::move(bb));
      }
      bs.videos = it->value("videos", std::vector<std::string>{});
      if (it->contains("strategy")) bs.strategy = parse_strategy((*it)["strategy"].get<std::string>());
      bs.repetitions = it->value("repetitions", bs.repetitions);
      bs.warmup_runs = it->value("warmup_runs", bs.warmup_runs);
      bs.memory_sample_interval_ms = it->value("memory_sample_interval_ms", bs.memory_sample_interval_ms);
      cfg.bench = bs;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    throw Error(Errc::ConfigInvalid, e.what());
  }
  cfg.raw = doc;
  return cfg;
}

RunConfig load_run_config(const fs::path& path, const EnvLookup& env) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
  return run_config_from_json(doc, fs::absolute(path).parent_path(), env);
}

void RunConfig::validate() const {
  auto need = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw Error(Errc::ConfigInvalid, std::string(what) + " not found: " + p.string());
  };
  need(manifest_path, "manifest");
  if (guidelines_path) need(*guidelines_path, "guidelines file");
  if (base_prompt_path) need(*base_prompt_path, "base prompt file");
  if (strategies.empty()) throw Error(Errc::ConfigInvalid, "strategy list is empty");
  try {
    keyframes.validate();
    generation.validate();
    if (judge) {
      judge->backend.validate();
      if (judge->retries < 0) throw Error(Errc::ConfigInvalid, "judge retries must be >= 0");
      if (judge->rubrics.empty()) throw Error(Errc::ConfigInvalid, "judge rubric list is empty");
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigInvalid) throw;
    throw Error(Errc::ConfigInvalid, e.what());
  }
  if (judge) {
    for (const auto& [r, p] : judge->templates) need(p, "rubric template");
  }
  if (bench) {
    for (const auto& b : bench->backends) {
      if (b.model_path) need(*b.model_path, "model file");
    }
  }
}

// ---------------------------------------------------------------------------
// worker pool

std::vector<std::pair<std::size_t, std::exception_ptr>> parallel_for(std::size_t n, int jobs,
                                                                     const std::function<void(std::size_t)>& fn) {
  std::vector<std::pair<std::size_t, std::exception_ptr>> errors;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        errors.emplace_back(i, std::current_exception());
      }
    }
  };
  const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(errors.begin(), errors.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return errors;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

// "Code: message" -> "message"
std::string bare_message(const Error& e) {
  std::string w = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

void rethrow_first(const std::string& stage, const std::vector<std::pair<std::size_t, std::exception_ptr>>& errors,
                   const std::vector<std::string>& item_names) {
  if (errors.empty()) return;
  const auto& [idx, ptr] = errors.front();
  const std::string more =
      errors.size() > 1 ? " (" + std::to_string(errors.size() - 1) + " more item(s) failed)" : std::string();
  try {
    std::rethrow_exception(ptr);
  } catch (const Error& e) {
    throw Error(e.code(), stage + " " + item_names[idx] + ": " + bare_message(e) + more);
  } catch (const std::exception& e) {
    throw Error(Errc::IoError, stage + " " + item_names[idx] + ": " + e.what() + more);
  }
}

}  // namespace

Pipeline::Pipeline(RunConfig cfg, PipelineOptions opts, std::ostream& log)
    : cfg_(std::move(cfg)), opts_(std::move(opts)), log_(log) {
  cfg_.validate();
  manifest_ = load_manifest(cfg_.manifest_path);
  strategies_ = opts_.strategies.empty() ? cfg_.strategies : opts_.strategies;
  guidelines_ = cfg_.guidelines_path ? load_guidelines(*cfg_.guidelines_path) : default_guidelines();
  base_prompt_ = cfg_.base_prompt_path ? read_file(*cfg_.base_prompt_path) : default_base_prompt();
  digest_ = config_digest(cfg_.raw);
  run_id_ = opts_.run_id.empty() ? "run-" + digest_.substr(0, 12) : opts_.run_id;
  run_dir_ = cfg_.output_dir / run_id_;

  const auto ledger = run_record_path(cfg_.output_dir, run_id_);
  if (fs::exists(ledger) && !opts_.force) {
    const auto existing = read_run(cfg_.output_dir, run_id_);
    if (existing.config_digest != digest_) {
      throw Error(Errc::DuplicateRunId, "run '" + run_id_ + "' was recorded with a different configuration (" +
                                            existing.config_digest.substr(0, 12) + "); pick another --run-id or use --force");
    }
  }
}

void Pipeline::finish_stage(const StageReport& rep, const std::string& output) {
  if (opts_.dry_run) {
    for (const auto& line : rep.plan) log_ << "  " << line << "\n";
    log_ << rep.stage << " (dry run): " << rep.plan.size() << " item(s) planned, nothing written\n";
    return;
  }
  RunRecord run;
  const auto ledger = run_record_path(cfg_.output_dir, run_id_);
  if (fs::exists(ledger)) {
    run = read_run(cfg_.output_dir, run_id_);
  } else {
    run.run_id = run_id_;
    run.created_at = now_timestamp();
  }
  run.config_digest = digest_;
  run.stage_outputs[rep.stage] = output;
  record_run(run, cfg_.output_dir, true);
  log_ << rep.stage << ": wrote " << rep.written << ", skipped " << rep.skipped << " cached\n";
}

void Pipeline::require_keyframes(const std::vector<const VideoEntry*>& entries) const {
  std::vector<std::string> missing;
  for (const auto* e : entries) {
    if (!fs::exists(run_dir_ / "keyframes" / safe_name(e->id) / kKeyframeSidecar)) missing.push_back(e->id);
  }
  if (missing.empty()) return;
  std::string list;
  for (std::size_t i = 0; i < missing.size() && i < 5; ++i) list += (i ? ", " : "") + missing[i];
  throw Error(Errc::MissingStageInput, "keyframes missing for " + std::to_string(missing.size()) +
                                           " video(s) (" + list + "); run `extract` first");
}

fs::path Pipeline::generation_path(PromptStrategy s, const std::string& id) const {
  return run_dir_ / "generations" / std::string(to_string(s)) / (safe_name(id) + ".json");
}

PromptBundle Pipeline::prompt_for(const VideoEntry& entry, PromptStrategy s, const KeyframeSet& kf) const {
  return build_prompt(entry, s, guidelines_, base_prompt_, kf);
}

StageReport Pipeline::extract() {
  StageReport rep;
  rep.stage = "extract";
  std::vector<const VideoEntry*> todo;
  std::vector<std::string> names;
  for (const auto& e : manifest_.entries) {
    const auto dir = run_dir_ / "keyframes" / safe_name(e.id);
    if (!opts_.force && fs::exists(dir / kKeyframeSidecar)) {
      ++rep.skipped;
      rep.plan.push_back("skip " + e.id + " (cached)");
      continue;
    }
    rep.plan.push_back("extract " + e.id + " -> " + dir.string());
    todo.push_back(&e);
    names.push_back(e.id);
  }
  if (!opts_.dry_run) {
    const auto errors = parallel_for(todo.size(), opts_.jobs, [&](std::size_t i) {
      const auto& e = *todo[i];
      const auto dir = run_dir_ / "keyframes" / safe_name(e.id);
      fs::remove_all(dir);
      const auto seq = decode_frames(e.video_path, cfg_.keyframes.sample_fps, cfg_.keyframes.dumper_template);
      auto set = extract_keyframes(e.id, seq, cfg_.keyframes);
      write_keyframes(set, seq, dir);
    });
    rep.written = todo.size() - errors.size();
    if (!errors.empty()) log_ << "extract: wrote " << rep.written << ", skipped " << rep.skipped << " cached\n";
    rethrow_first("extract", errors, names);
  }
  finish_stage(rep, "keyframes");
  return rep;
}

StageReport Pipeline::generate() {
  StageReport rep;
  rep.stage = "generate";
  if (cfg_.generation.model_name.empty()) throw Error(Errc::ConfigInvalid, "generation.model_name is required");
  std::vector<const VideoEntry*> entries;
  for (const auto& e : manifest_.entries) entries.push_back(&e);
  require_keyframes(entries);

  std::vector<std::pair<const VideoEntry*, PromptStrategy>> todo;
  std::vector<std::string> names;
  for (auto s : strategies_) {
    for (const auto* e : entries) {
      const auto out = generation_path(s, e->id);
      const std::string name = std::string(to_string(s)) + "/" + e->id;
      if (!opts_.force && fs::exists(out)) {
        ++rep.skipped;
        rep.plan.push_back("skip " + name + " (cached)");
        continue;
      }
      rep.plan.push_back("generate " + name + " -> " + out.string());
      todo.emplace_back(e, s);
      names.push_back(name);
    }
  }
  if (!opts_.dry_run) {
    const InferenceClient client(cfg_.generation);
    const auto errors = parallel_for(todo.size(), opts_.jobs, [&](std::size_t i) {
      const auto& [e, s] = todo[i];
      const auto kf = read_keyframes(run_dir_ / "keyframes" / safe_name(e->id));
      const auto bundle = prompt_for(*e, s, kf);
      const auto result = client.generate(bundle, kf);
      json doc = to_json(result);
      doc["prompt"] = {{"system", bundle.system_text}, {"user", bundle.user_text}, {"image_count", bundle.image_count}};
      write_json_file(generation_path(s, e->id), doc);
    });
    rep.written = todo.size() - errors.size();
    if (!errors.empty()) log_ << "generate: wrote " << rep.written << ", skipped " << rep.skipped << " cached\n";
    rethrow_first("generate", errors, names);
  }
  finish_stage(rep, "generations");
  return rep;
}

namespace {

std::vector<GenerationResult> load_generations(const std::vector<fs::path>& paths) {
  std::vector<GenerationResult> out;
  for (const auto& p : paths) out.push_back(generation_from_json(read_json_file(p)));
  return out;
}

std::vector<fs::path> expect_files(const std::vector<fs::path>& paths, const std::string& stage,
                                   const std::string& producer) {
  std::vector<std::string> missing;
  for (const auto& p : paths) {
    if (!fs::exists(p)) missing.push_back(p.filename().string());
  }
  if (!missing.empty()) {
    throw Error(Errc::MissingStageInput, stage + " needs " + std::to_string(missing.size()) + " " + producer +
                                             " output(s) that are missing (first: " + missing.front() +
                                             "); run `" + producer + "` first");
  }
  return paths;
}

}  // namespace

StageReport Pipeline::score_nlp() {
  StageReport rep;
  rep.stage = "score-nlp";
  std::vector<fs::path> inputs;
  for (auto s : strategies_) {
    for (const auto& e : manifest_.entries) inputs.push_back(generation_path(s, e.id));
  }
  expect_files(inputs, "score-nlp", "generate");
  const auto out = run_dir_ / "per_video" / "nlp.jsonl";
  if (!opts_.force && fs::exists(out)) {
    rep.skipped = read_jsonl_file(out).size();
    rep.plan.push_back("skip " + out.string() + " (cached)");
  } else {
    rep.plan.push_back("score " + std::to_string(inputs.size()) + " generation(s) -> " + out.string());
    if (!opts_.dry_run) {
      const auto scores = score_dataset(load_generations(inputs), manifest_);
      std::vector<json> rows;
      for (const auto& v : scores.per_video) rows.push_back(to_json(v));
      write_jsonl_file(out, rows);
      rep.written = rows.size();
    }
  }
  finish_stage(rep, "per_video/nlp.jsonl");
  return rep;
}

StageReport Pipeline::score_judge() {
  StageReport rep;
  rep.stage = "score-judge";
  if (!cfg_.judge) throw Error(Errc::ConfigInvalid, "score-judge needs a \"judge\" section in the config");
  const auto& js = *cfg_.judge;

  std::vector<fs::path> inputs;
  std::vector<std::string> ids;
  for (auto s : strategies_) {
    for (const auto& e : manifest_.entries) inputs.push_back(generation_path(s, e.id));
  }
  for (const auto& e : manifest_.entries) ids.push_back(e.id);
  expect_files(inputs, "score-judge", "generate");
  require_ground_truth(manifest_, ids);

  std::map<Rubric, RubricTemplate> templates;
  for (auto r : js.rubrics) {
    auto it = js.templates.find(r);
    templates[r] = it == js.templates.end() ? default_rubric_template(r) : load_rubric_template(it->second, r);
  }

  struct Item {
    Rubric rubric;
    PromptStrategy strategy;
    const VideoEntry* entry;
    fs::path out;
  };
  std::vector<Item> all, todo;
  std::vector<std::string> names;
  for (auto r : js.rubrics) {
    for (auto s : strategies_) {
      for (const auto& e : manifest_.entries) {
        const auto out = run_dir_ / "judge" / std::string(to_string(r)) / std::string(to_string(s)) /
                         (safe_name(e.id) + ".json");
        const std::string name = std::string(to_string(r)) + "/" + std::string(to_string(s)) + "/" + e.id;
        all.push_back({r, s, &e, out});
        if (!opts_.force && fs::exists(out)) {
          ++rep.skipped;
          rep.plan.push_back("skip " + name + " (cached)");
          continue;
        }
        rep.plan.push_back("judge " + name + " -> " + out.string());
        todo.push_back(all.back());
        names.push_back(name);
      }
    }
  }

  if (!opts_.dry_run) {
    const InferenceClient client(judge_backend(js.backend));
    const auto errors = parallel_for(todo.size(), opts_.jobs, [&](std::size_t i) {
      const auto& item = todo[i];
      const auto gen = generation_from_json(read_json_file(generation_path(item.strategy, item.entry->id)));
      JudgeRequest req{item.rubric, gen.text, *item.entry->ground_truth, item.entry->id};
      JudgeRecord rec;
      rec.video_id = item.entry->id;
      rec.model_label = gen.backend.model_name;
      rec.strategy = item.strategy;
      rec.environment = item.entry->environment;
      rec.outcome = judge_one(req, client, js.retries, templates.at(item.rubric));
      write_json_file(item.out, to_json(rec));
    });
    rep.written = todo.size() - errors.size();
    if (!errors.empty()) log_ << "score-judge: wrote " << rep.written << ", skipped " << rep.skipped << " cached\n";
    rethrow_first("score-judge", errors, names);

    for (auto r : js.rubrics) {
      std::vector<json> rows;
      for (const auto& item : all) {
        if (item.rubric == r) rows.push_back(read_json_file(item.out));
      }
      write_jsonl_file(run_dir_ / "per_video" / ("judge_" + std::string(to_string(r)) + ".jsonl"), rows);
    }
  }
  finish_stage(rep, "judge");
  return rep;
}

StageReport Pipeline::bench() {
  StageReport rep;
  rep.stage = "bench";
  if (!cfg_.bench) throw Error(Errc::ConfigInvalid, "bench needs a \"bench\" section in the config");
  const auto& bs = *cfg_.bench;
  BenchPlan plan;
  plan.backends = bs.backends;
  plan.strategy = bs.strategy;
  plan.repetitions = bs.repetitions;
  plan.warmup_runs = bs.warmup_runs;
  plan.memory_sample_interval_ms = bs.memory_sample_interval_ms;
  std::vector<const VideoEntry*> entries;
  if (bs.videos.empty()) {
    for (const auto& e : manifest_.entries) entries.push_back(&e);
  } else {
    for (const auto& id : bs.videos) {
      const auto* e = manifest_.find(id);
      if (e == nullptr) throw Error(Errc::ConfigInvalid, "bench video '" + id + "' is not in the manifest");
      entries.push_back(e);
    }
  }
  for (const auto* e : entries) plan.videos.push_back(e->id);
  try {
    plan.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, bare_message(e));
  }
  require_keyframes(entries);

  const auto out = run_dir_ / "per_video" / "perf.jsonl";
  if (!opts_.force && fs::exists(out)) {
    rep.skipped = read_jsonl_file(out).size();
    rep.plan.push_back("skip " + out.string() + " (cached)");
  } else {
    for (const auto& b : plan.backends) {
      rep.plan.push_back("bench " + b.model_label + " " + b.precision + ": " + std::to_string(plan.videos.size()) +
                         " video(s) x (" + std::to_string(plan.warmup_runs) + " warmup + " +
                         std::to_string(plan.repetitions) + " reps)");
    }
    if (!opts_.dry_run) {
      // perf runs serially whatever --jobs says
      const auto records = run_bench(
          plan,
          [&](const std::string& id) {
            const auto* e = manifest_.find(id);
            auto kf = read_keyframes(run_dir_ / "keyframes" / safe_name(id));
            return BenchInput{prompt_for(*e, plan.strategy, kf), kf};
          },
          BenchLogs{run_dir_ / "logs"});
      std::vector<json> rows;
      for (const auto& r : records) rows.push_back(to_json(r));
      write_jsonl_file(out, rows);
      rep.written = rows.size();
    }
  }
  finish_stage(rep, "per_video/perf.jsonl");
  return rep;
}

StageReport Pipeline::report() {
  StageReport rep;
  rep.stage = "report";
  const auto per_video = run_dir_ / "per_video";
  const auto tables = run_dir_ / "tables";
  const auto nlp_path = per_video / "nlp.jsonl";
  const auto perf_path = per_video / "perf.jsonl";
  std::vector<std::pair<Rubric, fs::path>> judge_paths;
  for (auto r : kAllRubrics) {
    const auto p = per_video / ("judge_" + std::string(to_string(r)) + ".jsonl");
    if (fs::exists(p)) judge_paths.emplace_back(r, p);
  }
  if (!fs::exists(nlp_path) && !fs::exists(perf_path) && judge_paths.empty()) {
    throw Error(Errc::MissingStageInput, "report found no per-video records under " + per_video.string() +
                                             "; run score-nlp, score-judge or bench first");
  }

  std::vector<std::pair<std::string, ReportTable>> built;
  json audit = json::object();
  std::vector<std::string> failures;
  auto record_audit = [&](const std::string& name, const AuditResult& a) {
    audit[name] = {{"cells_checked", a.cells_checked}, {"mismatches", a.mismatches}};
    for (const auto& m : a.mismatches) failures.push_back(name + ": " + m);
  };

  if (fs::exists(nlp_path)) {
    std::vector<VideoMetrics> rows;
    for (const auto& j : read_jsonl_file(nlp_path)) rows.push_back(video_metrics_from_json(j));
    const auto groups = group_means(rows);
    std::set<std::string> models;
    for (const auto& g : groups) models.insert(g.key.model_label);
    for (const auto& m : models) {
      auto t = build_nlp_table(groups, m);
      const std::string name = "nlp_" + safe_name(m);
      record_audit(name, audit_nlp_table(t, rows, m));
      built.emplace_back(name, std::move(t));
    }
  }

  for (const auto& [rubric, path] : judge_paths) {
    std::vector<JudgeRecord> rows;
    for (const auto& j : read_jsonl_file(path)) rows.push_back(judge_record_from_json(j));
    if (rows.empty()) continue;
    std::set<PromptStrategy> strategies;
    for (const auto& r : rows) strategies.insert(r.strategy);
    AggregateOptions opts;
    opts.by_strategy = rubric == Rubric::A11y || strategies.size() > 1;
    if (cfg_.judge && rubric == Rubric::MCF) opts.weights = cfg_.judge->mcf_weights;
    if (cfg_.judge && rubric == Rubric::NAF) opts.weights = cfg_.judge->naf_weights;
    auto t = build_framework_table(aggregate_framework(rows, opts), rubric);
    const std::string name(to_string(rubric));
    record_audit(name, audit_framework_table(t, rows));
    built.emplace_back(name, std::move(t));
  }

  if (fs::exists(perf_path)) {
    std::vector<PerfRecord> rows;
    for (const auto& j : read_jsonl_file(perf_path)) rows.push_back(perf_record_from_json(j));
    try {
      built.emplace_back("perf", build_perf_table(compare_precisions(rows)));
    } catch (const Error& e) {
      if (e.code() != Errc::NotEnoughGroups) throw;
      log_ << "report: precision comparison skipped (" << bare_message(e) << ")\n";
    }
  }

  for (const auto& [name, t] : built) {
    for (auto f : {ExportFormat::CSV, ExportFormat::Markdown, ExportFormat::JSON}) {
      const auto path = tables / (name + "." + std::string(extension(f)));
      rep.plan.push_back("write " + path.string());
      if (!opts_.dry_run) write_file_atomic(path, export_table(t, f));
    }
  }
  if (!opts_.dry_run) {
    write_json_file(tables / "audit.json", audit);
    rep.written = built.size();
  }
  if (!failures.empty()) {
    throw Error(Errc::StatsMismatch, "audit recomputation failed for " + std::to_string(failures.size()) +
                                         " cell(s); first: " + failures.front());
  }
  finish_stage(rep, "tables");
  return rep;
}

}  // namespace a11y
