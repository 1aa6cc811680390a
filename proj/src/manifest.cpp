#include "a11y/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <ctime>
#include <set>
#include <sstream>

#include "a11y/error.hpp"
#include "a11y/io.hpp"

namespace a11y {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Environment env) {
  return env == Environment::Indoor ? "indoor" : "outdoor";
}

Environment parse_environment(std::string_view text) {
  if (text == "indoor") return Environment::Indoor;
  if (text == "outdoor") return Environment::Outdoor;
  throw Error(Errc::UnknownEnvironment, "\"" + std::string(text) + "\" (expected indoor|outdoor)");
}

const VideoEntry* DatasetManifest::find(std::string_view id) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const VideoEntry& e) { return e.id == id; });
  return it == entries.end() ? nullptr : &*it;
}

std::size_t DatasetManifest::count(Environment env) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const VideoEntry& e) { return e.environment == env; }));
}

std::vector<std::string> DatasetManifest::missing_ground_truth() const {
  std::vector<std::string> ids;
  for (const auto& e : entries) {
    if (!e.ground_truth || e.ground_truth->empty()) ids.push_back(e.id);
  }
  return ids;
}

VideoEntry parse_video_entry(std::string_view line, const std::string& locus) {
  auto doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(Errc::ParseError, locus + ": not a JSON object");
  }
  auto field = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw Error(Errc::ParseError, locus + ": missing key \"" + key + "\"");
    return *it;
  };

  VideoEntry entry;
  const auto& id = field("id");
  if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
    throw Error(Errc::ParseError, locus + ": \"id\" must be a non-empty string");
  }
  entry.id = id.get<std::string>();

  const auto& path = field("video_path");
  if (!path.is_string()) throw Error(Errc::ParseError, locus + ": \"video_path\" must be a string");
  entry.video_path = path.get<std::string>();

  const auto& env = field("environment");
  if (!env.is_string()) throw Error(Errc::ParseError, locus + ": \"environment\" must be a string");
  try {
    entry.environment = parse_environment(env.get<std::string>());
  } catch (const Error& e) {
    throw Error(Errc::UnknownEnvironment, locus + ": entry \"" + entry.id + "\": " + env.get<std::string>());
  }

  if (auto it = doc.find("human_annotations"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(Errc::ParseError, locus + ": \"human_annotations\" must be an array");
    for (const auto& a : *it) {
      if (!a.is_string()) throw Error(Errc::ParseError, locus + ": annotation is not a string");
      entry.human_annotations.push_back(a.get<std::string>());
    }
  }
  if (auto it = doc.find("ground_truth"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::ParseError, locus + ": \"ground_truth\" must be a string or null");
    entry.ground_truth = it->get<std::string>();
  }
  return entry;
}

json to_json(const VideoEntry& entry) {
  json j;
  j["id"] = entry.id;
  j["video_path"] = entry.video_path.string();
  j["environment"] = to_string(entry.environment);
  j["human_annotations"] = entry.human_annotations;
  j["ground_truth"] = entry.ground_truth ? json(*entry.ground_truth) : json(nullptr);
  return j;
}

namespace {

std::vector<VideoEntry> load_entries(const fs::path& jsonl) {
  auto text = read_file(jsonl);
  std::vector<VideoEntry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto base = jsonl.parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto entry = parse_video_entry(line, jsonl.filename().string() + ":" + std::to_string(lineno));
    if (!seen.insert(entry.id).second) {
      throw Error(Errc::DuplicateId, "\"" + entry.id + "\" (line " + std::to_string(lineno) + ")");
    }
    if (entry.video_path.is_relative()) entry.video_path = (base / entry.video_path).lexically_normal();
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest manifest;
  if (path.extension() == ".jsonl") {
    manifest.name = path.stem().string();
    manifest.entries = load_entries(path);
  } else {
    auto header = read_json_file(path);
    if (!header.is_object()) throw Error(Errc::ParseError, path.string() + ": header must be an object");
    manifest.name = header.value("name", path.stem().string());
    manifest.schema_version = header.value("schema_version", kManifestSchemaVersion);
    if (manifest.schema_version != kManifestSchemaVersion) {
      throw Error(Errc::UnsupportedSchema, "schema_version " + std::to_string(manifest.schema_version));
    }
    auto it = header.find("entries");
    if (it == header.end() || !it->is_string()) {
      throw Error(Errc::ParseError, path.string() + ": header needs an \"entries\" file name");
    }
    fs::path entries_path = it->get<std::string>();
    if (entries_path.is_relative()) entries_path = path.parent_path() / entries_path;
    manifest.entries = load_entries(entries_path);
  }
  if (manifest.entries.empty()) throw Error(Errc::EmptyManifest, path.string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& header_path) {
  auto entries_name = header_path.stem().string() + ".jsonl";
  std::vector<json> rows;
  rows.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) rows.push_back(to_json(e));
  write_jsonl_file(header_path.parent_path() / entries_name, rows);
  write_json_file(header_path, json{{"name", manifest.name},
                                    {"schema_version", manifest.schema_version},
                                    {"entries", entries_name}});
}

void require_ground_truth(const DatasetManifest& manifest, const std::vector<std::string>& ids) {
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    const auto* e = manifest.find(id);
    if (e == nullptr || !e->ground_truth || e->ground_truth->empty()) missing.push_back(id);
  }
  if (missing.empty()) return;
  std::string msg;
  for (const auto& id : missing) msg += (msg.empty() ? "" : ", ") + id;
  throw Error(Errc::MissingGroundTruth, msg);
}

// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string config_digest(const json& config) {
  // nlohmann::json objects are key-ordered maps; dump() without indent emits
  // no insignificant whitespace.
  return sha256_hex(config.dump());
}

std::string config_digest(std::string_view config_text) {
  auto doc = json::parse(config_text, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ParseError, "config is not valid JSON");
  return config_digest(doc);
}

Timestamp now_timestamp() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string format_iso8601(Timestamp ts) {
  auto ms = ts.time_since_epoch().count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

fs::path run_record_path(const fs::path& store_dir, const std::string& run_id) {
  return store_dir / "runs" / (run_id + ".json");
}

std::string record_run(const RunRecord& run, const fs::path& store_dir, bool overwrite) {
  if (run.run_id.empty() || run.run_id.find('/') != std::string::npos) {
    throw Error(Errc::InvalidArgument, "run_id must be a non-empty file-name-safe string");
  }
  auto path = run_record_path(store_dir, run.run_id);
  if (!overwrite && fs::exists(path)) throw Error(Errc::DuplicateRunId, run.run_id);
  json doc{{"run_id", run.run_id},
           {"created_at_ms", run.created_at.time_since_epoch().count()},
           {"created_at", format_iso8601(run.created_at)},
           {"config_digest", run.config_digest},
           {"stage_outputs", run.stage_outputs}};
  write_json_file(path, doc);
  return run.run_id;
}

RunRecord read_run(const fs::path& store_dir, const std::string& run_id) {
  auto doc = read_json_file(run_record_path(store_dir, run_id));
  RunRecord run;
  try {
    run.run_id = doc.at("run_id").get<std::string>();
    run.created_at = Timestamp(std::chrono::milliseconds(doc.at("created_at_ms").get<std::int64_t>()));
    run.config_digest = doc.at("config_digest").get<std::string>();
    run.stage_outputs = doc.at("stage_outputs").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, "run " + run_id + ": " + e.what());
  }
  return run;
}

}  // namespace a11y
