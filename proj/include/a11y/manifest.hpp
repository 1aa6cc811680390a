#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace a11y {

enum class Environment { Indoor, Outdoor };

std::string_view to_string(Environment env);
Environment parse_environment(std::string_view text);  // throws UnknownEnvironment

struct VideoEntry {
  std::string id;
  std::filesystem::path video_path;
  Environment environment = Environment::Indoor;
  std::vector<std::string> human_annotations;
  std::optional<std::string> ground_truth;

  bool operator==(const VideoEntry&) const = default;
};

inline constexpr int kManifestSchemaVersion = 1;

struct DatasetManifest {
  std::string name;
  std::vector<VideoEntry> entries;
  int schema_version = kManifestSchemaVersion;

  const VideoEntry* find(std::string_view id) const;
  std::size_t count(Environment env) const;
  // Ids of entries lacking a ground-truth description, in manifest order.
  std::vector<std::string> missing_ground_truth() const;

  bool operator==(const DatasetManifest&) const = default;
};

// Accepts either a JSON header file ({"name", "schema_version", "entries"}
// where "entries" names a sibling .jsonl file) or a bare .jsonl file.
// Relative video paths resolve against the directory holding the entries file.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes <header_path> and <header_path stem>.jsonl next to it.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& header_path);

// Parses one manifest line; `locus` names the line in error messages.
VideoEntry parse_video_entry(std::string_view line, const std::string& locus);
nlohmann::json to_json(const VideoEntry& entry);

// Throws MissingGroundTruth listing every offending id.
void require_ground_truth(const DatasetManifest& manifest, const std::vector<std::string>& ids);

// ---------------------------------------------------------------------------
// Run ledger

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct RunRecord {
  std::string run_id;
  Timestamp created_at{};
  std::string config_digest;
  std::map<std::string, std::string> stage_outputs;

  bool operator==(const RunRecord&) const = default;
};

// SHA-256 (hex) over the sorted-key, whitespace-free serialization.
std::string config_digest(const nlohmann::json& config);
// Parses `config_text` as JSON first, so formatting differences do not matter.
std::string config_digest(std::string_view config_text);

std::string sha256_hex(std::string_view bytes);

Timestamp now_timestamp();
std::string format_iso8601(Timestamp ts);

// Persists <store_dir>/runs/<run_id>.json. Refuses to clobber an existing run
// unless `overwrite` is set.
std::string record_run(const RunRecord& run, const std::filesystem::path& store_dir,
                       bool overwrite = false);
RunRecord read_run(const std::filesystem::path& store_dir, const std::string& run_id);
std::filesystem::path run_record_path(const std::filesystem::path& store_dir,
                                      const std::string& run_id);

}  // namespace a11y
