#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace a11y {

// Throws MissingFile when absent, IoError on read failure.
std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never observe a
// half-written artifact. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace a11y
