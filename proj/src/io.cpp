#include "a11y/io.hpp"

#include <fstream>
#include <sstream>

#include "a11y/error.hpp"

namespace a11y {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(Errc::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "rename to " + path.string() + ": " + ec.message());
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

nlohmann::json read_json_file(const fs::path& path) {
  auto text = read_file(path);
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::ParseError, path.string() + ": malformed JSON");
  return doc;
}

std::vector<nlohmann::json> read_jsonl_file(const fs::path& path) {
  auto text = read_file(path);
  std::vector<nlohmann::json> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded()) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": malformed JSON");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_jsonl_file(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace a11y
