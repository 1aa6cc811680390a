#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "a11y/keyframes.hpp"
#include "a11y/nlpmetrics.hpp"

namespace a11ytest {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

using Rgb = std::array<std::uint8_t, 3>;

// One solid colour per frame, encoded as MJPG .avi.
void write_color_video(const std::filesystem::path& path, const std::vector<Rgb>& frames, double fps,
                       int width = 64, int height = 48);

// `total` frames whose colour changes at every index in `cuts`.
std::vector<Rgb> cut_schedule(int total, const std::vector<int>& cuts);

// Dumper template pointing at the bundled frame dumper.
std::string framedump_template();
std::filesystem::path stub_server_path();
std::filesystem::path memhog_path();
std::filesystem::path cli_path();
std::filesystem::path data_dir();

// ---------------------------------------------------------------------------
// Oracles. Each is written from the textbook definition, independent of the
// library code it checks.

a11y::Luv luv_oracle(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Longest common subsequence by enumerating every subsequence of the shorter list.
std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Every partial one-to-one alignment of equal-or-stem-equal tokens; returns
// (max matches, fewest chunks among maximum alignments).
std::pair<int, int> meteor_exhaustive(const std::vector<std::string>& c, const std::vector<std::string>& r);

// Dense tf-idf vectors over every n-gram of the corpus, cosine per order,
// averaged over n = 1..4.
std::vector<double> cider_oracle(const std::vector<std::vector<std::string>>& cands,
                                 const std::vector<std::vector<std::string>>& refs);

std::vector<std::string> random_tokens(std::mt19937& rng, const std::vector<std::string>& vocab, int min_len,
                                       int max_len);

}  // namespace a11ytest
