#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a11y/inference.hpp"
#include "a11y/manifest.hpp"
#include "a11y/prompts.hpp"

namespace a11y {

// Caption-quality metrics on a 0-1 scale: BLEU-1/4, METEOR (exact + Porter
// stem matching), ROUGE-L and CIDEr (tf-idf n-gram cosine, no x10 factor).

struct TokenizedText {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenizedText&) const = default;
};

// Lowercases ASCII, splits on whitespace and splits every ASCII punctuation
// character into its own token. Bytes >= 0x80 count as word characters.
TokenizedText tokenize(std::string_view text);

// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
std::string porter_stem(std::string_view word);

inline constexpr double kBleuEpsilon = 1e-9;

// Geometric mean of clipped precisions for orders 1..n times the brevity
// penalty. A zero precision at order >= 2 is replaced by kBleuEpsilon.
double bleu_n(const TokenizedText& candidate, const TokenizedText& reference, int n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

inline constexpr double kRougeBeta = 1.2;
double rouge_l(const TokenizedText& candidate, const TokenizedText& reference);

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
  // pairs (candidate position, reference position), ordered by candidate
  std::vector<std::pair<int, int>> links;
};

// Maximum-cardinality unigram alignment (exact or stem-equal tokens) with the
// fewest chunks. Exact search; `node_budget` caps the branch-and-bound on very
// long inputs, after which the best alignment found so far is returned.
MeteorAlignment meteor_align(const TokenizedText& candidate, const TokenizedText& reference,
                             std::size_t node_budget = 2'000'000);

double meteor_from_counts(int matches, int chunks, std::size_t candidate_len, std::size_t reference_len);
double meteor(const TokenizedText& candidate, const TokenizedText& reference);

inline constexpr int kCiderMaxN = 4;

// Document frequencies over the reference corpus. Keys are n-grams joined by a
// single space, bucketed by order (index 0 = unigrams).
struct CorpusStats {
  std::size_t doc_count = 0;
  std::array<std::map<std::string, std::size_t>, kCiderMaxN> ngram_document_frequency;
};

CorpusStats build_corpus_stats(std::span<const TokenizedText> references);

// n-gram counts of order `n` (keys joined by spaces).
std::map<std::string, std::size_t> ngram_counts(const TokenizedText& text, int n);

struct CiderResult {
  std::vector<double> scores;
  double mean = 0.0;
};

CiderResult cider(std::span<const TokenizedText> candidates, std::span<const TokenizedText> references,
                  const CorpusStats& stats);

struct MetricReport {
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;

  bool operator==(const MetricReport&) const = default;
};

inline constexpr std::array<const char*, 5> kMetricNames = {"BLEU-1", "BLEU-4", "METEOR", "ROUGE-L", "CIDEr"};
std::array<double, 5> as_array(const MetricReport& m);

struct VideoMetrics {
  std::string video_id;
  std::string model_label;
  PromptStrategy strategy = PromptStrategy::PromptOnly;
  Environment environment = Environment::Indoor;
  MetricReport metrics;
};

nlohmann::json to_json(const VideoMetrics& v);
VideoMetrics video_metrics_from_json(const nlohmann::json& j);

struct MetricGroupKey {
  std::string model_label;
  PromptStrategy strategy = PromptStrategy::PromptOnly;
  Environment environment = Environment::Indoor;

  auto operator<=>(const MetricGroupKey&) const = default;
};

struct MetricGroup {
  MetricGroupKey key;
  MetricReport mean;
  std::size_t count = 0;
};

struct DatasetScores {
  std::vector<VideoMetrics> per_video;
  std::vector<MetricGroup> groups;  // ordered by key
};

// Scores each result against its manifest ground truth. CIDEr document
// frequencies come from the references of all videos sharing the result's
// (model, strategy), so each such set needs >= 2 videos.
DatasetScores score_dataset(const std::vector<GenerationResult>& results, const DatasetManifest& manifest);

// Arithmetic means per (model, strategy, environment).
std::vector<MetricGroup> group_means(const std::vector<VideoMetrics>& per_video);

}  // namespace a11y
