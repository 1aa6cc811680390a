#include "a11y/nlpmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "a11y/error.hpp"

namespace a11y {

using nlohmann::json;

TokenizedText tokenize(std::string_view text) {
  TokenizedText out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.tokens.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c) || std::iscntrl(c)) {
      flush();
    } else {
      flush();
      out.tokens.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

std::map<std::string, std::size_t> ngram_counts(const TokenizedText& text, int n) {
  std::map<std::string, std::size_t> counts;
  const auto len = static_cast<int>(text.size());
  for (int i = 0; i + n <= len; ++i) {
    std::string key = text.tokens[static_cast<std::size_t>(i)];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += text.tokens[static_cast<std::size_t>(i + k)];
    }
    ++counts[key];
  }
  return counts;
}

double bleu_n(const TokenizedText& candidate, const TokenizedText& reference, int n) {
  if (reference.empty()) throw Error(Errc::EmptyReference, "BLEU needs a non-empty reference");
  if (n < 1 || n > 4) throw Error(Errc::InvalidArgument, "BLEU order must be in 1..4, got " + std::to_string(n));
  if (candidate.empty()) return 0.0;

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto cand = ngram_counts(candidate, k);
    const auto ref = ngram_counts(reference, k);
    std::size_t total = 0;
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) clipped += std::min(count, it->second);
    }
    double p = total == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(total);
    if (p == 0.0) {
      if (k == 1) return 0.0;
      p = kBleuEpsilon;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / n);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenizedText& candidate, const TokenizedText& reference) {
  if (candidate.empty() || reference.empty()) throw Error(Errc::EmptyInput, "ROUGE-L needs non-empty inputs");
  const auto l = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(candidate.size());
  const double r = l / static_cast<double>(reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

// ---------------------------------------------------------------------------
// METEOR alignment

namespace {

class MeteorSearch {
 public:
  MeteorSearch(const TokenizedText& cand, const TokenizedText& ref, std::size_t budget) : budget_(budget) {
    std::map<std::string, int> ids;
    auto class_of = [&](const std::string& tok) {
      return ids.emplace(porter_stem(tok), static_cast<int>(ids.size())).first->second;
    };
    for (const auto& t : cand.tokens) cand_class_.push_back(class_of(t));
    for (const auto& t : ref.tokens) ref_class_.push_back(class_of(t));

    const std::size_t classes = ids.size();
    refs_by_class_.resize(classes);
    for (int j = 0; j < static_cast<int>(ref_class_.size()); ++j) refs_by_class_[ref_class_[j]].push_back(j);
    std::vector<int> cand_count(classes, 0);
    for (int c : cand_class_) ++cand_count[c];
    skips_.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      const int r = static_cast<int>(refs_by_class_[c].size());
      matches_ += std::min(cand_count[c], r);
      skips_[c] = cand_count[c] - std::min(cand_count[c], r);
    }
    used_.assign(ref_class_.size(), false);
    // suffix bound: adjacencies still reachable from position i onward
    const int n = static_cast<int>(cand_class_.size());
    reach_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = n - 1; i >= 0; --i) {
      const bool here = !refs_by_class_[cand_class_[i]].empty();
      const bool before = i > 0 && !refs_by_class_[cand_class_[i - 1]].empty();
      reach_[i] = reach_[i + 1] + (here && before ? 1 : 0);
    }
  }

  MeteorAlignment run() {
    MeteorAlignment out;
    out.matches = matches_;
    if (matches_ == 0) return out;
    dfs(0, -1, 0);
    out.links = best_links_;
    out.chunks = matches_ - best_adj_;
    return out;
  }

 private:
  void dfs(int i, int prev_j, int adj) {
    if (best_adj_ >= 0 && nodes_ >= budget_) return;
    ++nodes_;
    const int n = static_cast<int>(cand_class_.size());
    if (i == n) {
      if (adj > best_adj_) {
        best_adj_ = adj;
        best_links_ = links_;
      }
      return;
    }
    const int bound_here = (prev_j >= 0 && !refs_by_class_[cand_class_[i]].empty()) ? 1 : 0;
    if (adj + bound_here + reach_[i + 1] <= best_adj_) return;

    const int c = cand_class_[i];
    const auto& refs = refs_by_class_[c];
    // continuing the current chunk is tried first so a good incumbent appears early
    if (prev_j >= 0 && prev_j + 1 < static_cast<int>(ref_class_.size()) && ref_class_[prev_j + 1] == c &&
        !used_[prev_j + 1]) {
      take(i, prev_j + 1, adj + 1);
    }
    for (int j : refs) {
      if (used_[j] || (prev_j >= 0 && j == prev_j + 1)) continue;
      take(i, j, adj);
    }
    if (skips_[c] > 0) {
      --skips_[c];
      dfs(i + 1, -1, adj);
      ++skips_[c];
    }
  }

  void take(int i, int j, int adj) {
    used_[j] = true;
    links_.emplace_back(i, j);
    dfs(i + 1, j, adj);
    links_.pop_back();
    used_[j] = false;
  }

  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<int> cand_class_, ref_class_;
  std::vector<std::vector<int>> refs_by_class_;
  std::vector<int> skips_;
  std::vector<bool> used_;
  std::vector<int> reach_;
  std::vector<std::pair<int, int>> links_;
  std::vector<std::pair<int, int>> best_links_;
  int matches_ = 0;
  int best_adj_ = -1;
};

}  // namespace

MeteorAlignment meteor_align(const TokenizedText& candidate, const TokenizedText& reference,
                             std::size_t node_budget) {
  return MeteorSearch(candidate, reference, node_budget).run();
}

double meteor_from_counts(int matches, int chunks, std::size_t candidate_len, std::size_t reference_len) {
  if (matches <= 0) return 0.0;
  const double m = matches;
  const double p = m / static_cast<double>(candidate_len);
  const double r = m / static_cast<double>(reference_len);
  const double f_mean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

double meteor(const TokenizedText& candidate, const TokenizedText& reference) {
  if (candidate.empty() || reference.empty()) throw Error(Errc::EmptyInput, "METEOR needs non-empty inputs");
  const auto a = meteor_align(candidate, reference);
  return meteor_from_counts(a.matches, a.chunks, candidate.size(), reference.size());
}

// ---------------------------------------------------------------------------
// CIDEr

CorpusStats build_corpus_stats(std::span<const TokenizedText> references) {
  CorpusStats stats;
  stats.doc_count = references.size();
  for (const auto& ref : references) {
    for (int n = 1; n <= kCiderMaxN; ++n) {
      for (const auto& [gram, count] : ngram_counts(ref, n)) {
        (void)count;
        ++stats.ngram_document_frequency[static_cast<std::size_t>(n - 1)][gram];
      }
    }
  }
  return stats;
}

namespace {

std::map<std::string, double> tfidf(const TokenizedText& text, int n, const CorpusStats& stats) {
  std::map<std::string, double> vec;
  const auto& df = stats.ngram_document_frequency[static_cast<std::size_t>(n - 1)];
  const double docs = static_cast<double>(stats.doc_count);
  for (const auto& [gram, count] : ngram_counts(text, n)) {
    const auto it = df.find(gram);
    const double d = it == df.end() ? 1.0 : static_cast<double>(std::max<std::size_t>(1, it->second));
    vec[gram] = static_cast<double>(count) * std::log(docs / d);
  }
  return vec;
}

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double na = 0.0, nb = 0.0, dot = 0.0;
  for (const auto& [g, v] : a) {
    na += v * v;
    if (auto it = b.find(g); it != b.end()) dot += v * it->second;
  }
  for (const auto& [g, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

}  // namespace

CiderResult cider(std::span<const TokenizedText> candidates, std::span<const TokenizedText> references,
                  const CorpusStats& stats) {
  if (candidates.size() != references.size() || references.size() != stats.doc_count) {
    throw Error(Errc::StatsMismatch, "CIDEr: " + std::to_string(candidates.size()) + " candidates, " +
                                         std::to_string(references.size()) + " references, corpus of " +
                                         std::to_string(stats.doc_count));
  }
  if (stats.doc_count < 2) {
    throw Error(Errc::CorpusTooSmall, "CIDEr needs at least 2 documents, got " + std::to_string(stats.doc_count));
  }
  CiderResult out;
  out.scores.reserve(candidates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double s = 0.0;
    for (int n = 1; n <= kCiderMaxN; ++n) {
      s += cosine(tfidf(candidates[i], n, stats), tfidf(references[i], n, stats));
    }
    s /= kCiderMaxN;
    out.scores.push_back(s);
    total += s;
  }
  out.mean = total / static_cast<double>(candidates.size());
  return out;
}

// ---------------------------------------------------------------------------
// dataset scoring

std::array<double, 5> as_array(const MetricReport& m) { return {m.bleu1, m.bleu4, m.meteor, m.rouge_l, m.cider}; }

json to_json(const VideoMetrics& v) {
  return json{{"video_id", v.video_id},
              {"model_label", v.model_label},
              {"strategy", std::string(to_string(v.strategy))},
              {"environment", std::string(to_string(v.environment))},
              {"bleu1", v.metrics.bleu1},
              {"bleu4", v.metrics.bleu4},
              {"meteor", v.metrics.meteor},
              {"rouge_l", v.metrics.rouge_l},
              {"cider", v.metrics.cider}};
}

VideoMetrics video_metrics_from_json(const json& j) {
  VideoMetrics v;
  v.video_id = j.at("video_id").get<std::string>();
  v.model_label = j.at("model_label").get<std::string>();
  v.strategy = parse_strategy(j.at("strategy").get<std::string>());
  v.environment = parse_environment(j.at("environment").get<std::string>());
  v.metrics.bleu1 = j.at("bleu1").get<double>();
  v.metrics.bleu4 = j.at("bleu4").get<double>();
  v.metrics.meteor = j.at("meteor").get<double>();
  v.metrics.rouge_l = j.at("rouge_l").get<double>();
  v.metrics.cider = j.at("cider").get<double>();
  return v;
}

std::vector<MetricGroup> group_means(const std::vector<VideoMetrics>& per_video) {
  std::map<MetricGroupKey, std::pair<std::array<double, 5>, std::size_t>> acc;
  for (const auto& v : per_video) {
    auto& [sum, n] = acc[MetricGroupKey{v.model_label, v.strategy, v.environment}];
    const auto vals = as_array(v.metrics);
    for (std::size_t k = 0; k < vals.size(); ++k) sum[k] += vals[k];
    ++n;
  }
  std::vector<MetricGroup> out;
  for (const auto& [key, entry] : acc) {
    const auto& [sum, n] = entry;
    const double d = static_cast<double>(n);
    out.push_back(MetricGroup{key, MetricReport{sum[0] / d, sum[1] / d, sum[2] / d, sum[3] / d, sum[4] / d}, n});
  }
  return out;
}

DatasetScores score_dataset(const std::vector<GenerationResult>& results, const DatasetManifest& manifest) {
  std::vector<std::string> ids;
  for (const auto& r : results) ids.push_back(r.video_id);
  require_ground_truth(manifest, ids);

  DatasetScores out;
  out.per_video.resize(results.size());
  std::vector<TokenizedText> cand(results.size()), ref(results.size());
  // CIDEr corpora: one per (model, strategy)
  std::map<std::pair<std::string, PromptStrategy>, std::vector<std::size_t>> corpora;

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const VideoEntry* entry = manifest.find(r.video_id);
    cand[i] = tokenize(r.text);
    ref[i] = tokenize(*entry->ground_truth);
    if (ref[i].empty()) throw Error(Errc::EmptyReference, "ground truth of " + r.video_id + " has no tokens");

    auto& v = out.per_video[i];
    v.video_id = r.video_id;
    v.model_label = r.backend.model_name;
    v.strategy = r.strategy;
    v.environment = entry->environment;
    if (!cand[i].empty()) {
      v.metrics.bleu1 = bleu_n(cand[i], ref[i], 1);
      v.metrics.bleu4 = bleu_n(cand[i], ref[i], 4);
      v.metrics.meteor = meteor(cand[i], ref[i]);
      v.metrics.rouge_l = rouge_l(cand[i], ref[i]);
    }
    corpora[{v.model_label, v.strategy}].push_back(i);
  }

  for (const auto& [key, members] : corpora) {
    std::vector<TokenizedText> c, rf;
    for (auto i : members) {
      c.push_back(cand[i]);
      rf.push_back(ref[i]);
    }
    if (members.size() < 2) {
      throw Error(Errc::CorpusTooSmall, "CIDEr corpus for model '" + key.first + "', strategy " +
                                            std::string(to_string(key.second)) + " holds only " +
                                            std::to_string(members.size()) + " video");
    }
    const auto scores = cider(c, rf, build_corpus_stats(rf));
    for (std::size_t k = 0; k < members.size(); ++k) out.per_video[members[k]].metrics.cider = scores.scores[k];
  }

  out.groups = group_means(out.per_video);
  return out;
}

}  // namespace a11y
