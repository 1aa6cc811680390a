#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "a11y/error.hpp"
#include "a11y/nlpmetrics.hpp"
#include "support.hpp"

using a11y::tokenize;
using Tokens = std::vector<std::string>;

namespace {

a11y::TokenizedText tk(const char* s) { return tokenize(s); }

// Sentence BLEU from the definition: clipped n-gram precisions, epsilon for
// empty higher orders, brevity penalty.
double bleu_oracle(const Tokens& c, const Tokens& r, int N) {
  auto grams = [](const Tokens& t, int n) {
    std::map<Tokens, int> m;
    for (int i = 0; i + n <= static_cast<int>(t.size()); ++i) ++m[Tokens(t.begin() + i, t.begin() + i + n)];
    return m;
  };
  double logp = 0;
  for (int n = 1; n <= N; ++n) {
    const auto gc = grams(c, n), gr = grams(r, n);
    int clipped = 0, total = 0;
    for (const auto& [g, k] : gc) {
      total += k;
      auto it = gr.find(g);
      clipped += std::min(k, it == gr.end() ? 0 : it->second);
    }
    double p = total ? static_cast<double>(clipped) / total : 0.0;
    if (p == 0.0) {
      if (n == 1) return 0.0;
      p = 1e-9;
    }
    logp += std::log(p) / N;
  }
  const double bp = c.size() >= r.size() ? 1.0 : std::exp(1.0 - static_cast<double>(r.size()) / c.size());
  return bp * std::exp(logp);
}

}  // namespace

TEST(Tokenize, Rules) {
  EXPECT_EQ(tk("A man walks.").tokens, (Tokens{"a", "man", "walks", "."}));
  EXPECT_TRUE(tk("").empty());
  EXPECT_EQ(tk("don't stop").tokens, (Tokens{"don", "'", "t", "stop"}));
  EXPECT_EQ(tk("  Caf\xc3\xa9,\tnoon ").tokens, (Tokens{"caf\xc3\xa9", ",", "noon"}));
}

TEST(Porter, ReferenceVocabulary) {
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"},     {"ponies", "poni"},         {"ties", "ti"},           {"caress", "caress"},
      {"cats", "cat"},            {"feed", "feed"},           {"agreed", "agre"},       {"plastered", "plaster"},
      {"bled", "bled"},           {"motoring", "motor"},      {"sing", "sing"},         {"conflated", "conflat"},
      {"troubled", "troubl"},     {"sized", "size"},          {"hopping", "hop"},       {"tanned", "tan"},
      {"falling", "fall"},        {"hissing", "hiss"},        {"fizzed", "fizz"},       {"failing", "fail"},
      {"filing", "file"},         {"happy", "happi"},         {"sky", "sky"},           {"relational", "relat"},
      {"conditional", "condit"},  {"rational", "ration"},     {"digitizer", "digit"},   {"operator", "oper"},
      {"feudalism", "feudal"},    {"decisiveness", "decis"},  {"hopefulness", "hope"},  {"callousness", "callous"},
      {"triplicate", "triplic"},  {"formative", "form"},      {"formalize", "formal"},  {"electrical", "electr"},
      {"hopeful", "hope"},        {"goodness", "good"},       {"revival", "reviv"},     {"allowance", "allow"},
      {"inference", "infer"},     {"airliner", "airlin"},     {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"},
      {"defensible", "defens"},   {"irritant", "irrit"},      {"replacement", "replac"}, {"adjustment", "adjust"},
      {"dependent", "depend"},    {"adoption", "adopt"},      {"communism", "commun"},  {"activate", "activ"},
      {"effective", "effect"},    {"bowdlerize", "bowdler"},  {"probate", "probat"},    {"rate", "rate"},
      {"cease", "ceas"},          {"controlling", "control"}, {"roll", "roll"},         {"generalizations", "gener"},
      {"oscillators", "oscil"},   {"walking", "walk"},        {"walks", "walk"},        {"a", "a"},
  };
  for (const auto& [in, out] : cases) EXPECT_EQ(a11y::porter_stem(in), out) << in;
  EXPECT_EQ(a11y::porter_stem("42"), "42");
  EXPECT_EQ(a11y::porter_stem("."), ".");
}

TEST(Bleu, HandCases) {
  EXPECT_EQ(a11y::bleu_n(tk("a man walks outside"), tk("a man walks"), 1), 0.75);
  EXPECT_EQ(a11y::bleu_n(tk("red car"), tk("blue bus"), 1), 0.0);
  const auto s = tk("the man walks his dog home");
  EXPECT_DOUBLE_EQ(a11y::bleu_n(s, s, 1), 1.0);
  EXPECT_DOUBLE_EQ(a11y::bleu_n(s, s, 4), 1.0);
  EXPECT_THROW(a11y::bleu_n(s, tk(""), 1), a11y::Error);
  EXPECT_THROW(a11y::bleu_n(s, s, 5), a11y::Error);
  EXPECT_EQ(a11y::bleu_n(tk(""), s, 1), 0.0);
}

TEST(Bleu, MatchesDefinitionOnRandomPairs) {
  std::mt19937 rng(5);
  const Tokens vocab = {"a", "b", "c", "d", "e", "f"};
  for (int i = 0; i < 2000; ++i) {
    const auto c = a11ytest::random_tokens(rng, vocab, 1, 9);
    const auto r = a11ytest::random_tokens(rng, vocab, 1, 9);
    for (int n : {1, 2, 4}) {
      EXPECT_NEAR(a11y::bleu_n({c}, {r}, n), bleu_oracle(c, r, n), 1e-12);
    }
  }
}

TEST(Rouge, HandCases) {
  const auto s = tk("a man walks his dog");
  EXPECT_EQ(a11y::rouge_l(s, s), 1.0);
  EXPECT_EQ(a11y::lcs_length(tk("a b c d").tokens, tk("a c b d").tokens), 3u);
  EXPECT_DOUBLE_EQ(a11y::rouge_l(tk("a b c d"), tk("a c b d")), 0.75);
  EXPECT_EQ(a11y::rouge_l(tk("x y"), tk("a b")), 0.0);
  // P = 2/3, R = 1/2: F = (1 + b^2) P R / (R + b^2 P)
  const double P = 2.0 / 3, R = 0.5, b2 = 1.2 * 1.2;
  EXPECT_NEAR(a11y::rouge_l(tk("a b c"), tk("a b d e")), (1 + b2) * P * R / (R + b2 * P), 1e-12);
  EXPECT_THROW(a11y::rouge_l(tk(""), s), a11y::Error);
}

TEST(Rouge, LcsMatchesExhaustiveOracle) {
  std::mt19937 rng(8);
  const Tokens vocab = {"a", "b", "c"};
  for (int i = 0; i < 2000; ++i) {
    const auto a = a11ytest::random_tokens(rng, vocab, 0, 8);
    const auto b = a11ytest::random_tokens(rng, vocab, 0, 8);
    EXPECT_EQ(a11y::lcs_length(a, b), a11ytest::lcs_exhaustive(a, b));
  }
}

TEST(Meteor, HandCases) {
  EXPECT_EQ(a11y::meteor(tk("red car"), tk("blue bus")), 0.0);
  const auto s = tk("a man walks");
  EXPECT_NEAR(a11y::meteor(s, s), 1.0 - 0.5 / 27.0, 1e-12);
  // m = 2, chunks = 2, c = 3, r = 4
  const double P = 2.0 / 3, R = 0.5, F = 10 * P * R / (R + 9 * P);
  EXPECT_NEAR(a11y::meteor_from_counts(2, 2, 3, 4), F * (1 - 0.5), 1e-12);
  const auto a = a11y::meteor_align(tk("walking home"), tk("walks home"));
  EXPECT_EQ(a.matches, 2);
  EXPECT_EQ(a.chunks, 1);
  ASSERT_EQ(a.links.size(), 2u);
  EXPECT_EQ(a.links[0], std::make_pair(0, 0));
}

TEST(Meteor, AlignmentMatchesExhaustiveSearch) {
  std::mt19937 rng(13);
  const Tokens vocab = {"walk", "walks", "walking", "home", "the", "a", "dog", "dogs"};
  for (int i = 0; i < 1000; ++i) {
    const auto c = a11ytest::random_tokens(rng, vocab, 1, 8);
    const auto r = a11ytest::random_tokens(rng, vocab, 1, 8);
    const auto got = a11y::meteor_align({c}, {r});
    const auto [m, ch] = a11ytest::meteor_exhaustive(c, r);
    ASSERT_EQ(got.matches, m);
    ASSERT_EQ(got.chunks, ch);
    ASSERT_EQ(got.links.size(), static_cast<std::size_t>(m));
  }
}

TEST(Cider, IdenticalItemsScoreOne) {
  std::vector<a11y::TokenizedText> refs = {tk("a man walks his dog in the park"), tk("two cats sleep on a warm sofa"),
                                           tk("cars wait at a red light downtown")};
  const auto r = a11y::cider(refs, refs, a11y::build_corpus_stats(refs));
  for (double s : r.scores) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(r.mean, 1.0);
}

TEST(Cider, UbiquitousNgramsCarryNoWeight) {
  std::vector<a11y::TokenizedText> refs = {tk("the cat sat"), tk("the dog ran")};
  std::vector<a11y::TokenizedText> cands = {tk("the"), tk("the")};
  const auto r = a11y::cider(cands, refs, a11y::build_corpus_stats(refs));
  EXPECT_EQ(r.scores[0], 0.0);
  EXPECT_EQ(r.scores[1], 0.0);
}

TEST(Cider, ToyCorpusMatchesOracle) {
  const std::vector<Tokens> refs = {{"a", "man", "walks", "a", "dog"}, {"a", "dog", "runs"}, {"the", "man", "runs", "home"}};
  const std::vector<Tokens> cands = {{"a", "man", "walks"}, {"the", "dog", "runs", "fast"}, {"a", "man", "runs", "home"}};
  std::vector<a11y::TokenizedText> tr, tc;
  for (const auto& r : refs) tr.push_back({r});
  for (const auto& c : cands) tc.push_back({c});
  const auto got = a11y::cider(tc, tr, a11y::build_corpus_stats(tr));
  const auto want = a11ytest::cider_oracle(cands, refs);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got.scores[i], want[i], 1e-9);
}

TEST(Cider, Errors) {
  std::vector<a11y::TokenizedText> one = {tk("a b")};
  EXPECT_THROW(a11y::cider(one, one, a11y::build_corpus_stats(one)), a11y::Error);
  std::vector<a11y::TokenizedText> two = {tk("a b"), tk("c d")};
  try {
    a11y::cider(one, two, a11y::build_corpus_stats(two));
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), a11y::Errc::StatsMismatch);
  }
}

TEST(Metrics, InvariantUnderVocabularyRelabeling) {
  std::mt19937 rng(17);
  const Tokens vocab = {"a", "b", "c", "d", "e"};
  const std::map<std::string, std::string> relabel = {{"a", "q"}, {"b", "r"}, {"c", "s"}, {"d", "t"}, {"e", "u"}};
  auto map_all = [&](const Tokens& t) {
    Tokens o;
    for (const auto& x : t) o.push_back(relabel.at(x));
    return o;
  };
  for (int i = 0; i < 200; ++i) {
    const auto c = a11ytest::random_tokens(rng, vocab, 1, 8);
    const auto r = a11ytest::random_tokens(rng, vocab, 1, 8);
    EXPECT_EQ(a11y::bleu_n({c}, {r}, 4), a11y::bleu_n({map_all(c)}, {map_all(r)}, 4));
    EXPECT_EQ(a11y::rouge_l({c}, {r}), a11y::rouge_l({map_all(c)}, {map_all(r)}));
  }
}

namespace {

a11y::GenerationResult result(const std::string& id, const std::string& text) {
  a11y::GenerationResult g;
  g.video_id = id;
  g.text = text;
  g.strategy = a11y::PromptStrategy::PromptAD;
  g.backend.model_name = "m";
  return g;
}

}  // namespace

TEST(ScoreDataset, PerfectCandidates) {
  a11y::DatasetManifest m;
  m.entries = {{"v1", "v1", a11y::Environment::Indoor, {}, "A man walks his dog in the park."},
               {"v2", "v2", a11y::Environment::Indoor, {}, "Two cats sleep on a warm sofa."},
               {"v3", "v3", a11y::Environment::Outdoor, {}, "Cars wait at a red light downtown."}};
  std::vector<a11y::GenerationResult> rs;
  for (const auto& e : m.entries) rs.push_back(result(e.id, *e.ground_truth));
  const auto d = a11y::score_dataset(rs, m);
  ASSERT_EQ(d.groups.size(), 2u);
  for (const auto& g : d.groups) {
    EXPECT_DOUBLE_EQ(g.mean.bleu1, 1.0);
    EXPECT_DOUBLE_EQ(g.mean.bleu4, 1.0);
    EXPECT_DOUBLE_EQ(g.mean.rouge_l, 1.0);
    EXPECT_DOUBLE_EQ(g.mean.cider, 1.0);
    EXPECT_GT(g.mean.meteor, 0.99);
    EXPECT_LT(g.mean.meteor, 1.0);
  }
}

TEST(ScoreDataset, EmptyCandidateScoresZero) {
  a11y::DatasetManifest m;
  m.entries = {{"v1", "v1", a11y::Environment::Indoor, {}, "A man walks."},
               {"v2", "v2", a11y::Environment::Indoor, {}, "A cat sleeps."}};
  const auto d = a11y::score_dataset({result("v1", ""), result("v2", "A cat sleeps.")}, m);
  EXPECT_EQ(d.per_video[0].metrics, a11y::MetricReport{});
  EXPECT_EQ(d.per_video[1].metrics.bleu1, 1.0);
}

TEST(ScoreDataset, SingletonCorpusAndMissingTruth) {
  a11y::DatasetManifest m;
  m.entries = {{"v1", "v1", a11y::Environment::Indoor, {}, "A man walks."},
               {"v2", "v2", a11y::Environment::Indoor, {}, std::nullopt}};
  try {
    a11y::score_dataset({result("v1", "x")}, m);
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), a11y::Errc::CorpusTooSmall);
  }
  try {
    a11y::score_dataset({result("v1", "x"), result("v2", "y")}, m);
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), a11y::Errc::MissingGroundTruth);
  }
}

TEST(GroupMeans, ArithmeticMean) {
  a11y::VideoMetrics a{"v1", "m", a11y::PromptStrategy::PromptOnly, a11y::Environment::Indoor, {}};
  auto b = a;
  b.video_id = "v2";
  a.metrics.bleu1 = 0.2;
  b.metrics.bleu1 = 0.4;
  const auto g = a11y::group_means({a, b});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NEAR(g[0].mean.bleu1, 0.3, 1e-15);
  EXPECT_EQ(g[0].count, 2u);
  const auto back = a11y::video_metrics_from_json(a11y::to_json(a));
  EXPECT_EQ(back.metrics, a.metrics);
  EXPECT_EQ(back.video_id, "v1");
}
