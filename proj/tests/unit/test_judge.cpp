#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "a11y/error.hpp"
#include "a11y/io.hpp"
#include "a11y/judge.hpp"
#include "a11y/stub_server.hpp"
#include "support.hpp"

using a11y::Errc;
using a11y::Rubric;

namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const a11y::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no a11y::Error thrown";
  return Errc::IoError;
}

a11y::JudgeRecord record(Rubric rubric, std::array<double, 4> v, const std::string& model = "500M",
                         a11y::Environment env = a11y::Environment::Indoor,
                         a11y::PromptStrategy s = a11y::PromptStrategy::PromptOnly) {
  static int n = 0;
  a11y::JudgeRecord r;
  r.video_id = "v" + std::to_string(++n);
  r.model_label = model;
  r.environment = env;
  r.strategy = s;
  r.outcome.scores = a11y::make_scores(rubric, v);
  return r;
}

a11y::BackendConfig stub_cfg(const a11y::StubServer& s) {
  a11y::BackendConfig cfg;
  cfg.endpoint_url = s.url();
  cfg.model_name = "judge";
  return cfg;
}

}  // namespace

TEST(Rubrics, KeysAndNames) {
  for (auto r : a11y::kAllRubrics) EXPECT_EQ(a11y::parse_rubric(a11y::to_string(r)), r);
  EXPECT_EQ(a11y::rubric_keys(Rubric::MCF)[3], "ambience");
  EXPECT_EQ(a11y::rubric_keys(Rubric::NAF)[0], "descriptiveness");
  EXPECT_THROW(a11y::parse_rubric("xyz"), a11y::Error);
}

TEST(Templates, DataFilesMatchBuiltIns) {
  for (auto r : a11y::kAllRubrics) {
    const auto path = a11ytest::data_dir() / ("judge_" + std::string(a11y::to_string(r)) + ".txt");
    EXPECT_EQ(a11y::load_rubric_template(path, r).text, a11y::default_rubric_template(r).text);
  }
}

TEST(Prompt, McfMentionsEveryDimensionAndBothTexts) {
  a11y::JudgeRequest req{Rubric::MCF, "CANDIDATE TEXT", "REFERENCE TEXT", "v1"};
  const auto p = a11y::build_judge_prompt(req, a11y::default_rubric_template(Rubric::MCF));
  for (auto l : a11y::rubric_labels(Rubric::MCF)) EXPECT_NE(p.find(l), std::string::npos) << l;
  for (auto k : a11y::rubric_keys(Rubric::MCF)) EXPECT_NE(p.find(k), std::string::npos) << k;
  EXPECT_NE(p.find("CANDIDATE TEXT"), std::string::npos);
  EXPECT_NE(p.find("REFERENCE TEXT"), std::string::npos);
}

TEST(Prompt, NafDefinitions) {
  a11y::JudgeRequest req{Rubric::NAF, "c", "g", "v1"};
  const auto p = a11y::build_judge_prompt(req, a11y::default_rubric_template(Rubric::NAF));
  for (const char* w : {"Descriptiveness", "Objectivity", "Accuracy", "Clarity", "hazard identification",
                        "factual reporting without assumptions"}) {
    EXPECT_NE(p.find(w), std::string::npos) << w;
  }
}

TEST(Prompt, PlaceholdersRequiredAndNotReexpanded) {
  a11y::RubricTemplate t{Rubric::MCF, "Rate {ground_truth} with {dimensions}"};
  a11y::JudgeRequest req{Rubric::MCF, "c", "g", "v"};
  EXPECT_EQ(code_of([&] { a11y::build_judge_prompt(req, t); }), Errc::TemplateMissingPlaceholder);
  t.text = "[{candidate}] [{ground_truth}] {dimensions}";
  req.candidate = "says {ground_truth}";
  const auto p = a11y::build_judge_prompt(req, t);
  EXPECT_EQ(p.rfind("[says {ground_truth}] [g]", 0), 0u);
}

TEST(Parse, ValidObjects) {
  const auto s = a11y::parse_scores(R"({"spatial":4,"social":6,"action":2,"ambience":8})", Rubric::MCF);
  EXPECT_EQ(std::get<a11y::MCFScores>(s).mcf_score, 5.0);
  const auto n = a11y::parse_scores(
      "Here you go: {\"Descriptiveness\": 7.5, \"OBJECTIVITY\": 3, \"accuracy\": 10, \"clarity\": 1} thanks",
      Rubric::NAF);
  const auto naf = std::get<a11y::NAFScores>(n);
  EXPECT_EQ(naf.descriptiveness, 7.5);
  EXPECT_EQ(naf.naf_score, (7.5 + 3 + 10 + 1) / 4);
  // braces inside strings are ignored
  const auto a = a11y::parse_scores(
      "note {not json} then {\"descriptive\":2,\"objective\":5,\"accurate\":3,\"clear\":4,\"x\":\"a } b\"}",
      Rubric::A11y);
  EXPECT_EQ(std::get<a11y::A11yScores>(a).descriptive, 2);
  // the first object that parses wins, even when a later one would validate
  EXPECT_EQ(code_of([] {
              a11y::parse_scores("{\"descriptive\":2,\"objective\":\"x}\",\"accurate\":3,\"clear\":4} "
                                 "{\"descriptive\":9,\"objective\":9,\"accurate\":9,\"clear\":9}",
                                 Rubric::A11y);
            }),
            Errc::NonNumeric);
}

TEST(Parse, TypedErrors) {
  EXPECT_EQ(code_of([] { a11y::parse_scores("no json here", Rubric::MCF); }), Errc::NoJsonFound);
  EXPECT_EQ(code_of([] { a11y::parse_scores(R"({"spatial":4,"social":6,"action":2})", Rubric::MCF); }),
            Errc::MissingKey);
  EXPECT_EQ(code_of([] { a11y::parse_scores(R"({"spatial":"4","social":6,"action":2,"ambience":1})", Rubric::MCF); }),
            Errc::NonNumeric);
  try {
    a11y::parse_scores(R"({"spatial":11,"social":6,"action":2,"ambience":8})", Rubric::MCF);
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), Errc::OutOfRange);
    EXPECT_NE(std::string(e.what()).find("spatial"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("11"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { a11y::parse_scores(R"({"spatial":0.5,"social":6,"action":2,"ambience":8})", Rubric::MCF); }),
            Errc::OutOfRange);
}

TEST(Parse, FuzzOnlyTypedOutcomes) {
  std::mt19937 rng(99);
  const std::string alphabet = "{}[]\":,. 0123456789-eE+spatialocinmbedrv\\n";
  for (int i = 0; i < 5000; ++i) {
    std::string s(std::uniform_int_distribution<std::size_t>(0, 80)(rng), ' ');
    for (auto& c : s) c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    try {
      const auto r = a11y::parse_scores(s, Rubric::MCF);
      for (double v : a11y::dimension_values(r)) EXPECT_TRUE(v >= 1 && v <= 10);
    } catch (const a11y::Error&) {
    }
  }
}

TEST(JudgeOne, FirstAttempt) {
  a11y::StubConfig sc;
  sc.mode = a11y::StubConfig::Mode::JudgeScores;
  a11y::StubServer stub(sc);
  stub.start();
  const auto out = a11y::judge_one({Rubric::NAF, "c", "g", "v"}, stub_cfg(stub), 2);
  EXPECT_EQ(out.attempts, 1);
  EXPECT_EQ(a11y::rubric_of(out.scores), Rubric::NAF);
  const auto body = nlohmann::json::parse(stub.request_bodies().at(0));
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["seed"], a11y::kDefaultJudgeSeed);
}

TEST(JudgeOne, ProseThenJson) {
  a11y::StubConfig sc;
  sc.script = {"I would rate it highly.", R"({"spatial":3,"social":4,"action":5,"ambience":6})"};
  a11y::StubServer stub(sc);
  stub.start();
  const auto out = a11y::judge_one({Rubric::MCF, "c", "g", "v"}, stub_cfg(stub), 2);
  EXPECT_EQ(out.attempts, 2);
  EXPECT_EQ(std::get<a11y::MCFScores>(out.scores).mcf_score, 4.5);
}

TEST(JudgeOne, AlwaysProseIsUnparseable) {
  a11y::StubConfig sc;
  sc.script = {"Honestly it is fine."};
  a11y::StubServer stub(sc);
  stub.start();
  try {
    a11y::judge_one({Rubric::MCF, "c", "g", "v"}, stub_cfg(stub), 2);
    FAIL();
  } catch (const a11y::JudgeUnparseableError& e) {
    EXPECT_EQ(e.raw_attempts.size(), 3u);
    EXPECT_EQ(e.code(), Errc::JudgeUnparseable);
  }
}

TEST(Aggregate, DimensionMeans) {
  const auto g = a11y::aggregate_framework(
      {record(Rubric::MCF, {3, 5, 5, 5}), record(Rubric::MCF, {4, 5, 5, 5})});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].means[0], 3.5);
  EXPECT_EQ(g[0].count, 2u);
  EXPECT_EQ(g[0].overall, a11y::four_way_mean(g[0].means));
}

TEST(Aggregate, ReportedRowsExact) {
  const auto g = a11y::aggregate_framework({record(Rubric::MCF, {3.556, 3.206, 2.585, 4.664})});
  EXPECT_EQ(g[0].overall, (3.556 + 3.206 + 2.585 + 4.664) / 4);
}

TEST(Aggregate, GroupingAndWeights) {
  std::vector<a11y::JudgeRecord> rows = {
      record(Rubric::NAF, {2, 2, 2, 2}, "500M", a11y::Environment::Outdoor),
      record(Rubric::NAF, {4, 4, 4, 4}, "2.2B", a11y::Environment::Outdoor),
      record(Rubric::NAF, {6, 6, 6, 6}, "500M", a11y::Environment::Indoor),
      record(Rubric::NAF, {8, 2, 2, 2}, "2.2B", a11y::Environment::Indoor),
  };
  a11y::AggregateOptions opts;
  opts.weights = std::array<double, 4>{2, 1, 1, 0};
  const auto g = a11y::aggregate_framework(rows, opts);
  ASSERT_EQ(g.size(), 4u);
  for (const auto& x : g) {
    ASSERT_TRUE(x.weighted.has_value());
    if (x.key.model_label == "2.2B" && x.key.environment == a11y::Environment::Indoor) {
      EXPECT_NEAR(*x.weighted, (2 * 8 + 2 + 2) / 4.0, 1e-12);
    }
  }
  EXPECT_EQ(code_of([] { a11y::aggregate_framework({}); }), Errc::EmptyGroup);
  EXPECT_THROW(a11y::aggregate_framework({record(Rubric::MCF, {1, 1, 1, 1}), record(Rubric::NAF, {1, 1, 1, 1})}),
               a11y::Error);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> d(10, 100);
  std::vector<a11y::JudgeRecord> rows;
  for (int i = 0; i < 25; ++i) rows.push_back(record(Rubric::MCF, {d(rng) / 10.0, d(rng) / 10.0, d(rng) / 10.0, d(rng) / 10.0}));
  const auto base = a11y::aggregate_framework(rows);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto g = a11y::aggregate_framework(rows);
    EXPECT_EQ(g[0].means, base[0].means);
    EXPECT_EQ(g[0].overall, base[0].overall);
  }
}

TEST(Records, JsonRoundTrip) {
  auto r = record(Rubric::MCF, {1.5, 2, 3, 4}, "m", a11y::Environment::Outdoor, a11y::PromptStrategy::PromptAD);
  r.outcome.attempts = 2;
  r.outcome.transcripts = {"prose", "{...}"};
  const auto j = a11y::to_json(r);
  EXPECT_EQ(j["mcf_score"], 2.625);
  const auto back = a11y::judge_record_from_json(j);
  EXPECT_EQ(back.video_id, r.video_id);
  EXPECT_EQ(back.strategy, r.strategy);
  EXPECT_EQ(a11y::dimension_values(back.outcome.scores), a11y::dimension_values(r.outcome.scores));
  EXPECT_EQ(back.outcome.transcripts, r.outcome.transcripts);
}
