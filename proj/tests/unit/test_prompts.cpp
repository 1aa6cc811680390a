#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "a11y/error.hpp"
#include "a11y/io.hpp"
#include "a11y/prompts.hpp"
#include "support.hpp"

using a11y::PromptStrategy;

namespace {

a11y::KeyframeSet two_frames() {
  a11y::KeyframeSet kf;
  kf.selected = {{1, 1.0, false}, {5, 0.5, false}};
  return kf;
}

a11y::VideoEntry entry(std::vector<std::string> notes = {"a person cooks"}) {
  return {"v1", "v1.mp4", a11y::Environment::Indoor, std::move(notes), "truth"};
}

int numbered_lines(const std::string& text) {
  static const std::regex re(R"(^\d+\. )");
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) n += std::regex_search(line, re);
  return n;
}

}  // namespace

TEST(Guidelines, DefaultSetHas42Items) {
  EXPECT_EQ(a11y::default_guidelines().items.size(), a11y::kDefaultGuidelineCount);
  EXPECT_EQ(a11y::kDefaultGuidelineCount, 42u);
}

TEST(Guidelines, DataFileMatchesBuiltIn) {
  const auto loaded = a11y::load_guidelines(a11ytest::data_dir() / "ad_guidelines.txt");
  EXPECT_EQ(loaded.items, a11y::default_guidelines().items);
}

TEST(Guidelines, BlankLinesDroppedAndOrderKept) {
  a11ytest::TempDir tmp;
  std::ofstream(tmp / "g.txt") << "\n  first  \n\n\nsecond\n   \nthird";
  const auto g = a11y::load_guidelines(tmp / "g.txt");
  EXPECT_EQ(g.items, (std::vector<std::string>{"first", "second", "third"}));
  std::ofstream(tmp / "empty.txt") << "\n \n";
  try {
    a11y::load_guidelines(tmp / "empty.txt");
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), a11y::Errc::EmptyFile);
  }
}

TEST(Prompts, BasePromptDataFileMatchesBuiltIn) {
  EXPECT_EQ(a11y::read_file(a11ytest::data_dir() / "base_prompt.txt"), a11y::default_base_prompt());
}

TEST(Prompts, StrategyNamesRoundTrip) {
  for (auto s : a11y::kAllStrategies) EXPECT_EQ(a11y::parse_strategy(a11y::to_string(s)), s);
  EXPECT_THROW(a11y::parse_strategy("prompt-everything"), a11y::Error);
  EXPECT_EQ(a11y::display_name(PromptStrategy::PromptContextAD), "Prompt + Context + AD Guidelines");
}

TEST(Prompts, PromptOnlyHasNoExtras) {
  const auto b = a11y::build_prompt(entry(), PromptStrategy::PromptOnly, a11y::default_guidelines(),
                                    a11y::default_base_prompt(), two_frames());
  EXPECT_EQ(b.user_text.find("Current Description"), std::string::npos);
  EXPECT_EQ(b.user_text.find("a person cooks"), std::string::npos);
  for (const auto& g : a11y::default_guidelines().items) EXPECT_EQ(b.user_text.find(g), std::string::npos);
  EXPECT_EQ(b.image_count, 2);
  EXPECT_NE(b.user_text.find("2 keyframes"), std::string::npos);
}

TEST(Prompts, ContextBlockFollowsHeader) {
  const auto b = a11y::build_prompt(entry(), PromptStrategy::PromptContext, a11y::default_guidelines(),
                                    a11y::default_base_prompt(), two_frames());
  EXPECT_NE(b.user_text.find("Current Description:\na person cooks"), std::string::npos);
  EXPECT_EQ(numbered_lines(b.user_text), 0);
}

TEST(Prompts, AdStrategiesCarry42NumberedGuidelines) {
  for (auto s : {PromptStrategy::PromptContextAD, PromptStrategy::PromptAD}) {
    const auto b = a11y::build_prompt(entry(), s, a11y::default_guidelines(), a11y::default_base_prompt(),
                                      two_frames());
    EXPECT_EQ(numbered_lines(b.user_text), 42);
    EXPECT_NE(b.user_text.find("42. "), std::string::npos);
  }
}

TEST(Prompts, ContextPrecedesGuidelines) {
  const auto b = a11y::build_prompt(entry(), PromptStrategy::PromptContextAD, a11y::default_guidelines(),
                                    a11y::default_base_prompt(), two_frames());
  EXPECT_LT(b.user_text.find(a11y::kContextHeader), b.user_text.find(a11y::kGuidelinesHeader));
}

TEST(Prompts, MissingPlaceholdersAreAppended) {
  const auto b = a11y::build_prompt(entry(), PromptStrategy::PromptContextAD, a11y::default_guidelines(),
                                    "Describe it.", two_frames());
  EXPECT_EQ(b.user_text.rfind("Describe it.", 0), 0u);
  EXPECT_LT(b.user_text.find(a11y::kContextHeader), b.user_text.find(a11y::kGuidelinesHeader));
}

TEST(Prompts, AnnotationTextIsNotReinterpreted) {
  const auto b = a11y::build_prompt(entry({"literal {guidelines_block} and {image_count}"}),
                                    PromptStrategy::PromptContext, a11y::default_guidelines(),
                                    a11y::default_base_prompt(), two_frames());
  EXPECT_NE(b.user_text.find("literal {guidelines_block} and {image_count}"), std::string::npos);
  EXPECT_EQ(numbered_lines(b.user_text), 0);
}

TEST(Prompts, Errors) {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const a11y::Error& e) {
      return e.code();
    }
    return a11y::Errc::IoError;
  };
  EXPECT_EQ(code([] {
              a11y::build_prompt(entry({}), PromptStrategy::PromptContext, a11y::default_guidelines(),
                                 a11y::default_base_prompt(), two_frames());
            }),
            a11y::Errc::MissingContext);
  EXPECT_EQ(code([] {
              a11y::build_prompt(entry(), PromptStrategy::PromptAD, a11y::GuidelineSet{}, a11y::default_base_prompt(),
                                 two_frames());
            }),
            a11y::Errc::EmptyGuidelines);
  EXPECT_EQ(code([] {
              a11y::build_prompt(entry(), PromptStrategy::PromptOnly, a11y::default_guidelines(),
                                 a11y::default_base_prompt(), a11y::KeyframeSet{});
            }),
            a11y::Errc::EmptySequence);
}
