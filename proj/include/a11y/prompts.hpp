#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "a11y/keyframes.hpp"
#include "a11y/manifest.hpp"

namespace a11y {

struct GuidelineSet {
  std::vector<std::string> items;
  std::string source_label;

  bool operator==(const GuidelineSet&) const = default;
};

inline constexpr std::size_t kDefaultGuidelineCount = 42;

// The bundled 42-item audio-description guideline set.
const GuidelineSet& default_guidelines();

// One guideline per non-blank line, trimmed, file order preserved.
GuidelineSet load_guidelines(const std::filesystem::path& path);

enum class PromptStrategy { PromptOnly, PromptContext, PromptContextAD, PromptAD };

inline constexpr std::array<PromptStrategy, 4> kAllStrategies = {
    PromptStrategy::PromptOnly, PromptStrategy::PromptContext, PromptStrategy::PromptContextAD,
    PromptStrategy::PromptAD};

// Stable machine name ("prompt-only", "prompt-context", "prompt-context-ad", "prompt-ad").
std::string_view to_string(PromptStrategy s);
// Human label used in report rows ("Prompt + Context + AD Guidelines", ...).
std::string_view display_name(PromptStrategy s);
PromptStrategy parse_strategy(std::string_view name);  // throws InvalidArgument

bool uses_context(PromptStrategy s);
bool uses_guidelines(PromptStrategy s);

struct PromptBundle {
  std::string video_id;
  PromptStrategy strategy = PromptStrategy::PromptOnly;
  std::string system_text;
  std::string user_text;
  int image_count = 0;

  bool operator==(const PromptBundle&) const = default;
};

inline constexpr std::string_view kContextHeader = "Current Description:";
inline constexpr std::string_view kGuidelinesHeader = "Audio description guidelines:";

// Default base prompt; ships as data/base_prompt.txt.
const std::string& default_base_prompt();
const std::string& default_system_text();

// `base_prompt` may carry {context_block}, {guidelines_block} and
// {image_count} placeholders. A missing {context_block} goes right before
// {guidelines_block} (or at the end); a missing {guidelines_block} goes at the
// end.
PromptBundle build_prompt(const VideoEntry& entry, PromptStrategy strategy, const GuidelineSet& guidelines,
                          const std::string& base_prompt, const KeyframeSet& keyframes,
                          const std::string& system_text = default_system_text());

std::string render_context_block(const std::vector<std::string>& annotations);
std::string render_guidelines_block(const GuidelineSet& guidelines);

}  // namespace a11y
