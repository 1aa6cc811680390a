#include "a11y/prompts.hpp"

#include <sstream>

#include "a11y/error.hpp"
#include "a11y/io.hpp"

namespace a11y {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Single left-to-right pass; substituted text is never rescanned.
std::string substitute(std::string_view text, const std::vector<std::pair<std::string_view, std::string>>& slots) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    if (text[i] == '{') {
      for (const auto& [slot, value] : slots) {
        if (text.substr(i, slot.size()) == slot) {
          out += value;
          i += slot.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += text[i++];
  }
  return out;
}

constexpr std::string_view kContextSlot = "{context_block}";
constexpr std::string_view kGuidelinesSlot = "{guidelines_block}";

}  // namespace

GuidelineSet load_guidelines(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::IoError, e.what());
  }
  GuidelineSet set;
  set.source_label = path.filename().string();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto item = trim(line);
    if (!item.empty()) set.items.push_back(std::move(item));
  }
  if (set.items.empty()) throw Error(Errc::EmptyFile, path.string());
  return set;
}

std::string_view to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::PromptOnly: return "prompt-only";
    case PromptStrategy::PromptContext: return "prompt-context";
    case PromptStrategy::PromptContextAD: return "prompt-context-ad";
    case PromptStrategy::PromptAD: return "prompt-ad";
  }
  return "?";
}

std::string_view display_name(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::PromptOnly: return "Prompt Only";
    case PromptStrategy::PromptContext: return "Prompt + Context";
    case PromptStrategy::PromptContextAD: return "Prompt + Context + AD Guidelines";
    case PromptStrategy::PromptAD: return "Prompt + AD Guidelines";
  }
  return "?";
}

PromptStrategy parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::InvalidArgument, "unknown strategy \"" + std::string(name) +
                                         "\" (prompt-only|prompt-context|prompt-context-ad|prompt-ad)");
}

bool uses_context(PromptStrategy s) {
  return s == PromptStrategy::PromptContext || s == PromptStrategy::PromptContextAD;
}

bool uses_guidelines(PromptStrategy s) {
  return s == PromptStrategy::PromptContextAD || s == PromptStrategy::PromptAD;
}

const std::string& default_base_prompt() {
  static const std::string text =
      "Describe this video for a blind or low-vision viewer. The video is given as {image_count} keyframes "
      "in temporal order. Write one coherent description covering the setting, the people and objects present, "
      "and the actions that take place.\n"
      "\n"
      "{context_block}{guidelines_block}";
  return text;
}

const std::string& default_system_text() {
  static const std::string text =
      "You are a professional audio describer writing accessible video descriptions for blind and low-vision "
      "audiences.";
  return text;
}

std::string render_context_block(const std::vector<std::string>& annotations) {
  std::string out(kContextHeader);
  out += '\n';
  for (const auto& a : annotations) {
    out += a;
    out += '\n';
  }
  out += '\n';
  return out;
}

std::string render_guidelines_block(const GuidelineSet& guidelines) {
  std::string out(kGuidelinesHeader);
  out += '\n';
  for (std::size_t i = 0; i < guidelines.items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + guidelines.items[i] + '\n';
  }
  out += '\n';
  return out;
}

PromptBundle build_prompt(const VideoEntry& entry, PromptStrategy strategy, const GuidelineSet& guidelines,
                          const std::string& base_prompt, const KeyframeSet& keyframes,
                          const std::string& system_text) {
  if (keyframes.selected.empty()) throw Error(Errc::EmptySequence, entry.id + ": no keyframes");
  if (uses_context(strategy) && entry.human_annotations.empty()) {
    throw Error(Errc::MissingContext, entry.id + ": strategy " + std::string(to_string(strategy)) +
                                          " needs human annotations");
  }
  if (uses_guidelines(strategy) && guidelines.items.empty()) {
    throw Error(Errc::EmptyGuidelines, std::string(to_string(strategy)));
  }

  std::string text = base_prompt;
  if (text.find(kGuidelinesSlot) == std::string::npos) {
    text += "\n\n";
    text += kGuidelinesSlot;
  }
  if (text.find(kContextSlot) == std::string::npos) {
    text.insert(text.find(kGuidelinesSlot), kContextSlot);
  }

  const std::string context = uses_context(strategy) ? render_context_block(entry.human_annotations) : "";
  const std::string rules = uses_guidelines(strategy) ? render_guidelines_block(guidelines) : "";
  text = substitute(text, {{"{image_count}", std::to_string(keyframes.selected.size())},
                           {kContextSlot, context},
                           {kGuidelinesSlot, rules}});

  PromptBundle bundle;
  bundle.video_id = entry.id;
  bundle.strategy = strategy;
  bundle.system_text = system_text;
  bundle.user_text = trim(text);
  bundle.image_count = static_cast<int>(keyframes.selected.size());
  if (bundle.user_text.empty()) throw Error(Errc::InvalidArgument, "rendered prompt is empty");
  return bundle;
}

}  // namespace a11y
