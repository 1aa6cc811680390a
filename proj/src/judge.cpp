#include "a11y/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "a11y/io.hpp"

namespace a11y {

namespace detail {
extern const std::string kJudgeTemplate_mcf;
extern const std::string kJudgeTemplate_naf;
extern const std::string kJudgeTemplate_a11y;
}  // namespace detail

using nlohmann::json;

std::string_view to_string(Rubric r) {
  switch (r) {
    case Rubric::MCF: return "mcf";
    case Rubric::NAF: return "naf";
    case Rubric::A11y: return "a11y";
  }
  return "?";
}

Rubric parse_rubric(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto r : kAllRubrics) {
    if (to_string(r) == lower) return r;
  }
  throw Error(Errc::InvalidArgument, "unknown rubric '" + std::string(name) + "' (expected mcf, naf or a11y)");
}

const std::array<std::string_view, 4>& rubric_keys(Rubric r) {
  static const std::array<std::string_view, 4> mcf{"spatial", "social", "action", "ambience"};
  static const std::array<std::string_view, 4> naf{"descriptiveness", "objectivity", "accuracy", "clarity"};
  static const std::array<std::string_view, 4> a11y{"descriptive", "objective", "accurate", "clear"};
  switch (r) {
    case Rubric::MCF: return mcf;
    case Rubric::NAF: return naf;
    case Rubric::A11y: break;
  }
  return a11y;
}

const std::array<std::string_view, 4>& rubric_labels(Rubric r) {
  static const std::array<std::string_view, 4> mcf{"Spatial Orientation", "Social Interaction", "Action & Event",
                                                   "Ambience"};
  static const std::array<std::string_view, 4> naf{"Descriptiveness", "Objectivity", "Accuracy", "Clarity"};
  static const std::array<std::string_view, 4> a11y{"Descriptive", "Objective", "Accurate", "Clear"};
  switch (r) {
    case Rubric::MCF: return mcf;
    case Rubric::NAF: return naf;
    case Rubric::A11y: break;
  }
  return a11y;
}

double four_way_mean(const std::array<double, 4>& v) { return (v[0] + v[1] + v[2] + v[3]) / 4.0; }

Rubric rubric_of(const JudgeScores& s) {
  return std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MCFScores>) return Rubric::MCF;
        else if constexpr (std::is_same_v<T, NAFScores>) return Rubric::NAF;
        else return Rubric::A11y;
      },
      s);
}

std::array<double, 4> dimension_values(const JudgeScores& s) {
  return std::visit(
      [](const auto& x) -> std::array<double, 4> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MCFScores>) return {x.spatial, x.social, x.action, x.ambience};
        else if constexpr (std::is_same_v<T, NAFScores>) return {x.descriptiveness, x.objectivity, x.accuracy, x.clarity};
        else return {x.descriptive, x.objective, x.accurate, x.clear};
      },
      s);
}

JudgeScores make_scores(Rubric rubric, const std::array<double, 4>& v) {
  switch (rubric) {
    case Rubric::MCF: return MCFScores{v[0], v[1], v[2], v[3], four_way_mean(v)};
    case Rubric::NAF: return NAFScores{v[0], v[1], v[2], v[3], four_way_mean(v)};
    case Rubric::A11y: break;
  }
  return A11yScores{v[0], v[1], v[2], v[3]};
}

// ---------------------------------------------------------------------------
// templates

std::string dimension_definitions(Rubric r) {
  static const std::array<std::string_view, 4> mcf{
      "where things are: locations, directional cues, relative positions and the layout of the surroundings, "
      "everything a listener needs to build a mental map.",
      "who is present and how they relate: identification of people, interactions between them, visible "
      "expressions and the social setting.",
      "what happens and in what order: a clear temporal sequence, complete activity descriptions and cause "
      "and effect between events.",
      "mood, lighting, atmosphere and sensory detail that let the listener feel present in the scene."};
  static const std::array<std::string_view, 4> naf{
      "detail of the spatial layout, hazard identification, and description of environmental features such "
      "as obstacles, pathways and boundaries.",
      "factual reporting without assumptions; no subjective reading of how things are arranged in space.",
      "correct spatial relationships, object positions and distance estimates that a navigation decision "
      "could rely on.",
      "organization that supports step-by-step navigation decisions, with a logical order and unambiguous "
      "directions."};
  static const std::array<std::string_view, 4> a11y{
      "covers the important visual content of the video in enough detail.",
      "reports what is visible without opinions or guesses.",
      "agrees with the reference and invents no people, objects or events.",
      "is well organized and easy to follow when read aloud."};
  const auto& defs = r == Rubric::MCF ? mcf : r == Rubric::NAF ? naf : a11y;
  const auto& keys = rubric_keys(r);
  const auto& labels = rubric_labels(r);
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    out += "- \"";
    out += keys[i];
    out += "\" (";
    out += labels[i];
    out += "): ";
    out += defs[i];
    if (i + 1 < 4) out += '\n';
  }
  return out;
}

RubricTemplate default_rubric_template(Rubric r) {
  switch (r) {
    case Rubric::MCF: return {r, detail::kJudgeTemplate_mcf};
    case Rubric::NAF: return {r, detail::kJudgeTemplate_naf};
    case Rubric::A11y: break;
  }
  return {r, detail::kJudgeTemplate_a11y};
}

RubricTemplate load_rubric_template(const std::filesystem::path& path, Rubric r) {
  RubricTemplate t{r, read_file(path)};
  if (t.text.empty()) throw Error(Errc::EmptyFile, "rubric template " + path.string() + " is empty");
  return t;
}

namespace {

std::string keys_list(Rubric r) {
  std::string out;
  for (auto k : rubric_keys(r)) {
    if (!out.empty()) out += ", ";
    out += '"';
    out += k;
    out += '"';
  }
  return out;
}

}  // namespace

std::string build_judge_prompt(const JudgeRequest& req, const RubricTemplate& tmpl) {
  for (std::string_view slot : {"{candidate}", "{ground_truth}", "{dimensions}"}) {
    if (tmpl.text.find(slot) == std::string::npos) {
      throw Error(Errc::TemplateMissingPlaceholder, "rubric template lacks " + std::string(slot));
    }
  }
  if (req.candidate.empty() || req.ground_truth.empty()) {
    throw Error(Errc::InvalidArgument, "judge request for " + req.video_id + " has an empty text");
  }
  const std::map<std::string, std::string, std::less<>> vars{{"candidate", req.candidate},
                                                             {"ground_truth", req.ground_truth},
                                                             {"dimensions", dimension_definitions(req.rubric)},
                                                             {"keys", keys_list(req.rubric)}};
  // single pass, so braces inside the substituted texts stay literal
  std::string out;
  const auto& t = tmpl.text;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] == '{') {
      const auto close = t.find('}', i + 1);
      if (close != std::string::npos) {
        if (auto it = vars.find(std::string_view(t).substr(i + 1, close - i - 1)); it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += t[i++];
  }
  return out;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

// End (exclusive) of the brace-balanced span opening at `open`, honoring JSON
// string literals; npos if unbalanced.
std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fmt_value(const json& v) {
  if (v.is_number_float()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  return v.dump();
}

}  // namespace

JudgeScores parse_scores(std::string_view raw, Rubric rubric) {
  json obj;
  bool found = false;
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
    const auto end = balanced_end(raw, pos);
    if (end == std::string_view::npos) continue;
    auto doc = json::parse(raw.substr(pos, end - pos), nullptr, false);
    if (!doc.is_discarded() && doc.is_object()) {
      obj = std::move(doc);
      found = true;
      break;
    }
  }
  if (!found) throw Error(Errc::NoJsonFound, "judge reply holds no JSON object");

  std::map<std::string, const json*> by_key;
  for (const auto& [k, v] : obj.items()) by_key.emplace(lower(k), &v);

  std::array<double, 4> values{};
  const auto& keys = rubric_keys(rubric);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string key(keys[i]);
    auto it = by_key.find(key);
    if (it == by_key.end()) throw Error(Errc::MissingKey, "judge reply lacks key \"" + key + "\"");
    const json& v = *it->second;
    if (!v.is_number()) throw Error(Errc::NonNumeric, "\"" + key + "\" is not a number: " + v.dump());
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < kMinScore || x > kMaxScore) {
      throw Error(Errc::OutOfRange, "\"" + key + "\" = " + fmt_value(v) + " is outside [1, 10]");
    }
    values[i] = x;
  }
  return make_scores(rubric, values);
}

// ---------------------------------------------------------------------------
// judging

std::string corrective_suffix(Rubric r) {
  return "\n\nYour previous answer could not be read. Return only JSON: a single object with the keys " +
         keys_list(r) + ", each a number between 1 and 10, and no other text.";
}

BackendConfig judge_backend(BackendConfig cfg) {
  cfg.temperature = 0.0;
  if (!cfg.seed) cfg.seed = kDefaultJudgeSeed;
  return cfg;
}

JudgeOutcome judge_one(const JudgeRequest& req, const InferenceClient& client, int retries,
                       const RubricTemplate& tmpl) {
  if (retries < 0) throw Error(Errc::InvalidArgument, "judge retries must be >= 0");
  const std::string prompt = build_judge_prompt(req, tmpl);
  std::vector<std::string> transcripts;
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    ChatRequest chat;
    chat.system_text = "You are a careful evaluator. You answer with JSON only.";
    chat.user_text = attempt == 0 ? prompt : prompt + corrective_suffix(req.rubric);
    auto reply = client.complete(chat);
    transcripts.push_back(reply.text);
    try {
      JudgeOutcome out{parse_scores(reply.text, req.rubric), attempt + 1, {}};
      out.transcripts = std::move(transcripts);
      return out;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw JudgeUnparseableError("judge reply for " + req.video_id + " unusable after " +
                                  std::to_string(retries + 1) + " attempts (" + last_error + ")",
                              std::move(transcripts));
}

JudgeOutcome judge_one(const JudgeRequest& req, const BackendConfig& cfg, int retries) {
  InferenceClient client(judge_backend(cfg));
  return judge_one(req, client, retries, default_rubric_template(req.rubric));
}

// ---------------------------------------------------------------------------
// records and aggregation

json to_json(const JudgeRecord& r) {
  const Rubric rubric = rubric_of(r.outcome.scores);
  const auto vals = dimension_values(r.outcome.scores);
  json scores = json::object();
  const auto& keys = rubric_keys(rubric);
  for (std::size_t i = 0; i < 4; ++i) scores[std::string(keys[i])] = vals[i];
  json j{{"video_id", r.video_id},
         {"model_label", r.model_label},
         {"strategy", std::string(to_string(r.strategy))},
         {"environment", std::string(to_string(r.environment))},
         {"rubric", std::string(to_string(rubric))},
         {"scores", scores},
         {"attempts", r.outcome.attempts},
         {"transcripts", r.outcome.transcripts}};
  if (rubric == Rubric::MCF) j["mcf_score"] = std::get<MCFScores>(r.outcome.scores).mcf_score;
  if (rubric == Rubric::NAF) j["naf_score"] = std::get<NAFScores>(r.outcome.scores).naf_score;
  return j;
}

JudgeRecord judge_record_from_json(const json& j) {
  JudgeRecord r;
  r.video_id = j.at("video_id").get<std::string>();
  r.model_label = j.at("model_label").get<std::string>();
  r.strategy = parse_strategy(j.at("strategy").get<std::string>());
  r.environment = parse_environment(j.at("environment").get<std::string>());
  const Rubric rubric = parse_rubric(j.at("rubric").get<std::string>());
  std::array<double, 4> vals{};
  const auto& keys = rubric_keys(rubric);
  for (std::size_t i = 0; i < 4; ++i) vals[i] = j.at("scores").at(std::string(keys[i])).get<double>();
  r.outcome.scores = make_scores(rubric, vals);
  r.outcome.attempts = j.value("attempts", 1);
  r.outcome.transcripts = j.value("transcripts", std::vector<std::string>{});
  return r;
}

std::vector<FrameworkGroup> aggregate_framework(const std::vector<JudgeRecord>& per_video,
                                                const AggregateOptions& opts) {
  if (per_video.empty()) throw Error(Errc::EmptyGroup, "no judge records to aggregate");
  const Rubric rubric = rubric_of(per_video.front().outcome.scores);
  std::map<FrameworkGroupKey, std::vector<std::array<double, 4>>> groups;
  for (const auto& r : per_video) {
    if (rubric_of(r.outcome.scores) != rubric) {
      throw Error(Errc::InvalidArgument, "judge records mix the " + std::string(to_string(rubric)) + " and " +
                                             std::string(to_string(rubric_of(r.outcome.scores))) + " rubrics");
    }
    FrameworkGroupKey key{r.model_label, r.environment, std::nullopt};
    if (opts.by_strategy) key.strategy = r.strategy;
    groups[key].push_back(dimension_values(r.outcome.scores));
  }

  double weight_sum = 0.0;
  if (opts.weights) {
    for (double w : *opts.weights) {
      if (!std::isfinite(w) || w < 0.0) throw Error(Errc::ConfigInvalid, "framework weights must be >= 0");
      weight_sum += w;
    }
    if (weight_sum <= 0.0) throw Error(Errc::ConfigInvalid, "framework weights sum to zero");
  }

  std::vector<FrameworkGroup> out;
  for (auto& [key, rows] : groups) {
    // sorted rows make the sums independent of input order
    std::sort(rows.begin(), rows.end());
    FrameworkGroup g;
    g.key = key;
    g.rubric = rubric;
    g.count = rows.size();
    for (std::size_t d = 0; d < 4; ++d) {
      double s = 0.0;
      for (const auto& row : rows) s += row[d];
      g.means[d] = s / static_cast<double>(rows.size());
    }
    g.overall = four_way_mean(g.means);
    if (opts.weights) {
      double w = 0.0;
      for (std::size_t d = 0; d < 4; ++d) w += (*opts.weights)[d] * g.means[d];
      g.weighted = w / weight_sum;
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace a11y
