// Generated from data/judge_*.txt; keep both in sync.

#include <string>

namespace a11y::detail {

extern const std::string kJudgeTemplate_mcf;
const std::string kJudgeTemplate_mcf = R"TPL(You are an evaluator of video descriptions written for blind and low-vision (BLV) people.
Rubric: Multi-Context BLV Framework

Reference description:
{ground_truth}

Candidate description:
{candidate}

Compare the candidate with the reference and score the candidate on each dimension below from 1 (very poor) to 10 (excellent).

{dimensions}

Answer with one JSON object only, with exactly these keys: {keys}. Every value is an integer or a number with one decimal place between 1 and 10. Do not add any text outside the JSON object.
)TPL";

extern const std::string kJudgeTemplate_naf;
const std::string kJudgeTemplate_naf = R"TPL(You are an evaluator of video descriptions written for blind and low-vision (BLV) people.
Rubric: Navigational Assistance Framework

Reference description:
{ground_truth}

Candidate description:
{candidate}

Compare the candidate with the reference and score the candidate on each dimension below from 1 (very poor) to 10 (excellent).

{dimensions}

Answer with one JSON object only, with exactly these keys: {keys}. Every value is an integer or a number with one decimal place between 1 and 10. Do not add any text outside the JSON object.
)TPL";

extern const std::string kJudgeTemplate_a11y;
const std::string kJudgeTemplate_a11y = R"TPL(You are an evaluator of video descriptions written for blind and low-vision (BLV) people.
Rubric: Accessibility Description Rubric

Reference description:
{ground_truth}

Candidate description:
{candidate}

Compare the candidate with the reference and score the candidate on each dimension below from 1 (very poor) to 10 (excellent).

{dimensions}

Answer with one JSON object only, with exactly these keys: {keys}. Every value is an integer or a number with one decimal place between 1 and 10. Do not add any text outside the JSON object.
)TPL";

}  // namespace a11y::detail
