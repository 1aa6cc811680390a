#include "a11y/prompts.hpp"

namespace a11y {

// Mirrors data/ad_guidelines.txt.
const GuidelineSet& default_guidelines() {
  static const GuidelineSet set{
    {
      "Describe what is visible on screen; do not speculate about things that cannot be seen.",
      "Describe actions in the present tense and in the order they happen.",
      "Begin with the most important visual information before secondary details.",
      "State who is present before describing what they do.",
      "Identify people by visible characteristics such as clothing, age range, or build when names are unknown.",
      "Refer to the same person consistently once they have been introduced.",
      "Mention race, ethnicity, or gender only when it is visually evident and relevant to understanding the scene.",
      "Describe facial expressions and body language instead of naming inferred emotions.",
      "Establish the setting: indoor or outdoor, type of place, and time of day when it can be seen.",
      "Give the spatial layout using clear directional terms such as left, right, in front of, and behind.",
      "Describe where people and objects are relative to one another.",
      "Mention lighting conditions when they affect what can be seen or the mood of the scene.",
      "Note weather and environmental conditions in outdoor scenes.",
      "Point out obstacles, steps, doorways, and other features relevant to moving through the space.",
      "Describe the colors of prominent objects and clothing when they help identification.",
      "Read out on-screen text, signs, and labels that carry meaning.",
      "Describe changes of scene or camera viewpoint when they alter what the viewer sees.",
      "Describe movement and its direction, for example toward or away from the camera.",
      "Keep descriptions concise and avoid unnecessary adjectives.",
      "Use precise, concrete vocabulary rather than vague words.",
      "Avoid subjective judgments such as beautiful, ugly, or boring.",
      "Do not interpret intentions or motives that are not shown.",
      "Do not censor visual content; describe what is shown factually and respectfully.",
      "Use plain language that is easy to follow when heard aloud.",
      "Prefer short sentences with one main idea each.",
      "Avoid camera and film jargon unless it is needed to understand the scene.",
      "Describe objects that people interact with and how they use them.",
      "Mention the number of people or objects when it matters.",
      "Describe sizes and distances using familiar comparisons.",
      "Describe the sequence of events so that cause and effect are clear.",
      "Avoid repeating information that is already obvious from the dialogue or sound.",
      "Describe significant sounds only when their visual source is shown.",
      "Mention the overall atmosphere only when it is supported by visible cues.",
      "Describe clothing and appearance details that matter to the story or the setting.",
      "Describe gestures and physical contact between people.",
      "Describe interactions between people, animals, and objects in the scene.",
      "Maintain a neutral, objective tone throughout the description.",
      "Use consistent tense and point of view across the whole description.",
      "Avoid starting sentences with phrases such as \"we see\" or \"there is\".",
      "Prioritize information a person who cannot see the video would need to follow it.",
      "Do not mention the keyframes, images, or the fact that the content is a video.",
      "End the description once the visual content has been covered; do not add summaries or conclusions.",
    },
    "builtin",
  };
  return set;
}

}  // namespace a11y
