#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "a11y/image.hpp"

namespace a11y {

// Adaptive keyframe extraction: frames are converted to CIE L*u*v*, the mean
// absolute inter-frame difference forms a change signal, the signal is
// smoothed with a normalized Hanning window, and the strongest local maxima
// mark keyframes (the frame right after each change).

struct Luv {
  double L = 0.0;
  double u = 0.0;
  double v = 0.0;
};

// CIE 1976 L*u*v* of an 8-bit sRGB pixel, D65 reference white.
Luv rgb_to_luv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct FrameSequence {
  std::vector<RgbImage> frames;
  std::vector<std::size_t> frame_indices;  // strictly increasing
  double source_fps = 0.0;

  std::size_t size() const { return frames.size(); }
  // Throws InvalidArgument when dimensions differ or indices do not increase.
  void validate() const;
};

struct DifferenceSignal {
  std::vector<double> values;                  // one per consecutive frame pair
  std::optional<std::vector<double>> smoothed;
};

struct Peak {
  std::size_t index = 0;  // position in the signal
  double value = 0.0;

  bool operator==(const Peak&) const = default;
};

struct SelectedFrame {
  std::size_t frame_index = 0;
  double score = 0.0;     // smoothed signal at the peak, 0 for fallback frames
  bool fallback = false;

  bool operator==(const SelectedFrame&) const = default;
};

struct KeyframeSet {
  std::string video_id;
  std::vector<SelectedFrame> selected;        // frame_index strictly increasing
  std::vector<std::filesystem::path> images;  // parallel to `selected` once written

  bool operator==(const KeyframeSet&) const = default;
};

inline constexpr std::size_t kMaxKeyframes = 16;

struct KeyframeParams {
  double sample_fps = 2.0;
  std::size_t window_len = 5;
  std::size_t k = 4;
  // Placeholders: {input} {fps} {outdir}. Must write {outdir}/frame_%05d.png.
  std::string dumper_template = "ffmpeg -nostdin -loglevel error -i {input} -vf fps={fps} {outdir}/frame_%05d.png";

  void validate() const;
};

// Runs the external frame dumper into a scratch directory and loads the
// numbered PNGs. frame_indices are positions in the sampled stream.
FrameSequence decode_frames(const std::filesystem::path& video_path, double sample_fps,
                            const std::string& dumper_template = KeyframeParams{}.dumper_template);

DifferenceSignal frame_difference_signal(const FrameSequence& seq);

// Fills `smoothed`. Reflection padding keeps the length unchanged.
DifferenceSignal smooth_signal(DifferenceSignal sig, std::size_t window_len);

// Normalized Hanning coefficients w[n] = 0.5(1 - cos(2*pi*n/(N-1))) / sum.
std::vector<double> hanning_window(std::size_t window_len);

// Interior strict maxima of `smoothed`; a raised plateau reports its leftmost
// index.
std::vector<Peak> detect_local_maxima(const DifferenceSignal& sig);
std::vector<Peak> detect_local_maxima(std::span<const double> values);

KeyframeSet select_keyframes(const FrameSequence& seq, const std::vector<Peak>& peaks, std::size_t k);

// Positions picked by the uniform fallback: floor((j+1) * n / (m+1)) into the
// `available` list for j in [0, m).
std::vector<std::size_t> uniform_fill(std::span<const std::size_t> available, std::size_t m);

// Full pipeline on an already decoded sequence.
KeyframeSet extract_keyframes(const std::string& video_id, const FrameSequence& seq, const KeyframeParams& params);

// Writes keyframe_NN.png files plus keyframes.json into `out_dir` and fills
// `set.images` with absolute paths.
void write_keyframes(KeyframeSet& set, const FrameSequence& seq, const std::filesystem::path& out_dir);
KeyframeSet read_keyframes(const std::filesystem::path& out_dir);

inline constexpr const char* kKeyframeSidecar = "keyframes.json";

nlohmann::json sidecar_json(const KeyframeSet& set);

}  // namespace a11y
