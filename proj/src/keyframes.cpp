#include "a11y/keyframes.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "a11y/error.hpp"
#include "a11y/io.hpp"
#include "a11y/process.hpp"

namespace a11y {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Colorimetry

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ
constexpr double kRgbToXyz[3][3] = {
    {0.4124, 0.3576, 0.1805},
    {0.2126, 0.7152, 0.0722},
    {0.0193, 0.1192, 0.9505},
};

// D65 reference white (2 degree observer)
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

const std::array<double, 256>& linear_lut() {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return lut;
}

struct WhiteChroma {
  double u;
  double v;
};

constexpr WhiteChroma white_chroma() {
  const double d = kWhiteX + 15.0 * kWhiteY + 3.0 * kWhiteZ;
  return {4.0 * kWhiteX / d, 9.0 * kWhiteY / d};
}

}  // namespace

Luv rgb_to_luv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto& lin = linear_lut();
  const double rl = lin[r], gl = lin[g], bl = lin[b];
  const double x = kRgbToXyz[0][0] * rl + kRgbToXyz[0][1] * gl + kRgbToXyz[0][2] * bl;
  const double y = kRgbToXyz[1][0] * rl + kRgbToXyz[1][1] * gl + kRgbToXyz[1][2] * bl;
  const double z = kRgbToXyz[2][0] * rl + kRgbToXyz[2][1] * gl + kRgbToXyz[2][2] * bl;

  const double yr = y / kWhiteY;
  Luv out;
  out.L = yr > kEpsilon ? 116.0 * std::cbrt(yr) - 16.0 : kKappa * yr;

  const double d = x + 15.0 * y + 3.0 * z;
  if (d <= 0.0) return out;  // black: chroma undefined, pinned to zero
  constexpr auto white = white_chroma();
  out.u = 13.0 * out.L * (4.0 * x / d - white.u);
  out.v = 13.0 * out.L * (9.0 * y / d - white.v);
  return out;
}

// ---------------------------------------------------------------------------

void FrameSequence::validate() const {
  if (frames.size() != frame_indices.size()) {
    throw Error(Errc::InvalidArgument, "frame/index count mismatch");
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].width != frames[0].width || frames[i].height != frames[0].height) {
      throw Error(Errc::InvalidArgument, "frame " + std::to_string(i) + " has different dimensions");
    }
    if (frame_indices[i] <= frame_indices[i - 1]) {
      throw Error(Errc::InvalidArgument, "frame indices must be strictly increasing");
    }
  }
}

void KeyframeParams::validate() const {
  if (!(sample_fps > 0.0) || !std::isfinite(sample_fps)) {
    throw Error(Errc::InvalidArgument, "sample_fps must be > 0");
  }
  if (window_len == 0) throw Error(Errc::InvalidArgument, "window_len must be >= 1");
  if (window_len % 2 == 0) throw Error(Errc::EvenWindow, std::to_string(window_len));
  if (k < 1 || k > kMaxKeyframes) {
    throw Error(Errc::InvalidArgument, "k must be in [1, " + std::to_string(kMaxKeyframes) + "]");
  }
}

// ---------------------------------------------------------------------------
// Decoding through the external dumper

namespace {

class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl = (fs::temp_directory_path() / "a11y-frames-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw Error(Errc::IoError, "mkdtemp failed");
    path_ = tmpl;
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string format_fps(double fps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", fps);
  return buf;
}

}  // namespace

FrameSequence decode_frames(const fs::path& video_path, double sample_fps, const std::string& dumper_template) {
  if (!(sample_fps > 0.0)) throw Error(Errc::InvalidArgument, "sample_fps must be > 0");
  std::error_code ec;
  if (!fs::is_regular_file(video_path, ec)) throw Error(Errc::MissingFile, video_path.string());

  ScratchDir scratch;
  auto frames_dir = scratch.path() / "frames";
  fs::create_directories(frames_dir);
  auto argv = expand_command(dumper_template, {{"input", video_path.string()},
                                               {"fps", format_fps(sample_fps)},
                                               {"outdir", frames_dir.string()}});
  if (argv.empty()) throw Error(Errc::DumperNotFound, "empty dumper template");
  if (!find_program(argv[0])) throw Error(Errc::DumperNotFound, argv[0]);

  auto stderr_path = scratch.path() / "stderr.txt";
  int status = 0;
  try {
    SpawnOptions opts;
    opts.stderr_path = stderr_path;
    auto child = ChildProcess::spawn(argv, opts);
    status = child.wait();
  } catch (const Error& e) {
    throw Error(Errc::DumperNotFound, e.what());
  }
  if (status != 0) {
    std::string err;
    try {
      err = read_file(stderr_path);
    } catch (const Error&) {
    }
    throw Error(Errc::DumperFailed, argv[0] + " exited with " + std::to_string(status) + ": " + err);
  }

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(frames_dir)) {
    auto name = de.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && de.path().extension() == ".png") files.push_back(de.path());
  }
  if (files.empty()) throw Error(Errc::EmptyVideo, video_path.string());
  std::sort(files.begin(), files.end());

  FrameSequence seq;
  seq.source_fps = sample_fps;
  seq.frames.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    seq.frames.push_back(read_image(files[i]));
    seq.frame_indices.push_back(i);
  }
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// Signal

namespace {

std::vector<Luv> to_luv(const RgbImage& image) {
  std::vector<Luv> out(image.pixel_count());
  const auto* p = image.pixels.data();
  for (std::size_t i = 0; i < out.size(); ++i, p += 3) out[i] = rgb_to_luv(p[0], p[1], p[2]);
  return out;
}

}  // namespace

DifferenceSignal frame_difference_signal(const FrameSequence& seq) {
  if (seq.size() < 2) throw Error(Errc::TooFewFrames, std::to_string(seq.size()) + " frame(s)");
  seq.validate();
  const std::size_t pixels = seq.frames[0].pixel_count();
  if (pixels == 0) throw Error(Errc::EmptyVideo, "zero-sized frames");

  DifferenceSignal sig;
  sig.values.reserve(seq.size() - 1);
  auto prev = to_luv(seq.frames[0]);
  for (std::size_t f = 1; f < seq.size(); ++f) {
    auto cur = to_luv(seq.frames[f]);
    double sum = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) {
      sum += std::abs(cur[i].L - prev[i].L) + std::abs(cur[i].u - prev[i].u) + std::abs(cur[i].v - prev[i].v);
    }
    sig.values.push_back(sum / static_cast<double>(pixels));
    prev = std::move(cur);
  }
  return sig;
}

std::vector<double> hanning_window(std::size_t window_len) {
  if (window_len == 0) throw Error(Errc::InvalidArgument, "window_len must be >= 1");
  if (window_len == 1) return {1.0};
  std::vector<double> w(window_len);
  const double denom = static_cast<double>(window_len - 1);
  double sum = 0.0;
  for (std::size_t n = 0; n < window_len; ++n) {
    w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom));
    sum += w[n];
  }
  for (auto& c : w) c /= sum;
  return w;
}

DifferenceSignal smooth_signal(DifferenceSignal sig, std::size_t window_len) {
  if (window_len == 0) throw Error(Errc::InvalidArgument, "window_len must be >= 1");
  if (window_len % 2 == 0) throw Error(Errc::EvenWindow, std::to_string(window_len));
  const std::size_t n = sig.values.size();
  if (window_len > n) {
    throw Error(Errc::WindowTooLarge, std::to_string(window_len) + " > signal length " + std::to_string(n));
  }
  const auto w = hanning_window(window_len);
  const auto half = static_cast<std::ptrdiff_t>(window_len / 2);
  const auto len = static_cast<std::ptrdiff_t>(n);

  // Mirror about the edge samples without repeating them: x[-1] = x[1].
  auto at = [&](std::ptrdiff_t i) {
    while (i < 0 || i >= len) {
      if (i < 0) i = -i;
      if (i >= len) i = 2 * (len - 1) - i;
    }
    return sig.values[static_cast<std::size_t>(i)];
  };

  std::vector<double> out(n);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) acc += w[static_cast<std::size_t>(j + half)] * at(i + j);
    out[static_cast<std::size_t>(i)] = std::max(acc, 0.0);
  }
  sig.smoothed = std::move(out);
  return sig;
}

std::vector<Peak> detect_local_maxima(std::span<const double> s) {
  std::vector<Peak> peaks;
  const std::size_t n = s.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (s[i] > s[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && s[j + 1] == s[i]) ++j;
      if (j + 1 < n && s[j + 1] < s[i]) peaks.push_back({i, s[i]});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return peaks;
}

std::vector<Peak> detect_local_maxima(const DifferenceSignal& sig) {
  if (!sig.smoothed) throw Error(Errc::InvalidArgument, "signal has not been smoothed");
  return detect_local_maxima(std::span<const double>(*sig.smoothed));
}

std::vector<std::size_t> uniform_fill(std::span<const std::size_t> available, std::size_t m) {
  m = std::min(m, available.size());
  std::vector<std::size_t> out;
  out.reserve(m);
  const std::size_t n = available.size();
  for (std::size_t j = 0; j < m; ++j) out.push_back(available[(j + 1) * n / (m + 1)]);
  return out;
}

KeyframeSet select_keyframes(const FrameSequence& seq, const std::vector<Peak>& peaks, std::size_t k) {
  if (seq.size() == 0) throw Error(Errc::EmptySequence, "no frames to select from");
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");

  struct Pick {
    std::size_t position;
    double score;
    bool fallback;
  };
  std::vector<Peak> ranked;
  for (const auto& p : peaks) {
    if (p.index + 1 < seq.size()) ranked.push_back(p);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Peak& a, const Peak& b) {
    return a.value != b.value ? a.value > b.value : a.index < b.index;
  });

  std::vector<Pick> picks;
  std::vector<bool> taken(seq.size(), false);
  for (const auto& p : ranked) {
    if (picks.size() == k) break;
    const std::size_t pos = p.index + 1;
    if (taken[pos]) continue;
    taken[pos] = true;
    picks.push_back({pos, p.value, false});
  }

  if (picks.size() < k) {
    std::vector<std::size_t> available;
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      if (!taken[pos]) available.push_back(pos);
    }
    for (auto pos : uniform_fill(available, k - picks.size())) picks.push_back({pos, 0.0, true});
  }

  std::sort(picks.begin(), picks.end(), [](const Pick& a, const Pick& b) { return a.position < b.position; });
  KeyframeSet set;
  for (const auto& p : picks) set.selected.push_back({seq.frame_indices[p.position], p.score, p.fallback});
  return set;
}

KeyframeSet extract_keyframes(const std::string& video_id, const FrameSequence& seq, const KeyframeParams& params) {
  params.validate();
  if (seq.size() == 0) throw Error(Errc::EmptySequence, video_id);

  std::vector<Peak> peaks;
  if (seq.size() >= 2) {
    auto sig = frame_difference_signal(seq);
    // Short clips cannot host the configured window; shrink to the largest odd
    // length that fits.
    std::size_t window = std::min(params.window_len, sig.values.size());
    if (window % 2 == 0) --window;
    sig = smooth_signal(std::move(sig), window);
    peaks = detect_local_maxima(sig);
  }
  auto set = select_keyframes(seq, peaks, params.k);
  set.video_id = video_id;
  return set;
}

// ---------------------------------------------------------------------------
// Persistence

json sidecar_json(const KeyframeSet& set) {
  json frames = json::array();
  for (std::size_t i = 0; i < set.selected.size(); ++i) {
    const auto& s = set.selected[i];
    json row{{"frame_index", s.frame_index}, {"score", s.score}, {"fallback", s.fallback}};
    if (i < set.images.size()) row["image"] = set.images[i].filename().string();
    frames.push_back(std::move(row));
  }
  return json{{"video_id", set.video_id}, {"keyframes", std::move(frames)}};
}

void write_keyframes(KeyframeSet& set, const FrameSequence& seq, const fs::path& out_dir) {
  set.images.clear();
  for (std::size_t i = 0; i < set.selected.size(); ++i) {
    auto it = std::find(seq.frame_indices.begin(), seq.frame_indices.end(), set.selected[i].frame_index);
    if (it == seq.frame_indices.end()) {
      throw Error(Errc::InvalidArgument, "selected frame " + std::to_string(set.selected[i].frame_index) +
                                             " not in sequence");
    }
    char name[32];
    std::snprintf(name, sizeof name, "keyframe_%02zu.png", i);
    auto path = fs::absolute(out_dir / name);
    write_png(path, seq.frames[static_cast<std::size_t>(it - seq.frame_indices.begin())]);
    set.images.push_back(path);
  }
  write_json_file(out_dir / kKeyframeSidecar, sidecar_json(set));
}

KeyframeSet read_keyframes(const fs::path& out_dir) {
  auto doc = read_json_file(out_dir / kKeyframeSidecar);
  KeyframeSet set;
  try {
    set.video_id = doc.at("video_id").get<std::string>();
    for (const auto& row : doc.at("keyframes")) {
      set.selected.push_back({row.at("frame_index").get<std::size_t>(), row.at("score").get<double>(),
                              row.value("fallback", false)});
      if (row.contains("image")) set.images.push_back(fs::absolute(out_dir / row.at("image").get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, (out_dir / kKeyframeSidecar).string() + ": " + e.what());
  }
  return set;
}

}  // namespace a11y
