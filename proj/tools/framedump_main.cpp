// Writes frames of a video sampled at a fixed rate as <outdir>/frame_%05d.png
// (numbered from 1), mirroring `ffmpeg -vf fps=N`. When the requested rate is
// at or above the source rate every frame is written.
//
//   a11y-framedump <input> <fps> <outdir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: a11y-framedump <input> <fps> <outdir>\n";
    return 2;
  }
  const std::string input = argv[1];
  double fps = 0.0;
  try {
    fps = std::stod(argv[2]);
  } catch (const std::exception&) {
    fps = 0.0;
  }
  if (!(fps > 0.0)) {
    std::cerr << "a11y-framedump: bad fps '" << argv[2] << "'\n";
    return 2;
  }
  const std::filesystem::path outdir = argv[3];

  cv::VideoCapture cap(input);
  if (!cap.isOpened()) {
    std::cerr << "a11y-framedump: cannot open " << input << "\n";
    return 1;
  }
  double src_fps = cap.get(cv::CAP_PROP_FPS);
  if (!(src_fps > 0.0) || !std::isfinite(src_fps)) src_fps = 25.0;

  std::filesystem::create_directories(outdir);
  cv::Mat frame;
  long index = 0;
  long written = 0;
  double next_t = 0.0;
  const double eps = 1e-9;
  while (cap.read(frame)) {
    const double t = static_cast<double>(index) / src_fps;
    ++index;
    if (fps < src_fps) {
      if (t + eps < next_t) continue;
      next_t += 1.0 / fps;
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05ld.png", ++written);
    if (!cv::imwrite((outdir / name).string(), frame)) {
      std::cerr << "a11y-framedump: cannot write " << (outdir / name).string() << "\n";
      return 1;
    }
  }
  if (written == 0) {
    std::cerr << "a11y-framedump: no frames decoded from " << input << "\n";
    return 1;
  }
  return 0;
}
