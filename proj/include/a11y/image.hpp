#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace a11y {

// Packed 8-bit RGB, row-major, no padding.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool empty() const { return pixels.empty(); }

  void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b);

  bool operator==(const RgbImage&) const = default;
};

enum class ImageFormat { Png, Jpeg, Unknown };

ImageFormat sniff_image_format(std::span<const std::uint8_t> bytes);

RgbImage read_image(const std::filesystem::path& path);  // PNG or JPEG
RgbImage decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

// Area-averaging resize.
RgbImage resize_image(const RgbImage& image, int width, int height);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace a11y
