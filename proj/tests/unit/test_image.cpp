#include <gtest/gtest.h>

#include <fstream>

#include "a11y/error.hpp"
#include "a11y/image.hpp"
#include "support.hpp"

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

a11y::RgbImage gradient(int w, int h) {
  a11y::RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* p = &img.pixels[(static_cast<std::size_t>(y) * w + x) * 3];
      p[0] = static_cast<std::uint8_t>(x * 4);
      p[1] = static_cast<std::uint8_t>(y * 4);
      p[2] = static_cast<std::uint8_t>((x + y) % 256);
    }
  return img;
}

}  // namespace

TEST(Base64, Rfc4648Vectors) {
  const std::pair<const char*, const char*> cases[] = {{"", ""},         {"f", "Zg=="},     {"fo", "Zm8="},
                                                        {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
                                                        {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, enc] : cases) {
    EXPECT_EQ(a11y::base64_encode(bytes_of(plain)), enc);
    EXPECT_EQ(a11y::base64_decode(enc), bytes_of(plain));
  }
  EXPECT_THROW(a11y::base64_decode("abc"), a11y::Error);
}

TEST(Image, PngRoundTripIsLossless) {
  const auto img = gradient(64, 64);
  EXPECT_EQ(a11y::decode_image(a11y::encode_png(img)), img);
  a11ytest::TempDir tmp;
  a11y::write_png(tmp / "g.png", img);
  EXPECT_EQ(a11y::read_image(tmp / "g.png"), img);
}

TEST(Image, SniffsFormats) {
  const auto png = a11y::encode_png(gradient(4, 4));
  EXPECT_EQ(a11y::sniff_image_format(png), a11y::ImageFormat::Png);
  const std::vector<std::uint8_t> jpeg = {0xFF, 0xD8, 0xFF, 0xE0, 0, 0};
  EXPECT_EQ(a11y::sniff_image_format(jpeg), a11y::ImageFormat::Jpeg);
  EXPECT_EQ(a11y::sniff_image_format(bytes_of("hello world")), a11y::ImageFormat::Unknown);
}

TEST(Image, TextRenamedPngIsUnsupported) {
  a11ytest::TempDir tmp;
  std::ofstream(tmp / "fake.png") << "just some text";
  try {
    a11y::read_image(tmp / "fake.png");
    FAIL();
  } catch (const a11y::Error& e) {
    EXPECT_EQ(e.code(), a11y::Errc::UnsupportedFormat);
  }
}

TEST(Image, ResizeAveragesAreas) {
  a11y::RgbImage img(2, 2);
  const std::uint8_t px[] = {0, 0, 0, 100, 40, 8, 200, 80, 16, 100, 40, 8};
  std::copy(std::begin(px), std::end(px), img.pixels.begin());
  const auto one = a11y::resize_image(img, 1, 1);
  ASSERT_EQ(one.pixel_count(), 1u);
  EXPECT_EQ(one.pixels[0], 100);
  EXPECT_EQ(one.pixels[1], 40);
  EXPECT_EQ(one.pixels[2], 8);
}
