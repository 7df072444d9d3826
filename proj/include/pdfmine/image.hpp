#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pdfmine {

/// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 255);

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  /// Copies the half-open rectangle [x0,x1) x [y0,y1); the rectangle must lie inside the image.
  RgbImage crop(int x0, int y0, int x1, int y1) const;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Lossless PNG; `level` is the zlib compression level.
std::string encode_png(const RgbImage& image, int level = 6);
RgbImage decode_png(std::string_view bytes);

std::string encode_jpeg(const RgbImage& image, int quality = 90);
/// Decodes baseline/progressive JPEG to RGB (grayscale and CMYK are converted).
RgbImage decode_jpeg(std::string_view bytes);

void write_png_file(const std::filesystem::path& path, const RgbImage& image, int level = 6);
RgbImage read_png_file(const std::filesystem::path& path);

}  // namespace pdfmine
