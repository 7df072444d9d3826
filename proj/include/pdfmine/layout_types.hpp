#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pdfmine/image.hpp"

namespace pdfmine::extract {

/// Integer pixel box, half-open: [x0,x1) x [y0,y1).
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

struct PageImage {
  std::string doc_id;
  int page_index = 0;
  int width_px = 0;
  int height_px = 0;
  int dpi = 0;
  RgbImage pixels;
  /// Lossless copy on disk, when one has been written.
  std::filesystem::path asset;
};

enum class RegionKind { ImageRegion, TextRegion };
std::string_view to_string(RegionKind kind);

/// Provider output before clipping and ordering; coordinates are page pixels.
struct RawRegion {
  RegionKind kind = RegionKind::TextRegion;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double confidence = 1.0;
};

struct Region {
  int region_id = 0;
  RegionKind kind = RegionKind::TextRegion;
  BBox bbox;
  double confidence = 1.0;
  int reading_order_index = 0;
};

struct Recognition {
  std::string text;
  double confidence = 1.0;
};

struct TextBlock {
  int region_id = 0;
  std::string content;
  double recognizer_confidence = 1.0;
  double target_script_ratio = 0.0;
};

struct ExtractedImage {
  int region_id = 0;
  RgbImage crop;
  std::filesystem::path asset;
  int width_px = 0;
  int height_px = 0;
};

nlohmann::ordered_json to_json(const Region& region);
Region region_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TextBlock& block);
TextBlock text_block_from_json(const nlohmann::json& j);

}  // namespace pdfmine::extract
