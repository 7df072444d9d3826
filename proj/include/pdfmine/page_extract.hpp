#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pdfmine/layout_types.hpp"
#include "pdfmine/pdf/document.hpp"
#include "pdfmine/providers.hpp"

namespace pdfmine::extract {

inline constexpr int kDefaultDpi = 150;
inline constexpr int kMinImageSide = 50;
inline constexpr int kDefaultMinChars = 3;
inline constexpr double kDefaultMinScriptRatio = 0.5;
inline constexpr double kMergeIou = 0.9;

/// Renders one page losslessly. Throws InvalidDpi for dpi <= 0 and RenderFailure
/// for unreadable documents, bad page indices or corrupt content streams.
PageImage rasterize(std::string_view doc, int page_index, int dpi);
PageImage rasterize(const pdf::Document& doc, std::string doc_id, int page_index, int dpi);

/// Clips to the page, drops empty boxes, merges same-kind boxes overlapping by
/// more than 90% IoU and assigns reading order by (y0, x0). region_id equals the
/// reading order index. Throws ProviderMalformedReply for inverted or non-finite boxes.
std::vector<Region> finalize_regions(const std::vector<RawRegion>& raw, int width_px, int height_px);

std::vector<Region> analyze_layout(const PageImage& page, LayoutProvider& provider);

/// One block per region that yields non-empty text, in reading order.
std::vector<TextBlock> recognize_text(const PageImage& page, std::span<const Region> regions,
                                      TextRecognizer& recognizer);

struct CropResult {
  std::vector<ExtractedImage> images;
  int size_filtered = 0;
};

/// Crops image regions; any crop narrower or shorter than 50 px is dropped and counted.
CropResult crop_images(const PageImage& page, std::span<const Region> regions);

/// Share of non-whitespace characters that are kana, kanji, ASCII alphanumerics or common punctuation.
double target_script_ratio(std::string_view text);

/// Joins hard line breaks (no separator next to CJK text, one space otherwise).
std::string join_lines(std::string_view text);

std::vector<TextBlock> clean_text(std::span<const TextBlock> blocks, int min_chars = kDefaultMinChars,
                                  double min_script_ratio = kDefaultMinScriptRatio);

/// Deterministic fallback analysis read from the PDF itself: image placements and
/// text-layer line boxes, with the text of every line.
struct BuiltinPageAnalysis {
  int width_px = 0;
  int height_px = 0;
  std::vector<RawRegion> regions;
  struct Line {
    BBox box;
    std::string text;
    /// Font size in device pixels.
    double height_px = 0;
  };
  std::vector<Line> lines;
};

BuiltinPageAnalysis analyze_builtin(const pdf::Document& doc, int page_index, int dpi);

/// Throws ParseFailure when the document cannot be read.
std::vector<Region> builtin_layout(std::string_view doc, int page_index, int dpi);

class BuiltinLayoutProvider final : public LayoutProvider {
 public:
  explicit BuiltinLayoutProvider(BuiltinPageAnalysis analysis) : analysis_(std::move(analysis)) {}
  std::string id() const override { return "builtin-layout/1"; }
  std::vector<RawRegion> analyze(const PageImage& page) override;

 private:
  BuiltinPageAnalysis analysis_;
};

/// Reads text from the PDF text layer: every line whose centre falls inside a region.
class BuiltinTextRecognizer final : public TextRecognizer {
 public:
  explicit BuiltinTextRecognizer(BuiltinPageAnalysis analysis) : analysis_(std::move(analysis)) {}
  std::string id() const override { return "builtin-textlayer/1"; }
  std::vector<Recognition> recognize(const PageImage& page, std::span<const Region> regions) override;

 private:
  BuiltinPageAnalysis analysis_;
};

/// Crop asset file name: {doc_id}_p{page}_r{region}.jpg
std::string crop_asset_name(std::string_view doc_id, int page_index, int region_id);

}  // namespace pdfmine::extract
