#pragma once

#include <optional>
#include <vector>

#include "pdfmine/image.hpp"
#include "pdfmine/pdf/content.hpp"

namespace pdfmine::pdf {

/// Image XObject decoded to RGB. Stencil masks carry a coverage plane instead.
struct DecodedImage {
  RgbImage rgb;
  /// For ImageMask images: 1 where the fill colour is painted.
  std::vector<std::uint8_t> stencil;
  bool is_stencil = false;
};

/// Decodes an image XObject; returns nullopt for unsupported codecs or damaged data.
std::optional<DecodedImage> decode_image(const Document& doc, const ImageRef& image);

/// Renders one page. Glyphs are painted as solid boxes because no font
/// rasterizer is involved; clipping paths and soft masks are ignored.
/// Throws Error(RenderFailure) when the page content cannot be interpreted.
RgbImage render_page(const Document& doc, int page_index, int dpi);

}  // namespace pdfmine::pdf
