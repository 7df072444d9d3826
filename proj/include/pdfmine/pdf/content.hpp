#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pdfmine/pdf/document.hpp"
#include "pdfmine/pdf/font.hpp"

namespace pdfmine::pdf {

struct Point {
  double x = 0, y = 0;
};

/// Affine transform in PDF row-vector convention: p' = p * M.
struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  /// Composition "this, then rhs".
  Matrix then(const Matrix& rhs) const {
    return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d, c * rhs.a + d * rhs.c,
            c * rhs.b + d * rhs.d, e * rhs.a + f * rhs.c + rhs.e, e * rhs.b + f * rhs.d + rhs.f};
  }
  Point apply(double x, double y) const { return {a * x + c * y + e, b * x + d * y + f}; }
  double determinant() const { return a * d - b * c; }
  Matrix inverse() const;
  static Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
  static Matrix scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
};

struct RgbColor {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct GraphicsState {
  Matrix ctm;
  RgbColor fill;
  RgbColor stroke;
  double line_width = 1.0;
  // Text state
  std::shared_ptr<const Font> font;
  double font_size = 0.0;
  double char_spacing = 0.0;
  double word_spacing = 0.0;
  double horizontal_scale = 1.0;
  double leading = 0.0;
  double rise = 0.0;
  int render_mode = 0;
};

/// An image XObject or inline image; for inline images the dictionary keys are expanded.
struct ImageRef {
  std::shared_ptr<const Stream> stream;
  bool inline_image = false;
};

struct Glyph {
  std::u32string text;
  /// Glyph space (1 unit = font size) to device space.
  Matrix trm;
  /// Advance width in glyph-space units.
  double advance = 0.0;
};

using Subpath = std::vector<Point>;

/// Receives painting operations in device space.
class ContentSink {
 public:
  virtual ~ContentSink() = default;
  virtual void fill_path(const std::vector<Subpath>& /*subpaths*/, bool /*even_odd*/, const GraphicsState& /*gs*/) {}
  virtual void stroke_path(const std::vector<Subpath>& /*subpaths*/, const GraphicsState& /*gs*/) {}
  /// gs.ctm maps the unit square onto the image placement.
  virtual void draw_image(const ImageRef& /*image*/, const GraphicsState& /*gs*/) {}
  virtual void draw_glyph(const Glyph& /*glyph*/, const GraphicsState& /*gs*/) {}
};

/// Maps page user space to device pixels at `dpi`, honouring the page rotation.
/// Writes the device size in pixels to `width_px`/`height_px`.
Matrix page_to_device(const Page& page, int dpi, int& width_px, int& height_px);

/// Executes the page's content streams. Throws Error(RenderFailure) when a content
/// stream cannot be decoded or tokenized.
void interpret_page(const Document& doc, const Page& page, const Matrix& base, ContentSink& sink);

}  // namespace pdfmine::pdf
