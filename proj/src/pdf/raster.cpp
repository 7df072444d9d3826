#include "pdfmine/pdf/raster.hpp"

#include <algorithm>
#include <cmath>

#include "pdfmine/error.hpp"

namespace pdfmine::pdf {

namespace {

constexpr std::int64_t kMaxImagePixels = 64LL << 20;

struct ColorSpace {
  enum class Kind { Gray, Rgb, Cmyk, Indexed, Unknown } kind = Kind::Gray;
  int components = 1;
  // Indexed
  std::shared_ptr<ColorSpace> base;
  std::string lookup;
  int hival = 0;
};

ColorSpace parse_color_space(const Document& doc, const Object* cs_obj, int depth = 0) {
  ColorSpace cs;
  if (!cs_obj || depth > 4) return cs;
  const Object& cs_res = doc.resolve(*cs_obj);
  if (const std::string* n = cs_res.name()) {
    if (*n == "DeviceRGB" || *n == "CalRGB" || *n == "RGB") {
      cs.kind = ColorSpace::Kind::Rgb;
      cs.components = 3;
    } else if (*n == "DeviceCMYK" || *n == "CMYK") {
      cs.kind = ColorSpace::Kind::Cmyk;
      cs.components = 4;
    } else if (*n == "DeviceGray" || *n == "CalGray" || *n == "G") {
      cs.kind = ColorSpace::Kind::Gray;
    } else {
      cs.kind = ColorSpace::Kind::Unknown;
    }
    return cs;
  }
  const Array* arr = cs_res.array();
  if (!arr || arr->empty()) return cs;
  const std::string* family = doc.resolve(arr->front()).name();
  if (!family) return cs;
  if (*family == "ICCBased" && arr->size() >= 2) {
    const Object& icc = doc.resolve((*arr)[1]);
    int n = 3;
    if (const Dict* d = icc.dict()) {
      if (const Object* nv = doc.lookup(*d, "N")) n = static_cast<int>(nv->integer().value_or(3));
    }
    cs.components = n;
    cs.kind = n == 1 ? ColorSpace::Kind::Gray : n == 4 ? ColorSpace::Kind::Cmyk : ColorSpace::Kind::Rgb;
    if (n != 1 && n != 3 && n != 4) cs.kind = ColorSpace::Kind::Unknown;
  } else if ((*family == "Indexed" || *family == "I") && arr->size() >= 4) {
    cs.kind = ColorSpace::Kind::Indexed;
    cs.components = 1;
    cs.base = std::make_shared<ColorSpace>(parse_color_space(doc, &(*arr)[1], depth + 1));
    cs.hival = static_cast<int>(doc.resolve((*arr)[2]).integer().value_or(0));
    const Object& lut = doc.resolve((*arr)[3]);
    if (const std::string* s = lut.string()) {
      cs.lookup = *s;
    } else if (const Stream* st = lut.stream()) {
      try {
        cs.lookup = doc.decode_all(*st);
      } catch (const Error&) {
      }
    }
  } else if (*family == "CalRGB" || *family == "Lab") {
    cs.kind = ColorSpace::Kind::Rgb;
    cs.components = 3;
  } else if (*family == "CalGray") {
    cs.kind = ColorSpace::Kind::Gray;
  } else if (*family == "Separation") {
    cs.kind = ColorSpace::Kind::Unknown;
    cs.components = 1;
  } else if (*family == "DeviceN" && arr->size() >= 2) {
    cs.kind = ColorSpace::Kind::Unknown;
    const Array* names = doc.resolve((*arr)[1]).array();
    cs.components = names ? static_cast<int>(names->size()) : 1;
  }
  return cs;
}

void to_rgb(const ColorSpace& cs, const double* comps, std::uint8_t* out) {
  auto byte = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
  switch (cs.kind) {
    case ColorSpace::Kind::Gray:
      out[0] = out[1] = out[2] = byte(comps[0]);
      break;
    case ColorSpace::Kind::Rgb:
      out[0] = byte(comps[0]);
      out[1] = byte(comps[1]);
      out[2] = byte(comps[2]);
      break;
    case ColorSpace::Kind::Cmyk:
      out[0] = byte((1 - comps[0]) * (1 - comps[3]));
      out[1] = byte((1 - comps[1]) * (1 - comps[3]));
      out[2] = byte((1 - comps[2]) * (1 - comps[3]));
      break;
    case ColorSpace::Kind::Indexed: {
      const int idx = std::clamp(static_cast<int>(std::lround(comps[0])), 0, std::max(0, cs.hival));
      const int n = cs.base ? cs.base->components : 1;
      double base_comps[4] = {0, 0, 0, 0};
      for (int k = 0; k < n && k < 4; ++k) {
        const std::size_t at = static_cast<std::size_t>(idx * n + k);
        base_comps[k] = at < cs.lookup.size() ? static_cast<std::uint8_t>(cs.lookup[at]) / 255.0 : 0.0;
      }
      if (cs.base) {
        to_rgb(*cs.base, base_comps, out);
      } else {
        out[0] = out[1] = out[2] = byte(base_comps[0]);
      }
      break;
    }
    case ColorSpace::Kind::Unknown:
      // Tint-based spaces: darker for higher tint.
      out[0] = out[1] = out[2] = byte(1.0 - comps[0]);
      break;
  }
}

}  // namespace

std::optional<DecodedImage> decode_image(const Document& doc, const ImageRef& image) {
  if (!image.stream) return std::nullopt;
  const Dict& dict = image.stream->dict;
  const auto width = doc.lookup(dict, "Width") ? doc.lookup(dict, "Width")->integer() : std::nullopt;
  const auto height = doc.lookup(dict, "Height") ? doc.lookup(dict, "Height")->integer() : std::nullopt;
  if (!width || !height || *width <= 0 || *height <= 0 || *width * *height > kMaxImagePixels) return std::nullopt;
  const int w = static_cast<int>(*width);
  const int h = static_cast<int>(*height);

  DecodeResult decoded;
  try {
    decoded = doc.decode(*image.stream);
  } catch (const Error&) {
    return std::nullopt;
  }

  DecodedImage out;
  const Object* mask = doc.lookup(dict, "ImageMask");
  const bool is_mask = mask && mask->boolean().value_or(false);

  if (decoded.pending_codec == "DCTDecode") {
    try {
      out.rgb = decode_jpeg(decoded.data);
    } catch (const Error&) {
      return std::nullopt;
    }
    return out;
  }
  if (!decoded.pending_codec.empty()) return std::nullopt;

  const int bpc = is_mask ? 1 : static_cast<int>(doc.lookup(dict, "BitsPerComponent")
                                                       ? doc.lookup(dict, "BitsPerComponent")->integer().value_or(8)
                                                       : 8);
  if (bpc != 1 && bpc != 2 && bpc != 4 && bpc != 8 && bpc != 16) return std::nullopt;
  const ColorSpace cs = is_mask ? ColorSpace{} : parse_color_space(doc, doc.lookup(dict, "ColorSpace"));
  const int ncomp = std::max(1, cs.components);
  const std::size_t row_bytes = (static_cast<std::size_t>(w) * ncomp * bpc + 7) / 8;
  const std::string& data = decoded.data;

  // Decode arrays: only the inverted [1 0] form is honoured.
  bool invert = false;
  if (const Object* dec = doc.lookup(dict, "Decode"); dec && dec->array() && dec->array()->size() >= 2) {
    invert = doc.resolve((*dec->array())[0]).number().value_or(0) > doc.resolve((*dec->array())[1]).number().value_or(1);
  }
  const double max_val = static_cast<double>((1u << std::min(bpc, 16)) - 1);
  auto sample = [&](int x, int y, int comp) -> double {
    const std::size_t idx = static_cast<std::size_t>(x) * ncomp + comp;
    const std::size_t row = static_cast<std::size_t>(y) * row_bytes;
    unsigned v = 0;
    if (bpc == 8) {
      const std::size_t at = row + idx;
      v = at < data.size() ? static_cast<std::uint8_t>(data[at]) : 0;
    } else if (bpc == 16) {
      const std::size_t at = row + idx * 2;
      v = at + 1 < data.size() ? (static_cast<std::uint8_t>(data[at]) << 8) | static_cast<std::uint8_t>(data[at + 1]) : 0;
    } else {
      const std::size_t bit = idx * bpc;
      const std::size_t at = row + bit / 8;
      const unsigned byte = at < data.size() ? static_cast<std::uint8_t>(data[at]) : 0;
      const unsigned shift = 8 - bpc - static_cast<unsigned>(bit % 8);
      v = (byte >> shift) & ((1u << bpc) - 1);
    }
    if (cs.kind == ColorSpace::Kind::Indexed) return v;
    const double norm = v / max_val;
    return invert ? 1.0 - norm : norm;
  };

  out.rgb = RgbImage(w, h);
  if (is_mask) {
    out.is_stencil = true;
    out.stencil.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Sample value 0 paints unless the Decode array is inverted.
        out.stencil[static_cast<std::size_t>(y) * w + x] = sample(x, y, 0) < 0.5 ? 1 : 0;
      }
    }
    return out;
  }
  double comps[4];
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < ncomp && k < 4; ++k) comps[k] = sample(x, y, k);
      to_rgb(cs, comps, out.rgb.at(x, y));
    }
  }
  return out;
}

namespace {

struct Edge {
  double x0, y0, x1, y1;
  int dir;
};

class Rasterizer : public ContentSink {
 public:
  Rasterizer(const Document& doc, RgbImage& canvas) : doc_(doc), canvas_(canvas) {}

  void fill_path(const std::vector<Subpath>& subpaths, bool even_odd, const GraphicsState& gs) override {
    fill_polygons(subpaths, even_odd, gs.fill);
  }

  void stroke_path(const std::vector<Subpath>& subpaths, const GraphicsState& gs) override {
    const double scale = std::sqrt(std::abs(gs.ctm.determinant()));
    const double half = std::max(1.0, gs.line_width * scale) / 2.0;
    std::vector<Subpath> quads;
    for (const auto& sp : subpaths) {
      for (std::size_t i = 1; i < sp.size(); ++i) {
        const Point a = sp[i - 1], b = sp[i];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len = std::hypot(dx, dy);
        if (len < 1e-9) continue;
        const double nx = -dy / len * half, ny = dx / len * half;
        quads.push_back({{a.x + nx, a.y + ny}, {b.x + nx, b.y + ny}, {b.x - nx, b.y - ny}, {a.x - nx, a.y - ny},
                         {a.x + nx, a.y + ny}});
      }
    }
    fill_polygons(quads, false, gs.stroke);
  }

  void draw_glyph(const Glyph& glyph, const GraphicsState& gs) override {
    if (glyph.text == U" " || glyph.advance <= 0) return;
    const Matrix& m = glyph.trm;
    const double x0 = glyph.advance * 0.08, x1 = glyph.advance * 0.92;
    const double y0 = 0.0, y1 = 0.7;
    fill_polygons({{m.apply(x0, y0), m.apply(x1, y0), m.apply(x1, y1), m.apply(x0, y1), m.apply(x0, y0)}}, false,
                  gs.fill);
  }

  void draw_image(const ImageRef& image, const GraphicsState& gs) override {
    const Matrix& m = gs.ctm;
    const Point corners[4] = {m.apply(0, 0), m.apply(1, 0), m.apply(1, 1), m.apply(0, 1)};
    double minx = corners[0].x, maxx = minx, miny = corners[0].y, maxy = miny;
    for (const auto& p : corners) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    const int px0 = std::max(0, static_cast<int>(std::floor(minx)));
    const int px1 = std::min(canvas_.width, static_cast<int>(std::ceil(maxx)));
    const int py0 = std::max(0, static_cast<int>(std::floor(miny)));
    const int py1 = std::min(canvas_.height, static_cast<int>(std::ceil(maxy)));
    if (px0 >= px1 || py0 >= py1) return;
    const Matrix inv = m.inverse();
    const auto decoded = decode_image(doc_, image);
    static constexpr std::uint8_t kPlaceholder[3] = {200, 200, 200};
    for (int y = py0; y < py1; ++y) {
      for (int x = px0; x < px1; ++x) {
        const Point uv = inv.apply(x + 0.5, y + 0.5);
        if (uv.x < 0 || uv.x >= 1 || uv.y < 0 || uv.y >= 1) continue;
        std::uint8_t* dst = canvas_.at(x, y);
        if (!decoded) {
          std::copy(kPlaceholder, kPlaceholder + 3, dst);
          continue;
        }
        const int iw = decoded->rgb.width, ih = decoded->rgb.height;
        const int sx = std::min(iw - 1, static_cast<int>(uv.x * iw));
        const int sy = std::min(ih - 1, static_cast<int>((1.0 - uv.y) * ih));
        if (decoded->is_stencil) {
          if (decoded->stencil[static_cast<std::size_t>(sy) * iw + sx]) {
            dst[0] = gs.fill.r;
            dst[1] = gs.fill.g;
            dst[2] = gs.fill.b;
          }
        } else {
          const std::uint8_t* src = decoded->rgb.at(sx, sy);
          std::copy(src, src + 3, dst);
        }
      }
    }
  }

 private:
  void fill_polygons(const std::vector<Subpath>& subpaths, bool even_odd, RgbColor color) {
    std::vector<Edge> edges;
    double miny = 1e300, maxy = -1e300;
    for (const auto& sp : subpaths) {
      if (sp.size() < 2) continue;
      for (std::size_t i = 0; i < sp.size(); ++i) {
        const Point a = sp[i];
        const Point b = sp[(i + 1) % sp.size()];
        if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) return;
        if (a.y == b.y) continue;
        edges.push_back(a.y < b.y ? Edge{a.x, a.y, b.x, b.y, 1} : Edge{b.x, b.y, a.x, a.y, -1});
        miny = std::min({miny, a.y, b.y});
        maxy = std::max({maxy, a.y, b.y});
      }
    }
    if (edges.empty()) return;
    const int y_start = std::max(0, static_cast<int>(std::floor(miny)));
    const int y_end = std::min(canvas_.height, static_cast<int>(std::ceil(maxy)));
    std::vector<std::pair<double, int>> xs;
    for (int y = y_start; y < y_end; ++y) {
      const double cy = y + 0.5;
      xs.clear();
      for (const auto& e : edges) {
        if (cy < e.y0 || cy >= e.y1) continue;
        const double t = (cy - e.y0) / (e.y1 - e.y0);
        xs.emplace_back(e.x0 + t * (e.x1 - e.x0), e.dir);
      }
      std::sort(xs.begin(), xs.end());
      int winding = 0;
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        winding += even_odd ? 1 : xs[i].second;
        const bool inside = even_odd ? (winding % 2 != 0) : winding != 0;
        if (!inside) continue;
        const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i].first - 0.5)));
        const int x1 = std::min(canvas_.width, static_cast<int>(std::ceil(xs[i + 1].first - 0.5)));
        for (int x = x0; x < x1; ++x) {
          std::uint8_t* px = canvas_.at(x, y);
          px[0] = color.r;
          px[1] = color.g;
          px[2] = color.b;
        }
      }
    }
  }

  const Document& doc_;
  RgbImage& canvas_;
};

}  // namespace

RgbImage render_page(const Document& doc, int page_index, int dpi) {
  const Page& page = doc.page(page_index);
  int w = 0, h = 0;
  const Matrix base = page_to_device(page, dpi, w, h);
  if (static_cast<std::int64_t>(w) * h > kMaxImagePixels) throw Error(ErrorCode::RenderFailure, "page too large");
  RgbImage canvas(w, h, 255);
  Rasterizer rasterizer(doc, canvas);
  interpret_page(doc, page, base, rasterizer);
  return canvas;
}

}  // namespace pdfmine::pdf
