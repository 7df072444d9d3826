#include "pdfmine/page_extract.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdfmine/corpus.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/pdf/content.hpp"
#include "pdfmine/pdf/raster.hpp"
#include "pdfmine/util/utf8.hpp"

namespace pdfmine::extract {

namespace {

pdf::Document load_for_render(std::string_view bytes) {
  try {
    return pdf::Document::load(std::string(bytes));
  } catch (const Error& e) {
    throw Error(ErrorCode::RenderFailure, e.what());
  }
}

bool in_bounds(const BBox& b, int w, int h) {
  return 0 <= b.x0 && b.x0 < b.x1 && b.x1 <= w && 0 <= b.y0 && b.y0 < b.y1 && b.y1 <= h;
}

bool reading_before(const Region& a, const Region& b) {
  if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
  if (a.bbox.x0 != b.bbox.x0) return a.bbox.x0 < b.bbox.x0;
  if (a.bbox.y1 != b.bbox.y1) return a.bbox.y1 < b.bbox.y1;
  if (a.bbox.x1 != b.bbox.x1) return a.bbox.x1 < b.bbox.x1;
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.confidence > b.confidence;
}

bool is_target_char(char32_t cp) {
  if (cp < 0x80) return cp > 0x20 && cp < 0x7F;  // ASCII letters, digits and punctuation
  if (util::is_kana(cp) || util::is_kanji(cp)) return true;
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK symbols and punctuation
  if (cp >= 0xFF01 && cp <= 0xFF64) return true;  // full-width forms
  if (cp >= 0x2010 && cp <= 0x205E) return true;  // general punctuation
  return false;
}

}  // namespace

PageImage rasterize(const pdf::Document& doc, std::string doc_id, int page_index, int dpi) {
  if (dpi <= 0) throw Error(ErrorCode::InvalidDpi, "dpi must be positive, got " + std::to_string(dpi));
  if (page_index < 0 || page_index >= doc.page_count()) {
    throw Error(ErrorCode::RenderFailure, "page index " + std::to_string(page_index) + " out of range");
  }
  PageImage page;
  page.doc_id = std::move(doc_id);
  page.page_index = page_index;
  page.dpi = dpi;
  page.pixels = pdf::render_page(doc, page_index, dpi);
  page.width_px = page.pixels.width;
  page.height_px = page.pixels.height;
  if (page.width_px <= 0 || page.height_px <= 0) throw Error(ErrorCode::RenderFailure, "empty page");
  return page;
}

PageImage rasterize(std::string_view doc, int page_index, int dpi) {
  if (dpi <= 0) throw Error(ErrorCode::InvalidDpi, "dpi must be positive, got " + std::to_string(dpi));
  const pdf::Document parsed = load_for_render(doc);
  return rasterize(parsed, corpus::dedup_key(doc), page_index, dpi);
}

std::vector<Region> finalize_regions(const std::vector<RawRegion>& raw, int width_px, int height_px) {
  constexpr double kEps = 1e-6;
  std::vector<Region> regions;
  for (const auto& r : raw) {
    if (!std::isfinite(r.x0) || !std::isfinite(r.y0) || !std::isfinite(r.x1) || !std::isfinite(r.y1)) {
      throw Error(ErrorCode::ProviderMalformedReply, "non-finite region coordinates");
    }
    if (!(r.x0 < r.x1) || !(r.y0 < r.y1)) throw Error(ErrorCode::ProviderMalformedReply, "inverted region box");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw Error(ErrorCode::ProviderMalformedReply, "region confidence outside [0,1]");
    }
    auto clamp = [](double v, int hi) { return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi))); };
    Region out;
    out.kind = r.kind;
    out.confidence = r.confidence;
    out.bbox.x0 = clamp(std::floor(r.x0 + kEps), width_px);
    out.bbox.y0 = clamp(std::floor(r.y0 + kEps), height_px);
    out.bbox.x1 = clamp(std::ceil(r.x1 - kEps), width_px);
    out.bbox.y1 = clamp(std::ceil(r.y1 - kEps), height_px);
    if (out.bbox.x0 >= out.bbox.x1 || out.bbox.y0 >= out.bbox.y1) continue;
    regions.push_back(out);
  }

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < regions.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < regions.size(); ++j) {
        if (regions[i].kind != regions[j].kind || iou(regions[i].bbox, regions[j].bbox) <= kMergeIou) continue;
        BBox& a = regions[i].bbox;
        const BBox& b = regions[j].bbox;
        a = {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
        regions[i].confidence = std::max(regions[i].confidence, regions[j].confidence);
        regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
        break;
      }
    }
  }

  std::stable_sort(regions.begin(), regions.end(), reading_before);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    regions[i].reading_order_index = static_cast<int>(i);
    regions[i].region_id = static_cast<int>(i);
  }
  return regions;
}

std::vector<Region> analyze_layout(const PageImage& page, LayoutProvider& provider) {
  return finalize_regions(provider.analyze(page), page.width_px, page.height_px);
}

std::vector<TextBlock> recognize_text(const PageImage& page, std::span<const Region> regions,
                                      TextRecognizer& recognizer) {
  std::vector<Region> ordered(regions.begin(), regions.end());
  for (const auto& r : ordered) {
    if (r.kind != RegionKind::TextRegion) {
      throw Error(ErrorCode::InvariantViolation, "recognize_text given a non-text region");
    }
    if (!in_bounds(r.bbox, page.width_px, page.height_px)) {
      throw Error(ErrorCode::RegionOutOfBounds, "region " + std::to_string(r.region_id) + " outside page");
    }
  }
  if (ordered.empty()) return {};
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Region& a, const Region& b) { return a.reading_order_index < b.reading_order_index; });

  const auto results = recognizer.recognize(page, ordered);
  if (results.size() != ordered.size()) {
    throw Error(ErrorCode::ProviderMalformedReply, "recognizer returned " + std::to_string(results.size()) +
                                                       " results for " + std::to_string(ordered.size()) + " regions");
  }
  std::vector<TextBlock> blocks;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& rec = results[i];
    if (!(rec.confidence >= 0.0 && rec.confidence <= 1.0)) {
      throw Error(ErrorCode::ProviderMalformedReply, "recognizer confidence outside [0,1]");
    }
    if (util::trim(rec.text).empty()) continue;
    TextBlock b;
    b.region_id = ordered[i].region_id;
    b.content = rec.text;
    b.recognizer_confidence = rec.confidence;
    b.target_script_ratio = target_script_ratio(rec.text);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

CropResult crop_images(const PageImage& page, std::span<const Region> regions) {
  CropResult result;
  for (const auto& r : regions) {
    if (r.kind != RegionKind::ImageRegion) continue;
    const BBox b{std::max(r.bbox.x0, 0), std::max(r.bbox.y0, 0), std::min(r.bbox.x1, page.pixels.width),
                 std::min(r.bbox.y1, page.pixels.height)};
    if (b.width() < kMinImageSide || b.height() < kMinImageSide) {
      ++result.size_filtered;
      continue;
    }
    ExtractedImage img;
    img.region_id = r.region_id;
    img.crop = page.pixels.crop(b.x0, b.y0, b.x1, b.y1);
    img.width_px = img.crop.width;
    img.height_px = img.crop.height;
    result.images.push_back(std::move(img));
  }
  return result;
}

double target_script_ratio(std::string_view text) {
  std::size_t total = 0, target = 0;
  for (char32_t cp : util::utf8_decode(text)) {
    if (util::is_space(cp)) continue;
    ++total;
    if (is_target_char(cp)) ++target;
  }
  return total == 0 ? 0.0 : static_cast<double>(target) / static_cast<double>(total);
}

std::string join_lines(std::string_view text) {
  std::vector<std::u32string> lines;
  std::u32string current;
  const auto cps = util::utf8_decode(text);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (cp == U'\n' || cp == U'\r' || cp == 0x2028) {
      if (cp == U'\r' && i + 1 < cps.size() && cps[i + 1] == U'\n') ++i;
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  lines.push_back(std::move(current));

  std::u32string out;
  for (auto& raw : lines) {
    const auto line = util::utf8_decode(util::trim(util::utf8_encode(raw)));
    if (line.empty()) continue;
    if (!out.empty() && !util::is_cjk(out.back()) && !util::is_cjk(line.front())) out.push_back(U' ');
    out += line;
  }
  return util::utf8_encode(out);
}

std::vector<TextBlock> clean_text(std::span<const TextBlock> blocks, int min_chars, double min_script_ratio) {
  std::vector<TextBlock> kept;
  for (const auto& block : blocks) {
    TextBlock b = block;
    b.content = join_lines(block.content);
    int chars = 0;
    for (char32_t cp : util::utf8_decode(b.content)) {
      if (!util::is_space(cp)) ++chars;
    }
    b.target_script_ratio = target_script_ratio(b.content);
    if (chars < min_chars || b.target_script_ratio < min_script_ratio) continue;
    kept.push_back(std::move(b));
  }
  return kept;
}

namespace {

struct GlyphBox {
  double x0, y0, x1, y1;
  double baseline;
  double height;
  double pen_x;  // origin along the baseline
  double end_x;
  std::u32string text;
};

struct LineBuilder {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double baseline = 0, height = 0, right = 0;
  std::u32string text;
  bool has_ink = false;
};

class LayoutSink final : public pdf::ContentSink {
 public:
  void draw_image(const pdf::ImageRef& /*image*/, const pdf::GraphicsState& gs) override {
    const pdf::Matrix& m = gs.ctm;
    const pdf::Point c[4] = {m.apply(0, 0), m.apply(1, 0), m.apply(1, 1), m.apply(0, 1)};
    RawRegion r;
    r.kind = RegionKind::ImageRegion;
    r.x0 = r.x1 = c[0].x;
    r.y0 = r.y1 = c[0].y;
    for (const auto& p : c) {
      r.x0 = std::min(r.x0, p.x);
      r.x1 = std::max(r.x1, p.x);
      r.y0 = std::min(r.y0, p.y);
      r.y1 = std::max(r.y1, p.y);
    }
    if (r.x1 - r.x0 > 0 && r.y1 - r.y0 > 0) images.push_back(r);
  }

  void draw_glyph(const pdf::Glyph& glyph, const pdf::GraphicsState& /*gs*/) override {
    if (glyph.text.empty()) return;
    const pdf::Matrix& m = glyph.trm;
    const pdf::Point origin = m.apply(0, 0);
    const pdf::Point up = m.apply(0, 1);
    const double h = std::hypot(up.x - origin.x, up.y - origin.y);
    if (!(h > 0.01)) return;
    const double adv = std::max(glyph.advance, 0.0);
    const pdf::Point c[4] = {m.apply(0, -0.2), m.apply(adv, -0.2), m.apply(adv, 0.8), m.apply(0, 0.8)};
    GlyphBox g{c[0].x, c[0].y, c[0].x, c[0].y, origin.y, h, origin.x, m.apply(adv, 0).x, glyph.text};
    for (const auto& p : c) {
      g.x0 = std::min(g.x0, p.x);
      g.x1 = std::max(g.x1, p.x);
      g.y0 = std::min(g.y0, p.y);
      g.y1 = std::max(g.y1, p.y);
    }
    add(g);
  }

  std::vector<BuiltinPageAnalysis::Line> finish() {
    close_line();
    return std::move(lines_);
  }

  std::vector<RawRegion> images;

 private:
  static bool blank(const std::u32string& t) {
    return std::all_of(t.begin(), t.end(), [](char32_t cp) { return util::is_space(cp); });
  }

  void add(const GlyphBox& g) {
    const bool is_blank = blank(g.text);
    bool joins = line_.has_ink || !line_.text.empty();
    if (joins) {
      const double h = std::max(line_.height, g.height);
      joins = std::abs(g.baseline - line_.baseline) <= 0.25 * h &&
              std::abs(g.height - line_.height) <= 0.3 * h &&
              g.pen_x >= line_.right - 0.5 * h && g.pen_x <= line_.right + 1.0 * h;
    }
    if (!joins) {
      close_line();
      if (is_blank) return;
      line_ = LineBuilder{g.x0, g.y0, g.x1, g.y1, g.baseline, g.height, g.end_x, {}, false};
    } else if (!is_blank && g.pen_x - line_.right > 0.25 * line_.height && !line_.text.empty() &&
               !util::is_space(line_.text.back()) && !util::is_cjk(line_.text.back()) &&
               !util::is_cjk(g.text.front())) {
      line_.text.push_back(U' ');
    }
    line_.text += g.text;
    line_.right = std::max(line_.right, g.end_x);
    if (!is_blank) {
      line_.x0 = std::min(line_.x0, g.x0);
      line_.y0 = std::min(line_.y0, g.y0);
      line_.x1 = std::max(line_.x1, g.x1);
      line_.y1 = std::max(line_.y1, g.y1);
      line_.has_ink = true;
    }
  }

  void close_line() {
    if (line_.has_ink) {
      const std::string text = util::trim(util::utf8_encode(line_.text));
      if (!text.empty()) {
        BuiltinPageAnalysis::Line line;
        line.box = {static_cast<int>(std::floor(line_.x0)), static_cast<int>(std::floor(line_.y0)),
                    static_cast<int>(std::ceil(line_.x1)), static_cast<int>(std::ceil(line_.y1))};
        line.text = text;
        line.height_px = line_.height;
        lines_.push_back(std::move(line));
      }
    }
    line_ = LineBuilder{};
  }

  LineBuilder line_;
  std::vector<BuiltinPageAnalysis::Line> lines_;
};

/// Groups vertically adjacent lines of similar size and overlapping extent into blocks.
std::vector<RawRegion> group_lines(const std::vector<BuiltinPageAnalysis::Line>& lines) {
  struct Block {
    BBox box;
    double height;
  };
  std::vector<Block> blocks;
  for (const auto& line : lines) {
    const BBox& b = line.box;
    const double h = line.height_px;
    bool placed = false;
    for (auto& blk : blocks) {
      const double gap = b.y0 - blk.box.y1;
      const bool overlap_x = b.x0 < blk.box.x1 && blk.box.x0 < b.x1;
      if (overlap_x && gap >= -0.5 * h && gap <= 0.8 * h && std::abs(h - blk.height) <= 0.3 * std::max(h, blk.height)) {
        blk.box = {std::min(blk.box.x0, b.x0), std::min(blk.box.y0, b.y0), std::max(blk.box.x1, b.x1),
                   std::max(blk.box.y1, b.y1)};
        placed = true;
        break;
      }
    }
    if (!placed) blocks.push_back({b, h});
  }
  std::vector<RawRegion> out;
  for (const auto& blk : blocks) {
    out.push_back({RegionKind::TextRegion, static_cast<double>(blk.box.x0), static_cast<double>(blk.box.y0),
                   static_cast<double>(blk.box.x1), static_cast<double>(blk.box.y1), 1.0});
  }
  return out;
}

}  // namespace

BuiltinPageAnalysis analyze_builtin(const pdf::Document& doc, int page_index, int dpi) {
  if (dpi <= 0) throw Error(ErrorCode::InvalidDpi, "dpi must be positive, got " + std::to_string(dpi));
  const pdf::Page& page = doc.page(page_index);
  BuiltinPageAnalysis analysis;
  const pdf::Matrix base = pdf::page_to_device(page, dpi, analysis.width_px, analysis.height_px);
  LayoutSink sink;
  pdf::interpret_page(doc, page, base, sink);
  analysis.lines = sink.finish();
  analysis.regions = std::move(sink.images);
  for (auto& r : group_lines(analysis.lines)) analysis.regions.push_back(r);
  return analysis;
}

std::vector<Region> builtin_layout(std::string_view doc, int page_index, int dpi) {
  const pdf::Document parsed = pdf::Document::load(std::string(doc));
  const BuiltinPageAnalysis analysis = analyze_builtin(parsed, page_index, dpi);
  return finalize_regions(analysis.regions, analysis.width_px, analysis.height_px);
}

std::vector<RawRegion> BuiltinLayoutProvider::analyze(const PageImage& page) {
  if (page.width_px != analysis_.width_px || page.height_px != analysis_.height_px) {
    throw Error(ErrorCode::DimensionMismatch, "builtin analysis was computed for a different page size");
  }
  return analysis_.regions;
}

std::vector<Recognition> BuiltinTextRecognizer::recognize(const PageImage& /*page*/,
                                                          std::span<const Region> regions) {
  std::vector<Recognition> out;
  out.reserve(regions.size());
  for (const auto& region : regions) {
    std::vector<const BuiltinPageAnalysis::Line*> inside;
    for (const auto& line : analysis_.lines) {
      const double cx = (line.box.x0 + line.box.x1) / 2.0, cy = (line.box.y0 + line.box.y1) / 2.0;
      if (cx >= region.bbox.x0 && cx <= region.bbox.x1 && cy >= region.bbox.y0 && cy <= region.bbox.y1) {
        inside.push_back(&line);
      }
    }
    std::stable_sort(inside.begin(), inside.end(), [](const auto* a, const auto* b) {
      return a->box.y0 != b->box.y0 ? a->box.y0 < b->box.y0 : a->box.x0 < b->box.x0;
    });
    Recognition rec;
    for (const auto* line : inside) {
      if (!rec.text.empty()) rec.text += '\n';
      rec.text += line->text;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string crop_asset_name(std::string_view doc_id, int page_index, int region_id) {
  return std::string(doc_id) + "_p" + std::to_string(page_index) + "_r" + std::to_string(region_id) + ".jpg";
}

}  // namespace pdfmine::extract
