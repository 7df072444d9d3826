#include "pdfmine/pdf/content.hpp"

#include <cmath>
#include <set>

#include "pdfmine/error.hpp"
#include "pdfmine/pdf/lexer.hpp"

namespace pdfmine::pdf {

Matrix Matrix::inverse() const {
  const double det = determinant();
  if (std::abs(det) < 1e-12) return Matrix{0, 0, 0, 0, 0, 0};
  const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
  return {ia, ib, ic, id, -(e * ia + f * ic), -(e * ib + f * id)};
}

Matrix page_to_device(const Page& page, int dpi, int& width_px, int& height_px) {
  const double s = dpi / 72.0;
  const Rect& mb = page.media_box;
  const double w = mb.width();
  const double h = mb.height();
  // User space to unrotated page points with y pointing down.
  Matrix m{1, 0, 0, -1, -mb.x0, mb.y1};
  double out_w = w, out_h = h;
  switch (page.rotate) {
    case 90:
      m = m.then(Matrix{0, 1, -1, 0, h, 0});
      out_w = h;
      out_h = w;
      break;
    case 180:
      m = m.then(Matrix{-1, 0, 0, -1, w, h});
      break;
    case 270:
      m = m.then(Matrix{0, -1, 1, 0, 0, w});
      out_w = h;
      out_h = w;
      break;
    default:
      break;
  }
  width_px = std::max(1, static_cast<int>(std::lround(out_w * s)));
  height_px = std::max(1, static_cast<int>(std::lround(out_h * s)));
  return m.then(Matrix::scale(s, s));
}

namespace {

constexpr int kMaxFormDepth = 12;
constexpr std::size_t kMaxStateDepth = 256;
constexpr int kBezierSteps = 12;

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

RgbColor color_from(const std::vector<double>& comps, RgbColor previous) {
  switch (comps.size()) {
    case 1: {
      const auto g = to_byte(comps[0]);
      return {g, g, g};
    }
    case 3:
      return {to_byte(comps[0]), to_byte(comps[1]), to_byte(comps[2])};
    case 4: {
      const double k = comps[3];
      return {to_byte((1 - comps[0]) * (1 - k)), to_byte((1 - comps[1]) * (1 - k)), to_byte((1 - comps[2]) * (1 - k))};
    }
    default:
      return previous;
  }
}

std::string expand_inline_key(const std::string& k) {
  static const std::map<std::string, std::string, std::less<>> kAbbrev = {
      {"BPC", "BitsPerComponent"}, {"CS", "ColorSpace"}, {"D", "Decode"},  {"DP", "DecodeParms"},
      {"F", "Filter"},             {"H", "Height"},      {"IM", "ImageMask"}, {"I", "Interpolate"},
      {"W", "Width"}};
  auto it = kAbbrev.find(k);
  return it == kAbbrev.end() ? k : it->second;
}

Object expand_inline_value(const Object& v) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"G", "DeviceGray"}, {"RGB", "DeviceRGB"}, {"CMYK", "DeviceCMYK"}, {"I", "Indexed"},
      {"AHx", "ASCIIHexDecode"}, {"A85", "ASCII85Decode"}, {"LZW", "LZWDecode"}, {"Fl", "FlateDecode"},
      {"RL", "RunLengthDecode"}, {"CCF", "CCITTFaxDecode"}, {"DCT", "DCTDecode"}};
  if (const std::string* n = v.name()) {
    auto it = kNames.find(*n);
    if (it != kNames.end()) return Object(Name{it->second});
  }
  return v;
}

class Interpreter {
 public:
  Interpreter(const Document& doc, ContentSink& sink) : doc_(doc), sink_(sink) {}

  void run(std::string_view content, const Dict& resources, const GraphicsState& initial, int depth);

 private:
  void execute(const std::string& op, const Dict& resources, int depth);
  void show_text(const std::string& bytes);
  void adjust_text(double amount);
  void inline_image(Parser& parser);
  void do_xobject(const std::string& name, const Dict& resources, int depth);
  void set_font(const std::string& name, double size, const Dict& resources);
  void paint(bool fill, bool stroke, bool even_odd);

  double num(std::size_t i) const {
    if (i >= operands_.size()) return 0.0;
    return operands_[i].number().value_or(0.0);
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& o : operands_) {
      if (auto n = o.number()) out.push_back(*n);
    }
    return out;
  }

  const Document& doc_;
  ContentSink& sink_;
  GraphicsState gs_;
  std::vector<GraphicsState> stack_;
  std::vector<Object> operands_;
  std::vector<Subpath> path_;
  Point current_{};
  Matrix text_matrix_;
  Matrix line_matrix_;
  std::map<const Dict*, std::shared_ptr<const Font>> font_cache_;
  std::set<const Stream*> active_forms_;
};

void Interpreter::run(std::string_view content, const Dict& resources, const GraphicsState& initial, int depth) {
  gs_ = initial;
  const std::size_t base_stack = stack_.size();
  Parser parser(content);
  Lexer& lex = parser.lexer();
  for (;;) {
    Token tok;
    try {
      tok = lex.next();
      if (tok.kind == Token::Kind::End) break;
      if (tok.kind == Token::Kind::Keyword && tok.text != "true" && tok.text != "false" && tok.text != "null") {
        if (tok.text == "BI") {
          inline_image(parser);
        } else {
          execute(tok.text, resources, depth);
        }
        operands_.clear();
        continue;
      }
      if (tok.kind == Token::Kind::ArrayClose || tok.kind == Token::Kind::DictClose) continue;
      operands_.push_back(parser.parse_from(std::move(tok)));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseFailure) throw Error(ErrorCode::RenderFailure, e.what());
      throw;
    }
  }
  while (stack_.size() > base_stack) stack_.pop_back();
}

void Interpreter::execute(const std::string& op, const Dict& resources, int depth) {
  if (op == "q") {
    if (stack_.size() < kMaxStateDepth) stack_.push_back(gs_);
  } else if (op == "Q") {
    if (!stack_.empty()) {
      gs_ = stack_.back();
      stack_.pop_back();
    }
  } else if (op == "cm") {
    const Matrix m{num(0), num(1), num(2), num(3), num(4), num(5)};
    gs_.ctm = m.then(gs_.ctm);
  } else if (op == "w") {
    gs_.line_width = num(0);
  } else if (op == "m") {
    current_ = gs_.ctm.apply(num(0), num(1));
    path_.push_back({current_});
  } else if (op == "l") {
    current_ = gs_.ctm.apply(num(0), num(1));
    if (path_.empty()) path_.push_back({});
    path_.back().push_back(current_);
  } else if (op == "c" || op == "v" || op == "y") {
    if (path_.empty()) path_.push_back({current_});
    Point p0 = current_;
    Point p1, p2, p3;
    if (op == "c") {
      p1 = gs_.ctm.apply(num(0), num(1));
      p2 = gs_.ctm.apply(num(2), num(3));
      p3 = gs_.ctm.apply(num(4), num(5));
    } else if (op == "v") {
      p1 = p0;
      p2 = gs_.ctm.apply(num(0), num(1));
      p3 = gs_.ctm.apply(num(2), num(3));
    } else {
      p1 = gs_.ctm.apply(num(0), num(1));
      p2 = gs_.ctm.apply(num(2), num(3));
      p3 = p2;
    }
    for (int i = 1; i <= kBezierSteps; ++i) {
      const double t = static_cast<double>(i) / kBezierSteps;
      const double u = 1 - t;
      path_.back().push_back({u * u * u * p0.x + 3 * u * u * t * p1.x + 3 * u * t * t * p2.x + t * t * t * p3.x,
                              u * u * u * p0.y + 3 * u * u * t * p1.y + 3 * u * t * t * p2.y + t * t * t * p3.y});
    }
    current_ = p3;
  } else if (op == "h") {
    if (!path_.empty() && !path_.back().empty()) {
      current_ = path_.back().front();
      path_.back().push_back(current_);
    }
  } else if (op == "re") {
    const double x = num(0), y = num(1), w = num(2), h = num(3);
    path_.push_back({gs_.ctm.apply(x, y), gs_.ctm.apply(x + w, y), gs_.ctm.apply(x + w, y + h),
                     gs_.ctm.apply(x, y + h), gs_.ctm.apply(x, y)});
    current_ = gs_.ctm.apply(x, y);
  } else if (op == "f" || op == "F") {
    paint(true, false, false);
  } else if (op == "f*") {
    paint(true, false, true);
  } else if (op == "S") {
    paint(false, true, false);
  } else if (op == "s") {
    execute("h", resources, depth);
    paint(false, true, false);
  } else if (op == "B") {
    paint(true, true, false);
  } else if (op == "B*") {
    paint(true, true, true);
  } else if (op == "b") {
    execute("h", resources, depth);
    paint(true, true, false);
  } else if (op == "b*") {
    execute("h", resources, depth);
    paint(true, true, true);
  } else if (op == "n") {
    path_.clear();
  } else if (op == "g" || op == "rg" || op == "k" || op == "sc" || op == "scn") {
    gs_.fill = color_from(numbers(), gs_.fill);
  } else if (op == "G" || op == "RG" || op == "K" || op == "SC" || op == "SCN") {
    gs_.stroke = color_from(numbers(), gs_.stroke);
  } else if (op == "cs") {
    gs_.fill = RgbColor{};
  } else if (op == "CS") {
    gs_.stroke = RgbColor{};
  } else if (op == "BT") {
    text_matrix_ = Matrix{};
    line_matrix_ = Matrix{};
  } else if (op == "Tf") {
    if (!operands_.empty() && operands_[0].name()) set_font(*operands_[0].name(), num(1), resources);
  } else if (op == "Td") {
    line_matrix_ = Matrix::translate(num(0), num(1)).then(line_matrix_);
    text_matrix_ = line_matrix_;
  } else if (op == "TD") {
    gs_.leading = -num(1);
    line_matrix_ = Matrix::translate(num(0), num(1)).then(line_matrix_);
    text_matrix_ = line_matrix_;
  } else if (op == "Tm") {
    line_matrix_ = Matrix{num(0), num(1), num(2), num(3), num(4), num(5)};
    text_matrix_ = line_matrix_;
  } else if (op == "T*") {
    line_matrix_ = Matrix::translate(0, -gs_.leading).then(line_matrix_);
    text_matrix_ = line_matrix_;
  } else if (op == "Tc") {
    gs_.char_spacing = num(0);
  } else if (op == "Tw") {
    gs_.word_spacing = num(0);
  } else if (op == "Tz") {
    gs_.horizontal_scale = num(0) / 100.0;
  } else if (op == "TL") {
    gs_.leading = num(0);
  } else if (op == "Ts") {
    gs_.rise = num(0);
  } else if (op == "Tr") {
    gs_.render_mode = static_cast<int>(num(0));
  } else if (op == "Tj") {
    if (!operands_.empty() && operands_.back().string()) show_text(*operands_.back().string());
  } else if (op == "'") {
    line_matrix_ = Matrix::translate(0, -gs_.leading).then(line_matrix_);
    text_matrix_ = line_matrix_;
    if (!operands_.empty() && operands_.back().string()) show_text(*operands_.back().string());
  } else if (op == "\"") {
    gs_.word_spacing = num(0);
    gs_.char_spacing = num(1);
    line_matrix_ = Matrix::translate(0, -gs_.leading).then(line_matrix_);
    text_matrix_ = line_matrix_;
    if (operands_.size() >= 3 && operands_[2].string()) show_text(*operands_[2].string());
  } else if (op == "TJ") {
    if (!operands_.empty()) {
      if (const Array* arr = operands_.back().array()) {
        for (const Object& item : *arr) {
          if (const std::string* s = item.string()) {
            show_text(*s);
          } else if (auto n = item.number()) {
            adjust_text(*n);
          }
        }
      }
    }
  } else if (op == "Do") {
    if (!operands_.empty() && operands_[0].name()) do_xobject(*operands_[0].name(), resources, depth);
  }
  // Everything else (clipping, marked content, shading, ExtGState) does not affect the output here.
}

void Interpreter::paint(bool fill, bool stroke, bool even_odd) {
  if (fill) sink_.fill_path(path_, even_odd, gs_);
  if (stroke) sink_.stroke_path(path_, gs_);
  path_.clear();
}

void Interpreter::set_font(const std::string& name, double size, const Dict& resources) {
  gs_.font_size = size;
  gs_.font.reset();
  const Object* fonts = doc_.lookup(resources, "Font");
  if (!fonts || !fonts->dict()) return;
  const Object* fobj = doc_.lookup(*fonts->dict(), name);
  if (!fobj || !fobj->dict()) return;
  const Dict* key = fobj->dict();
  auto it = font_cache_.find(key);
  if (it == font_cache_.end()) {
    it = font_cache_.emplace(key, std::make_shared<const Font>(Font::load(doc_, *key))).first;
  }
  gs_.font = it->second;
}

void Interpreter::show_text(const std::string& bytes) {
  static const Font kFallback{};
  const Font& font = gs_.font ? *gs_.font : kFallback;
  const double fs = gs_.font_size;
  const double th = gs_.horizontal_scale;
  for (const CharCode& code : font.split(bytes)) {
    const double w0 = font.advance(code);
    Glyph glyph;
    glyph.text = font.to_unicode(code);
    glyph.advance = w0;
    const Matrix params{fs * th, 0, 0, fs, 0, gs_.rise};
    glyph.trm = params.then(text_matrix_).then(gs_.ctm);
    if (gs_.render_mode != 3 && gs_.render_mode != 7) sink_.draw_glyph(glyph, gs_);
    double tx = w0 * fs + gs_.char_spacing;
    if (font.is_word_space(code)) tx += gs_.word_spacing;
    text_matrix_ = Matrix::translate(tx * th, 0).then(text_matrix_);
  }
}

void Interpreter::adjust_text(double amount) {
  const double tx = -amount / 1000.0 * gs_.font_size * gs_.horizontal_scale;
  text_matrix_ = Matrix::translate(tx, 0).then(text_matrix_);
}

void Interpreter::inline_image(Parser& parser) {
  Lexer& lex = parser.lexer();
  Dict dict;
  for (;;) {
    Token key = lex.next();
    if (key.kind == Token::Kind::End) throw Error(ErrorCode::RenderFailure, "unterminated inline image");
    if (key.kind == Token::Kind::Keyword && key.text == "ID") break;
    if (key.kind != Token::Kind::Name) continue;
    Object value = parser.parse_object();
    if (const Array* arr = value.array()) {
      Array expanded;
      for (const Object& v : *arr) expanded.push_back(expand_inline_value(v));
      value = Object(std::move(expanded));
    } else {
      value = expand_inline_value(value);
    }
    dict.insert_or_assign(expand_inline_key(key.text), std::move(value));
  }
  const std::string_view data = lex.data();
  std::size_t start = lex.pos();
  if (start < data.size() && Lexer::is_whitespace(data[start])) ++start;
  std::size_t search = start;
  std::size_t end = std::string_view::npos;
  while ((search = data.find("EI", search)) != std::string_view::npos) {
    const bool before = search > start && Lexer::is_whitespace(data[search - 1]);
    const bool after = search + 2 >= data.size() || Lexer::is_whitespace(data[search + 2]);
    if (before && after) {
      end = search;
      break;
    }
    search += 2;
  }
  if (end == std::string_view::npos) throw Error(ErrorCode::RenderFailure, "inline image without EI");
  Stream s;
  s.dict = std::move(dict);
  s.raw = std::string(data.substr(start, end - 1 - start));
  lex.seek(end + 2);
  ImageRef ref{std::make_shared<const Stream>(std::move(s)), true};
  sink_.draw_image(ref, gs_);
}

void Interpreter::do_xobject(const std::string& name, const Dict& resources, int depth) {
  const Object* xobjects = doc_.lookup(resources, "XObject");
  if (!xobjects || !xobjects->dict()) return;
  const Object* xo = doc_.lookup(*xobjects->dict(), name);
  if (!xo) return;
  auto stream = xo->stream_ptr();
  if (!stream) return;
  const Object* subtype = doc_.lookup(stream->dict, "Subtype");
  if (subtype && subtype->is_name("Image")) {
    sink_.draw_image(ImageRef{stream, false}, gs_);
    return;
  }
  if (!subtype || !subtype->is_name("Form")) return;
  if (depth >= kMaxFormDepth || active_forms_.count(stream.get())) return;

  std::string content;
  try {
    content = doc_.decode_all(*stream);
  } catch (const Error& e) {
    throw Error(ErrorCode::RenderFailure, std::string("form xobject: ") + e.what());
  }
  Matrix form_matrix;
  if (const Object* m = doc_.lookup(stream->dict, "Matrix"); m && m->array() && m->array()->size() == 6) {
    const Array& a = *m->array();
    auto n = [&](std::size_t i) { return doc_.resolve(a[i]).number().value_or(i == 0 || i == 3 ? 1.0 : 0.0); };
    form_matrix = Matrix{n(0), n(1), n(2), n(3), n(4), n(5)};
  }
  const Object* form_res = doc_.lookup(stream->dict, "Resources");
  const Dict& inner_resources = form_res && form_res->dict() ? *form_res->dict() : resources;

  GraphicsState saved = gs_;
  std::vector<Object> saved_operands = operands_;
  std::vector<Subpath> saved_path = std::move(path_);
  path_.clear();
  const Matrix saved_text = text_matrix_, saved_line = line_matrix_;
  GraphicsState inner = gs_;
  inner.ctm = form_matrix.then(gs_.ctm);
  operands_.clear();
  active_forms_.insert(stream.get());
  run(content, inner_resources, inner, depth + 1);
  active_forms_.erase(stream.get());
  gs_ = saved;
  operands_ = std::move(saved_operands);
  path_ = std::move(saved_path);
  text_matrix_ = saved_text;
  line_matrix_ = saved_line;
}

}  // namespace

void interpret_page(const Document& doc, const Page& page, const Matrix& base, ContentSink& sink) {
  std::string content;
  const Object* contents = doc.lookup(page.dict, "Contents");
  auto append = [&](const Object& obj) {
    const Stream* s = doc.resolve(obj).stream();
    if (!s) return;
    try {
      content += doc.decode_all(*s);
    } catch (const Error& e) {
      throw Error(ErrorCode::RenderFailure, std::string("content stream: ") + e.what());
    }
    content.push_back('\n');
  };
  if (contents) {
    if (const Array* arr = contents->array()) {
      for (const Object& o : *arr) append(o);
    } else {
      append(*contents);
    }
  }
  GraphicsState initial;
  initial.ctm = base;
  Interpreter interp(doc, sink);
  interp.run(content, page.resources, initial, 0);
}

}  // namespace pdfmine::pdf
