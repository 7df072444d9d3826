#include "pdfmine/pdf/document.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pdfmine/error.hpp"
#include "pdfmine/pdf/lexer.hpp"

namespace pdfmine::pdf {

namespace {

const Object kNull;
constexpr int kMaxResolveDepth = 32;
constexpr int kMaxTreeDepth = 64;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

/// Finds the start of "num gen" preceding an "obj" keyword at `kw`, or npos.
std::size_t header_start(std::string_view data, std::size_t kw) {
  std::size_t i = kw;
  auto skip_ws = [&] {
    while (i > 0 && Lexer::is_whitespace(data[i - 1])) --i;
  };
  auto skip_digits = [&]() -> bool {
    const std::size_t end = i;
    while (i > 0 && is_digit(data[i - 1])) --i;
    return i < end;
  };
  const std::size_t before_ws = i;
  skip_ws();
  if (i == before_ws) return std::string_view::npos;
  if (!skip_digits()) return std::string_view::npos;
  const std::size_t gen_start = i;
  skip_ws();
  if (i == gen_start) return std::string_view::npos;
  if (!skip_digits()) return std::string_view::npos;
  if (i > 0 && !Lexer::is_whitespace(data[i - 1]) && !Lexer::is_delimiter(data[i - 1])) return std::string_view::npos;
  return i;
}

Rect rect_from(const Object* obj, const Document& doc) {
  Rect r;
  if (!obj) return r;
  const Array* arr = doc.resolve(*obj).array();
  if (!arr || arr->size() != 4) return r;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    auto n = doc.resolve((*arr)[static_cast<std::size_t>(i)]).number();
    if (!n || !std::isfinite(*n)) return Rect{};
    v[i] = *n;
  }
  r.x0 = std::min(v[0], v[2]);
  r.x1 = std::max(v[0], v[2]);
  r.y0 = std::min(v[1], v[3]);
  r.y1 = std::max(v[1], v[3]);
  return r;
}

}  // namespace

Document Document::load(std::string bytes) {
  Document doc;
  doc.bytes_ = std::move(bytes);
  const std::string_view head = std::string_view(doc.bytes_).substr(0, 1024);
  if (head.find("%PDF-") == std::string_view::npos) throw Error(ErrorCode::ParseFailure, "missing %PDF header");
  doc.scan_objects();
  doc.load_object_streams();
  doc.locate_catalog();
  doc.build_page_tree();
  return doc;
}

void Document::scan_objects() {
  const std::string_view data = bytes_;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t kw = data.find("obj", pos);
    if (kw == std::string_view::npos) break;
    const std::size_t after = kw + 3;
    const bool boundary_after =
        after >= data.size() || Lexer::is_whitespace(data[after]) || Lexer::is_delimiter(data[after]);
    const std::size_t start = boundary_after ? header_start(data, kw) : std::string_view::npos;
    if (start == std::string_view::npos) {
      pos = after;
      continue;
    }
    try {
      Parser parser(data, start);
      auto ind = parser.parse_indirect();
      objects_.insert_or_assign(ind.ref.num, std::move(ind.object));
      pos = std::max(ind.end, after);
    } catch (const Error&) {
      pos = after;
    }
  }
  // Trailer dictionaries; the last one in the file wins key by key.
  std::size_t tpos = 0;
  while ((tpos = data.find("trailer", tpos)) != std::string_view::npos) {
    try {
      Parser parser(data, tpos + 7);
      Object t = parser.parse_object();
      if (const Dict* d = t.dict()) {
        for (const auto& [k, v] : *d) trailer_.insert_or_assign(k, v);
      }
    } catch (const Error&) {
    }
    tpos += 7;
  }
}

void Document::load_object_streams() {
  std::vector<std::pair<int, Object>> found;
  for (const auto& [num, obj] : objects_) {
    const Stream* s = obj.stream();
    if (!s) continue;
    const Object* type = find(s->dict, "Type");
    if (type && type->is_name("XRef")) {
      // Cross-reference streams carry the trailer entries.
      for (const char* key : {"Root", "Encrypt", "Info"}) {
        if (const Object* v = find(s->dict, key); v && !find(trailer_, key)) trailer_.insert_or_assign(key, *v);
      }
      continue;
    }
    if (!type || !type->is_name("ObjStm")) continue;
    try {
      const std::string data = decode_all(*s);
      const auto n = find(s->dict, "N") ? find(s->dict, "N")->integer() : std::nullopt;
      const auto first = find(s->dict, "First") ? find(s->dict, "First")->integer() : std::nullopt;
      if (!n || !first || *n < 0 || *first < 0 || static_cast<std::size_t>(*first) > data.size()) continue;
      Lexer header(data);
      for (std::int64_t i = 0; i < *n; ++i) {
        Token objnum = header.next();
        Token offset = header.next();
        if (objnum.kind != Token::Kind::Integer || offset.kind != Token::Kind::Integer) break;
        const auto at = static_cast<std::size_t>(*first + offset.integer);
        if (offset.integer < 0 || at >= data.size()) continue;
        try {
          Parser p(data, at);
          found.emplace_back(static_cast<int>(objnum.integer), p.parse_object());
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
  }
  // The stream payloads are owned by `found`, which outlives nothing else; copy in.
  for (auto& [num, obj] : found) objects_.try_emplace(num, std::move(obj));
}

void Document::locate_catalog() {
  if (const Object* enc = find(trailer_, "Encrypt"); enc && !enc->is_null()) encrypted_ = true;
  if (const Object* root = find(trailer_, "Root")) {
    const Object& cat = resolve(*root);
    if (cat.dict()) {
      catalog_ = cat;
      return;
    }
  }
  // No usable trailer: pick the lowest-numbered catalog object.
  std::vector<int> nums;
  for (const auto& [num, obj] : objects_) nums.push_back(num);
  std::sort(nums.begin(), nums.end());
  for (int num : nums) {
    const Object& obj = objects_.at(num);
    const Dict* d = obj.dict();
    if (!d) continue;
    const Object* type = find(*d, "Type");
    if (type && type->is_name("Catalog") && find(*d, "Pages")) {
      catalog_ = obj;
      return;
    }
  }
  throw Error(ErrorCode::ParseFailure, "no document catalog");
}

void Document::build_page_tree() {
  const Dict* catalog = catalog_.dict();
  const Object* pages_root = catalog ? lookup(*catalog, "Pages") : nullptr;
  if (!pages_root || !pages_root->dict()) throw Error(ErrorCode::ParseFailure, "catalog has no page tree");

  struct Inherited {
    const Object* resources = nullptr;
    const Object* media_box = nullptr;
    const Object* crop_box = nullptr;
    const Object* rotate = nullptr;
  };
  std::set<const Dict*> visited;

  auto visit = [&](auto&& self, const Object& node_obj, Inherited inh, int depth) -> void {
    const Dict* node = node_obj.dict();
    if (!node || depth > kMaxTreeDepth || !visited.insert(node).second) return;
    if (const Object* v = lookup(*node, "Resources")) inh.resources = v;
    if (const Object* v = lookup(*node, "MediaBox")) inh.media_box = v;
    if (const Object* v = lookup(*node, "CropBox")) inh.crop_box = v;
    if (const Object* v = lookup(*node, "Rotate")) inh.rotate = v;

    const Object* type = lookup(*node, "Type");
    const Object* kids = lookup(*node, "Kids");
    const bool is_leaf = (type && type->is_name("Page")) || !kids || !kids->array();
    if (!is_leaf) {
      for (const Object& kid : *kids->array()) self(self, resolve(kid), inh, depth + 1);
      return;
    }
    Page page;
    page.dict = *node;
    page.media_box = rect_from(inh.media_box, *this);
    if (page.media_box.width() <= 0 || page.media_box.height() <= 0) {
      page.media_box = Rect{0, 0, 612, 792};  // US Letter when missing or degenerate
    }
    const Rect crop = rect_from(inh.crop_box, *this);
    if (crop.width() > 0 && crop.height() > 0) {
      Rect clipped{std::max(crop.x0, page.media_box.x0), std::max(crop.y0, page.media_box.y0),
                   std::min(crop.x1, page.media_box.x1), std::min(crop.y1, page.media_box.y1)};
      if (clipped.width() > 0 && clipped.height() > 0) page.media_box = clipped;
    }
    if (inh.rotate) {
      const auto r = inh.rotate->integer().value_or(0);
      page.rotate = static_cast<int>(((r % 360) + 360) % 360 / 90 * 90);
    }
    if (inh.resources && inh.resources->dict()) page.resources = *inh.resources->dict();
    pages_.push_back(std::move(page));
  };
  visit(visit, *pages_root, Inherited{}, 0);
}

const Object& Document::get(Ref ref) const {
  auto it = objects_.find(ref.num);
  return it == objects_.end() ? kNull : it->second;
}

const Object& Document::resolve(const Object& obj) const {
  const Object* cur = &obj;
  for (int i = 0; i < kMaxResolveDepth; ++i) {
    auto r = cur->ref();
    if (!r) return *cur;
    cur = &get(*r);
  }
  return kNull;
}

const Object* Document::lookup(const Dict& dict, std::string_view key) const {
  const Object* v = find(dict, key);
  if (!v) return nullptr;
  const Object& r = resolve(*v);
  return r.is_null() ? nullptr : &r;
}

DecodeResult Document::decode(const Stream& stream) const {
  std::vector<FilterStep> steps;
  const Object* filter = lookup(stream.dict, "Filter");
  if (!filter) filter = lookup(stream.dict, "F");
  const Object* parms = lookup(stream.dict, "DecodeParms");
  if (!parms) parms = lookup(stream.dict, "DP");
  if (filter) {
    if (const std::string* n = filter->name()) {
      steps.push_back({*n, parms ? parms->dict() : nullptr});
    } else if (const Array* arr = filter->array()) {
      const Array* parr = parms ? parms->array() : nullptr;
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string* n = resolve((*arr)[i]).name();
        if (!n) throw Error(ErrorCode::ParseFailure, "bad filter entry");
        const Dict* p = nullptr;
        if (parr && i < parr->size()) p = resolve((*parr)[i]).dict();
        steps.push_back({*n, p});
      }
    }
  }
  return apply_filters(stream.raw, steps);
}

std::string Document::decode_all(const Stream& stream) const {
  DecodeResult r = decode(stream);
  if (!r.pending_codec.empty()) throw Error(ErrorCode::ParseFailure, "stream needs image codec " + r.pending_codec);
  return std::move(r.data);
}

const Page& Document::page(int index) const {
  if (index < 0 || index >= page_count()) throw Error(ErrorCode::ParseFailure, "page index out of range");
  return pages_[static_cast<std::size_t>(index)];
}

}  // namespace pdfmine::pdf
