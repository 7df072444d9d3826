#include "pdfmine/pdf/font.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_map>

#include "pdfmine/error.hpp"
#include "pdfmine/pdf/lexer.hpp"

namespace pdfmine::pdf {

namespace {

std::uint32_t code_value(std::string_view bytes) {
  std::uint32_t v = 0;
  for (unsigned char c : bytes) v = (v << 8) | c;
  return v;
}

std::u32string utf16be_to_u32(std::string_view bytes) {
  std::u32string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < bytes.size()) {
      const char32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    out.push_back(u);
  }
  return out;
}

// cp1252 for 0x80-0x9F; everything else maps to Latin-1.
constexpr char32_t kWinAnsiHigh[32] = {
    0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};

}  // namespace

ToUnicodeMap ToUnicodeMap::parse(std::string_view cmap) {
  ToUnicodeMap m;
  Lexer lex(cmap);
  std::string mode;
  std::vector<Token> pending;  // tokens inside a bf block
  for (;;) {
    Token t;
    try {
      t = lex.next();
    } catch (const Error&) {
      break;
    }
    if (t.kind == Token::Kind::End) break;
    if (t.kind == Token::Kind::Keyword) {
      if (t.text == "begincodespacerange" || t.text == "beginbfchar" || t.text == "beginbfrange") {
        mode = t.text;
        pending.clear();
      } else if (t.text == "endcodespacerange") {
        for (std::size_t i = 0; i + 1 < pending.size(); i += 2) {
          if (pending[i].kind == Token::Kind::String) {
            const int len = static_cast<int>(pending[i].text.size());
            if (len >= 1 && len <= 4 &&
                std::find(m.code_lengths_.begin(), m.code_lengths_.end(), len) == m.code_lengths_.end()) {
              m.code_lengths_.push_back(len);
            }
          }
        }
        mode.clear();
      } else if (t.text == "endbfchar") {
        for (std::size_t i = 0; i + 1 < pending.size(); i += 2) {
          if (pending[i].kind != Token::Kind::String) continue;
          const std::uint32_t src = code_value(pending[i].text);
          if (pending[i + 1].kind == Token::Kind::String) {
            m.map_[src] = utf16be_to_u32(pending[i + 1].text);
          } else if (pending[i + 1].kind == Token::Kind::Name) {
            m.map_[src] = std::u32string(1, glyph_name_to_unicode(pending[i + 1].text));
          }
        }
        mode.clear();
      } else if (t.text == "endbfrange") {
        std::size_t i = 0;
        while (i + 2 < pending.size()) {
          const Token& lo = pending[i];
          const Token& hi = pending[i + 1];
          if (lo.kind != Token::Kind::String || hi.kind != Token::Kind::String) {
            ++i;
            continue;
          }
          const std::uint32_t a = code_value(lo.text);
          const std::uint32_t b = code_value(hi.text);
          if (pending[i + 2].kind == Token::Kind::String) {
            if (b >= a && b - a < 65536) m.ranges_.push_back(Range{a, b, utf16be_to_u32(pending[i + 2].text)});
            i += 3;
          } else if (pending[i + 2].kind == Token::Kind::ArrayOpen) {
            std::size_t j = i + 3;
            std::uint32_t code = a;
            while (j < pending.size() && pending[j].kind != Token::Kind::ArrayClose) {
              if (pending[j].kind == Token::Kind::String && code <= b) m.map_[code++] = utf16be_to_u32(pending[j].text);
              ++j;
            }
            i = j + 1;
          } else {
            i += 3;
          }
        }
        mode.clear();
      }
      continue;
    }
    if (!mode.empty()) pending.push_back(std::move(t));
  }
  std::sort(m.code_lengths_.begin(), m.code_lengths_.end());
  return m;
}

bool ToUnicodeMap::lookup(std::uint32_t code, std::u32string& out) const {
  if (auto it = map_.find(code); it != map_.end()) {
    out = it->second;
    return true;
  }
  for (const auto& r : ranges_) {
    if (code >= r.lo && code <= r.hi && !r.base.empty()) {
      out = r.base;
      out.back() += code - r.lo;
      return true;
    }
  }
  return false;
}

char32_t glyph_name_to_unicode(std::string_view name) {
  if (name.size() == 1) {
    const char c = name[0];
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return static_cast<char32_t>(c);
  }
  if (name.size() == 7 && name.substr(0, 3) == "uni") {
    return static_cast<char32_t>(std::strtoul(std::string(name.substr(3)).c_str(), nullptr, 16));
  }
  if (name.size() >= 5 && name.size() <= 7 && name[0] == 'u') {
    const std::string hex(name.substr(1));
    char* end = nullptr;
    const unsigned long v = std::strtoul(hex.c_str(), &end, 16);
    if (end && *end == '\0') return static_cast<char32_t>(v);
  }
  static const std::unordered_map<std::string_view, char32_t> kNames = {
      {"space", U' '},      {"exclam", U'!'},      {"quotedbl", U'"'},   {"numbersign", U'#'},
      {"dollar", U'$'},     {"percent", U'%'},     {"ampersand", U'&'},  {"quotesingle", U'\''},
      {"quoteright", U'’'}, {"parenleft", U'('},   {"parenright", U')'}, {"asterisk", U'*'},
      {"plus", U'+'},       {"comma", U','},       {"hyphen", U'-'},     {"period", U'.'},
      {"slash", U'/'},      {"zero", U'0'},        {"one", U'1'},        {"two", U'2'},
      {"three", U'3'},      {"four", U'4'},        {"five", U'5'},       {"six", U'6'},
      {"seven", U'7'},      {"eight", U'8'},       {"nine", U'9'},       {"colon", U':'},
      {"semicolon", U';'},  {"less", U'<'},        {"equal", U'='},      {"greater", U'>'},
      {"question", U'?'},   {"at", U'@'},          {"bracketleft", U'['}, {"backslash", U'\\'},
      {"bracketright", U']'}, {"underscore", U'_'}, {"quoteleft", U'‘'}, {"braceleft", U'{'},
      {"bar", U'|'},        {"braceright", U'}'},  {"asciitilde", U'~'}, {"bullet", U'•'},
      {"endash", U'–'},     {"emdash", U'\u2014'},      {"quotedblleft", U'“'}, {"quotedblright", U'”'},
  };
  if (auto it = kNames.find(name); it != kNames.end()) return it->second;
  return U'�';
}

Font Font::load(const Document& doc, const Dict& font_dict) {
  Font f;
  const Object* subtype = doc.lookup(font_dict, "Subtype");
  const Object* base_font = doc.lookup(font_dict, "BaseFont");
  if (base_font && base_font->name() && base_font->name()->find("Courier") != std::string::npos) {
    f.default_width_ = 600.0;
  }
  if (const Object* tu = doc.lookup(font_dict, "ToUnicode"); tu && tu->stream()) {
    try {
      f.to_unicode_ = ToUnicodeMap::parse(doc.decode_all(*tu->stream()));
    } catch (const Error&) {
    }
  }

  if (subtype && subtype->is_name("Type0")) {
    f.composite_ = true;
    f.default_width_ = 1000.0;
    f.code_lengths_ = {2};
    if (const Object* enc = doc.lookup(font_dict, "Encoding")) {
      if (const std::string* n = enc->name()) {
        if (n->find("UCS2") != std::string::npos || n->find("UTF16") != std::string::npos) f.utf16_codes_ = true;
      } else if (const Stream* s = enc->stream()) {
        try {
          auto cmap = ToUnicodeMap::parse(doc.decode_all(*s));
          if (!cmap.code_lengths().empty()) f.code_lengths_ = cmap.code_lengths();
        } catch (const Error&) {
        }
      }
    }
    const Object* descendants = doc.lookup(font_dict, "DescendantFonts");
    const Dict* cid = nullptr;
    if (descendants && descendants->array() && !descendants->array()->empty()) {
      cid = doc.resolve(descendants->array()->front()).dict();
    }
    if (cid) {
      if (const Object* dw = doc.lookup(*cid, "DW")) f.default_width_ = dw->number().value_or(1000.0);
      if (const Object* w = doc.lookup(*cid, "W"); w && w->array()) {
        const Array& arr = *w->array();
        std::size_t i = 0;
        while (i < arr.size()) {
          auto first = doc.resolve(arr[i]).integer();
          if (!first || i + 1 >= arr.size()) break;
          const Object& next = doc.resolve(arr[i + 1]);
          if (const Array* list = next.array()) {
            std::uint32_t c = static_cast<std::uint32_t>(*first);
            for (const Object& wv : *list) f.widths_[c++] = doc.resolve(wv).number().value_or(f.default_width_);
            i += 2;
          } else if (i + 2 < arr.size()) {
            auto last = next.integer();
            auto width = doc.resolve(arr[i + 2]).number();
            if (last && width && *last >= *first && *last - *first < 65536) {
              for (auto c = *first; c <= *last; ++c) f.widths_[static_cast<std::uint32_t>(c)] = *width;
            }
            i += 3;
          } else {
            break;
          }
        }
      }
    }
    return f;
  }

  f.code_lengths_ = {1};
  if (subtype && subtype->is_name("Type3")) {
    if (const Object* fm = doc.lookup(font_dict, "FontMatrix"); fm && fm->array() && !fm->array()->empty()) {
      f.width_scale_ = doc.resolve(fm->array()->front()).number().value_or(0.001);
    }
    f.default_width_ = 0.0;
  }
  if (const Object* fd = doc.lookup(font_dict, "FontDescriptor"); fd && fd->dict()) {
    if (const Object* mw = doc.lookup(*fd->dict(), "MissingWidth")) {
      if (auto v = mw->number(); v && *v > 0) f.default_width_ = *v;
    }
  }
  const auto first_char = doc.lookup(font_dict, "FirstChar") ? doc.lookup(font_dict, "FirstChar")->integer() : std::nullopt;
  if (const Object* w = doc.lookup(font_dict, "Widths"); w && w->array() && first_char) {
    std::uint32_t c = static_cast<std::uint32_t>(std::max<std::int64_t>(0, *first_char));
    for (const Object& wv : *w->array()) f.widths_[c++] = doc.resolve(wv).number().value_or(f.default_width_);
  }
  if (const Object* enc = doc.lookup(font_dict, "Encoding"); enc && enc->dict()) {
    if (const Object* diffs = doc.lookup(*enc->dict(), "Differences"); diffs && diffs->array()) {
      int code = 0;
      for (const Object& d : *diffs->array()) {
        const Object& r = doc.resolve(d);
        if (auto n = r.integer()) {
          code = static_cast<int>(*n);
        } else if (const std::string* gname = r.name()) {
          f.differences_[code++] = glyph_name_to_unicode(*gname);
        }
      }
    }
  }
  return f;
}

std::vector<CharCode> Font::split(std::string_view bytes) const {
  std::vector<CharCode> out;
  if (!composite_) {
    out.reserve(bytes.size());
    for (unsigned char c : bytes) out.push_back({c, 1});
    return out;
  }
  const std::vector<int>& lengths = code_lengths_;
  std::size_t i = 0;
  while (i < bytes.size()) {
    int len = lengths.empty() ? 2 : lengths.back();
    if (lengths.size() > 1) {
      // Variable-width encodings: prefer the shortest length whose code is mapped.
      for (int l : lengths) {
        std::u32string tmp;
        if (i + static_cast<std::size_t>(l) <= bytes.size() &&
            to_unicode_.lookup(code_value(bytes.substr(i, static_cast<std::size_t>(l))), tmp)) {
          len = l;
          break;
        }
      }
    }
    len = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(len), bytes.size() - i));
    out.push_back({code_value(bytes.substr(i, static_cast<std::size_t>(len))), len});
    i += static_cast<std::size_t>(len);
  }
  return out;
}

double Font::advance(const CharCode& c) const {
  auto it = widths_.find(c.code);
  const double w = it == widths_.end() ? default_width_ : it->second;
  return w * width_scale_;
}

std::u32string Font::to_unicode(const CharCode& c) const {
  std::u32string out;
  if (to_unicode_.lookup(c.code, out)) return out;
  if (composite_) {
    if (utf16_codes_) return std::u32string(1, static_cast<char32_t>(c.code));
    return U"�";
  }
  if (auto it = differences_.find(static_cast<int>(c.code)); it != differences_.end()) {
    return std::u32string(1, it->second);
  }
  if (c.code >= 0x80 && c.code < 0xA0) return std::u32string(1, kWinAnsiHigh[c.code - 0x80]);
  if (c.code < 0x20) return U"";
  return std::u32string(1, static_cast<char32_t>(c.code));
}

}  // namespace pdfmine::pdf
