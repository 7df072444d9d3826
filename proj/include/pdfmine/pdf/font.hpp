#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdfmine/pdf/document.hpp"

namespace pdfmine::pdf {

/// Character-code to Unicode mapping parsed from a ToUnicode CMap stream.
class ToUnicodeMap {
 public:
  static ToUnicodeMap parse(std::string_view cmap);

  bool empty() const { return map_.empty() && ranges_.empty(); }
  /// Byte lengths permitted by the codespace ranges (empty when none were declared).
  const std::vector<int>& code_lengths() const { return code_lengths_; }
  bool lookup(std::uint32_t code, std::u32string& out) const;

 private:
  struct Range {
    std::uint32_t lo, hi;
    std::u32string base;  // destination for lo; last code unit increments
  };
  std::map<std::uint32_t, std::u32string> map_;
  std::vector<Range> ranges_;
  std::vector<int> code_lengths_;
};

struct CharCode {
  std::uint32_t code = 0;
  int length = 1;
};

/// Just enough font knowledge for text placement: code splitting, advance widths
/// and Unicode mapping. Glyph outlines are never loaded.
class Font {
 public:
  static Font load(const Document& doc, const Dict& font_dict);

  std::vector<CharCode> split(std::string_view bytes) const;
  /// Advance in text-space units per unit font size.
  double advance(const CharCode& c) const;
  std::u32string to_unicode(const CharCode& c) const;
  /// True when word spacing applies (single-byte code 32).
  bool is_word_space(const CharCode& c) const { return c.length == 1 && c.code == 32; }
  bool composite() const { return composite_; }

 private:
  bool composite_ = false;
  bool utf16_codes_ = false;
  std::vector<int> code_lengths_;
  ToUnicodeMap to_unicode_;
  std::map<std::uint32_t, double> widths_;  // glyph-space units (1/1000 em for non-Type3)
  double default_width_ = 500.0;
  double width_scale_ = 0.001;
  std::map<int, char32_t> differences_;
};

/// Maps an Adobe glyph name to Unicode for common names (uniXXXX, ASCII letters, digits, punctuation).
char32_t glyph_name_to_unicode(std::string_view name);

}  // namespace pdfmine::pdf
