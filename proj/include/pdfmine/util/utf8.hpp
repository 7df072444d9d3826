#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pdfmine::util {

/// Decodes UTF-8; invalid sequences become U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_kana(char32_t cp);
bool is_kanji(char32_t cp);
/// Kana, kanji, CJK punctuation and full-width forms.
bool is_cjk(char32_t cp);

std::string trim(std::string_view text);

}  // namespace pdfmine::util
