#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "pdfmine/pdf/object.hpp"

namespace pdfmine::pdf {

struct Token {
  enum class Kind { End, Integer, Real, String, Name, ArrayOpen, ArrayClose, DictOpen, DictClose, Keyword };
  Kind kind = Kind::End;
  std::string text;  // string bytes, name, or keyword
  std::int64_t integer = 0;
  double real = 0.0;
  std::size_t offset = 0;
};

/// Tokenizer shared by the file-structure parser and the content-stream interpreter.
class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  Token next();
  Token peek();
  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  std::string_view data() const { return data_; }
  void skip_whitespace();

  static bool is_whitespace(char c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0';
  }
  static bool is_delimiter(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' ||
           c == '/' || c == '%';
  }

 private:
  Token read_literal_string(std::size_t start);
  Token read_hex_string(std::size_t start);
  Token read_name(std::size_t start);
  Token read_regular(std::size_t start);

  std::string_view data_;
  std::size_t pos_;
};

/// Builds objects from tokens. Throws Error(ParseFailure) on structural problems.
class Parser {
 public:
  explicit Parser(std::string_view data, std::size_t pos = 0) : lexer_(data, pos) {}

  /// Parses one direct object (resolving "n g R" into Ref).
  Object parse_object();
  /// Parses an object given its first token, used by the content interpreter.
  Object parse_from(Token first);

  struct Indirect {
    Ref ref;
    Object object;
    std::size_t end = 0;
  };
  /// Parses "n g obj ... endobj" starting at `pos`, including any stream payload.
  Indirect parse_indirect();

  Lexer& lexer() { return lexer_; }

 private:
  Object parse_with_depth(Token first, int depth);
  std::string read_stream_payload(const Dict& dict);

  Lexer lexer_;
};

}  // namespace pdfmine::pdf
