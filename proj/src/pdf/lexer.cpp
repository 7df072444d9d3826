#include "pdfmine/pdf/lexer.hpp"

#include <cstdlib>

#include "pdfmine/error.hpp"

namespace pdfmine::pdf {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr int kMaxDepth = 256;

}  // namespace

void Lexer::skip_whitespace() {
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
    } else {
      break;
    }
  }
}

Token Lexer::peek() {
  const std::size_t saved = pos_;
  Token t = next();
  pos_ = saved;
  return t;
}

Token Lexer::next() {
  skip_whitespace();
  Token tok;
  tok.offset = pos_;
  if (pos_ >= data_.size()) return tok;
  const char c = data_[pos_];
  switch (c) {
    case '(':
      return read_literal_string(pos_);
    case '<':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
        pos_ += 2;
        tok.kind = Token::Kind::DictOpen;
        return tok;
      }
      return read_hex_string(pos_);
    case '>':
      if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
        pos_ += 2;
        tok.kind = Token::Kind::DictClose;
        return tok;
      }
      ++pos_;
      tok.kind = Token::Kind::Keyword;
      tok.text = ">";
      return tok;
    case '[':
      ++pos_;
      tok.kind = Token::Kind::ArrayOpen;
      return tok;
    case ']':
      ++pos_;
      tok.kind = Token::Kind::ArrayClose;
      return tok;
    case '/':
      return read_name(pos_);
    case '{':
    case '}':
    case ')':
      ++pos_;
      tok.kind = Token::Kind::Keyword;
      tok.text = std::string(1, c);
      return tok;
    default:
      return read_regular(pos_);
  }
}

Token Lexer::read_literal_string(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::String;
  tok.offset = start;
  pos_ = start + 1;
  int depth = 1;
  std::string out;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '(': out.push_back('('); break;
        case ')': out.push_back(')'); break;
        case '\\': out.push_back('\\'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n':
          break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
              v = v * 8 + (data_[pos_++] - '0');
            }
            out.push_back(static_cast<char>(v & 0xFF));
          } else {
            out.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) {
        tok.text = std::move(out);
        return tok;
      }
      out.push_back(c);
    } else if (c == '\r') {
      if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
      out.push_back('\n');
    } else {
      out.push_back(c);
    }
  }
  throw Error(ErrorCode::ParseFailure, "unterminated literal string");
}

Token Lexer::read_hex_string(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::String;
  tok.offset = start;
  pos_ = start + 1;
  std::string out;
  int pending = -1;
  while (pos_ < data_.size()) {
    const char c = data_[pos_++];
    if (c == '>') {
      if (pending >= 0) out.push_back(static_cast<char>(pending << 4));
      tok.text = std::move(out);
      return tok;
    }
    if (is_whitespace(c)) continue;
    const int v = hex_value(c);
    if (v < 0) throw Error(ErrorCode::ParseFailure, "invalid hex string");
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<char>((pending << 4) | v));
      pending = -1;
    }
  }
  throw Error(ErrorCode::ParseFailure, "unterminated hex string");
}

Token Lexer::read_name(std::size_t start) {
  Token tok;
  tok.kind = Token::Kind::Name;
  tok.offset = start;
  pos_ = start + 1;
  std::string out;
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_whitespace(c) || is_delimiter(c)) break;
    ++pos_;
    if (c == '#' && pos_ + 1 < data_.size() && hex_value(data_[pos_]) >= 0 && hex_value(data_[pos_ + 1]) >= 0) {
      out.push_back(static_cast<char>(hex_value(data_[pos_]) * 16 + hex_value(data_[pos_ + 1])));
      pos_ += 2;
    } else {
      out.push_back(c);
    }
  }
  tok.text = std::move(out);
  return tok;
}

Token Lexer::read_regular(std::size_t start) {
  Token tok;
  tok.offset = start;
  pos_ = start;
  while (pos_ < data_.size() && !is_whitespace(data_[pos_]) && !is_delimiter(data_[pos_])) ++pos_;
  if (pos_ == start) {
    // Lone delimiter that nothing above consumed.
    ++pos_;
  }
  const std::string_view word = data_.substr(start, pos_ - start);
  bool numeric = !word.empty();
  bool has_dot = false;
  bool has_digit = false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char c = word[i];
    if (c >= '0' && c <= '9') {
      has_digit = true;
    } else if (c == '.' && !has_dot) {
      has_dot = true;
    } else if ((c == '-' || c == '+') && i == 0) {
    } else {
      numeric = false;
      break;
    }
  }
  if (numeric && has_digit) {
    const std::string s(word);
    if (has_dot) {
      tok.kind = Token::Kind::Real;
      tok.real = std::strtod(s.c_str(), nullptr);
    } else {
      tok.kind = Token::Kind::Integer;
      errno = 0;
      tok.integer = std::strtoll(s.c_str(), nullptr, 10);
      tok.real = static_cast<double>(tok.integer);
      if (errno == ERANGE) {
        tok.kind = Token::Kind::Real;
        tok.real = std::strtod(s.c_str(), nullptr);
      }
    }
    return tok;
  }
  tok.kind = Token::Kind::Keyword;
  tok.text = std::string(word);
  return tok;
}

Object Parser::parse_object() { return parse_with_depth(lexer_.next(), 0); }

Object Parser::parse_from(Token first) { return parse_with_depth(std::move(first), 0); }

Object Parser::parse_with_depth(Token tok, int depth) {
  if (depth > kMaxDepth) throw Error(ErrorCode::ParseFailure, "object nesting too deep");
  switch (tok.kind) {
    case Token::Kind::End:
      throw Error(ErrorCode::ParseFailure, "unexpected end of data");
    case Token::Kind::Integer: {
      // Lookahead for an indirect reference "num gen R".
      const std::size_t saved = lexer_.pos();
      Token gen = lexer_.next();
      if (gen.kind == Token::Kind::Integer) {
        Token r = lexer_.next();
        if (r.kind == Token::Kind::Keyword && r.text == "R" && tok.integer >= 0 && gen.integer >= 0 &&
            tok.integer <= INT32_MAX && gen.integer <= 65535) {
          return Object(Ref{static_cast<int>(tok.integer), static_cast<int>(gen.integer)});
        }
      }
      lexer_.seek(saved);
      return Object(tok.integer);
    }
    case Token::Kind::Real:
      return Object(tok.real);
    case Token::Kind::String:
      return Object(PdfString{std::move(tok.text)});
    case Token::Kind::Name:
      return Object(Name{std::move(tok.text)});
    case Token::Kind::ArrayOpen: {
      Array arr;
      for (;;) {
        Token t = lexer_.next();
        if (t.kind == Token::Kind::ArrayClose) break;
        if (t.kind == Token::Kind::End) throw Error(ErrorCode::ParseFailure, "unterminated array");
        arr.push_back(parse_with_depth(std::move(t), depth + 1));
      }
      return Object(std::move(arr));
    }
    case Token::Kind::DictOpen: {
      Dict dict;
      for (;;) {
        Token key = lexer_.next();
        if (key.kind == Token::Kind::DictClose) break;
        if (key.kind == Token::Kind::End) throw Error(ErrorCode::ParseFailure, "unterminated dictionary");
        if (key.kind != Token::Kind::Name) {
          // Tolerate junk keys by skipping them.
          if (key.kind == Token::Kind::Keyword && (key.text == "endobj" || key.text == "stream")) {
            throw Error(ErrorCode::ParseFailure, "unterminated dictionary");
          }
          continue;
        }
        Token val = lexer_.next();
        if (val.kind == Token::Kind::DictClose) {
          dict.insert_or_assign(std::move(key.text), Object());
          break;
        }
        dict.insert_or_assign(std::move(key.text), parse_with_depth(std::move(val), depth + 1));
      }
      return Object(std::move(dict));
    }
    case Token::Kind::Keyword:
      if (tok.text == "true") return Object(true);
      if (tok.text == "false") return Object(false);
      if (tok.text == "null") return Object();
      throw Error(ErrorCode::ParseFailure, "unexpected keyword '" + tok.text + "'");
    case Token::Kind::ArrayClose:
    case Token::Kind::DictClose:
      throw Error(ErrorCode::ParseFailure, "unexpected closing delimiter");
  }
  throw Error(ErrorCode::ParseFailure, "unreachable token");
}

Parser::Indirect Parser::parse_indirect() {
  Token num = lexer_.next();
  Token gen = lexer_.next();
  Token kw = lexer_.next();
  if (num.kind != Token::Kind::Integer || gen.kind != Token::Kind::Integer || kw.kind != Token::Kind::Keyword ||
      kw.text != "obj" || num.integer < 0 || num.integer > INT32_MAX) {
    throw Error(ErrorCode::ParseFailure, "expected indirect object header");
  }
  Indirect result;
  result.ref = Ref{static_cast<int>(num.integer), static_cast<int>(gen.integer)};
  Token first = lexer_.next();
  if (first.kind == Token::Kind::Keyword && first.text == "endobj") {
    result.end = lexer_.pos();
    return result;
  }
  result.object = parse_from(std::move(first));
  const std::size_t after_obj = lexer_.pos();
  Token next = lexer_.next();
  if (next.kind == Token::Kind::Keyword && next.text == "stream") {
    const Dict* dict = result.object.dict();
    if (!dict) throw Error(ErrorCode::ParseFailure, "stream without dictionary");
    Stream s;
    s.dict = *dict;
    s.raw = read_stream_payload(s.dict);
    result.object = Object(std::move(s));
    next = lexer_.next();
  }
  if (next.kind == Token::Kind::Keyword && next.text == "endobj") {
    result.end = lexer_.pos();
  } else {
    // Missing endobj is common in damaged files; stop right after the object.
    result.end = next.kind == Token::Kind::End ? lexer_.pos() : after_obj;
    if (result.object.stream()) result.end = lexer_.pos();
  }
  return result;
}

std::string Parser::read_stream_payload(const Dict& dict) {
  const std::string_view data = lexer_.data();
  std::size_t pos = lexer_.pos();
  // "stream" is followed by CRLF or LF (CR alone tolerated).
  if (pos < data.size() && data[pos] == '\r') ++pos;
  if (pos < data.size() && data[pos] == '\n') ++pos;
  const std::size_t start = pos;

  if (const Object* len = find(dict, "Length")) {
    if (auto n = len->integer(); n && *n >= 0 && start + static_cast<std::size_t>(*n) <= data.size()) {
      std::size_t end = start + static_cast<std::size_t>(*n);
      std::size_t probe = end;
      while (probe < data.size() && Lexer::is_whitespace(data[probe])) ++probe;
      if (data.substr(probe, 9) == "endstream") {
        lexer_.seek(probe + 9);
        return std::string(data.substr(start, end - start));
      }
    }
  }
  const std::size_t found = data.find("endstream", start);
  if (found == std::string_view::npos) throw Error(ErrorCode::ParseFailure, "unterminated stream");
  std::size_t end = found;
  if (end > start && data[end - 1] == '\n') --end;
  if (end > start && data[end - 1] == '\r') --end;
  lexer_.seek(found + 9);
  return std::string(data.substr(start, end - start));
}

}  // namespace pdfmine::pdf
