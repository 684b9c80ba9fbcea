#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "codesft/common.hpp"

namespace codesft::python {

/// Syntax error with a 1-based line and column.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t line, std::size_t col)
      : Error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line_(line),
        col_(col) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return col_; }

 private:
  std::size_t line_;
  std::size_t col_;
};

enum class TokenKind { Name, Keyword, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenKind kind;
  std::string_view text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
  std::size_t line = 1;
  std::size_t col = 1;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool is_op(std::string_view t) const { return is(TokenKind::Op, t); }
  bool is_kw(std::string_view t) const { return is(TokenKind::Keyword, t); }
};

inline constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

inline bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

namespace detail {

inline bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
inline bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Longest operators first.
inline constexpr std::array<std::string_view, 48> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "@",  "=",
    "+",   "-",   "*",   "/",   "%",   "&",  "|",  "^",  "~",  "<",  ">",  "!"};

}  // namespace detail

/// Tokenizes Python source into a stream with explicit NEWLINE, INDENT and
/// DEDENT tokens, following the language's logical-line rules (implicit
/// joining inside brackets, backslash continuation, comment and blank-line
/// elision). Throws SyntaxError on malformed input.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.assign(1, 0);
    at_line_start_ = true;
    while (true) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) break;
      }
      if (pos_ >= src_.size()) break;
      const unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '\\') {
        line_continuation();
        continue;
      }
      if (c == '\r' || c == '\n') {
        newline();
        continue;
      }
      if (c >= '0' && c <= '9') {
        number();
      } else if (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] >= '0' &&
                 src_[pos_ + 1] <= '9') {
        number();
      } else if (detail::ident_start(c)) {
        name_or_string();
      } else if (c == '"' || c == '\'') {
        string(pos_);
      } else {
        op();
      }
    }
    if (depth_ > 0) fail("unexpected EOF: unclosed bracket", pos_);
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline &&
        tokens_.back().kind != TokenKind::Dedent && tokens_.back().kind != TokenKind::Indent) {
      push(TokenKind::Newline, pos_, pos_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::Dedent, pos_, pos_);
    }
    push(TokenKind::EndMarker, pos_, pos_);
    return std::move(tokens_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(msg, line, col);
  }

  void push(TokenKind kind, std::size_t b, std::size_t e) {
    tokens_.push_back(Token{kind, src_.substr(b, e - b), b, e, line_, b - line_begin_ + 1});
  }

  // Returns false when the input is exhausted.
  bool handle_indentation() {
    while (true) {
      std::size_t col = 0;
      std::size_t p = pos_;
      while (p < src_.size()) {
        const char c = src_[p];
        if (c == ' ') {
          ++col;
        } else if (c == '\t') {
          col = (col / 8 + 1) * 8;
        } else if (c == '\f') {
          col = 0;
        } else {
          break;
        }
        ++p;
      }
      if (p >= src_.size()) {
        pos_ = p;
        return false;
      }
      const char c = src_[p];
      if (c == '#' || c == '\n' || c == '\r') {
        // Blank or comment-only line: no indentation semantics.
        pos_ = p;
        if (c == '#') skip_comment();
        if (pos_ < src_.size()) consume_eol();
        continue;
      }
      if (c == '\\') {
        // Backslash at the start of a line joins with the next physical line.
        pos_ = p;
        break;
      }
      pos_ = p;
      at_line_start_ = false;
      if (col > indents_.back()) {
        indents_.push_back(col);
        push(TokenKind::Indent, p, p);
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          push(TokenKind::Dedent, p, p);
        }
        if (col != indents_.back()) fail("unindent does not match any outer indentation level", p);
      }
      return true;
    }
    at_line_start_ = false;
    return true;
  }

  void consume_eol() {
    if (src_[pos_] == '\r') {
      ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
    } else {
      ++pos_;
    }
    ++line_;
    line_begin_ = pos_;
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
  }

  void line_continuation() {
    const auto at = pos_;
    ++pos_;
    if (pos_ >= src_.size()) fail("unexpected EOF after line continuation", at);
    if (src_[pos_] != '\n' && src_[pos_] != '\r') fail("unexpected character after line continuation", at);
    consume_eol();
    if (pos_ >= src_.size()) fail("unexpected EOF after line continuation", at);
  }

  void newline() {
    const auto at = pos_;
    consume_eol();
    if (depth_ > 0) return;
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline &&
        tokens_.back().kind != TokenKind::Indent && tokens_.back().kind != TokenKind::Dedent) {
      tokens_.push_back(Token{TokenKind::Newline, src_.substr(at, 1), at, at + 1, line_ - 1, 1});
    }
    at_line_start_ = true;
  }

  void digits(bool (*ok)(char)) {
    while (pos_ < src_.size() && (ok(src_[pos_]) || src_[pos_] == '_')) ++pos_;
  }

  void number() {
    const auto b = pos_;
    auto is_dec = [](char c) { return c >= '0' && c <= '9'; };
    auto is_hex = [](char c) {
      return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
    };
    auto is_oct = [](char c) { return c >= '0' && c <= '7'; };
    auto is_bin = [](char c) { return c == '0' || c == '1'; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      const char base = static_cast<char>(src_[pos_ + 1] | 0x20);
      pos_ += 2;
      const auto start = pos_;
      digits(base == 'x' ? +is_hex : base == 'o' ? +is_oct : +is_bin);
      if (pos_ == start) fail("invalid number literal", b);
    } else {
      digits(+is_dec);
      const auto int_part = src_.substr(b, pos_ - b);
      bool integer = true;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        integer = false;
        ++pos_;
        digits(+is_dec);
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        auto p = pos_ + 1;
        if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
        if (p < src_.size() && is_dec(src_[p])) {
          integer = false;
          pos_ = p;
          digits(+is_dec);
        } else {
          fail("invalid exponent in number literal", b);
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) {
        integer = false;
        ++pos_;
      }
      if (integer && int_part.size() > 1 && int_part[0] == '0' &&
          int_part.find_first_not_of("0_") != std::string_view::npos)
        fail("leading zeros in decimal integer literals are not permitted", b);
    }
    if (pos_ < src_.size() && detail::ident_char(static_cast<unsigned char>(src_[pos_]))) {
      // `1if x else 2` is legal: a keyword may directly follow a number.
      auto p = pos_;
      while (p < src_.size() && detail::ident_char(static_cast<unsigned char>(src_[p]))) ++p;
      if (!is_keyword(src_.substr(pos_, p - pos_))) fail("invalid number literal", b);
    }
    push(TokenKind::Number, b, pos_);
  }

  void name_or_string() {
    const auto b = pos_;
    while (pos_ < src_.size() && detail::ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const auto word = src_.substr(b, pos_ - b);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && word.size() <= 2) {
      std::string lower;
      for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
      static constexpr std::array<std::string_view, 10> prefixes = {
          "r", "u", "b", "f", "br", "rb", "fr", "rf", "t", "tr"};
      if (std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end()) {
        string(b);
        return;
      }
    }
    push(is_keyword(word) ? TokenKind::Keyword : TokenKind::Name, b, pos_);
  }

  // pos_ is at the opening quote; begin includes any prefix.
  void string(std::size_t begin) {
    bool raw = false, bytes = false;
    for (auto i = begin; i < pos_; ++i) {
      const char c = static_cast<char>(src_[i] | 0x20);
      raw = raw || c == 'r';
      bytes = bytes || c == 'b';
    }
    const char q = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) fail("unterminated string literal", begin);
      const char c = src_[pos_];
      if (c == '\\') {
        if (!raw) check_escape(begin, bytes);
        if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
          ++pos_;
          consume_eol();
        } else {
          pos_ += 2;
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) fail("unterminated string literal", begin);
        consume_eol();
        continue;
      }
      if (c == q) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    // Line counters moved if the string spanned lines; token line is the start line.
    tokens_.push_back(Token{TokenKind::String, src_.substr(begin, pos_ - begin), begin, pos_,
                            line_, 1});
  }

  // pos_ is at a backslash inside a non-raw literal.
  void check_escape(std::size_t begin, bool bytes) const {
    if (pos_ + 1 >= src_.size()) return;
    const char e = src_[pos_ + 1];
    auto hex_run = [&](std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto p = pos_ + 2 + i;
        if (p >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[p])))
          fail("truncated \\" + std::string(1, e) + " escape", begin);
      }
    };
    if (e == 'x') {
      hex_run(2);
    } else if (!bytes && e == 'u') {
      hex_run(4);
    } else if (!bytes && e == 'U') {
      hex_run(8);
    } else if (!bytes && e == 'N') {
      if (pos_ + 2 >= src_.size() || src_[pos_ + 2] != '{') fail("malformed \\N character escape", begin);
    }
  }

  void op() {
    const auto rest = src_.substr(pos_);
    for (auto o : detail::kOperators) {
      if (starts_with(rest, o)) {
        if (o == "!") break;
        if (o == "(" || o == "[" || o == "{") ++depth_;
        if (o == ")" || o == "]" || o == "}") {
          if (depth_ == 0) fail("unmatched '" + std::string(o) + "'", pos_);
          --depth_;
        }
        push(TokenKind::Op, pos_, pos_ + o.size());
        pos_ += o.size();
        return;
      }
    }
    fail("invalid character '" + std::string(1, src_[pos_]) + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_begin_ = 0;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<std::size_t> indents_;
  std::vector<Token> tokens_;
};

inline std::vector<Token> tokenize_python(std::string_view src) { return Lexer(src).run(); }

}  // namespace codesft::python
