#include "ncc/synparse.hpp"

#include <algorithm>
#include <array>

#include "ncc/error.hpp"

namespace ncc::syn {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::ident: return "ident";
    case TokenKind::number: return "number";
    case TokenKind::string: return "string";
    case TokenKind::op: return "op";
    case TokenKind::newline: return "newline";
    case TokenKind::indent: return "indent";
    case TokenKind::dedent: return "dedent";
  }
  return "unknown";
}

namespace {

constexpr std::array<std::string_view, 9> two_char_ops = {"==", "!=", "<=", ">=", "->", "**", "//", "+=", "-="};
constexpr std::string_view one_char_ops = "()[]{}:,.=+-*/<>%";

bool is_ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }

std::size_t utf8_width(unsigned char lead) {
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<LexToken> run() {
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_line_start()) continue;
      }
      scan_token();
    }
    if (!at_line_start_) emit(TokenKind::newline, "", line_, col());
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::dedent, "", line_, 1);
    }
    return std::move(out_);
  }

 private:
  int col() const { return static_cast<int>(pos_ - line_begin_) + 1; }

  void emit(TokenKind kind, std::string text, int line, int col) {
    out_.push_back({kind, std::move(text), line, col});
  }

  void next_line() {
    ++pos_;
    ++line_;
    line_begin_ = pos_;
  }

  // Measures indentation of the physical line at pos_. Returns false when the
  // line is blank or comment-only (it is consumed entirely).
  bool handle_line_start() {
    int width = 0;
    std::size_t p = pos_;
    for (; p < src_.size(); ++p) {
      const char c = src_[p];
      if (c == ' ') {
        ++width;
      } else if (c == '\t') {
        width = (width / tab_width + 1) * tab_width;
      } else if (c == '\f') {
        width = 0;
      } else {
        break;
      }
    }
    if (p >= src_.size()) {
      pos_ = p;
      return false;
    }
    if (src_[p] == '\n' || src_[p] == '\r' || src_[p] == '#') {
      while (p < src_.size() && src_[p] != '\n') ++p;
      pos_ = p;
      if (pos_ < src_.size()) next_line();
      return false;
    }
    pos_ = p;
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenKind::indent, "", line_, 1);
    } else if (width < indents_.back()) {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::dedent, "", line_, 1);
      }
      if (width != indents_.back()) {
        throw Error(ErrorCode::DedentMismatch, "line " + std::to_string(line_) +
                                                   ": unindent does not match any outer indentation level");
      }
    }
    return true;
  }

  void scan_token() {
    const char c = src_[pos_];
    if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
      ++pos_;
      return;
    }
    if (c == '\n') {
      if (depth_ == 0) {
        emit(TokenKind::newline, "", line_, col());
        at_line_start_ = true;
      }
      next_line();
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
      ++pos_;
      if (src_[pos_] == '\r') ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '\n') next_line();
      return;
    }

    const int line = line_;
    const int start_col = col();
    const std::size_t start = pos_;
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      emit(TokenKind::ident, std::string(src_.substr(start, pos_ - start)), line, start_col);
    } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      scan_number();
      emit(TokenKind::number, std::string(src_.substr(start, pos_ - start)), line, start_col);
    } else if (c == '"' || c == '\'') {
      scan_string(c);
      emit(TokenKind::string, std::string(src_.substr(start, pos_ - start)), line, start_col);
    } else {
      std::size_t len = 0;
      const auto rest = src_.substr(pos_);
      if (std::any_of(two_char_ops.begin(), two_char_ops.end(), [&](auto op) { return rest.starts_with(op); })) {
        len = 2;
      } else if (static_cast<unsigned char>(c) >= 0x80) {
        len = std::min(utf8_width(static_cast<unsigned char>(c)), rest.size());
      } else {
        len = 1;
        if (one_char_ops.find(c) != std::string_view::npos) {
          if (c == '(' || c == '[' || c == '{') ++depth_;
          if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
        }
      }
      pos_ += len;
      emit(TokenKind::op, std::string(rest.substr(0, len)), line, start_col);
    }
  }

  void scan_number() {
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(src_[pos_]) || src_[pos_] == '_')) ++pos_;
    };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      pos_ += 2;
      digits(is_hex);
      return;
    }
    digits(is_digit);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits(is_digit);
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        pos_ = p;
        digits(is_digit);
      }
    }
    if (pos_ < src_.size() && std::string_view("jJlL").find(src_[pos_]) != std::string_view::npos) ++pos_;
  }

  void scan_string(char quote) {
    const int start_line = line_;
    const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    pos_ += triple ? 3 : 1;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
          ++pos_;
          next_line();
        } else {
          pos_ += 2;
        }
        continue;
      }
      if (triple) {
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          pos_ += 3;
          return;
        }
        if (c == '\n') {
          next_line();
          continue;
        }
      } else {
        if (c == quote) {
          ++pos_;
          return;
        }
        if (c == '\n') break;
      }
      ++pos_;
    }
    throw Error(ErrorCode::UnterminatedString, "line " + std::to_string(start_line) + ": unterminated string literal");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_begin_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<LexToken> out_;
};

class SketchBuilder {
 public:
  explicit SketchBuilder(const std::vector<LexToken>& tokens) : toks_(tokens) {}

  Block parse_block(bool root) {
    Block block;
    while (pos_ < toks_.size()) {
      const auto& t = toks_[pos_];
      if (t.kind == TokenKind::dedent) {
        if (root) throw Error(ErrorCode::DedentMismatch, "line " + std::to_string(t.line) + ": unbalanced dedent");
        return block;
      }
      if (t.kind == TokenKind::indent) {
        throw Error(ErrorCode::UnexpectedIndent, "line " + std::to_string(t.line) + ": indented block has no owning line");
      }
      if (t.kind == TokenKind::newline) {
        ++pos_;
        continue;
      }
      block.lines.push_back(parse_line());
    }
    if (!root) throw Error(ErrorCode::DedentMismatch, "unexpected end of input inside an indented block");
    return block;
  }

 private:
  Line parse_line() {
    Line line;
    const int line_no = toks_[pos_].line;
    bool ends_with_colon = false;
    while (pos_ < toks_.size() && !toks_[pos_].structural()) {
      ends_with_colon = toks_[pos_].kind == TokenKind::op && toks_[pos_].text == ":";
      line.tokens.push_back(toks_[pos_].text);
      ++pos_;
    }
    if (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::newline) ++pos_;
    if (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::indent) {
      ++pos_;
      line.child = parse_block(false);
      ++pos_;  // matching dedent
    } else if (ends_with_colon) {
      throw Error(ErrorCode::ColonWithoutBlock, "line " + std::to_string(line_no) + ": expected an indented block after ':'");
    }
    return line;
  }

  const std::vector<LexToken>& toks_;
  std::size_t pos_ = 0;
};

int block_depth(const Block& block) {
  int deepest = 0;
  for (const auto& line : block.lines) {
    if (line.child) deepest = std::max(deepest, block_depth(*line.child));
  }
  return deepest + 1;
}

void linearize_into(const Block& block, std::vector<std::string>& out) {
  for (const auto& line : block.lines) {
    out.insert(out.end(), line.tokens.begin(), line.tokens.end());
    out.emplace_back(newline_marker);
    if (line.child) {
      out.emplace_back(indent_marker);
      linearize_into(*line.child, out);
      out.emplace_back(dedent_marker);
    }
  }
}

}  // namespace

std::vector<LexToken> lex(std::string_view source) { return Lexer(source).run(); }

int SyntaxSketch::depth() const { return block_depth(root); }

SyntaxSketch build_sketch(const std::vector<LexToken>& tokens) {
  SketchBuilder builder(tokens);
  return SyntaxSketch{builder.parse_block(true)};
}

std::vector<std::string> linearize(const SyntaxSketch& sketch) {
  std::vector<std::string> out;
  linearize_into(sketch.root, out);
  return out;
}

std::string render_source(const std::vector<std::string>& linearized, int indent_width) {
  std::string out;
  std::string current;
  int depth = 0;
  for (const auto& tok : linearized) {
    if (tok == newline_marker) {
      out.append(static_cast<std::size_t>(depth * indent_width), ' ');
      out += current;
      out += '\n';
      current.clear();
    } else if (tok == indent_marker) {
      ++depth;
    } else if (tok == dedent_marker) {
      depth = std::max(0, depth - 1);
    } else {
      if (!current.empty()) current += ' ';
      current += tok;
    }
  }
  if (!current.empty()) {
    out.append(static_cast<std::size_t>(depth * indent_width), ' ');
    out += current;
    out += '\n';
  }
  return out;
}

std::vector<std::string> linearize_source(std::string_view source) { return linearize(build_sketch(lex(source))); }

bool operator==(const Block& a, const Block& b) { return a.lines == b.lines; }

bool operator==(const Line& a, const Line& b) { return a.tokens == b.tokens && a.child == b.child; }

bool operator==(const SyntaxSketch& a, const SyntaxSketch& b) { return a.root == b.root; }

}  // namespace ncc::syn
