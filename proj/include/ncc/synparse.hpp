#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ncc::syn {

enum class TokenKind { ident, number, string, op, newline, indent, dedent };

std::string_view to_string(TokenKind kind);

struct LexToken {
  TokenKind kind;
  std::string text;  // empty for newline/indent/dedent
  int line = 0;      // 1-based
  int col = 0;       // 1-based byte column

  bool structural() const noexcept {
    return kind == TokenKind::newline || kind == TokenKind::indent || kind == TokenKind::dedent;
  }
};

/// Tab stops used when measuring indentation.
inline constexpr int tab_width = 8;

/// Tokenizes a Python-like source. Comments and blank lines produce nothing;
/// leading whitespace becomes indent/dedent tokens through an indentation
/// stack, and pending dedents are flushed at end of input. Characters outside
/// the operator table are emitted as single-character op tokens.
///
/// Throws DedentMismatch or UnterminatedString (message carries the line).
std::vector<LexToken> lex(std::string_view source);

struct Line;

struct Block {
  std::vector<Line> lines;
};

struct Line {
  std::vector<std::string> tokens;
  /// Present when the line opens an indented region (normally after ':').
  std::optional<Block> child;
};

struct SyntaxSketch {
  Block root;

  /// Number of nested blocks including the root.
  int depth() const;
};

/// Groups logical lines into a block tree. A line ending in ':' owns the
/// indented region that follows it (ColonWithoutBlock otherwise). An indented
/// region after a line without ':' is attached to that line as well; one with
/// no preceding line raises UnexpectedIndent.
SyntaxSketch build_sketch(const std::vector<LexToken>& tokens);

inline constexpr std::string_view newline_marker = "<NEWLINE>";
inline constexpr std::string_view indent_marker = "<INDENT>";
inline constexpr std::string_view dedent_marker = "<DEDENT>";

/// Pre-order traversal: each line's tokens then <NEWLINE>; child blocks are
/// wrapped in <INDENT> ... <DEDENT>.
std::vector<std::string> linearize(const SyntaxSketch& sketch);

/// Renders a linearized stream back into indented source text that lexes to
/// an isomorphic sketch.
std::string render_source(const std::vector<std::string>& linearized, int indent_width = 4);

/// lex -> build_sketch -> linearize.
std::vector<std::string> linearize_source(std::string_view source);

bool operator==(const Block& a, const Block& b);
bool operator==(const Line& a, const Line& b);
bool operator==(const SyntaxSketch& a, const SyntaxSketch& b);

}  // namespace ncc::syn
