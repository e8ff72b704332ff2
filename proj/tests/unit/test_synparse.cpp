#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "ncc/error.hpp"
#include "ncc/synparse.hpp"

using namespace ncc::syn;
using ncc::ErrorCode;

namespace {

ErrorCode lex_error(std::string_view src) {
  try {
    build_sketch(lex(src));
  } catch (const ncc::Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << src);
  return ErrorCode::BadConfig;
}

std::vector<std::string> line_tokens(const Block& b, std::vector<std::string> acc = {}) {
  for (const auto& l : b.lines) {
    std::string s;
    for (const auto& t : l.tokens) s += t + " ";
    acc.push_back(s);
    if (l.child) acc = line_tokens(*l.child, acc);
  }
  return acc;
}

int max_depth(const Block& b) {
  int d = 0;
  for (const auto& l : b.lines) {
    if (l.child) d = std::max(d, max_depth(*l.child));
  }
  return d + 1;
}

// Random well-formed sources: nested blocks, comments, blank lines, strings,
// brackets spanning lines and tab indentation.
std::string random_source(std::mt19937& gen) {
  static const std::vector<std::string> atoms{"x", "foo_1", "42", "3.5", "'s'", "\"d\\\"q\"", "(a, b)",
                                              "[1,\n 2]", "y.z", "-", "**", "//", ">=", "->", "%", "@"};
  std::string out;
  std::vector<int> levels{0};
  const int lines = 1 + static_cast<int>(gen() % 12);
  bool need_block = false;
  for (int i = 0; i < lines || need_block; ++i) {
    int level;
    if (need_block) {
      level = levels.back() + 1 + static_cast<int>(gen() % 4);
      levels.push_back(level);
    } else {
      const auto pop = gen() % levels.size();
      levels.resize(levels.size() - pop);
      level = levels.back();
    }
    if (gen() % 5 == 0) out += "\n";
    if (gen() % 6 == 0) out += std::string(static_cast<std::size_t>(level), ' ') + "# note\n";
    out += level >= 8 && gen() % 2 ? "\t" + std::string(static_cast<std::size_t>(level - 8), ' ')
                                   : std::string(static_cast<std::size_t>(level), ' ');
    const auto n = 1 + gen() % 4;
    for (std::size_t j = 0; j < n; ++j) out += atoms[gen() % atoms.size()] + " ";
    need_block = i + 1 < lines + 3 && gen() % 3 == 0 && levels.size() < 5;
    if (need_block) out += ":";
    out += gen() % 4 == 0 ? "  # trailing\n" : "\n";
  }
  return out;
}

}  // namespace

TEST_SUITE("synparse") {
  TEST_CASE("lex a flat line") {
    const auto toks = lex("x = 1");
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].kind == TokenKind::ident);
    CHECK(toks[0].text == "x");
    CHECK(toks[1].kind == TokenKind::op);
    CHECK(toks[2].kind == TokenKind::number);
    CHECK(toks[3].kind == TokenKind::newline);
    CHECK(toks[3].text.empty());
  }

  TEST_CASE("lex a nested block") {
    const auto toks = lex("def f():\n  return 1");
    std::vector<TokenKind> kinds;
    std::vector<std::string> texts;
    for (const auto& t : toks) {
      kinds.push_back(t.kind);
      texts.push_back(t.text);
    }
    using K = TokenKind;
    CHECK(kinds == std::vector<K>{K::ident, K::ident, K::op, K::op, K::op, K::newline, K::indent, K::ident,
                                  K::number, K::newline, K::dedent});
    CHECK(texts == std::vector<std::string>{"def", "f", "(", ")", ":", "", "", "return", "1", "", ""});
  }

  TEST_CASE("dedent to an unknown level") {
    try {
      lex("if x:\n    y\n  z");
      FAIL("expected DedentMismatch");
    } catch (const ncc::Error& e) {
      CHECK(e.code() == ErrorCode::DedentMismatch);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("literals, operators and comments") {
    const auto toks = lex("a **= b // 2.5e3 -> 'x\\'y' # c\n");
    std::vector<std::string> texts;
    for (const auto& t : toks) texts.push_back(t.text);
    CHECK(texts == std::vector<std::string>{"a", "**", "=", "b", "//", "2.5e3", "->", "'x\\'y'", ""});
    CHECK(lex("# only a comment\n\n   \n").empty());
    CHECK(lex_error("s = 'abc") == ErrorCode::UnterminatedString);
  }

  TEST_CASE("tabs advance to the next multiple of eight") {
    const auto toks = lex("if a:\n\tb\n        c\n");
    CHECK(std::count_if(toks.begin(), toks.end(), [](const LexToken& t) { return t.kind == TokenKind::indent; }) == 1);
    CHECK(std::count_if(toks.begin(), toks.end(), [](const LexToken& t) { return t.kind == TokenKind::dedent; }) == 1);
  }

  TEST_CASE("build_sketch examples") {
    const auto flat = build_sketch(lex("x = 1"));
    REQUIRE(flat.root.lines.size() == 1);
    CHECK_FALSE(flat.root.lines[0].child.has_value());
    CHECK(flat.depth() == 1);

    const auto def = build_sketch(lex("def f():\n  return 1"));
    REQUIRE(def.root.lines.size() == 1);
    CHECK(def.root.lines[0].tokens == std::vector<std::string>{"def", "f", "(", ")", ":"});
    REQUIRE(def.root.lines[0].child.has_value());
    REQUIRE(def.root.lines[0].child->lines.size() == 1);
    CHECK(def.root.lines[0].child->lines[0].tokens == std::vector<std::string>{"return", "1"});
    CHECK(def.depth() == 2);

    CHECK(lex_error("if a:\nb") == ErrorCode::ColonWithoutBlock);
    CHECK(lex_error("if a:") == ErrorCode::ColonWithoutBlock);
  }

  TEST_CASE("linearize examples") {
    CHECK(linearize_source("x = 1") == std::vector<std::string>{"x", "=", "1", "<NEWLINE>"});
    CHECK(linearize_source("def f():\n  return 1") ==
          std::vector<std::string>{"def", "f", "(", ")", ":", "<NEWLINE>", "<INDENT>", "return", "1", "<NEWLINE>",
                                   "<DEDENT>"});
  }

  TEST_CASE("random sources: round trip, balance, multiset, positions, depth") {
    std::mt19937 gen(2024);
    for (int trial = 0; trial < 300; ++trial) {
      const auto src = random_source(gen);
      CAPTURE(src);
      const auto toks = lex(src);

      int open = 0;
      for (const auto& t : toks) {
        if (t.kind == TokenKind::indent) ++open;
        if (t.kind == TokenKind::dedent) --open;
        CHECK(open >= 0);
        if (t.structural()) CHECK(t.text.empty());
      }
      CHECK(open == 0);

      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (toks[i].structural() || toks[i - 1].structural()) continue;
        CHECK(std::make_pair(toks[i - 1].line, toks[i - 1].col) < std::make_pair(toks[i].line, toks[i].col));
      }

      const auto sketch = build_sketch(toks);
      const auto flat = linearize(sketch);

      std::map<std::string, int> from_lex, from_lin;
      for (const auto& t : toks) {
        if (!t.structural()) ++from_lex[t.text];
      }
      for (const auto& t : flat) {
        if (t != newline_marker && t != indent_marker && t != dedent_marker) ++from_lin[t];
      }
      CHECK(from_lex == from_lin);

      const auto again = build_sketch(lex(render_source(flat)));
      CHECK(again == sketch);
      CHECK(line_tokens(again.root) == line_tokens(sketch.root));
      CHECK(sketch.depth() == max_depth(sketch.root));
    }
  }
}
