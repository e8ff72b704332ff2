#include "ncc/tokenizer.hpp"

#include "ncc/error.hpp"
#include "ncc/synparse.hpp"

namespace ncc {

namespace fs = std::filesystem;

void Tokenizer::fit(const std::vector<std::string>&, const nlohmann::json&) {}

std::string Tokenizer::detokenize(const std::vector<std::string>& tokens) const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

void Tokenizer::save(const fs::path&, std::string_view) const {}
void Tokenizer::load(const fs::path&, std::string_view) {}

fs::path merges_path(const fs::path& dir, std::string_view stem) {
  return dir / (stem.empty() ? std::string("merges.txt") : "merges." + std::string(stem) + ".txt");
}

// ---------------------------------------------------------------------------

void BpeTokenizer::fit(const std::vector<std::string>& texts, const nlohmann::json& options) {
  TokenCounts words;
  for (const auto& text : texts) {
    for (auto& w : space_tokenize(text)) ++words[w];
  }
  const int num_merges = options.value("num_merges", 1000);
  const std::int64_t min_pair_freq = options.value("min_pair_freq", std::int64_t{2});
  merges_ = bpe_train(words, num_merges, min_pair_freq);
}

std::vector<std::string> BpeTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& w : space_tokenize(text)) {
    for (auto& s : bpe_encode(w, merges_)) out.push_back(std::move(s));
  }
  return out;
}

std::string BpeTokenizer::detokenize(const std::vector<std::string>& tokens) const {
  std::string out = bpe_decode(tokens);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

void BpeTokenizer::save(const fs::path& dir, std::string_view stem) const {
  save_merges(merges_path(dir, stem), merges_);
}

void BpeTokenizer::load(const fs::path& dir, std::string_view stem) { merges_ = load_merges(merges_path(dir, stem)); }

// ---------------------------------------------------------------------------

namespace {

std::string escape_breaks(std::string s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
    } else if (c == '\r') {
      out += "\\r";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> LinearizeTokenizer::tokenize(std::string_view text) const {
  auto tokens = syn::linearize_source(text);
  for (auto& t : tokens) t = escape_breaks(std::move(t));
  return tokens;
}

std::vector<std::string> LinearizeTokenizer::tokenize_prefix(std::string_view text) const {
  // The lexer's token stream already is the pre-order walk, and skipping the
  // sketch lets a trailing "if x:" through without its block.
  std::vector<std::string> tokens;
  for (const auto& t : syn::lex(text)) {
    switch (t.kind) {
      case syn::TokenKind::newline: tokens.emplace_back(syn::newline_marker); break;
      case syn::TokenKind::indent: tokens.emplace_back(syn::indent_marker); break;
      case syn::TokenKind::dedent: tokens.emplace_back(syn::dedent_marker); break;
      default: tokens.push_back(escape_breaks(t.text));
    }
  }
  while (!tokens.empty() && (tokens.back() == syn::dedent_marker || tokens.back() == syn::newline_marker)) {
    tokens.pop_back();
  }
  return tokens;
}

std::string LinearizeTokenizer::detokenize(const std::vector<std::string>& tokens) const {
  return syn::render_source(tokens);
}

}  // namespace ncc
