#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncc/corpus.hpp"

namespace ncc {

/// Text -> token list, possibly with learned state (BPE merges).
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string_view name() const = 0;

  /// Learns whatever the tokenizer needs from training texts. `options` is
  /// the `data` config section.
  virtual void fit(const std::vector<std::string>& texts, const nlohmann::json& options);

  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;

  /// Tokens of an incomplete input, as seen by a completion model.
  virtual std::vector<std::string> tokenize_prefix(std::string_view text) const { return tokenize(text); }

  virtual std::string detokenize(const std::vector<std::string>& tokens) const;

  /// Persists learned state next to a vocabulary; `stem` distinguishes
  /// fields ("code", "doc", ...).
  virtual void save(const std::filesystem::path& dir, std::string_view stem) const;
  virtual void load(const std::filesystem::path& dir, std::string_view stem);
};

using TokenizerFactory = std::function<std::unique_ptr<Tokenizer>()>;

class SpaceTokenizer : public Tokenizer {
 public:
  std::string_view name() const override { return "space"; }
  std::vector<std::string> tokenize(std::string_view text) const override { return space_tokenize(text); }
};

/// Whitespace split, then BPE on every word. Each word's last subtoken
/// carries the end marker, so decoding restores word boundaries.
class BpeTokenizer : public Tokenizer {
 public:
  std::string_view name() const override { return "bpe"; }
  void fit(const std::vector<std::string>& texts, const nlohmann::json& options) override;
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string detokenize(const std::vector<std::string>& tokens) const override;
  void save(const std::filesystem::path& dir, std::string_view stem) const override;
  void load(const std::filesystem::path& dir, std::string_view stem) override;

  const MergeTable& merges() const noexcept { return merges_; }
  void set_merges(MergeTable table) { merges_ = std::move(table); }

 private:
  MergeTable merges_;
};

/// Lexes Python-like source and emits its linearized block tree. Line
/// breaks inside string literals are written as the two characters "\n" so
/// that every token stays on one vocabulary line.
class LinearizeTokenizer : public Tokenizer {
 public:
  std::string_view name() const override { return "linearize"; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  /// Drops the closing <NEWLINE>/<DEDENT> markers of the last line, which
  /// the user has not finished typing.
  std::vector<std::string> tokenize_prefix(std::string_view text) const override;
  std::string detokenize(const std::vector<std::string>& tokens) const override;
};

std::filesystem::path merges_path(const std::filesystem::path& dir, std::string_view stem);

}  // namespace ncc
