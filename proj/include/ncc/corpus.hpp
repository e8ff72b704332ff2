#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ncc {

/// One sample of a CodeSearchNet-style JSONL corpus.
struct CodeRecord {
  std::string code;
  std::optional<std::string> docstring;
  std::string language;
  std::string path;
};

struct LoadReport {
  std::size_t records = 0;
  std::size_t malformed = 0;
  /// 1-based line numbers of skipped lines.
  std::vector<std::size_t> malformed_lines;
};

/// Streams records from a JSONL file in file order. Blank lines are ignored;
/// lines that fail to parse or lack a non-blank `code` string are skipped and
/// counted. Throws IoError when the file cannot be opened.
LoadReport for_each_record(const std::filesystem::path& path,
                           const std::function<void(CodeRecord&&)>& sink);

std::vector<CodeRecord> load_records(const std::filesystem::path& path, LoadReport* report = nullptr);

/// Splits on maximal runs of Unicode whitespace (UTF-8 input).
std::vector<std::string> space_tokenize(std::string_view text);

/// Splits a UTF-8 string into code points (each returned as its byte sequence).
std::vector<std::string> utf8_chars(std::string_view text);

using TokenCounts = std::map<std::string, std::int64_t, std::less<>>;

// ---------------------------------------------------------------------------
// Byte-pair encoding

struct MergeTable {
  static constexpr std::string_view end_marker = "</w>";

  std::vector<std::pair<std::string, std::string>> merges;

  bool operator==(const MergeTable&) const = default;
};

/// Learns merges greedily: the most frequent adjacent pair (weighted by word
/// count) is merged each round. Ties go to the lexicographically smallest
/// (left, right) pair, where the end-of-word marker sorts after every
/// ordinary symbol. Stops after `num_merges` merges or when the best pair
/// frequency drops below `min_pair_freq`. Throws EmptyCorpus.
MergeTable bpe_train(const TokenCounts& word_counts, int num_merges, std::int64_t min_pair_freq = 2);

/// Characters of `word` plus the end marker, with every merge applied in
/// table order (each one left to right, non-overlapping).
std::vector<std::string> bpe_encode(std::string_view word, const MergeTable& table);

/// Concatenates subtokens; each end marker becomes a word boundary.
std::string bpe_decode(const std::vector<std::string>& subtokens);

void save_merges(const std::filesystem::path& path, const MergeTable& table);
MergeTable load_merges(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int pad_id = 0;
  static constexpr int unk_id = 1;
  static constexpr int bos_id = 2;
  static constexpr int eos_id = 3;
  static constexpr std::size_t num_specials = 4;

  static constexpr std::string_view pad_token = "<pad>";
  static constexpr std::string_view unk_token = "<unk>";
  static constexpr std::string_view bos_token = "<bos>";
  static constexpr std::string_view eos_token = "<eos>";

  /// Specials-only vocabulary.
  Vocabulary();

  /// Specials first, then tokens with count >= min_count ordered by
  /// descending count (ties lexicographic), truncated to max_size entries.
  static Vocabulary build(const TokenCounts& counts, std::int64_t min_count, std::size_t max_size);

  /// Non-special tokens in id order (ids start at 4).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return token_of_.size(); }
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const noexcept { return token_of_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  static bool is_special(int id) noexcept { return id >= 0 && id < static_cast<int>(num_specials); }

 private:
  void append(std::string token);

  std::vector<std::string> token_of_;
  std::map<std::string, int, std::less<>> id_of_;
};

// ---------------------------------------------------------------------------
// Mini-batches

using IdSequence = std::vector<int>;

/// Row-major B x T id matrix, right-padded with pad_id.
struct MiniBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;
  /// Same layout as ids when present (next-token or decoder targets).
  std::vector<int> targets;

  int id(std::size_t b, std::size_t t) const { return ids[b * cols + t]; }
  int target(std::size_t b, std::size_t t) const { return targets[b * cols + t]; }
  bool has_targets() const noexcept { return !targets.empty(); }
  std::size_t num_tokens() const;
};

/// Maps tokens through `vocab` (unknowns -> unk), optionally wraps each row
/// in bos/eos, and right-pads to the longest row. Throws EmptyBatch.
MiniBatch encode_batch(const std::vector<std::vector<std::string>>& sequences, const Vocabulary& vocab,
                       bool add_bos_eos);

/// Pads already-encoded rows.
MiniBatch pack_batch(const std::vector<IdSequence>& rows);

/// Language-model batch: inputs are seq[0..L-2], targets seq[1..L-1].
/// Rows shorter than two ids are rejected with EmptyInput.
MiniBatch make_lm_batch(const std::vector<IdSequence>& sequences);

// ---------------------------------------------------------------------------
// Binarized shards: "NCCDAT01", then repeated [u32 length][length x u32 id],
// little-endian.

inline constexpr std::string_view shard_magic = "NCCDAT01";

void write_shard(const std::filesystem::path& path, const std::vector<IdSequence>& sequences);
std::vector<IdSequence> read_shard(const std::filesystem::path& path);

}  // namespace ncc
