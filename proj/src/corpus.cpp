#include "ncc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "ncc/error.hpp"

namespace ncc {

namespace {

using json = nlohmann::json;

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation or invalid lead byte: treat as one unit
}

char32_t decode_at(std::string_view s, std::size_t pos, std::size_t len) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  if (len == 1) return lead;
  char32_t cp = lead & (0xFF >> (len + 1));
  for (std::size_t i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[pos + i]) & 0x3F);
  return cp;
}

bool is_unicode_space(char32_t cp) {
  if (cp >= 0x09 && cp <= 0x0D) return true;
  switch (cp) {
    case 0x20: case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_blank(std::string_view s) {
  return space_tokenize(s).empty();
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c); });
  return s;
}

// Inside the trainer the end marker is the single byte 0xFF, which never
// occurs in UTF-8, so plain byte order already sorts it after every symbol.
constexpr char internal_marker = '\xFF';

std::string to_internal(const std::string& symbol) {
  if (symbol.size() >= MergeTable::end_marker.size() &&
      symbol.compare(symbol.size() - MergeTable::end_marker.size(), std::string::npos,
                     MergeTable::end_marker) == 0) {
    return symbol.substr(0, symbol.size() - MergeTable::end_marker.size()) + internal_marker;
  }
  return symbol;
}

std::string to_external(const std::string& symbol) {
  if (!symbol.empty() && symbol.back() == internal_marker) {
    return symbol.substr(0, symbol.size() - 1) + std::string(MergeTable::end_marker);
  }
  return symbol;
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto symbols = utf8_chars(word);
  symbols.emplace_back(1, internal_marker);
  return symbols;
}

void apply_merge(std::vector<std::string>& symbols, const std::string& left, const std::string& right) {
  if (symbols.size() < 2) return;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(out);
}

}  // namespace

// ---------------------------------------------------------------------------

LoadReport for_each_record(const std::filesystem::path& path,
                           const std::function<void(CodeRecord&&)>& sink) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open corpus file " + path.string());

  LoadReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    const bool ok = obj.is_object() && obj.contains("code") && obj["code"].is_string() &&
                    !is_blank(obj["code"].get_ref<const std::string&>());
    if (!ok) {
      ++report.malformed;
      report.malformed_lines.push_back(line_no);
      continue;
    }
    CodeRecord rec;
    rec.code = obj["code"].get<std::string>();
    if (auto it = obj.find("docstring"); it != obj.end() && it->is_string()) rec.docstring = it->get<std::string>();
    if (auto it = obj.find("language"); it != obj.end() && it->is_string()) rec.language = lowercase(it->get<std::string>());
    if (auto it = obj.find("path"); it != obj.end() && it->is_string()) rec.path = it->get<std::string>();
    ++report.records;
    sink(std::move(rec));
  }
  return report;
}

std::vector<CodeRecord> load_records(const std::filesystem::path& path, LoadReport* report) {
  std::vector<CodeRecord> records;
  auto r = for_each_record(path, [&](CodeRecord&& rec) { records.push_back(std::move(rec)); });
  if (report) *report = std::move(r);
  return records;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[pos])), text.size() - pos);
    out.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

std::vector<std::string> space_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[pos])), text.size() - pos);
    if (is_unicode_space(decode_at(text, pos, len))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.append(text.substr(pos, len));
    }
    pos += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------

MergeTable bpe_train(const TokenCounts& word_counts, int num_merges, std::int64_t min_pair_freq) {
  std::vector<std::pair<std::vector<std::string>, std::int64_t>> words;
  for (const auto& [word, count] : word_counts) {
    if (word.empty() || count <= 0) continue;
    words.emplace_back(initial_symbols(word), count);
  }
  if (words.empty()) throw Error(ErrorCode::EmptyCorpus, "bpe_train needs at least one non-empty word");

  MergeTable table;
  std::set<std::pair<std::string, std::string>> seen;
  for (int round = 0; round < num_merges; ++round) {
    std::map<std::pair<std::string, std::string>, std::int64_t> pair_freq;
    for (const auto& [symbols, count] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) pair_freq[{symbols[i], symbols[i + 1]}] += count;
    }
    // std::map iterates in ascending key order, so the first maximum found is
    // the lexicographically smallest among ties.
    const std::pair<std::string, std::string>* best = nullptr;
    std::int64_t best_freq = 0;
    for (const auto& [pair, freq] : pair_freq) {
      if (freq > best_freq) {
        best = &pair;
        best_freq = freq;
      }
    }
    if (best == nullptr || best_freq < min_pair_freq) break;

    const auto merged = *best;
    for (auto& entry : words) apply_merge(entry.first, merged.first, merged.second);
    if (!seen.insert(merged).second) break;
    table.merges.emplace_back(to_external(merged.first), to_external(merged.second));
  }
  return table;
}

std::vector<std::string> bpe_encode(std::string_view word, const MergeTable& table) {
  auto symbols = initial_symbols(word);
  for (const auto& [left, right] : table.merges) {
    if (symbols.size() < 2) break;
    apply_merge(symbols, to_internal(left), to_internal(right));
  }
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) out.push_back(to_external(s));
  return out;
}

std::string bpe_decode(const std::vector<std::string>& subtokens) {
  std::string text;
  const std::string_view marker = MergeTable::end_marker;
  for (const auto& piece : subtokens) {
    std::string_view p = piece;
    if (p.size() >= marker.size() && p.substr(p.size() - marker.size()) == marker) {
      text.append(p.substr(0, p.size() - marker.size()));
      text.push_back(' ');
    } else {
      text.append(p);
    }
  }
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

void save_merges(const std::filesystem::path& path, const MergeTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& [l, r] : table.merges) out << l << ' ' << r << '\n';
}

MergeTable load_merges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  MergeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size()) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(line_no) + ": expected 'left right'");
    }
    table.merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return table;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (auto special : {pad_token, unk_token, bos_token, eos_token}) append(std::string(special));
}

void Vocabulary::append(std::string token) {
  id_of_.emplace(token, static_cast<int>(token_of_.size()));
  token_of_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const TokenCounts& counts, std::int64_t min_count, std::size_t max_size) {
  Vocabulary vocab;
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  for (const auto& [token, count] : counts) {
    if (count < min_count || vocab.contains(token) || token.empty()) continue;
    ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.append(std::move(token));
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary vocab;
  for (const auto& t : tokens) {
    if (vocab.contains(t)) throw Error(ErrorCode::MalformedRecord, "duplicate vocabulary token '" + t + "'");
    vocab.append(t);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const std::string_view header[] = {pad_token, unk_token, bos_token, eos_token};
  if (lines.size() < num_specials || !std::equal(std::begin(header), std::end(header), lines.begin())) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": missing special-token header");
  }
  return from_tokens({lines.begin() + num_specials, lines.end()});
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& t : token_of_) out << t << '\n';
}

int Vocabulary::id(std::string_view token) const {
  auto it = id_of_.find(token);
  return it == id_of_.end() ? unk_id : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return id_of_.find(token) != id_of_.end(); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= token_of_.size()) return token_of_[unk_id];
  return token_of_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) tokens.push_back(token(i));
  return tokens;
}

// ---------------------------------------------------------------------------

std::size_t MiniBatch::num_tokens() const {
  std::size_t n = 0;
  for (auto l : lengths) n += l;
  return n;
}

MiniBatch pack_batch(const std::vector<IdSequence>& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyBatch, "cannot build a batch from zero sequences");
  MiniBatch batch;
  batch.rows = rows.size();
  for (const auto& r : rows) batch.cols = std::max(batch.cols, r.size());
  batch.ids.assign(batch.rows * batch.cols, Vocabulary::pad_id);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    std::copy(rows[b].begin(), rows[b].end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(b * batch.cols));
    batch.lengths.push_back(rows[b].size());
  }
  return batch;
}

MiniBatch encode_batch(const std::vector<std::vector<std::string>>& sequences, const Vocabulary& vocab,
                       bool add_bos_eos) {
  if (sequences.empty()) throw Error(ErrorCode::EmptyBatch, "cannot build a batch from zero sequences");
  std::vector<IdSequence> rows;
  rows.reserve(sequences.size());
  for (const auto& seq : sequences) {
    IdSequence ids;
    if (add_bos_eos) ids.push_back(Vocabulary::bos_id);
    for (const auto& t : seq) ids.push_back(vocab.id(t));
    if (add_bos_eos) ids.push_back(Vocabulary::eos_id);
    rows.push_back(std::move(ids));
  }
  return pack_batch(rows);
}

MiniBatch make_lm_batch(const std::vector<IdSequence>& sequences) {
  std::vector<IdSequence> inputs;
  std::vector<IdSequence> targets;
  for (const auto& seq : sequences) {
    if (seq.size() < 2) throw Error(ErrorCode::EmptyInput, "language-model rows need at least two ids");
    inputs.emplace_back(seq.begin(), seq.end() - 1);
    targets.emplace_back(seq.begin() + 1, seq.end());
  }
  MiniBatch batch = pack_batch(inputs);
  batch.targets = pack_batch(targets).ids;
  return batch;
}

// ---------------------------------------------------------------------------

void write_shard(const std::filesystem::path& path, const std::vector<IdSequence>& sequences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(shard_magic.data(), static_cast<std::streamsize>(shard_magic.size()));
  for (const auto& seq : sequences) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.size()));
    for (int id : seq) detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(id));
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<IdSequence> read_shard(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open shard " + path.string());
  std::string magic(shard_magic.size(), '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != shard_magic) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an NCCDAT01 shard");
  }
  std::vector<IdSequence> out;
  std::uint32_t len = 0;
  while (detail::read_le(in, len)) {
    IdSequence seq(len);
    for (auto& id : seq) {
      std::uint32_t v = 0;
      if (!detail::read_le(in, v)) throw Error(ErrorCode::CorruptDirectory, path.string() + ": truncated record");
      id = static_cast<int>(v);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace ncc
