// Acceptance run: one line per criterion, exit status 1 if any fails.
//
//   ncc_acceptance [--only <substring>] [--ncc <path to ncc binary>]

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "../gradcheck_cases.hpp"
#include "../oracles.hpp"
#include "ncc/checkpoint.hpp"
#include "ncc/corpus.hpp"
#include "ncc/error.hpp"
#include "ncc/metrics.hpp"
#include "ncc/nbow.hpp"
#include "ncc/ngram.hpp"
#include "ncc/objectives.hpp"
#include "ncc/registry.hpp"
#include "ncc/rnnlm.hpp"
#include "ncc/seq2seq.hpp"
#include "ncc/service.hpp"
#include "ncc/task.hpp"
#include "ncc/trainer.hpp"

using namespace ncc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// Collects sub-checks; the criterion passes only if every one holds.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }

  Outcome outcome() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < notes_.size(); ++i) out << (i ? "; " : "") << notes_[i];
    if (!failures_.empty()) {
      out << (notes_.empty() ? "" : "; ") << "failed: ";
      for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) out << (i ? ", " : "") << failures_[i];
      if (failures_.size() > 5) out << " (+" << failures_.size() - 5 << " more)";
    }
    return {failures_.empty(), out.str()};
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

template <class F>
std::optional<ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

bool same_tensors(const NamedTensors& a, const NamedTensors& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first || !a[i].second.bitwise_equal(b[i].second)) return false;
  }
  return true;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("ncc_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

// ---------------------------------------------------------------------------

int factory_a() { return 1; }
int factory_b() { return 2; }

Outcome registry_criterion() {
  Checks c;
  Registry r;
  using Fn = int (*)();
  r.add(RegistryKind::model, "ngram", Fn{&factory_a}, "count model");
  c.expect(r.resolve_as<Fn>(RegistryKind::model, "ngram") == &factory_a, "resolve returns registered factory");
  c.expect(error_of([&] { r.add(RegistryKind::model, "ngram", Fn{&factory_b}); }) == ErrorCode::DuplicateName,
           "duplicate rejected");
  c.expect(r.resolve_as<Fn>(RegistryKind::model, "ngram") == &factory_a, "duplicate leaves original");
  r.add(RegistryKind::metric, "ngram", Fn{&factory_b});
  c.expect(r.resolve_as<Fn>(RegistryKind::metric, "ngram")() == 2, "kinds are separate namespaces");
  r.add(RegistryKind::model, "nbow", Fn{&factory_b});
  try {
    r.resolve(RegistryKind::model, "transformer");
    c.expect(false, "unknown name resolved");
  } catch (const Error& e) {
    const std::string msg = e.what();
    c.expect(e.code() == ErrorCode::UnknownName, "unknown -> UnknownName");
    c.expect(msg.find("ngram") != std::string::npos && msg.find("nbow") != std::string::npos,
             "unknown lists candidates");
  }
  c.expect(error_of([&] { r.add(RegistryKind::task, "Bad-Name", Fn{&factory_a}); }) == ErrorCode::InvalidName,
           "invalid name rejected");

  install_builtins();
  const auto& g = global_registry();
  std::size_t total = 0;
  for (auto kind : {RegistryKind::task, RegistryKind::model, RegistryKind::tokenizer, RegistryKind::metric}) {
    total += g.names(kind).size();
  }
  c.expect(error_of([] { install_builtins(); }) == std::nullopt, "built-ins install idempotently");
  c.expect(g.contains(RegistryKind::task, "completion") && g.contains(RegistryKind::model, "seqrnn"),
           "built-ins resolvable");
  c.note(std::to_string(total) + " built-ins registered");
  return c.outcome();
}

// ---------------------------------------------------------------------------

std::string random_word(std::mt19937& gen) {
  static const std::vector<std::string> alphabet{"a", "b", "c", "e", "s", "t", "_", "1", "é", "ß", "λ", "中", "😀"};
  std::uniform_int_distribution<std::size_t> len(1, 10), pick(0, alphabet.size() - 1);
  std::string w;
  for (std::size_t i = len(gen); i > 0; --i) w += alphabet[pick(gen)];
  return w;
}

Outcome bpe_criterion() {
  Checks c;
  const std::map<std::string, std::int64_t> example{{"low", 5}, {"lower", 2}, {"newest", 6}, {"widest", 3}};
  const TokenCounts counts(example.begin(), example.end());
  const auto first = bpe_train(counts, 1, 2);
  const auto brute_first = oracle::bpe_train(example, 1, 2);
  c.expect(first.merges.size() == 1 && first.merges[0] == std::pair<std::string, std::string>{"e", "s"},
           "first merge is (e, s)");
  c.expect(first.merges == brute_first, "first merge equals brute force");
  const auto pairs = oracle::count_pairs([&] {
    std::vector<std::pair<oracle::Word, std::int64_t>> words;
    for (const auto& [w, n] : example) words.emplace_back(oracle::split_word(w), n);
    return words;
  }());
  c.expect(pairs.at({"e", "s"}) == 9 && pairs.at({"s", "t"}) == 9 && pairs.at({"t", "</w>"}) == 9,
           "three-way tie at frequency 9");
  c.expect(bpe_train(counts, 50, 2).merges == oracle::bpe_train(example, 50, 2), "full merge list equals brute force");

  std::mt19937 gen(99);
  int agree = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::map<std::string, std::int64_t> words;
    for (int i = 0; i < 40; ++i) words[random_word(gen)] += 1 + static_cast<int>(gen() % 6);
    agree += bpe_train(TokenCounts(words.begin(), words.end()), 60, 2).merges == oracle::bpe_train(words, 60, 2);
  }
  c.expect(agree == 30, "random vocabularies match brute force");

  TokenCounts corpus;
  for (int i = 0; i < 300; ++i) ++corpus[random_word(gen)];
  const auto table = bpe_train(corpus, 150, 2);
  int round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto w = random_word(gen);
    std::string joined;
    for (const auto& s : bpe_encode(w, table)) joined += s;
    const std::string marker(MergeTable::end_marker);
    round_trips += joined.size() >= marker.size() && joined.compare(joined.size() - marker.size(), marker.size(), marker) == 0 &&
                   joined.substr(0, joined.size() - marker.size()) == w;
  }
  c.expect(round_trips == 1000, "round trip on 1000 words");
  c.note(std::to_string(agree) + "/30 random tables agree, " + std::to_string(round_trips) + "/1000 round trips, " +
         std::to_string(table.merges.size()) + " merges");
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome ngram_criterion() {
  Checks c;
  std::mt19937 gen(2718);
  double worst_diff = 0.0, worst_sum = 0.0;
  std::size_t queries = 0;
  for (int corpus_id = 0; corpus_id < 50; ++corpus_id) {
    const std::size_t V = 2 + gen() % 9;
    const int order = 1 + static_cast<int>(gen() % 4);
    const double lambda = 0.01 + 0.98 * static_cast<double>(gen() % 10000) / 10000.0;
    std::size_t budget = 5 + gen() % 96;
    std::vector<IdSequence> corpus;
    while (budget > 0) {
      const std::size_t len = std::min<std::size_t>(budget, 1 + gen() % 30);
      IdSequence s;
      for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<int>(gen() % V));
      corpus.push_back(s);
      budget -= len;
    }
    const auto model = NgramModel::train(corpus, order, lambda, V);
    const oracle::Ngram ref{corpus, order, lambda, V};

    std::vector<IdSequence> prefixes{{}};
    for (const auto& s : corpus) {
      for (std::size_t i = 1; i <= s.size(); ++i) prefixes.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(i));
    }
    for (int i = 0; i < 20; ++i) {
      IdSequence p;
      for (std::size_t j = gen() % 6; j > 0; --j) p.push_back(static_cast<int>(gen() % V));
      prefixes.push_back(p);
    }
    for (const auto& p : prefixes) {
      const auto got = model.next_distribution(p);
      const auto want = ref.dist(p);
      double sum = 0.0;
      for (std::size_t w = 0; w < V; ++w) {
        worst_diff = std::max(worst_diff, std::abs(got[w] - want[w]));
        sum += got[w];
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      ++queries;
    }
  }
  c.expect(worst_diff <= 1e-12, "max |P - P_ref| <= 1e-12");
  c.expect(worst_sum <= 1e-9, "|sum - 1| <= 1e-9");

  const auto hand = NgramModel::train({{0, 1, 0, 1, 0, 2}}, 2, 0.7, 3).next_distribution(std::vector<int>{0});
  c.expect(std::abs(hand[1] - 0.56666666666666667) < 1e-12, "P(b|a) = 0.5667 on the hand example");
  c.note("50 corpora, " + std::to_string(queries) + " contexts, max diff " + fmt(worst_diff, 3) +
         ", max |sum-1| " + fmt(worst_sum, 3));
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome gradcheck_criterion() {
  Checks c;
  const std::vector<std::pair<std::string, std::function<GradCheckResult(std::uint64_t)>>> all{
      {"embedding", cases::embedding},
      {"affine", cases::affine},
      {"rnn_step x8", [](std::uint64_t s) { return cases::rnn_unrolled(s, 8); }},
      {"softmax_xent", cases::xent},
      {"rnnlm_loss", cases::rnnlm},
      {"retrieval_loss", cases::retrieval},
      {"nbow", cases::nbow},
      {"seq2seq_loss", cases::seq2seq},
  };
  std::ostringstream summary;
  for (const auto& [name, fn] : all) {
    double worst = 0.0;
    std::size_t coords = 0;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      const auto r = fn(seed);
      worst = std::max(worst, r.max_rel_err);
      coords += r.coords_checked;
    }
    c.expect(worst < 1e-4 && coords > 0, name + " rel err " + fmt(worst, 3));
    summary << (summary.tellp() ? ", " : "") << name << " " << fmt(worst, 2);
  }
  c.note("max rel err: " + summary.str());
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome rnnlm_criterion() {
  Checks c;
  // ids: a = 4, b = 5
  IdSequence body;
  for (int i = 0; i < 200; ++i) {
    body.push_back(4);
    body.push_back(5);
  }
  IdSequence wrapped{Vocabulary::bos_id};
  wrapped.insert(wrapped.end(), body.begin(), body.end());
  wrapped.push_back(Vocabulary::eos_id);

  RnnLm model(RnnLmConfig{6, 16, 32, 32});
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.optimization.lr = 0.02;
  cfg.optimization.max_update = 200;
  cfg.optimization.max_epoch = 1000;
  cfg.optimization.lr_shrink = 1.0;
  Rng rng(cfg.optimization.seed);
  model.initialize(rng);
  LmObjective objective(model, {wrapped});
  Trainer trainer(objective, cfg);
  const auto report = trainer.train();

  // After the last "a" of the body.
  const auto dist = model.next_distribution(std::span<const int>(wrapped).first(wrapped.size() - 2));
  const double p_b = dist[5];

  // Interior tokens: every body token after the first.
  const auto lp = model.sequence_log_probs(wrapped);
  double nll = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 2; i + 1 < wrapped.size(); ++i) {
    nll -= lp[i - 1];
    ++n;
  }
  const double ppl = std::exp(nll / static_cast<double>(n));
  c.expect(report.num_updates <= 200, "at most 200 updates");
  c.expect(p_b > 0.9, "P(b | ...a) > 0.9");
  c.expect(ppl <= 1.3, "interior perplexity <= 1.3");
  c.note(std::to_string(report.num_updates) + " updates, P(b|...a) = " + fmt(p_b) + ", ppl = " + fmt(ppl));
  return c.outcome();
}

// ---------------------------------------------------------------------------

struct RetrievalData {
  std::vector<IdSequence> codes, queries;
};

// Pair i: code and query both contain unique token u_i plus filler drawn
// from a shared pool, so only u_i identifies the match.
RetrievalData synthetic_pairs(std::size_t pairs, std::size_t pool, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  RetrievalData d;
  const int first_unique = static_cast<int>(Vocabulary::num_specials + pool);
  auto filler = [&] { return static_cast<int>(Vocabulary::num_specials + gen() % pool); };
  for (std::size_t i = 0; i < pairs; ++i) {
    IdSequence code, query;
    for (std::size_t k = 2 + gen() % 4; k > 0; --k) code.push_back(filler());
    for (std::size_t k = 1 + gen() % 3; k > 0; --k) query.push_back(filler());
    code.insert(code.begin() + static_cast<std::ptrdiff_t>(gen() % (code.size() + 1)), first_unique + static_cast<int>(i));
    query.insert(query.begin() + static_cast<std::ptrdiff_t>(gen() % (query.size() + 1)), first_unique + static_cast<int>(i));
    d.codes.push_back(code);
    d.queries.push_back(query);
  }
  return d;
}

// Consecutive groups of `group` pairs; each query ranks its group's codes.
std::vector<RankedPrediction> group_ranks(const NbowEncoder& enc, const RetrievalData& d, std::size_t group) {
  std::vector<RankedPrediction> ranks;
  for (std::size_t start = 0; start + group <= d.codes.size(); start += group) {
    std::vector<Vec> codes;
    for (std::size_t j = 0; j < group; ++j) codes.push_back(enc.encode(d.codes[start + j], Side::code));
    for (std::size_t i = 0; i < group; ++i) {
      const auto q = enc.encode(d.queries[start + i], Side::query);
      Vec scores;
      for (const auto& cv : codes) scores.push_back(dot(q, cv));
      ranks.emplace_back(rank_of(scores, static_cast<int>(i)));
    }
  }
  return ranks;
}

Outcome retrieval_criterion() {
  Checks c;
  const std::size_t pairs = 256, pool = 20, group = 32;
  const auto data = synthetic_pairs(pairs, pool, 5);
  const std::size_t vocab = Vocabulary::num_specials + pool + pairs;
  NbowEncoder enc(NbowConfig{vocab, vocab, 64, 10.0});
  TrainConfig cfg;
  cfg.batch_size = group;
  cfg.optimization.lr = 0.05;
  cfg.optimization.max_epoch = 30;
  cfg.optimization.workers = 2;
  Rng rng(cfg.optimization.seed);
  enc.initialize(rng, 0.1);

  const auto untrained = group_ranks(enc, data, group);
  const double untrained_mrr = mrr(untrained, group);

  RetrievalObjective objective(enc, data.codes, data.queries);
  Trainer trainer(objective, cfg);
  const auto report = trainer.train();
  const auto trained = group_ranks(enc, data, group);
  const double trained_mrr = mrr(trained);  // cutoff 10
  c.expect(trained_mrr >= 0.95, "trained MRR >= 0.95");
  c.expect(untrained_mrr <= 0.3, "untrained MRR <= 0.3");
  c.note("256 pairs in 8 groups of 32: trained MRR@10 = " + fmt(trained_mrr) + " after " +
         std::to_string(report.num_updates) + " updates, untrained MRR (uncut) = " + fmt(untrained_mrr));
  return c.outcome();
}

// ---------------------------------------------------------------------------

IdSequence random_copy_seq(std::mt19937_64& gen) {
  IdSequence s(1 + gen() % 5);
  for (auto& t : s) t = static_cast<int>(Vocabulary::num_specials + gen() % 10);
  return s;
}

Outcome seq2seq_criterion() {
  Checks c;
  // Fresh random sequences (repeats allowed); held-out ones never occur in training.
  std::mt19937_64 gen(31);
  std::set<IdSequence> seen;
  std::vector<SeqPair> train;
  while (train.size() < 24000) {
    auto s = random_copy_seq(gen);
    seen.insert(s);
    IdSequence tgt{Vocabulary::bos_id};
    tgt.insert(tgt.end(), s.begin(), s.end());
    tgt.push_back(Vocabulary::eos_id);
    train.push_back({s, tgt});
  }
  std::vector<IdSequence> held_out;
  while (held_out.size() < 200) {
    auto s = random_copy_seq(gen);
    if (!seen.count(s)) {
      seen.insert(s);
      held_out.push_back(s);
    }
  }

  const std::size_t V = Vocabulary::num_specials + 10;
  Seq2Seq model(Seq2SeqConfig{V, V, 32, 128, 10});
  TrainConfig cfg;
  cfg.batch_size = 96;
  cfg.optimization.lr = 0.008;
  cfg.optimization.lr_shrink = 0.7;
  cfg.optimization.max_update = 2000;
  cfg.optimization.max_epoch = 1000;
  cfg.optimization.clip_norm = 1.0;
  Rng rng(cfg.optimization.seed);
  model.initialize(rng, 0.1);
  Seq2SeqObjective objective(model, train);
  Trainer trainer(objective, cfg);
  const auto report = trainer.train();

  std::size_t exact = 0;
  for (const auto& s : held_out) exact += model.greedy_decode(s) == s;
  const double acc = static_cast<double>(exact) / static_cast<double>(held_out.size());
  c.expect(report.num_updates <= 2000, "at most 2000 updates");
  c.expect(acc >= 0.95, "held-out exact copy >= 95%");
  c.note(std::to_string(report.num_updates) + " updates, held-out exact " + std::to_string(exact) + "/" +
         std::to_string(held_out.size()) + " (" + fmt(100 * acc, 4) + "%)");
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome metrics_criterion() {
  Checks c;
  const double b2 = bleu({{"the", "cat"}}, {{"the", "cat", "sat"}}, {2, false});
  const auto rl = rouge_l({"a", "c", "d"}, {"a", "b", "c", "d"});
  const double m = mrr({1, 2, std::nullopt});
  c.expect(std::abs(b2 - 0.606531) <= 1e-6, "BLEU-2 = 0.606531");
  c.expect(std::abs(rl.f - 0.857143) <= 1e-6, "ROUGE-L F = 0.857143");
  c.expect(m == 0.5, "MRR = 0.5 exactly");
  c.expect(std::abs(b2 - oracle::bleu({{"the", "cat"}}, {{"the", "cat", "sat"}}, 2, false)) < 1e-12,
           "BLEU-2 equals naive BLEU");

  std::mt19937 gen(1);
  std::size_t identities = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<TokenSeq> h(1 + gen() % 3);
    for (auto& s : h) {
      s.resize(1 + gen() % 8);
      for (auto& t : s) t = std::string(1, static_cast<char>('a' + gen() % 6));
    }
    identities += bleu(h, h) == 1.0 && bleu(h, h, {4, true}) == 1.0;
  }
  c.expect(identities == 100, "BLEU(x, x) = 1");
  c.note("BLEU-2 = " + fmt(b2, 7) + ", ROUGE-L F = " + fmt(rl.f, 7) + ", MRR = " + fmt(m) +
         ", BLEU(x,x) = 1 on " + std::to_string(identities) + "/100");
  return c.outcome();
}

// ---------------------------------------------------------------------------
// Trainer fixtures: a small recurrent LM and a small seq2seq model.

std::vector<IdSequence> lm_corpus() {
  std::mt19937_64 gen(7);
  std::vector<IdSequence> out;
  for (int i = 0; i < 24; ++i) {
    IdSequence s{Vocabulary::bos_id};
    for (std::size_t t = 2 + gen() % 9; t > 0; --t) s.push_back(static_cast<int>(4 + gen() % 8));
    s.push_back(Vocabulary::eos_id);
    out.push_back(s);
  }
  return out;
}

std::vector<SeqPair> s2s_corpus() {
  std::mt19937_64 gen(8);
  std::vector<SeqPair> out;
  for (int i = 0; i < 20; ++i) {
    auto s = random_copy_seq(gen);
    IdSequence t{Vocabulary::bos_id};
    for (auto it = s.rbegin(); it != s.rend(); ++it) t.push_back(*it);
    t.push_back(Vocabulary::eos_id);
    out.push_back({s, t});
  }
  return out;
}

struct RunResult {
  TrainReport report;
  NamedTensors tensors;
  TrainState state;
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 3;
  cfg.optimization.lr = 0.03;
  cfg.optimization.max_epoch = 3;
  cfg.optimization.seed = 4;
  return cfg;
}

RunResult run_lm(const TrainConfig& cfg, const std::optional<fs::path>& save = {},
                 const std::optional<fs::path>& resume = {}) {
  RnnLm model(RnnLmConfig{12, 6, 10, 4});
  Rng rng(cfg.optimization.seed);
  model.initialize(rng);
  LmObjective obj(model, lm_corpus());
  Trainer t(obj, cfg);
  if (save) t.set_checkpoint({*save, "seqrnn", "acceptance"});
  if (resume) t.resume(load_checkpoint(*resume, std::string("acceptance")));
  RunResult r;
  r.report = t.train();
  r.tensors = t.checkpoint_tensors();
  r.state = t.state();
  return r;
}

RunResult run_s2s(const TrainConfig& cfg) {
  Seq2Seq model(Seq2SeqConfig{14, 14, 5, 8, 8});
  Rng rng(cfg.optimization.seed);
  model.initialize(rng);
  Seq2SeqObjective obj(model, s2s_corpus());
  Trainer t(obj, cfg);
  RunResult r;
  r.report = t.train();
  r.tensors = t.checkpoint_tensors();
  r.state = t.state();
  return r;
}

bool identical(const RunResult& a, const RunResult& b) {
  return a.report.update_losses == b.report.update_losses && a.report.epoch_losses == b.report.epoch_losses &&
         same_tensors(a.tensors, b.tensors);
}

Outcome trainer_criterion() {
  Checks c;
  using Runner = std::function<RunResult(const TrainConfig&)>;
  const std::vector<std::pair<std::string, Runner>> runners{
      {"lm", [](const TrainConfig& cfg) { return run_lm(cfg); }}, {"seq2seq", run_s2s}};
  for (const auto& [name, run] : runners) {
    const auto base = run(small_config());
    c.expect(identical(base, run(small_config())), name + ": same seed reproduces");
    auto other_seed = small_config();
    other_seed.optimization.seed = 5;
    c.expect(run(other_seed).report.update_losses != base.report.update_losses, name + ": seed matters");
    for (int w : {2, 4}) {
      auto cfg = small_config();
      cfg.optimization.workers = w;
      c.expect(identical(base, run(cfg)), name + ": workers=" + std::to_string(w) + " bit-identical");
    }
    auto accum = small_config();
    accum.optimization.update_freq = 2;
    auto big = small_config();
    big.batch_size = 6;
    const auto a = run(accum), b = run(big);
    c.expect(identical(a, b) && a.report.num_updates == b.report.num_updates,
             name + ": update_freq=2 equals doubled batch");
    accum.optimization.workers = 4;
    c.expect(identical(a, run(accum)), name + ": accumulation with 4 workers");
  }

  // Each stop condition alone; the other two are left slack.
  auto only_update = small_config();
  only_update.optimization.max_epoch = 1000;
  only_update.optimization.max_update = 5;
  only_update.optimization.lr_shrink = 1.0;
  const auto r1 = run_lm(only_update);
  c.expect(r1.report.stop_reason == "max_update" && r1.state.num_updates == 5, "max_update stop");

  auto only_epoch = small_config();
  only_epoch.optimization.max_epoch = 2;
  only_epoch.optimization.lr_shrink = 1.0;
  const auto r2 = run_lm(only_epoch);
  c.expect(r2.report.stop_reason == "max_epoch" && r2.state.epoch == 2 && r2.state.num_updates == 16,
           "max_epoch stop");

  auto only_lr = small_config();
  only_lr.optimization.max_epoch = 1000;
  only_lr.optimization.lr = 0.01;
  only_lr.optimization.lr_shrink = 0.5;
  only_lr.optimization.min_lr = 0.001;
  const auto r3 = run_lm(only_lr);
  c.expect(r3.report.stop_reason == "min_lr" && r3.state.epoch == 4 && r3.state.lr <= 0.001,
           "min_lr stop");
  for (const auto* r : {&r1, &r2, &r3}) {
    c.expect(!should_continue(r->state, r == &r1 ? only_update : r == &r2 ? only_epoch : only_lr),
             "loop exits exactly when the guard is false");
  }
  c.note("lm + seq2seq: seed/worker/accumulation invariance checked; stops: " + r1.report.stop_reason + "@" +
         std::to_string(r1.state.num_updates) + " updates, " + r2.report.stop_reason + "@epoch " +
         std::to_string(r2.state.epoch) + ", " + r3.report.stop_reason + "@lr " + fmt(r3.state.lr, 3));
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome checkpoint_criterion() {
  Checks c;
  const auto dir = scratch_dir() / "ckpt";
  fs::create_directories(dir);

  auto cfg = small_config();
  cfg.optimization.max_epoch = 2;
  const auto two = run_lm(cfg, dir / "two.ckpt");
  const auto loaded = load_checkpoint(dir / "two.ckpt", std::string("acceptance"));
  c.expect(same_tensors(loaded.tensors, two.tensors), "save/load tensors bit-exact");
  c.expect(loaded.state == two.state, "save/load TrainState exact");
  c.expect(!loaded.digest_mismatch, "digest matches");
  save_checkpoint(dir / "again.ckpt", loaded);
  std::ifstream f1(dir / "two.ckpt", std::ios::binary), f2(dir / "again.ckpt", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {}), b2((std::istreambuf_iterator<char>(f2)), {});
  c.expect(b1 == b2, "re-save is byte-identical");

  cfg.optimization.max_epoch = 4;
  const auto four = run_lm(cfg);
  const auto resumed = run_lm(cfg, std::nullopt, dir / "two.ckpt");
  c.expect(same_tensors(four.tensors, resumed.tensors), "train-4 == train-2 + resume-2");
  c.expect(four.state.num_updates == resumed.state.num_updates && four.state.lr == resumed.state.lr,
           "resumed state matches");

  // Mid-epoch interruption as well.
  auto part = cfg;
  part.optimization.max_update = 11;
  run_lm(part, dir / "mid.ckpt");
  c.expect(same_tensors(four.tensors, run_lm(cfg, std::nullopt, dir / "mid.ckpt").tensors),
           "mid-epoch resume matches");

  std::size_t rejected = 0;
  const std::vector<std::uintmax_t> cuts{0, 4, 12, 16, 40, b1.size() / 2, b1.size() - 8, b1.size() - 1};
  for (auto cut : cuts) {
    {
      std::ofstream out(dir / "cut.ckpt", std::ios::binary | std::ios::trunc);
      out.write(b1.data(), static_cast<std::streamsize>(cut));
    }
    const auto code = error_of([&] { load_checkpoint(dir / "cut.ckpt"); });
    rejected += code == ErrorCode::CorruptDirectory || (cut < 8 && code == ErrorCode::BadMagic);
  }
  c.expect(rejected == cuts.size(), "truncated files rejected");
  const auto tail = error_of([&] { load_checkpoint(dir / "cut.ckpt"); });
  c.expect(tail == ErrorCode::CorruptDirectory, "truncated payload -> CorruptDirectory");
  c.note("bit-exact round trip, resume at epoch and mid-epoch boundaries, " + std::to_string(rejected) + "/" +
         std::to_string(cuts.size()) + " truncations rejected");
  return c.outcome();
}

// ---------------------------------------------------------------------------
// End to end through the command-line binary and the HTTP server.

struct ProcessResult {
  int status = -1;
  std::string out;
};

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char ch : s) q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return q + "'";
}

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& log) {
  std::string cmd;
  for (const auto& a : argv) cmd += shell_quote(a) + " ";
  cmd += "2>>" + shell_quote(log.string());
  ProcessResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

// Copies a bundled config into the scratch area with absolute data paths and
// private output directories.
fs::path stage_config(const fs::path& source_dir, const std::string& name, const fs::path& work) {
  const fs::path src = source_dir / "configs" / (name + ".json");
  std::ifstream in(src);
  json doc = json::parse(in);
  for (const char* split : {"train", "valid", "test"}) {
    auto& d = doc["data"];
    if (d.contains(split)) d[split] = fs::weakly_canonical(src.parent_path() / d[split].get<std::string>()).string();
  }
  doc["data"]["data_dir"] = (work / name / "data-bin").string();
  doc["checkpoint"]["save_dir"] = (work / name / "model").string();
  const fs::path out = work / (name + ".json");
  std::ofstream(out) << doc.dump(2);
  return out;
}

Outcome end_to_end_criterion(const fs::path& source_dir, const fs::path& ncc_bin) {
  Checks c;
  if (!fs::exists(ncc_bin)) return {false, "ncc binary not found at " + ncc_bin.string()};
  const auto work = scratch_dir() / "e2e";
  fs::create_directories(work);
  const auto log = work / "stderr.log";
  const std::string bin = ncc_bin.string();

  std::map<std::string, double> metrics;
  for (const std::string name : {"completion_ngram", "completion_rnn", "summarization", "retrieval"}) {
    const auto cfg = stage_config(source_dir, name, work).string();
    bool ok = true;
    for (const std::string step : {"preprocess", "train", "eval"}) {
      const auto r = run_process({bin, step, "-c", cfg}, log);
      ok = ok && r.status == 0;
      c.expect(r.status == 0, name + " " + step + " exit " + std::to_string(r.status));
    }
    if (ok) {
      std::ifstream in(work / name / "model" / "eval.json");
      const auto report = json::parse(in, nullptr, false);
      if (!report.is_discarded() && report.contains("value")) metrics[name] = report["value"].get<double>();
    }
    c.expect(fs::exists(work / name / "model" / "model.ckpt"), name + " checkpoint written");
  }

  const auto bigram = (work / "completion_ngram" / "model").string();
  const auto text = run_process({bin, "predict", "-m", bigram, "-t", "complete", "-i", "a", "-k", "1"}, log);
  c.expect(text.status == 0 && text.out.rfind("b", 0) == 0, "predict prints b first");
  const auto cli = run_process({bin, "predict", "-m", bigram, "-t", "complete", "-i", "a", "-k", "3", "--json"}, log);
  c.expect(cli.status == 0, "predict --json exit 0");
  const auto search_cli = run_process(
      {bin, "predict", "-m", (work / "retrieval" / "model").string(), "-t", "search", "-i", "sum of a list", "-k",
       "2", "--json"},
      log);
  const auto summary_cli = run_process(
      {bin, "predict", "-m", (work / "summarization" / "model").string(), "-t", "summarize", "-i",
       "def add(a, b):\n    return a + b\n", "--json"},
      log);
  c.expect(search_cli.status == 0 && summary_cli.status == 0, "search/summarize predictions");

  const auto missing = run_process({bin, "predict", "-m", (work / "nowhere").string(), "-t", "complete", "-i", "a"}, log);
  c.expect(missing.status == 2 && missing.out.empty(), "missing model dir -> exit 2, no output");
  const auto empty = run_process({bin, "predict", "-m", bigram, "-t", "complete", "-i", "  "}, log);
  c.expect(empty.status == 3, "empty input -> exit 3");

  json models = json::array();
  models.push_back({{"id", "toy-bigram"}, {"task", "completion"}, {"description", "bigram"}, {"checkpoint", bigram}});
  models.push_back({{"id", "toy-search"},
                    {"task", "retrieval"},
                    {"description", "search"},
                    {"checkpoint", (work / "retrieval" / "model").string()}});
  models.push_back({{"id", "toy-summarizer"},
                    {"task", "summarization"},
                    {"description", "summarizer"},
                    {"checkpoint", (work / "summarization" / "model").string()}});
  std::ofstream(work / "models.json") << models.dump(2);

  try {
    const auto catalog = ModelCatalog::load(work / "models.json");
    ServeOptions opts;
    opts.port = 0;
    HttpServer server(catalog, opts);
    const int port = server.bind();
    std::thread serving([&] { server.run(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10);

    auto post = [&](const std::string& path, const json& body) -> std::pair<int, std::string> {
      auto res = client.Post(path, body.dump(), "application/json");
      if (!res) return {0, ""};
      return {res->status, res->body};
    };
    const auto complete = post("/api/complete", {{"model_id", "toy-bigram"}, {"text", "a"}, {"k", 3}});
    c.expect(complete.first == 200, "POST /api/complete 200");
    c.expect(trim(complete.second) == trim(cli.out), "CLI --json equals HTTP body");
    const auto parsed = json::parse(complete.second, nullptr, false);
    c.expect(!parsed.is_discarded() && parsed["candidates"].size() == 3 && parsed["candidates"][0]["token"] == "b",
             "3 candidates, first b");
    const auto tokens = post("/api/complete", {{"model_id", "toy-bigram"}, {"tokens", {"a"}}, {"k", 3}});
    c.expect(tokens.first == 200 && trim(tokens.second) == trim(cli.out), "token form matches too");
    const auto search = post("/api/search", {{"model_id", "toy-search"}, {"query", "sum of a list"}, {"k", 2}});
    c.expect(search.first == 200 && trim(search.second) == trim(search_cli.out), "search body equals CLI");
    const auto summary =
        post("/api/summarize", {{"model_id", "toy-summarizer"}, {"code", "def add(a, b):\n    return a + b\n"}});
    c.expect(summary.first == 200 && trim(summary.second) == trim(summary_cli.out), "summary body equals CLI");

    const auto unknown = post("/api/complete", {{"model_id", "nope"}, {"tokens", {"a"}}});
    const auto unknown_body = json::parse(unknown.second, nullptr, false);
    c.expect(unknown.first == 404 && !unknown_body.is_discarded() && unknown_body.contains("known_models"),
             "unknown model -> 404 with known_models");
    c.expect(post("/api/complete", {{"model_id", "toy-bigram"}, {"tokens", {"a"}}, {"k", 0}}).first == 400,
             "k=0 -> 400");
    auto malformed = client.Post("/api/complete", "{\"model_id\": ", "application/json");
    c.expect(malformed && malformed->status == 400, "malformed body -> 400");
    c.expect(post("/api/complete", {{"model_id", "toy-bigram"}, {"tokens", json::array()}}).first == 422,
             "empty payload -> 422");
    c.expect(post("/api/search", {{"model_id", "toy-search"}, {"query", ""}}).first == 422, "empty query -> 422");
    auto models_res = client.Get("/api/models");
    c.expect(models_res && models_res->status == 200 && models_res->get_header_value("Access-Control-Allow-Origin") == "*",
             "GET /api/models with CORS");

    server.stop();
    serving.join();
  } catch (const std::exception& e) {
    c.expect(false, std::string("server: ") + e.what());
  }

  std::ostringstream m;
  for (const auto& [k, v] : metrics) m << (m.tellp() ? ", " : "") << k << " " << fmt(v, 3);
  c.note("4 pipelines ran (" + m.str() + "); CLI/HTTP bodies identical; 404/400/422 as specified");
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  fs::path source_dir = NCC_SOURCE_DIR;
  fs::path ncc_bin = NCC_BINARY;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = argv[i + 1];
    else if (flag == "--ncc") ncc_bin = argv[i + 1];
    else if (flag == "--source") source_dir = argv[i + 1];
  }

  const std::vector<Criterion> criteria{
      {"registry", 1, registry_criterion},
      {"bpe_oracle", 5, bpe_criterion},
      {"ngram_oracle", 10, ngram_criterion},
      {"gradient_checks", 60, gradcheck_criterion},
      {"rnnlm_learning", 30, rnnlm_criterion},
      {"retrieval", 60, retrieval_criterion},
      {"seq2seq_copy", 120, seq2seq_criterion},
      {"metrics_oracles", 1, metrics_criterion},
      {"trainer_determinism", 120, trainer_criterion},
      {"checkpoint", 30, checkpoint_criterion},
      {"end_to_end", 180, [&] { return end_to_end_criterion(source_dir, ncc_bin); }},
  };

  int failed = 0, ran = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && cr.name.find(only) == std::string::npos) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(20) << cr.name << " " << o.detail
              << " (" << std::fixed << std::setprecision(2) << secs << " s / " << std::setprecision(0)
              << cr.budget_seconds << " s)" << std::defaultfloat << std::endl;
  }
  fs::remove_all(scratch_dir());
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 && ran > 0 ? 0 : 1;
}
