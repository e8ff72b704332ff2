#include <cmath>
#include <mutex>

#include "ncc/error.hpp"
#include "ncc/nbow.hpp"
#include "ncc/ngram.hpp"
#include "ncc/registry.hpp"
#include "ncc/rnnlm.hpp"
#include "ncc/seq2seq.hpp"
#include "tasks.hpp"

namespace ncc {

using nlohmann::json;

namespace {

std::size_t dim(const json& cfg, const char* key, std::size_t fallback) {
  const auto v = cfg.value(key, static_cast<std::int64_t>(fallback));
  if (v < 1) throw Error(ErrorCode::BadConfig, std::string("model.") + key + " must be positive");
  return static_cast<std::size_t>(v);
}

void register_all(Registry& r) {
  using K = RegistryKind;

  r.add(K::task, "completion", TaskFactory(make_completion_task), "next-token code completion");
  r.add(K::task, "summarization", TaskFactory(make_summarization_task), "code comment generation");
  r.add(K::task, "retrieval", TaskFactory(make_retrieval_task), "natural-language code search");

  r.add(K::model, "ngram",
        ModelFactory([](const json& cfg, const ModelShape& s) -> std::unique_ptr<Model> {
          const int order = cfg.value("order", 3);
          const double lambda = cfg.value("lambda", 0.7);
          return std::make_unique<NgramModel>(order, lambda, s.vocab);
        }),
        "interpolated n-gram language model");
  r.add(K::model, "seqrnn",
        ModelFactory([](const json& cfg, const ModelShape& s) -> std::unique_ptr<Model> {
          return std::make_unique<RnnLm>(RnnLmConfig{s.vocab, dim(cfg, "embed_dim", 32), dim(cfg, "hidden_dim", 64),
                                                     s.bptt_len == 0 ? 32 : s.bptt_len});
        }),
        "recurrent (Elman) language model");
  r.add(K::model, "nbow",
        ModelFactory([](const json& cfg, const ModelShape& s) -> std::unique_ptr<Model> {
          return std::make_unique<NbowEncoder>(
              NbowConfig{s.src_vocab, s.tgt_vocab, dim(cfg, "dim", 64), cfg.value("scale", 10.0)});
        }),
        "neural bag-of-words dual encoder");
  r.add(K::model, "seq2seq",
        ModelFactory([](const json& cfg, const ModelShape& s) -> std::unique_ptr<Model> {
          return std::make_unique<Seq2Seq>(Seq2SeqConfig{s.src_vocab, s.tgt_vocab, dim(cfg, "embed_dim", 32),
                                                         dim(cfg, "hidden_dim", 64),
                                                         cfg.value("max_decode_len", std::size_t{30})});
        }),
        "recurrent encoder-decoder with greedy decoding");

  r.add(K::tokenizer, "space", TokenizerFactory([] { return std::make_unique<SpaceTokenizer>(); }),
        "split on Unicode whitespace");
  r.add(K::tokenizer, "bpe", TokenizerFactory([] { return std::make_unique<BpeTokenizer>(); }),
        "byte-pair encoding over whitespace words");
  r.add(K::tokenizer, "linearize", TokenizerFactory([] { return std::make_unique<LinearizeTokenizer>(); }),
        "lexed block tree in pre-order with structure markers");

  r.add(K::metric, "mrr", MetricFn([](const MetricInputs& in) { return mrr(in.ranks, in.cutoff); }),
        "mean reciprocal rank with cutoff");
  r.add(K::metric, "bleu",
        MetricFn([](const MetricInputs& in) {
          return bleu(in.hypotheses, in.references, BleuOptions{in.bleu_max_n, in.bleu_smooth});
        }),
        "corpus BLEU");
  r.add(K::metric, "rouge_l",
        MetricFn([](const MetricInputs& in) { return rouge_l_corpus(in.hypotheses, in.references, in.rouge_beta); }),
        "mean ROUGE-L F score");
  r.add(K::metric, "perplexity",
        MetricFn([](const MetricInputs& in) {
          if (in.num_tokens == 0) throw Error(ErrorCode::EmptyInput, "perplexity over zero tokens");
          return std::exp(in.nll_sum / static_cast<double>(in.num_tokens));
        }),
        "exp of mean token negative log-likelihood");
}

}  // namespace

void install_builtins() {
  static std::once_flag once;
  std::call_once(once, [] { register_all(global_registry()); });
}

}  // namespace ncc
