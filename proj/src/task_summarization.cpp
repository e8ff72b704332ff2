#include "ncc/error.hpp"
#include "ncc/objectives.hpp"
#include "ncc/seq2seq.hpp"
#include "task_common.hpp"
#include "tasks.hpp"

namespace ncc {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detail;

namespace {

IdSequence truncate(IdSequence ids, std::size_t n) {
  if (ids.size() > n) ids.resize(n);
  return ids;
}

class SummarizationPredictor : public Predictor {
 public:
  explicit SummarizationPredictor(const fs::path& dir) {
    const json cfg = read_model_config(dir);
    code_ = load_field(dir, tokenizer_name(cfg["task"], "tokenizer"), "code");
    doc_ = load_field(dir, tokenizer_name(cfg["task"], "doc_tokenizer"), "doc");
    max_src_len_ = cfg.value("data", json::object()).value("max_src_len", std::size_t{200});
    auto model = make_model(cfg["model"].value("name", std::string()), cfg["model"],
                            ModelShape{0, code_.vocab.size(), doc_.vocab.size(), 0});
    auto* s2s = dynamic_cast<Seq2Seq*>(model.get());
    if (!s2s) throw Error(ErrorCode::ResolveFailure, "model '" + std::string(model->model_name()) + "' cannot summarize");
    model.release();
    model_.reset(s2s);
    load_model_state(dir, *model_);
  }

  std::string_view task() const override { return "summarization"; }
  std::string_view model_name() const override { return model_->model_name(); }

  Summary summarize(std::string_view code) const override {
    const IdSequence src = truncate(code_.encode(code), max_src_len_);
    if (src.empty()) throw Error(ErrorCode::EmptyInput, "empty code");
    Summary out;
    for (int id : model_->greedy_decode(src)) {
      if (!Vocabulary::is_special(id)) out.tokens.push_back(doc_.vocab.token(id));
    }
    out.summary = doc_.tokenizer->detokenize(out.tokens);
    return out;
  }

 private:
  Field code_;
  Field doc_;
  std::size_t max_src_len_ = 200;
  std::unique_ptr<Seq2Seq> model_;
};

bool has_doc(const CodeRecord& r) { return r.docstring && !space_tokenize(*r.docstring).empty(); }

class SummarizationTask : public Task {
 public:
  std::string_view name() const override { return "summarization"; }
  std::vector<std::string> metrics() const override { return {"bleu", "rouge_l"}; }

  json preprocess(const Experiment& exp) const override {
    std::size_t malformed = 0;
    auto train = *read_split(exp, "train", &malformed);
    std::erase_if(train, [](const CodeRecord& r) { return !has_doc(r); });
    if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "training split has no records with a docstring");
    std::vector<std::string> codes, docs;
    for (const auto& r : train) {
      codes.push_back(r.code);
      docs.push_back(*r.docstring);
    }
    const fs::path dir = exp.data_dir();
    const json& task = exp.section("task");
    const Field code = fit_field(exp, tokenizer_name(task, "tokenizer"), codes, "code", dir);
    const Field doc = fit_field(exp, tokenizer_name(task, "doc_tokenizer"), docs, "doc", dir);

    json report{{"task", "summarization"},
                {"code_vocab_size", code.vocab.size()},
                {"doc_vocab_size", doc.vocab.size()}};
    std::size_t skipped = 0;
    for (const char* split : splits) {
      auto records = read_split(exp, split, &malformed);
      if (!records) continue;
      std::vector<IdSequence> c, d;
      for (const auto& r : *records) {
        if (!has_doc(r)) {
          ++skipped;
          continue;
        }
        c.push_back(code.encode(r.code));
        d.push_back(doc.encode(*r.docstring));
      }
      write_shard(shard_path(dir, split, "code"), c);
      write_shard(shard_path(dir, split, "doc"), d);
      report["splits"][split] = c.size();
    }
    report["malformed"] = malformed;
    report["without_docstring"] = skipped;
    write_preprocess_report(dir, report);
    return report;
  }

  static std::vector<SeqPair> pairs(const fs::path& data, std::string_view split, std::size_t max_src,
                                    std::size_t max_tgt) {
    auto codes = load_shard(data, split, "code");
    auto docs = load_shard(data, split, "doc");
    if (codes.size() != docs.size()) throw Error(ErrorCode::LengthMismatch, "code/doc shards differ in length");
    std::vector<SeqPair> out;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      out.push_back({truncate(std::move(codes[i]), max_src), wrap(truncate(std::move(docs[i]), max_tgt))});
    }
    return out;
  }

  TrainReport train(const Experiment& exp, bool resume) const override {
    const fs::path data = exp.data_dir();
    const fs::path out = exp.save_dir();
    const json& d = exp.section("data");
    const std::size_t max_src = d.value("max_src_len", std::size_t{200});
    const std::size_t max_tgt = d.value("max_tgt_len", std::size_t{30});
    const Vocabulary code_vocab = Vocabulary::load(vocab_path(data, "code"));
    const Vocabulary doc_vocab = Vocabulary::load(vocab_path(data, "doc"));
    auto train_pairs = pairs(data, "train", max_src, max_tgt);
    std::vector<SeqPair> valid_pairs;
    if (fs::exists(shard_path(data, "valid", "code"))) valid_pairs = pairs(data, "valid", max_src, max_tgt);

    auto model = make_model(exp.model_name(), exp.section("model"),
                            ModelShape{0, code_vocab.size(), doc_vocab.size(), 0});
    auto* s2s = dynamic_cast<Seq2Seq*>(model.get());
    if (!s2s) {
      throw Error(ErrorCode::ResolveFailure,
                  "model '" + exp.model_name() + "' cannot be trained for task 'summarization'");
    }
    copy_field_files(data, out, "code");
    copy_field_files(data, out, "doc");
    write_model_config(exp, out);
    Seq2SeqObjective objective(*s2s, std::move(train_pairs), std::move(valid_pairs));
    return run_training(exp, objective, *s2s, resume);
  }

  EvalReport evaluate(const Experiment& exp) const override {
    const std::string metric = eval_metric(exp, *this);
    const std::string split = exp.section("eval").value("split", std::string("test"));
    auto records = read_split(exp, split);
    if (!records) throw Error(ErrorCode::DataMissing, "data." + split + " is not set");
    const SummarizationPredictor predictor(exp.save_dir());
    MetricInputs in = metric_inputs(exp);
    for (const auto& r : *records) {
      if (!has_doc(r)) continue;
      in.hypotheses.push_back(space_tokenize(predictor.summarize(r.code).summary));
      in.references.push_back(space_tokenize(*r.docstring));
    }
    if (in.references.empty()) throw Error(ErrorCode::DataMissing, "evaluation split has no docstrings");
    return make_report(exp, *this, metric, compute_metric(metric, in), in.references.size());
  }

  std::unique_ptr<Predictor> load_predictor(const fs::path& dir) const override {
    return std::make_unique<SummarizationPredictor>(dir);
  }
};

}  // namespace

std::unique_ptr<Task> make_summarization_task() { return std::make_unique<SummarizationTask>(); }

}  // namespace ncc
