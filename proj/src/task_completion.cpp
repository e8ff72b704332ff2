#include <chrono>
#include <cmath>

#include "ncc/checkpoint.hpp"
#include "ncc/error.hpp"
#include "ncc/ngram.hpp"
#include "ncc/objectives.hpp"
#include "ncc/rnnlm.hpp"
#include "task_common.hpp"
#include "tasks.hpp"

namespace ncc {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detail;

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

class CompletionPredictor : public Predictor {
 public:
  explicit CompletionPredictor(const fs::path& dir) {
    const json cfg = read_model_config(dir);
    field_ = load_field(dir, tokenizer_name(cfg["task"], "tokenizer"), "");
    ModelShape shape;
    shape.vocab = field_.vocab.size();
    shape.bptt_len = cfg.value("data", json::object()).value("bptt_len", std::size_t{32});
    model_ = make_model(cfg["model"].value("name", std::string()), cfg["model"], shape);
    lm_ = dynamic_cast<const LanguageModel*>(model_.get());
    if (!lm_) throw Error(ErrorCode::ResolveFailure, "model '" + std::string(model_->model_name()) + "' is not a language model");
    load_model_state(dir, *model_);
  }

  std::string_view task() const override { return "completion"; }
  std::string_view model_name() const override { return model_->model_name(); }

  std::vector<Candidate> complete(const std::vector<std::string>& tokens, std::size_t k) const override {
    return complete_text(join(tokens), k);
  }

  std::vector<Candidate> complete_text(std::string_view text, std::size_t k) const override {
    check_k(k);
    const auto tokens = field_.tokenizer->tokenize_prefix(text);
    if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "empty completion prefix");
    IdSequence prefix{Vocabulary::bos_id};
    for (int id : field_.vocab.encode(tokens)) prefix.push_back(id);
    std::vector<Candidate> out;
    for (const auto& tp : lm_topk(*lm_, prefix, k)) out.push_back({field_.vocab.token(tp.id), tp.prob});
    return out;
  }

  const LanguageModel& lm() const { return *lm_; }

 private:
  Field field_;
  std::unique_ptr<Model> model_;
  const LanguageModel* lm_ = nullptr;
};

class CompletionTask : public Task {
 public:
  std::string_view name() const override { return "completion"; }
  std::vector<std::string> metrics() const override { return {"mrr", "perplexity"}; }

  json preprocess(const Experiment& exp) const override {
    std::size_t malformed = 0;
    const auto train = *read_split(exp, "train", &malformed);
    if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "training split has no records");
    std::vector<std::string> texts;
    for (const auto& r : train) texts.push_back(r.code);
    const fs::path dir = exp.data_dir();
    const std::string tok = tokenizer_name(exp.section("task"), "tokenizer");
    const Field field = fit_field(exp, tok, texts, "", dir);

    json report{{"task", "completion"}, {"tokenizer", tok}, {"vocab_size", field.vocab.size()}};
    for (const char* split : splits) {
      auto records = read_split(exp, split, &malformed);
      if (!records) continue;
      std::vector<IdSequence> seqs;
      for (const auto& r : *records) seqs.push_back(field.encode(r.code));
      write_shard(shard_path(dir, split, ""), seqs);
      report["splits"][split] = seqs.size();
    }
    report["malformed"] = malformed;
    write_preprocess_report(dir, report);
    return report;
  }

  TrainReport train(const Experiment& exp, bool resume) const override {
    const fs::path data = exp.data_dir();
    const fs::path out = exp.save_dir();
    const Vocabulary vocab = Vocabulary::load(vocab_path(data, ""));
    std::vector<IdSequence> train_seqs, valid_seqs;
    for (auto& s : load_shard(data, "train", "")) train_seqs.push_back(wrap(std::move(s)));
    if (fs::exists(shard_path(data, "valid", ""))) {
      for (auto& s : load_shard(data, "valid", "")) valid_seqs.push_back(wrap(std::move(s)));
    }
    ModelShape shape;
    shape.vocab = vocab.size();
    shape.bptt_len = exp.section("data").value("bptt_len", std::size_t{32});
    auto model = make_model(exp.model_name(), exp.section("model"), shape);

    copy_field_files(data, out, "");
    write_model_config(exp, out);

    if (auto* ngram = dynamic_cast<NgramModel*>(model.get())) {
      const auto start = std::chrono::steady_clock::now();
      *ngram = NgramModel::train(train_seqs, ngram->order(), ngram->lambda(), vocab.size());
      TrainReport report;
      if (!valid_seqs.empty()) {
        double nll = 0.0, n = 0.0;
        for (const auto& s : valid_seqs) {
          for (double lp : ngram->sequence_log_probs(s)) nll -= lp, n += 1.0;
        }
        report.valid_losses.push_back(nll / n);
      }
      report.checkpoint_path = out / "model.ckpt";
      save_checkpoint(report.checkpoint_path, *ngram, TrainState{}, exp.digest());
      report.stop_reason = "counted";
      report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return report;
    }
    if (auto* rnn = dynamic_cast<RnnLm*>(model.get())) {
      LmObjective objective(*rnn, std::move(train_seqs), std::move(valid_seqs));
      return run_training(exp, objective, *rnn, resume);
    }
    throw Error(ErrorCode::ResolveFailure,
                "model '" + exp.model_name() + "' cannot be trained for task 'completion'");
  }

  EvalReport evaluate(const Experiment& exp) const override {
    const std::string metric = eval_metric(exp, *this);
    const CompletionPredictor predictor(exp.save_dir());
    MetricInputs in = metric_inputs(exp);
    for (auto& raw : load_shard(exp.data_dir(), exp.section("eval").value("split", std::string("test")), "")) {
      const IdSequence seq = wrap(std::move(raw));
      const auto dists = predictor.lm().prefix_distributions(seq);
      for (std::size_t i = 1; i < seq.size(); ++i) {
        const auto& dist = dists[i - 1];
        in.ranks.push_back(rank_of(dist, seq[i]));
        in.nll_sum -= std::log(dist[static_cast<std::size_t>(seq[i])]);
        ++in.num_tokens;
      }
    }
    if (in.num_tokens == 0) throw Error(ErrorCode::DataMissing, "evaluation split has no tokens");
    return make_report(exp, *this, metric, compute_metric(metric, in), in.num_tokens);
  }

  std::unique_ptr<Predictor> load_predictor(const fs::path& dir) const override {
    return std::make_unique<CompletionPredictor>(dir);
  }
};

}  // namespace

std::unique_ptr<Task> make_completion_task() { return std::make_unique<CompletionTask>(); }

}  // namespace ncc
