#include <algorithm>
#include <fstream>

#include "ncc/error.hpp"
#include "ncc/nbow.hpp"
#include "ncc/objectives.hpp"
#include "task_common.hpp"
#include "tasks.hpp"

namespace ncc {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace detail;

namespace {

bool has_query(const CodeRecord& r) { return r.docstring && !space_tokenize(*r.docstring).empty(); }

/// Searchable snippets; ids are line numbers (0-based) of index.jsonl.
struct IndexEntry {
  std::string path;
  std::string code;
};

void write_index(const fs::path& path, const std::vector<IndexEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out << json{{"id", i}, {"path", entries[i].path}, {"code", entries[i].code}}.dump() << '\n';
  }
}

std::vector<IndexEntry> read_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<IndexEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, "bad line in " + path.string());
    out.push_back({j.value("path", std::string()), j.value("code", std::string())});
  }
  return out;
}

class RetrievalPredictor : public Predictor {
 public:
  explicit RetrievalPredictor(const fs::path& dir) {
    const json cfg = read_model_config(dir);
    code_ = load_field(dir, tokenizer_name(cfg["task"], "tokenizer"), "code");
    query_ = load_field(dir, tokenizer_name(cfg["task"], "query_tokenizer"), "query");
    auto model = make_model(cfg["model"].value("name", std::string()), cfg["model"],
                            ModelShape{0, code_.vocab.size(), query_.vocab.size(), 0});
    auto* nbow = dynamic_cast<NbowEncoder*>(model.get());
    if (!nbow) throw Error(ErrorCode::ResolveFailure, "model '" + std::string(model->model_name()) + "' cannot search");
    model.release();
    model_.reset(nbow);
    load_model_state(dir, *model_);

    index_ = read_index(dir / "index.jsonl");
    for (const auto& e : index_) {
      IdSequence ids;
      try {
        ids = code_.encode(e.code);
      } catch (const Error&) {
        // Snippets the code tokenizer rejects stay unsearchable.
      }
      vectors_.push_back(ids.empty() ? Vec{} : model_->encode(ids, Side::code));
    }
  }

  std::string_view task() const override { return "retrieval"; }
  std::string_view model_name() const override { return model_->model_name(); }

  std::vector<SearchHit> search(std::string_view query, std::size_t k) const override {
    check_k(k);
    const IdSequence ids = query_.encode(query);
    if (ids.empty()) throw Error(ErrorCode::EmptyInput, "empty query");
    const Vec q = model_->encode(ids, Side::query);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      if (!vectors_[i].empty()) scored.emplace_back(dot(q, vectors_[i]), i);
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<SearchHit> out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [score, id] = scored[i];
      out.push_back({id, score, index_[id].path, index_[id].code});
    }
    return out;
  }

 private:
  Field code_;
  Field query_;
  std::unique_ptr<NbowEncoder> model_;
  std::vector<IndexEntry> index_;
  std::vector<Vec> vectors_;
};

class RetrievalTask : public Task {
 public:
  std::string_view name() const override { return "retrieval"; }
  std::vector<std::string> metrics() const override { return {"mrr"}; }

  json preprocess(const Experiment& exp) const override {
    std::size_t malformed = 0;
    auto train = *read_split(exp, "train", &malformed);
    std::erase_if(train, [](const CodeRecord& r) { return !has_query(r); });
    if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "training split has no records with a docstring");
    std::vector<std::string> codes, queries;
    for (const auto& r : train) {
      codes.push_back(r.code);
      queries.push_back(*r.docstring);
    }
    const fs::path dir = exp.data_dir();
    const json& task = exp.section("task");
    const Field code = fit_field(exp, tokenizer_name(task, "tokenizer"), codes, "code", dir);
    const Field query = fit_field(exp, tokenizer_name(task, "query_tokenizer"), queries, "query", dir);

    json report{{"task", "retrieval"},
                {"code_vocab_size", code.vocab.size()},
                {"query_vocab_size", query.vocab.size()}};
    std::vector<IndexEntry> index;
    for (const char* split : splits) {
      auto records = read_split(exp, split, &malformed);
      if (!records) continue;
      std::vector<IdSequence> c, q;
      for (const auto& r : *records) {
        index.push_back({r.path, r.code});
        if (!has_query(r)) continue;
        c.push_back(code.encode(r.code));
        q.push_back(query.encode(*r.docstring));
      }
      write_shard(shard_path(dir, split, "code"), c);
      write_shard(shard_path(dir, split, "query"), q);
      report["splits"][split] = c.size();
    }
    write_index(dir / "index.jsonl", index);
    report["index_size"] = index.size();
    report["malformed"] = malformed;
    write_preprocess_report(dir, report);
    return report;
  }

  TrainReport train(const Experiment& exp, bool resume) const override {
    const fs::path data = exp.data_dir();
    const fs::path out = exp.save_dir();
    const Vocabulary code_vocab = Vocabulary::load(vocab_path(data, "code"));
    const Vocabulary query_vocab = Vocabulary::load(vocab_path(data, "query"));
    auto model = make_model(exp.model_name(), exp.section("model"),
                            ModelShape{0, code_vocab.size(), query_vocab.size(), 0});
    auto* nbow = dynamic_cast<NbowEncoder*>(model.get());
    if (!nbow) {
      throw Error(ErrorCode::ResolveFailure, "model '" + exp.model_name() + "' cannot be trained for task 'retrieval'");
    }
    copy_field_files(data, out, "code");
    copy_field_files(data, out, "query");
    if (!fs::equivalent(data, out)) {
      fs::copy_file(data / "index.jsonl", out / "index.jsonl", fs::copy_options::overwrite_existing);
    }
    write_model_config(exp, out);
    RetrievalObjective objective(*nbow, load_shard(data, "train", "code"), load_shard(data, "train", "query"));
    return run_training(exp, objective, *nbow, resume);
  }

  EvalReport evaluate(const Experiment& exp) const override {
    const std::string metric = eval_metric(exp, *this);
    const std::string split = exp.section("eval").value("split", std::string("test"));
    const std::size_t group = exp.section("eval").value("group_size", std::size_t{32});
    if (group < 1) throw Error(ErrorCode::BadConfig, "eval.group_size must be >= 1");
    const fs::path data = exp.data_dir();
    const auto codes = load_shard(data, split, "code");
    const auto queries = load_shard(data, split, "query");
    const json cfg = read_model_config(exp.save_dir());
    NbowEncoder model(NbowConfig{Vocabulary::load(vocab_path(exp.save_dir(), "code")).size(),
                                 Vocabulary::load(vocab_path(exp.save_dir(), "query")).size(),
                                 cfg["model"].value("dim", std::size_t{64}), cfg["model"].value("scale", 10.0)});
    load_model_state(exp.save_dir(), model);

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (!codes[i].empty() && !queries[i].empty()) usable.push_back(i);
    }
    MetricInputs in = metric_inputs(exp);
    for (std::size_t start = 0; start < usable.size(); start += group) {
      const std::size_t end = std::min(usable.size(), start + group);
      std::vector<Vec> c;
      for (std::size_t j = start; j < end; ++j) c.push_back(model.encode(codes[usable[j]], Side::code));
      for (std::size_t j = start; j < end; ++j) {
        const Vec q = model.encode(queries[usable[j]], Side::query);
        Vec scores;
        for (const auto& v : c) scores.push_back(dot(q, v));
        in.ranks.push_back(rank_of(scores, static_cast<int>(j - start)));
      }
    }
    if (in.ranks.empty()) throw Error(ErrorCode::DataMissing, "evaluation split has no (code, query) pairs");
    return make_report(exp, *this, metric, compute_metric(metric, in), in.ranks.size());
  }

  std::unique_ptr<Predictor> load_predictor(const fs::path& dir) const override {
    return std::make_unique<RetrievalPredictor>(dir);
  }
};

}  // namespace

std::unique_ptr<Task> make_retrieval_task() { return std::make_unique<RetrievalTask>(); }

}  // namespace ncc
