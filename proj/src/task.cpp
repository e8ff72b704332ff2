#include "ncc/task.hpp"

#include <fstream>
#include <sstream>

#include "ncc/checkpoint.hpp"
#include "ncc/error.hpp"
#include "ncc/registry.hpp"
#include "task_common.hpp"

namespace ncc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
}

const json& empty_object() {
  static const json empty = json::object();
  return empty;
}

}  // namespace

Experiment Experiment::load(const fs::path& config_file) {
  return Experiment(read_json_file(config_file), fs::absolute(config_file).parent_path());
}

Experiment::Experiment(json doc, fs::path base_dir) : doc_(std::move(doc)), base_dir_(std::move(base_dir)) {
  if (!doc_.is_object()) throw Error(ErrorCode::BadConfig, "experiment config must be a JSON object");
  for (const char* key : {"task", "model", "data", "optimization", "checkpoint", "eval"}) {
    if (doc_.contains(key) && !doc_[key].is_object()) {
      throw Error(ErrorCode::BadConfig, std::string("section '") + key + "' must be an object");
    }
  }
}

const json& Experiment::section(std::string_view name) const {
  auto it = doc_.find(name);
  return it == doc_.end() ? empty_object() : *it;
}

std::string Experiment::task_name() const {
  const auto& t = section("task");
  if (!t.contains("name") || !t["name"].is_string()) throw Error(ErrorCode::BadConfig, "task.name is required");
  return t["name"].get<std::string>();
}

std::string Experiment::model_name() const {
  const auto& m = section("model");
  if (!m.contains("name") || !m["name"].is_string()) throw Error(ErrorCode::BadConfig, "model.name is required");
  return m["name"].get<std::string>();
}

fs::path Experiment::resolve(const fs::path& p) const {
  return (p.is_absolute() ? p : base_dir_ / p).lexically_normal();
}

std::optional<fs::path> Experiment::data_path(std::string_view key) const {
  const auto& d = section("data");
  auto it = d.find(key);
  if (it == d.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::BadConfig, "data." + std::string(key) + " must be a path string");
  return resolve(it->get<std::string>());
}

fs::path Experiment::data_dir() const { return data_path("data_dir").value_or(resolve("data-bin")); }

fs::path Experiment::save_dir() const {
  const auto& c = section("checkpoint");
  return resolve(c.value("save_dir", std::string("checkpoints")));
}

std::string Experiment::digest() const {
  return config_digest(json{{"task", section("task")}, {"model", section("model")}});
}

json to_json(const EvalReport& r) {
  return json{{"task", r.task},   {"model", r.model},         {"metric", r.metric},
              {"value", r.value}, {"num_items", r.num_items}, {"config_digest", r.config_digest}};
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void unsupported(const Predictor& p, std::string_view op) {
  throw Error(ErrorCode::UnsupportedOperation,
              "model '" + std::string(p.model_name()) + "' serves task '" + std::string(p.task()) +
                  "' and cannot " + std::string(op));
}

}  // namespace

std::vector<Candidate> Predictor::complete(const std::vector<std::string>&, std::size_t) const {
  unsupported(*this, "complete code");
}
std::vector<Candidate> Predictor::complete_text(std::string_view, std::size_t) const {
  unsupported(*this, "complete code");
}
Summary Predictor::summarize(std::string_view) const { unsupported(*this, "summarize code"); }
std::vector<SearchHit> Predictor::search(std::string_view, std::size_t) const { unsupported(*this, "search code"); }

// ---------------------------------------------------------------------------

std::unique_ptr<Task> make_task(std::string_view name) {
  install_builtins();
  return global_registry().resolve_as<TaskFactory>(RegistryKind::task, name)();
}

std::unique_ptr<Model> make_model(std::string_view name, const json& model_config, const ModelShape& shape) {
  install_builtins();
  return global_registry().resolve_as<ModelFactory>(RegistryKind::model, name)(model_config, shape);
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name) {
  install_builtins();
  return global_registry().resolve_as<TokenizerFactory>(RegistryKind::tokenizer, name)();
}

double compute_metric(std::string_view name, const MetricInputs& inputs) {
  install_builtins();
  return global_registry().resolve_as<MetricFn>(RegistryKind::metric, name)(inputs);
}

std::unique_ptr<Predictor> load_predictor(const fs::path& model_dir) {
  if (!fs::is_directory(model_dir)) throw Error(ErrorCode::IoError, "no model directory at " + model_dir.string());
  const json cfg = detail::read_model_config(model_dir);
  const std::string task = cfg.at("task").value("name", std::string());
  return make_task(task)->load_predictor(model_dir);
}

// ---------------------------------------------------------------------------

namespace detail {

IdSequence Field::encode(std::string_view text) const { return vocab.encode(tokenizer->tokenize(text)); }

fs::path vocab_path(const fs::path& dir, std::string_view stem) {
  return dir / (stem.empty() ? std::string("vocab.txt") : "vocab." + std::string(stem) + ".txt");
}

fs::path shard_path(const fs::path& dir, std::string_view split, std::string_view stem) {
  std::string name(split);
  if (!stem.empty()) name += "." + std::string(stem);
  return dir / (name + ".bin");
}

std::optional<std::vector<CodeRecord>> read_split(const Experiment& exp, std::string_view split,
                                                  std::size_t* malformed) {
  auto path = exp.data_path(split);
  if (!path) {
    if (split == "train") throw Error(ErrorCode::DataMissing, "data.train is not set");
    return std::nullopt;
  }
  LoadReport report;
  auto records = load_records(*path, &report);
  if (malformed) *malformed += report.malformed;
  return records;
}

Field fit_field(const Experiment& exp, const std::string& tokenizer, const std::vector<std::string>& texts,
                std::string stem, const fs::path& dir) {
  Field f{std::move(stem), make_tokenizer(tokenizer), Vocabulary()};
  const json& data = exp.section("data");
  f.tokenizer->fit(texts, data);
  TokenCounts counts;
  for (const auto& t : texts) {
    for (auto& tok : f.tokenizer->tokenize(t)) ++counts[tok];
  }
  f.vocab = Vocabulary::build(counts, data.value("min_count", std::int64_t{1}),
                              data.value("max_vocab", std::size_t{50000}));
  fs::create_directories(dir);
  f.vocab.save(vocab_path(dir, f.stem));
  f.tokenizer->save(dir, f.stem);
  return f;
}

Field load_field(const fs::path& dir, const std::string& tokenizer, std::string stem) {
  Field f{std::move(stem), make_tokenizer(tokenizer), Vocabulary()};
  f.vocab = Vocabulary::load(vocab_path(dir, f.stem));
  f.tokenizer->load(dir, f.stem);
  return f;
}

void copy_field_files(const fs::path& from, const fs::path& to, std::string_view stem) {
  fs::create_directories(to);
  const auto opts = fs::copy_options::overwrite_existing;
  const fs::path vocab = vocab_path(from, stem);
  if (!fs::exists(vocab)) throw Error(ErrorCode::DataMissing, vocab.string() + " not found; run preprocess first");
  if (fs::equivalent(from, to)) return;
  fs::copy_file(vocab, vocab_path(to, stem), opts);
  if (fs::exists(merges_path(from, stem))) fs::copy_file(merges_path(from, stem), merges_path(to, stem), opts);
}

std::vector<IdSequence> load_shard(const fs::path& dir, std::string_view split, std::string_view stem) {
  const fs::path p = shard_path(dir, split, stem);
  if (!fs::exists(p)) throw Error(ErrorCode::DataMissing, p.string() + " not found; run preprocess first");
  return read_shard(p);
}

void write_preprocess_report(const fs::path& dir, const json& report) {
  std::ofstream out(dir / "preprocess.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "preprocess.json").string());
  out << report.dump(2) << '\n';
}

void write_model_config(const Experiment& exp, const fs::path& model_dir) {
  fs::create_directories(model_dir);
  const json cfg{{"task", exp.section("task")},
                 {"model", exp.section("model")},
                 {"data", {{"bptt_len", exp.section("data").value("bptt_len", 32)},
                           {"max_src_len", exp.section("data").value("max_src_len", 200)}}},
                 {"config_digest", exp.digest()}};
  std::ofstream out(model_dir / "config.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (model_dir / "config.json").string());
  out << cfg.dump(2) << '\n';
}

json read_model_config(const fs::path& model_dir) {
  json cfg = read_json_file(model_dir / "config.json");
  if (!cfg.is_object() || !cfg.contains("task") || !cfg.contains("model")) {
    throw Error(ErrorCode::BadConfig, (model_dir / "config.json").string() + " lacks task/model sections");
  }
  return cfg;
}

std::string tokenizer_name(const json& task_section, const char* key) {
  return task_section.value(key, std::string("space"));
}

void load_model_state(const fs::path& model_dir, Model& model) {
  const Checkpoint ckpt = load_checkpoint(model_dir / "model.ckpt");
  if (ckpt.model_name != model.model_name()) {
    throw Error(ErrorCode::ResolveFailure, "checkpoint holds a '" + ckpt.model_name + "' model, config says '" +
                                               std::string(model.model_name()) + "'");
  }
  model.import_state(ckpt.tensors);
}

TrainReport run_training(const Experiment& exp, Objective& objective, Model& model, bool resume) {
  TrainConfig tc = TrainConfig::from_json(exp.doc());
  Rng init_rng(tc.optimization.seed);
  model.initialize(init_rng, exp.section("model").value("init_scale", 0.08));
  Trainer trainer(objective, tc);
  const fs::path ckpt = exp.save_dir() / "model.ckpt";
  trainer.set_checkpoint({ckpt, std::string(model.model_name()), exp.digest()});
  if (resume && fs::exists(ckpt)) trainer.resume(load_checkpoint(ckpt, exp.digest()));
  return trainer.train();
}

std::string eval_metric(const Experiment& exp, const Task& task) {
  const auto supported = task.metrics();
  const std::string metric = exp.section("eval").value("metric", supported.front());
  if (std::find(supported.begin(), supported.end(), metric) == supported.end()) {
    std::string list;
    for (const auto& m : supported) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::BadConfig,
                "metric '" + metric + "' does not apply to task '" + std::string(task.name()) + "' (use " + list + ")");
  }
  return metric;
}

MetricInputs metric_inputs(const Experiment& exp) {
  const json& e = exp.section("eval");
  MetricInputs in;
  in.cutoff = e.value("cutoff", default_mrr_cutoff);
  in.bleu_max_n = e.value("max_n", 4);
  in.bleu_smooth = e.value("smooth", true);
  in.rouge_beta = e.value("beta", 1.0);
  return in;
}

EvalReport make_report(const Experiment& exp, const Task& task, const std::string& metric, double value,
                       std::size_t num_items) {
  return EvalReport{std::string(task.name()), exp.model_name(), metric, value, num_items, exp.digest()};
}

void check_k(std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
}

IdSequence wrap(IdSequence ids) {
  ids.insert(ids.begin(), Vocabulary::bos_id);
  ids.push_back(Vocabulary::eos_id);
  return ids;
}

}  // namespace detail

}  // namespace ncc
