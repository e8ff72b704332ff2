#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncc/metrics.hpp"
#include "ncc/model.hpp"
#include "ncc/tokenizer.hpp"
#include "ncc/trainer.hpp"

namespace ncc {

/// An experiment config file: JSON with `task`, `model`, `data`,
/// `optimization`, `checkpoint` and `eval` sections. Relative paths are
/// resolved against the directory holding the file.
class Experiment {
 public:
  static Experiment load(const std::filesystem::path& config_file);
  Experiment(nlohmann::json doc, std::filesystem::path base_dir);

  const nlohmann::json& doc() const noexcept { return doc_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  /// Empty object when the section is absent.
  const nlohmann::json& section(std::string_view name) const;

  std::string task_name() const;
  std::string model_name() const;
  /// data.<key> resolved to a path; nullopt when absent.
  std::optional<std::filesystem::path> data_path(std::string_view key) const;
  /// data.data_dir, default "data-bin".
  std::filesystem::path data_dir() const;
  /// checkpoint.save_dir, default "checkpoints".
  std::filesystem::path save_dir() const;
  /// Hash of the task and model sections: the parts a checkpoint depends on.
  std::string digest() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;

 private:
  nlohmann::json doc_;
  std::filesystem::path base_dir_;
};

struct EvalReport {
  std::string task;
  std::string model;
  std::string metric;
  double value = 0.0;
  std::size_t num_items = 0;
  std::string config_digest;
};

nlohmann::json to_json(const EvalReport& report);

struct Candidate {
  std::string token;
  double prob = 0.0;
};

struct Summary {
  std::string summary;
  std::vector<std::string> tokens;
};

struct SearchHit {
  std::size_t id = 0;
  double score = 0.0;
  std::string path;
  std::string code;
};

/// Inference front of a trained model directory. Operations a task does not
/// support throw UnsupportedOperation; empty payloads throw EmptyInput.
/// Instances are immutable after loading and safe to share across threads.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string_view task() const = 0;
  virtual std::string_view model_name() const = 0;

  /// Next-token candidates after a whitespace-separated token prefix.
  virtual std::vector<Candidate> complete(const std::vector<std::string>& tokens, std::size_t k) const;
  /// Same, but the raw text goes through the model's own tokenizer.
  virtual std::vector<Candidate> complete_text(std::string_view text, std::size_t k) const;
  virtual Summary summarize(std::string_view code) const;
  virtual std::vector<SearchHit> search(std::string_view query, std::size_t k) const;
};

class Task {
 public:
  virtual ~Task() = default;

  virtual std::string_view name() const = 0;
  /// Metric names accepted in eval.metric; the first is the default.
  virtual std::vector<std::string> metrics() const = 0;

  /// Tokenizes the splits, writes vocabularies, merges and shards into
  /// data_dir. Returns a summary document (also written as
  /// data_dir/preprocess.json).
  virtual nlohmann::json preprocess(const Experiment& exp) const = 0;
  /// Trains and writes a self-contained model directory to save_dir.
  virtual TrainReport train(const Experiment& exp, bool resume = false) const = 0;
  virtual EvalReport evaluate(const Experiment& exp) const = 0;
  virtual std::unique_ptr<Predictor> load_predictor(const std::filesystem::path& model_dir) const = 0;
};

struct ModelShape {
  std::size_t vocab = 0;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t bptt_len = 32;
};

using TaskFactory = std::function<std::unique_ptr<Task>()>;
using ModelFactory = std::function<std::unique_ptr<Model>(const nlohmann::json& model_config, const ModelShape&)>;

/// Everything a metric may look at; each metric reads the fields it needs.
struct MetricInputs {
  std::vector<RankedPrediction> ranks;
  std::size_t cutoff = default_mrr_cutoff;
  std::vector<TokenSeq> hypotheses;
  std::vector<TokenSeq> references;
  /// Sum of -log P over predicted tokens and their count.
  double nll_sum = 0.0;
  std::size_t num_tokens = 0;
  int bleu_max_n = 4;
  bool bleu_smooth = true;
  double rouge_beta = 1.0;
};

using MetricFn = std::function<double(const MetricInputs&)>;

// Registry-backed constructors; all throw UnknownName for unregistered names.
std::unique_ptr<Task> make_task(std::string_view name);
std::unique_ptr<Model> make_model(std::string_view name, const nlohmann::json& model_config,
                                  const ModelShape& shape);
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name);
double compute_metric(std::string_view name, const MetricInputs& inputs);

/// Reads model_dir/config.json and hands the directory to its task.
/// Throws IoError when the directory or its files are missing.
std::unique_ptr<Predictor> load_predictor(const std::filesystem::path& model_dir);

}  // namespace ncc
