#pragma once

// Shared plumbing of the built-in tasks.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncc/corpus.hpp"
#include "ncc/task.hpp"

namespace ncc::detail {

namespace fs = std::filesystem;

/// A tokenized text field with its vocabulary. `stem` names the files:
/// vocab.txt / merges.txt when empty, vocab.<stem>.txt otherwise.
struct Field {
  std::string stem;
  std::unique_ptr<Tokenizer> tokenizer;
  Vocabulary vocab;

  IdSequence encode(std::string_view text) const;
};

fs::path vocab_path(const fs::path& dir, std::string_view stem);
fs::path shard_path(const fs::path& dir, std::string_view split, std::string_view stem);

inline constexpr const char* splits[] = {"train", "valid", "test"};

/// Records of data.<split>. Absent optional splits give nullopt; an absent
/// train split is DataMissing.
std::optional<std::vector<CodeRecord>> read_split(const Experiment& exp, std::string_view split,
                                                  std::size_t* malformed = nullptr);

/// Fits the tokenizer on `texts`, builds the vocabulary (data.min_count,
/// data.max_vocab) and writes both into `dir`.
Field fit_field(const Experiment& exp, const std::string& tokenizer, const std::vector<std::string>& texts,
                std::string stem, const fs::path& dir);
Field load_field(const fs::path& dir, const std::string& tokenizer, std::string stem);
/// Copies a field's vocabulary (and merges, if any) between directories.
void copy_field_files(const fs::path& from, const fs::path& to, std::string_view stem);

std::vector<IdSequence> load_shard(const fs::path& dir, std::string_view split, std::string_view stem);
void write_preprocess_report(const fs::path& dir, const nlohmann::json& report);

/// model_dir/config.json: the task and model sections plus the digest.
void write_model_config(const Experiment& exp, const fs::path& model_dir);
nlohmann::json read_model_config(const fs::path& model_dir);
std::string tokenizer_name(const nlohmann::json& task_section, const char* key);

/// Loads model.ckpt from a model directory into `model`.
void load_model_state(const fs::path& model_dir, Model& model);

/// Seeds and initializes the model, runs the configured trainer with
/// checkpoints in save_dir/model.ckpt, optionally resuming from it.
TrainReport run_training(const Experiment& exp, Objective& objective, Model& model, bool resume);

/// eval.metric validated against the task's list.
std::string eval_metric(const Experiment& exp, const Task& task);
MetricInputs metric_inputs(const Experiment& exp);

EvalReport make_report(const Experiment& exp, const Task& task, const std::string& metric, double value,
                       std::size_t num_items);

void check_k(std::size_t k);
IdSequence wrap(IdSequence ids);

}  // namespace ncc::detail
