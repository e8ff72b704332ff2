#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncc/checkpoint.hpp"
#include "ncc/nn.hpp"

namespace ncc {

struct OptimizationConfig {
  double lr = 1e-2;
  double min_lr = 1e-6;
  double lr_shrink = 0.95;
  int max_epoch = 10;
  std::int64_t max_update = 1'000'000;
  int update_freq = 1;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string optimizer = "adam";
};

struct TrainConfig {
  OptimizationConfig optimization;
  std::size_t batch_size = 8;
  std::size_t bptt_len = 32;
  bool shuffle = true;
  /// "default" or "simple".
  std::string trainer = "default";

  /// Reads the `optimization`, `data` and `trainer` members of an experiment
  /// document; absent keys keep their defaults. Throws BadConfig.
  static TrainConfig from_json(const nlohmann::json& doc);
};

/// Loop guard: lr above min_lr, next epoch within max_epoch, and
/// fewer than max_update updates so far.
bool should_continue(const TrainState& state, const TrainConfig& config);

struct WorkResult {
  double loss_sum = 0.0;
  /// Number of prediction events behind loss_sum (e.g. non-pad tokens).
  double weight = 0.0;
};

/// What the trainer optimizes. compute() only reads parameters, so units can
/// be evaluated concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual ParameterSet& parameters() = 0;
  virtual std::size_t num_examples() const = 0;

  /// Breaks one micro-batch (example indices in dataset order) into units
  /// whose gradients are computed independently and summed in order. The
  /// default is one unit per example.
  virtual std::vector<std::vector<std::size_t>> split(std::span<const std::size_t> batch) const;

  /// Loss sum of a unit; adds the gradient of that sum into `grads` (which
  /// arrives zeroed) when non-null.
  virtual WorkResult compute(std::span<const std::size_t> unit, Gradients* grads) const = 0;

  /// Held-out loss, if the objective has validation data.
  virtual std::optional<WorkResult> validation() const { return std::nullopt; }
};

struct TrainReport {
  std::vector<double> epoch_losses;
  std::vector<double> valid_losses;
  /// Mean loss of each applied update, in order.
  std::vector<double> update_losses;
  std::int64_t num_updates = 0;
  double wall_seconds = 0.0;
  std::filesystem::path checkpoint_path;
  std::string stop_reason;
};

struct CheckpointTarget {
  std::filesystem::path path;
  std::string model_name;
  std::string config_digest;
};

/// Single coordinator that owns parameters and optimizer state. Each update
/// consumes a window of update_freq micro-batches whose units are spread
/// over `workers` threads and reduced in unit order, so results do not
/// depend on the worker count. Window order is shuffled once per epoch.
class Trainer {
 public:
  Trainer(Objective& objective, TrainConfig config);

  void set_checkpoint(CheckpointTarget target) { target_ = std::move(target); }

  /// Restores parameters, optimizer moments and TrainState.
  void resume(const Checkpoint& checkpoint);

  TrainReport train();

  const TrainState& state() const noexcept { return state_; }
  const AdamState& optimizer_state() const noexcept { return adam_; }

  /// Parameters plus optimizer moments, as stored in checkpoints.
  NamedTensors checkpoint_tensors() const;

 private:
  std::vector<std::vector<std::vector<std::size_t>>> make_windows() const;
  WorkResult run_window(const std::vector<std::vector<std::size_t>>& window);
  void apply_update(const WorkResult& result);
  void write_checkpoint();
  void end_epoch(TrainReport& report, double loss_sum, double weight);

  Objective& objective_;
  TrainConfig config_;
  TrainState state_;
  AdamState adam_;
  Gradients total_;
  std::vector<Gradients> worker_grads_;
  std::optional<CheckpointTarget> target_;
};

}  // namespace ncc
