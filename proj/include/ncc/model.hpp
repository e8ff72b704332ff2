#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ncc/nn.hpp"
#include "ncc/tensor.hpp"

namespace ncc {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Base for everything the registry can build as a "model". Neural models
/// keep their weights in the ParameterSet; count-based ones override the
/// state export/import.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view model_name() const = 0;

  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  /// Tensors written to a checkpoint.
  virtual NamedTensors export_state() const;
  /// Throws ShapeMismatch / DataMissing when `state` does not fit the model.
  virtual void import_state(const NamedTensors& state);

  /// Seeded uniform(-scale, scale) weights, zero biases. No-op for models
  /// without trainable parameters.
  virtual void initialize(Rng& rng, double scale = 0.08);

 protected:
  ParameterSet params_;
};

/// Result of a differentiable loss: `loss` is the mean over `weight`
/// prediction events and `grads` is the gradient of that mean.
struct LossResult {
  double loss = 0.0;
  double weight = 0.0;
  Gradients grads;
};

/// Next-token predictor over a closed vocabulary.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;

  /// P(next | prefix) for every id; sums to one.
  virtual Vec next_distribution(std::span<const int> prefix) const = 0;

  /// log P(seq[i] | seq[0..i)) for i = 1..n-1.
  virtual Vec sequence_log_probs(std::span<const int> seq) const;
  /// Entry i-1 is P(. | seq[0..i)) for i = 1..n-1.
  virtual std::vector<Vec> prefix_distributions(std::span<const int> seq) const;
};

struct TokenProb {
  int id = 0;
  double prob = 0.0;
};

/// Highest-probability ids, descending, ties broken by smaller id.
std::vector<TokenProb> top_k(std::span<const double> dist, std::size_t k);

std::vector<TokenProb> lm_topk(const LanguageModel& model, std::span<const int> prefix, std::size_t k);

/// 1-based rank of `target` under the same ordering as top_k.
std::size_t rank_of(std::span<const double> scores, int target);

}  // namespace ncc
