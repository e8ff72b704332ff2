#pragma once

#include <span>

#include "ncc/corpus.hpp"
#include "ncc/model.hpp"

namespace ncc {

struct RnnLmConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  /// Gradients do not flow across window boundaries; the hidden state does.
  std::size_t bptt_len = 32;
};

/// Embedding -> Elman tanh cell -> softmax output layer.
///
/// Parameters: embed (V x d), w_xh (d x h), w_hh (h x h), b_h (h),
/// w_hy (h x V), b_y (V).
class RnnLm : public Model, public LanguageModel {
 public:
  explicit RnnLm(RnnLmConfig config);


  std::string_view model_name() const override { return "seqrnn"; }
  const RnnLmConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const override { return config_.vocab_size; }

  /// Summed cross-entropy of predicting targets[t] after inputs[0..t], with
  /// truncated BPTT. Adds the gradient of that sum into `grads` if non-null.
  double row_loss(std::span<const int> inputs, std::span<const int> targets, Gradients* grads) const;

  Vec next_distribution(std::span<const int> prefix) const override;
  Vec sequence_log_probs(std::span<const int> seq) const override;
  std::vector<Vec> prefix_distributions(std::span<const int> seq) const override;

 private:
  Vec logits(std::span<const double> h) const;

  RnnLmConfig config_;
  std::size_t embed_, w_xh_, w_hh_, b_h_, w_hy_, b_y_;
};

/// Mean token loss over the non-pad target positions of `batch` (which must
/// carry targets), with its gradient. Rows are reduced in order.
LossResult rnnlm_loss(const RnnLm& model, const MiniBatch& batch);

}  // namespace ncc
