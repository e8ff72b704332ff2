#pragma once

#include <span>

#include "ncc/corpus.hpp"
#include "ncc/model.hpp"

namespace ncc {

struct Seq2SeqConfig {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t max_decode_len = 30;
};

/// Elman encoder-decoder without attention. The decoder starts from the
/// encoder's final hidden state and is trained with teacher forcing.
class Seq2Seq : public Model {
 public:
  explicit Seq2Seq(Seq2SeqConfig config);


  std::string_view model_name() const override { return "seq2seq"; }
  const Seq2SeqConfig& config() const noexcept { return config_; }

  /// Summed cross-entropy of tgt[1..L) given src and tgt[0..L-1) (tgt is
  /// bos ... eos). Adds the gradient of the sum into `grads` when non-null.
  /// Throws EmptyInput for an empty source or a target shorter than 2.
  double pair_loss(std::span<const int> src, std::span<const int> tgt, Gradients* grads) const;

  /// Starts from bos and repeatedly takes the arg-max token (smaller id on
  /// ties) until eos or max_decode_len tokens; bos/eos are not returned.
  IdSequence greedy_decode(std::span<const int> src) const;

 private:
  Vec encode(std::span<const int> src) const;

  Seq2SeqConfig config_;
  std::size_t enc_embed_, enc_w_xh_, enc_w_hh_, enc_b_h_;
  std::size_t dec_embed_, dec_w_xh_, dec_w_hh_, dec_b_h_, dec_w_hy_, dec_b_y_;
};

/// Mean per-target-token loss of one (src, tgt) pair and its gradient.
LossResult seq2seq_loss(const Seq2Seq& model, std::span<const int> src, std::span<const int> tgt);

}  // namespace ncc
