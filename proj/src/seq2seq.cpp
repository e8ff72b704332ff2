#include "ncc/seq2seq.hpp"

#include <algorithm>

#include "ncc/error.hpp"
#include "recurrent.hpp"

namespace ncc {

Seq2Seq::Seq2Seq(Seq2SeqConfig config) : config_(config) {
  if (config_.src_vocab == 0 || config_.tgt_vocab == 0 || config_.embed_dim == 0 || config_.hidden_dim == 0) {
    throw Error(ErrorCode::BadConfig, "seq2seq dimensions must be positive");
  }
  const auto enc = detail::add_cell(params_, "enc.", config_.src_vocab, config_.embed_dim, config_.hidden_dim);
  enc_embed_ = enc.embed;
  enc_w_xh_ = enc.w_xh;
  enc_w_hh_ = enc.w_hh;
  enc_b_h_ = enc.b_h;
  const auto dec = detail::add_cell(params_, "dec.", config_.tgt_vocab, config_.embed_dim, config_.hidden_dim);
  dec_embed_ = dec.embed;
  dec_w_xh_ = dec.w_xh;
  dec_w_hh_ = dec.w_hh;
  dec_b_h_ = dec.b_h;
  dec_w_hy_ = params_.add("dec.w_hy", {config_.hidden_dim, config_.tgt_vocab});
  dec_b_y_ = params_.add("dec.b_y", {config_.tgt_vocab});
}


Vec Seq2Seq::encode(std::span<const int> src) const {
  const detail::CellIndex enc{enc_embed_, enc_w_xh_, enc_w_hh_, enc_b_h_};
  return detail::run_cell(params_, enc, src, Vec(config_.hidden_dim, 0.0)).back();
}

double Seq2Seq::pair_loss(std::span<const int> src, std::span<const int> tgt, Gradients* grads) const {
  if (src.empty()) throw Error(ErrorCode::EmptyInput, "seq2seq source is empty");
  if (tgt.size() < 2) throw Error(ErrorCode::EmptyInput, "seq2seq target needs bos and eos");
  const detail::CellIndex enc{enc_embed_, enc_w_xh_, enc_w_hh_, enc_b_h_};
  const detail::CellIndex dec{dec_embed_, dec_w_xh_, dec_w_hh_, dec_b_h_};

  const auto enc_hs = detail::run_cell(params_, enc, src, Vec(config_.hidden_dim, 0.0));
  const auto dec_in = tgt.first(tgt.size() - 1);
  const auto dec_hs = detail::run_cell(params_, dec, dec_in, enc_hs.back());

  const auto& w_hy = params_[dec_w_hy_].value;
  const auto& b_y = params_[dec_b_y_].value;
  std::vector<Vec> dh_out;
  if (grads) dh_out.assign(dec_in.size(), Vec(config_.hidden_dim, 0.0));
  double total = 0.0;
  Vec logits(config_.tgt_vocab);
  for (std::size_t t = 0; t < dec_in.size(); ++t) {
    affine_forward(w_hy, &b_y, dec_hs[t + 1], logits);
    const auto xent = softmax_xent(logits, tgt[t + 1]);
    total += xent.loss;
    if (grads) affine_backward(w_hy, dec_hs[t + 1], xent.grad, (*grads)[dec_w_hy_], &(*grads)[dec_b_y_], dh_out[t]);
  }
  if (grads) {
    const Vec dh_enc = detail::backprop_cell(params_, dec, dec_in, dec_hs, dh_out, *grads);
    std::vector<Vec> enc_out(src.size(), Vec(config_.hidden_dim, 0.0));
    enc_out.back() = dh_enc;
    detail::backprop_cell(params_, enc, src, enc_hs, enc_out, *grads);
  }
  return total;
}

IdSequence Seq2Seq::greedy_decode(std::span<const int> src) const {
  IdSequence out;
  if (config_.max_decode_len == 0) return out;
  Vec h = src.empty() ? Vec(config_.hidden_dim, 0.0) : encode(src);
  const RnnCellRef cell{params_[dec_w_xh_].value, params_[dec_w_hh_].value, params_[dec_b_h_].value};
  Vec logits(config_.tgt_vocab);
  int prev = Vocabulary::bos_id;
  while (out.size() < config_.max_decode_len) {
    h = rnn_step(embedding_lookup(params_[dec_embed_].value, prev), h, cell);
    affine_forward(params_[dec_w_hy_].value, &params_[dec_b_y_].value, h, logits);
    const auto best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == Vocabulary::eos_id) break;
    out.push_back(best);
    prev = best;
  }
  return out;
}

LossResult seq2seq_loss(const Seq2Seq& model, std::span<const int> src, std::span<const int> tgt) {
  LossResult r;
  r.grads = model.parameters().zero_gradients();
  const double sum = model.pair_loss(src, tgt, &r.grads);
  r.weight = static_cast<double>(tgt.size() - 1);
  r.loss = sum / r.weight;
  for (auto& g : r.grads) {
    for (auto& v : g.data()) v /= r.weight;
  }
  return r;
}

}  // namespace ncc
