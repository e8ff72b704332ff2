#include "ncc/rnnlm.hpp"

#include <algorithm>

#include "ncc/error.hpp"
#include "recurrent.hpp"

namespace ncc {

RnnLm::RnnLm(RnnLmConfig config) : config_(config) {
  if (config_.vocab_size == 0 || config_.embed_dim == 0 || config_.hidden_dim == 0 || config_.bptt_len == 0) {
    throw Error(ErrorCode::BadConfig, "seqrnn dimensions must be positive");
  }
  const auto cell = detail::add_cell(params_, "", config_.vocab_size, config_.embed_dim, config_.hidden_dim);
  embed_ = cell.embed;
  w_xh_ = cell.w_xh;
  w_hh_ = cell.w_hh;
  b_h_ = cell.b_h;
  w_hy_ = params_.add("w_hy", {config_.hidden_dim, config_.vocab_size});
  b_y_ = params_.add("b_y", {config_.vocab_size});
}


Vec RnnLm::logits(std::span<const double> h) const {
  Vec out(config_.vocab_size);
  affine_forward(params_[w_hy_].value, &params_[b_y_].value, h, out);
  return out;
}

double RnnLm::row_loss(std::span<const int> inputs, std::span<const int> targets, Gradients* grads) const {
  if (inputs.size() != targets.size()) throw Error(ErrorCode::ShapeMismatch, "inputs and targets differ in length");
  const detail::CellIndex cell{embed_, w_xh_, w_hh_, b_h_};
  const std::size_t window = config_.bptt_len;
  Vec h(config_.hidden_dim, 0.0);
  double total = 0.0;
  for (std::size_t start = 0; start < inputs.size(); start += window) {
    const std::size_t len = std::min(window, inputs.size() - start);
    const auto in = inputs.subspan(start, len);
    auto hs = detail::run_cell(params_, cell, in, h);
    std::vector<Vec> dh_out;
    if (grads) dh_out.assign(len, Vec(config_.hidden_dim, 0.0));
    for (std::size_t t = 0; t < len; ++t) {
      const auto xent = softmax_xent(logits(hs[t + 1]), targets[start + t]);
      total += xent.loss;
      if (grads) {
        affine_backward(params_[w_hy_].value, hs[t + 1], xent.grad, (*grads)[w_hy_], &(*grads)[b_y_], dh_out[t]);
      }
    }
    if (grads) detail::backprop_cell(params_, cell, in, hs, dh_out, *grads);
    h = std::move(hs.back());
  }
  return total;
}

Vec RnnLm::next_distribution(std::span<const int> prefix) const {
  const detail::CellIndex cell{embed_, w_xh_, w_hh_, b_h_};
  auto hs = detail::run_cell(params_, cell, prefix, Vec(config_.hidden_dim, 0.0));
  return softmax(logits(hs.back()));
}

Vec RnnLm::sequence_log_probs(std::span<const int> seq) const {
  Vec out;
  if (seq.size() < 2) return out;
  const detail::CellIndex cell{embed_, w_xh_, w_hh_, b_h_};
  auto hs = detail::run_cell(params_, cell, seq.first(seq.size() - 1), Vec(config_.hidden_dim, 0.0));
  for (std::size_t i = 1; i < seq.size(); ++i) {
    out.push_back(log_softmax(logits(hs[i]))[static_cast<std::size_t>(seq[i])]);
  }
  return out;
}

std::vector<Vec> RnnLm::prefix_distributions(std::span<const int> seq) const {
  std::vector<Vec> out;
  if (seq.size() < 2) return out;
  const detail::CellIndex cell{embed_, w_xh_, w_hh_, b_h_};
  auto hs = detail::run_cell(params_, cell, seq.first(seq.size() - 1), Vec(config_.hidden_dim, 0.0));
  for (std::size_t i = 1; i < seq.size(); ++i) out.push_back(softmax(logits(hs[i])));
  return out;
}

LossResult rnnlm_loss(const RnnLm& model, const MiniBatch& batch) {
  if (!batch.has_targets()) throw Error(ErrorCode::ShapeMismatch, "language-model batch has no targets");
  if (batch.ids.size() != batch.rows * batch.cols || batch.lengths.size() != batch.rows) {
    throw Error(ErrorCode::ShapeMismatch, "malformed mini-batch");
  }
  LossResult result;
  result.grads = model.parameters().zero_gradients();
  Gradients row_grads = model.parameters().zero_gradients();
  double total = 0.0;
  for (std::size_t b = 0; b < batch.rows; ++b) {
    const std::size_t len = batch.lengths[b];
    if (len == 0) continue;
    const std::span<const int> in(batch.ids.data() + b * batch.cols, len);
    const std::span<const int> tgt(batch.targets.data() + b * batch.cols, len);
    zero(row_grads);
    total += model.row_loss(in, tgt, &row_grads);
    accumulate(result.grads, row_grads);
    result.weight += static_cast<double>(len);
  }
  if (result.weight == 0.0) throw Error(ErrorCode::EmptyBatch, "batch has no target positions");
  result.loss = total / result.weight;
  for (auto& g : result.grads) {
    for (auto& v : g.data()) v /= result.weight;
  }
  return result;
}

}  // namespace ncc
