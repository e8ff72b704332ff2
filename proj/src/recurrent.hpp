#pragma once

#include <span>
#include <vector>

#include "ncc/nn.hpp"
#include "ncc/tensor.hpp"

namespace ncc::detail {

/// Parameter indices of one embedding + Elman cell.
struct CellIndex {
  std::size_t embed = 0;
  std::size_t w_xh = 0;
  std::size_t w_hh = 0;
  std::size_t b_h = 0;
};

inline RnnCellRef cell_ref(const ParameterSet& p, const CellIndex& c) {
  return {p[c.w_xh].value, p[c.w_hh].value, p[c.b_h].value};
}

inline CellIndex add_cell(ParameterSet& p, const std::string& prefix, std::size_t vocab, std::size_t embed_dim,
                          std::size_t hidden_dim) {
  CellIndex c;
  c.embed = p.add(prefix + "embed", {vocab, embed_dim});
  c.w_xh = p.add(prefix + "w_xh", {embed_dim, hidden_dim});
  c.w_hh = p.add(prefix + "w_hh", {hidden_dim, hidden_dim});
  c.b_h = p.add(prefix + "b_h", {hidden_dim});
  return c;
}

/// hs[0] = h0, hs[t + 1] = step(embed[ids[t]], hs[t]).
inline std::vector<Vec> run_cell(const ParameterSet& p, const CellIndex& c, std::span<const int> ids, Vec h0) {
  const auto cell = cell_ref(p, c);
  std::vector<Vec> hs;
  hs.reserve(ids.size() + 1);
  hs.push_back(std::move(h0));
  for (int id : ids) hs.push_back(rnn_step(embedding_lookup(p[c.embed].value, id), hs.back(), cell));
  return hs;
}

/// Backpropagates through the unrolled cell. dh_out[t] is dL/dhs[t + 1]
/// coming from outside the recurrence. Returns dL/dhs[0].
inline Vec backprop_cell(const ParameterSet& p, const CellIndex& c, std::span<const int> ids,
                         const std::vector<Vec>& hs, const std::vector<Vec>& dh_out, Gradients& g) {
  const auto cell = cell_ref(p, c);
  RnnCellGrad grads{g[c.w_xh], g[c.w_hh], g[c.b_h]};
  const std::size_t h = hs.front().size();
  const std::size_t d = p[c.embed].value.dim(1);
  Vec carry(h, 0.0);
  Vec dh(h);
  Vec dx(d);
  for (std::size_t t = ids.size(); t-- > 0;) {
    for (std::size_t j = 0; j < h; ++j) dh[j] = dh_out[t][j] + carry[j];
    std::fill(carry.begin(), carry.end(), 0.0);
    std::fill(dx.begin(), dx.end(), 0.0);
    const auto x = embedding_lookup(p[c.embed].value, ids[t]);
    rnn_step_backward(x, hs[t], hs[t + 1], dh, cell, grads, dx, carry);
    embedding_backward(g[c.embed], ids[t], dx);
  }
  return carry;
}

}  // namespace ncc::detail
