#include "ncc/nbow.hpp"

#include <cmath>

#include "ncc/error.hpp"

namespace ncc {

namespace {

constexpr double zero_norm_guard = 1e-12;

struct Encoding {
  Vec mean;
  Vec unit;
  double norm = 0.0;
};

Encoding encode_full(const Tensor& table, std::span<const int> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty token list");
  Encoding e;
  e.mean.assign(table.dim(1), 0.0);
  for (int id : tokens) {
    const auto row = embedding_lookup(table, id);
    for (std::size_t j = 0; j < row.size(); ++j) e.mean[j] += row[j];
  }
  for (auto& v : e.mean) v /= static_cast<double>(tokens.size());
  e.norm = l2_norm(e.mean);
  e.unit.assign(e.mean.size(), 0.0);
  if (e.norm < zero_norm_guard) {
    e.unit[0] = 1.0;
  } else {
    for (std::size_t j = 0; j < e.mean.size(); ++j) e.unit[j] = e.mean[j] / e.norm;
  }
  return e;
}

void encode_backward(const Encoding& e, std::span<const int> tokens, std::span<const double> d_unit, Tensor& d_table) {
  if (e.norm < zero_norm_guard) return;
  const double proj = dot(e.unit, d_unit);
  Vec d_row(e.mean.size());
  const double inv = 1.0 / (e.norm * static_cast<double>(tokens.size()));
  for (std::size_t j = 0; j < d_row.size(); ++j) d_row[j] = (d_unit[j] - e.unit[j] * proj) * inv;
  for (int id : tokens) embedding_backward(d_table, id, d_row);
}

struct RetrievalSums {
  double loss = 0.0;
  std::vector<Vec> d_code;
  std::vector<Vec> d_query;
};

RetrievalSums retrieval_sums(const std::vector<Vec>& code, const std::vector<Vec>& query, double scale) {
  const std::size_t b = code.size();
  if (b != query.size()) throw Error(ErrorCode::ShapeMismatch, "code and query batches differ in size");
  if (b < 2) throw Error(ErrorCode::BatchTooSmall, "in-batch softmax needs at least two pairs");
  const std::size_t d = code.front().size();
  RetrievalSums r;
  r.d_code.assign(b, Vec(d, 0.0));
  r.d_query.assign(b, Vec(d, 0.0));
  Vec scores(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) scores[j] = scale * dot(query[i], code[j]);
    const auto xent = softmax_xent(scores, static_cast<int>(i));
    r.loss += xent.loss;
    for (std::size_t j = 0; j < b; ++j) {
      const double g = scale * xent.grad[j];
      for (std::size_t k = 0; k < d; ++k) {
        r.d_query[i][k] += g * code[j][k];
        r.d_code[j][k] += g * query[i][k];
      }
    }
  }
  return r;
}

}  // namespace

NbowEncoder::NbowEncoder(NbowConfig config) : config_(config) {
  if (config_.code_vocab == 0 || config_.query_vocab == 0 || config_.dim == 0 || !(config_.scale > 0.0)) {
    throw Error(ErrorCode::BadConfig, "nbow dimensions and scale must be positive");
  }
  code_embed_ = params_.add("code.embed", {config_.code_vocab, config_.dim});
  query_embed_ = params_.add("query.embed", {config_.query_vocab, config_.dim});
}


Vec NbowEncoder::encode(std::span<const int> tokens, Side side) const {
  return encode_full(params_[table(side)].value, tokens).unit;
}

double NbowEncoder::batch_loss(const std::vector<IdSequence>& codes, const std::vector<IdSequence>& queries,
                               Gradients* grads) const {
  std::vector<Encoding> code_enc;
  std::vector<Encoding> query_enc;
  std::vector<Vec> code_vecs;
  std::vector<Vec> query_vecs;
  for (const auto& c : codes) {
    code_enc.push_back(encode_full(params_[code_embed_].value, c));
    code_vecs.push_back(code_enc.back().unit);
  }
  for (const auto& q : queries) {
    query_enc.push_back(encode_full(params_[query_embed_].value, q));
    query_vecs.push_back(query_enc.back().unit);
  }
  const auto sums = retrieval_sums(code_vecs, query_vecs, config_.scale);
  if (grads) {
    for (std::size_t i = 0; i < codes.size(); ++i) {
      encode_backward(code_enc[i], codes[i], sums.d_code[i], (*grads)[code_embed_]);
      encode_backward(query_enc[i], queries[i], sums.d_query[i], (*grads)[query_embed_]);
    }
  }
  return sums.loss;
}

Vec nbow_encode(std::span<const int> tokens, Side side, const NbowEncoder& encoder) {
  return encoder.encode(tokens, side);
}

RetrievalLossResult retrieval_loss(const std::vector<Vec>& code_vecs, const std::vector<Vec>& query_vecs,
                                   double scale) {
  auto sums = retrieval_sums(code_vecs, query_vecs, scale);
  const double b = static_cast<double>(code_vecs.size());
  RetrievalLossResult r;
  r.loss = sums.loss / b;
  r.d_code = std::move(sums.d_code);
  r.d_query = std::move(sums.d_query);
  for (auto* side : {&r.d_code, &r.d_query}) {
    for (auto& v : *side) {
      for (auto& x : v) x /= b;
    }
  }
  return r;
}

}  // namespace ncc
