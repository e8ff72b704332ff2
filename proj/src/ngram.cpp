#include "ncc/ngram.hpp"

#include <algorithm>

#include "ncc/error.hpp"

namespace ncc {

NgramModel::NgramModel(int order, double lambda, std::size_t vocab_size)
    : order_(order), lambda_(lambda), vocab_size_(vocab_size) {
  if (order < 1) throw Error(ErrorCode::BadConfig, "n-gram order must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::BadConfig, "n-gram lambda must lie in (0, 1]");
  if (vocab_size == 0) throw Error(ErrorCode::BadConfig, "n-gram vocabulary is empty");
}

NgramModel NgramModel::train(const std::vector<IdSequence>& sequences, int order, double lambda,
                             std::size_t vocab_size) {
  NgramModel model(order, lambda, vocab_size);
  for (const auto& seq : sequences) model.add_sequence(seq);
  if (model.totals_.empty()) throw Error(ErrorCode::EmptyCorpus, "n-gram training corpus has no tokens");
  return model;
}

void NgramModel::add_sequence(std::span<const int> seq) {
  for (int id : seq) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw Error(ErrorCode::TargetOutOfRange, "token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (int k = 1; k <= order_; ++k) {
      const auto ctx_len = static_cast<std::size_t>(k - 1);
      if (ctx_len > i) break;
      Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - ctx_len), seq.begin() + static_cast<std::ptrdiff_t>(i));
      ++counts_[ctx][seq[i]];
      ++totals_[ctx];
    }
  }
}

std::int64_t NgramModel::count(std::span<const int> context, int token) const {
  auto it = counts_.find(Context(context.begin(), context.end()));
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(token);
  return jt == it->second.end() ? 0 : jt->second;
}

std::int64_t NgramModel::context_total(std::span<const int> context) const {
  auto it = totals_.find(Context(context.begin(), context.end()));
  return it == totals_.end() ? 0 : it->second;
}

std::vector<int> NgramModel::continuations(std::span<const int> context) const {
  std::vector<int> out;
  auto it = counts_.find(Context(context.begin(), context.end()));
  if (it != counts_.end()) {
    for (const auto& [id, c] : it->second) out.push_back(id);
  }
  return out;
}

Vec NgramModel::next_distribution(std::span<const int> prefix) const {
  Vec dist(vocab_size_, 1.0 / static_cast<double>(vocab_size_));
  const std::size_t max_ctx = std::min(prefix.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t ctx_len = 0; ctx_len <= max_ctx; ++ctx_len) {
    const Context ctx(prefix.end() - static_cast<std::ptrdiff_t>(ctx_len), prefix.end());
    auto total_it = totals_.find(ctx);
    if (total_it == totals_.end()) break;  // longer contexts are unseen as well
    const double total = static_cast<double>(total_it->second);
    for (auto& p : dist) p *= (1.0 - lambda_);
    for (const auto& [id, c] : counts_.at(ctx)) {
      dist[static_cast<std::size_t>(id)] += lambda_ * (static_cast<double>(c) / total);
    }
  }
  return dist;
}

NamedTensors NgramModel::export_state() const {
  NamedTensors out;
  out.emplace_back("ngram.meta", Tensor({3}, {static_cast<double>(order_), lambda_, static_cast<double>(vocab_size_)}));
  for (int k = 1; k <= order_; ++k) {
    std::vector<double> rows;
    std::size_t n = 0;
    for (const auto& [ctx, successors] : counts_) {
      if (ctx.size() != static_cast<std::size_t>(k - 1)) continue;
      for (const auto& [id, c] : successors) {
        for (int v : ctx) rows.push_back(v);
        rows.push_back(id);
        rows.push_back(static_cast<double>(c));
        ++n;
      }
    }
    out.emplace_back("ngram.counts." + std::to_string(k),
                     Tensor({n, static_cast<std::size_t>(k + 1)}, std::move(rows)));
  }
  return out;
}

void NgramModel::import_state(const NamedTensors& state) {
  const Tensor* meta = nullptr;
  for (const auto& [name, t] : state) {
    if (name == "ngram.meta") meta = &t;
  }
  if (!meta || meta->size() != 3) throw Error(ErrorCode::DataMissing, "checkpoint lacks ngram.meta");
  order_ = static_cast<int>((*meta)[0]);
  lambda_ = (*meta)[1];
  vocab_size_ = static_cast<std::size_t>((*meta)[2]);
  counts_.clear();
  totals_.clear();
  for (const auto& [name, t] : state) {
    if (!name.starts_with("ngram.counts.")) continue;
    const int k = std::stoi(name.substr(13));
    if (t.rank() != 2 || t.dim(1) != static_cast<std::size_t>(k + 1)) {
      throw Error(ErrorCode::ShapeMismatch, name + " has unexpected shape " + shape_string(t.shape()));
    }
    for (std::size_t r = 0; r < t.dim(0); ++r) {
      auto row = t.row(r);
      Context ctx;
      for (int i = 0; i < k - 1; ++i) ctx.push_back(static_cast<int>(row[static_cast<std::size_t>(i)]));
      const int id = static_cast<int>(row[static_cast<std::size_t>(k - 1)]);
      const auto c = static_cast<std::int64_t>(row[static_cast<std::size_t>(k)]);
      counts_[ctx][id] += c;
      totals_[ctx] += c;
    }
  }
}

}  // namespace ncc
