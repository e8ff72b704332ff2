#include "ncc/objectives.hpp"

#include "ncc/error.hpp"

namespace ncc {

namespace {

double lm_row(const RnnLm& model, const IdSequence& seq, Gradients* grads) {
  const std::span<const int> s(seq);
  return model.row_loss(s.first(s.size() - 1), s.subspan(1), grads);
}

}  // namespace

LmObjective::LmObjective(RnnLm& model, std::vector<IdSequence> train, std::vector<IdSequence> valid)
    : model_(model), train_(std::move(train)), valid_(std::move(valid)) {
  std::erase_if(train_, [](const IdSequence& s) { return s.size() < 2; });
  std::erase_if(valid_, [](const IdSequence& s) { return s.size() < 2; });
  if (train_.empty()) throw Error(ErrorCode::DataMissing, "no training sequence with at least two tokens");
}

WorkResult LmObjective::compute(std::span<const std::size_t> unit, Gradients* grads) const {
  WorkResult r;
  for (auto i : unit) {
    r.loss_sum += lm_row(model_, train_[i], grads);
    r.weight += static_cast<double>(train_[i].size() - 1);
  }
  return r;
}

std::optional<WorkResult> LmObjective::validation() const {
  if (valid_.empty()) return std::nullopt;
  WorkResult r;
  for (const auto& s : valid_) {
    r.loss_sum += lm_row(model_, s, nullptr);
    r.weight += static_cast<double>(s.size() - 1);
  }
  return r;
}

// ---------------------------------------------------------------------------

Seq2SeqObjective::Seq2SeqObjective(Seq2Seq& model, std::vector<SeqPair> train, std::vector<SeqPair> valid)
    : model_(model), train_(std::move(train)), valid_(std::move(valid)) {
  auto bad = [](const SeqPair& p) { return p.src.empty() || p.tgt.size() < 2; };
  std::erase_if(train_, bad);
  std::erase_if(valid_, bad);
  if (train_.empty()) throw Error(ErrorCode::DataMissing, "no usable (source, target) training pair");
}

WorkResult Seq2SeqObjective::compute(std::span<const std::size_t> unit, Gradients* grads) const {
  WorkResult r;
  for (auto i : unit) {
    r.loss_sum += model_.pair_loss(train_[i].src, train_[i].tgt, grads);
    r.weight += static_cast<double>(train_[i].tgt.size() - 1);
  }
  return r;
}

std::optional<WorkResult> Seq2SeqObjective::validation() const {
  if (valid_.empty()) return std::nullopt;
  WorkResult r;
  for (const auto& p : valid_) {
    r.loss_sum += model_.pair_loss(p.src, p.tgt, nullptr);
    r.weight += static_cast<double>(p.tgt.size() - 1);
  }
  return r;
}

// ---------------------------------------------------------------------------

RetrievalObjective::RetrievalObjective(NbowEncoder& model, std::vector<IdSequence> codes,
                                       std::vector<IdSequence> queries)
    : model_(model), codes_(std::move(codes)), queries_(std::move(queries)) {
  if (codes_.size() != queries_.size()) throw Error(ErrorCode::LengthMismatch, "code/query count mismatch");
  std::vector<IdSequence> c, q;
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i].empty() || queries_[i].empty()) continue;
    c.push_back(std::move(codes_[i]));
    q.push_back(std::move(queries_[i]));
  }
  codes_ = std::move(c);
  queries_ = std::move(q);
  if (codes_.size() < 2) throw Error(ErrorCode::DataMissing, "retrieval training needs at least two pairs");
}

std::vector<std::vector<std::size_t>> RetrievalObjective::split(std::span<const std::size_t> batch) const {
  if (batch.size() < 2) return {};
  return {std::vector<std::size_t>(batch.begin(), batch.end())};
}

WorkResult RetrievalObjective::compute(std::span<const std::size_t> unit, Gradients* grads) const {
  std::vector<IdSequence> c, q;
  for (auto i : unit) {
    c.push_back(codes_[i]);
    q.push_back(queries_[i]);
  }
  return {model_.batch_loss(c, q, grads), static_cast<double>(unit.size())};
}

}  // namespace ncc
