#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ncc/corpus.hpp"
#include "ncc/model.hpp"

namespace ncc {

/// Count-based n-gram language model with Jelinek-Mercer interpolation:
///
///   P_k(w | c) = lambda * count(c, w) / total(c) + (1 - lambda) * P_{k-1}(w | c')
///
/// where c' drops the oldest context id, P_0 is uniform over the vocabulary
/// and a context never seen in training falls through to the lower order.
class NgramModel : public Model, public LanguageModel {
 public:
  NgramModel(int order, double lambda, std::size_t vocab_size);

  /// Counts every k-gram (k <= order) ending at each position of every
  /// sequence. Throws EmptyCorpus when there is no token at all and
  /// TargetOutOfRange for ids >= vocab_size.
  static NgramModel train(const std::vector<IdSequence>& sequences, int order, double lambda,
                          std::size_t vocab_size);

  std::string_view model_name() const override { return "ngram"; }

  int order() const noexcept { return order_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t vocab_size() const override { return vocab_size_; }

  std::int64_t count(std::span<const int> context, int token) const;
  std::int64_t context_total(std::span<const int> context) const;
  /// Ids observed after `context` (the continuation set).
  std::vector<int> continuations(std::span<const int> context) const;

  Vec next_distribution(std::span<const int> prefix) const override;

  NamedTensors export_state() const override;
  void import_state(const NamedTensors& state) override;

 private:
  void add_sequence(std::span<const int> seq);

  using Context = std::vector<int>;

  int order_;
  double lambda_;
  std::size_t vocab_size_;
  std::map<Context, std::map<int, std::int64_t>> counts_;
  std::map<Context, std::int64_t> totals_;
};

}  // namespace ncc
