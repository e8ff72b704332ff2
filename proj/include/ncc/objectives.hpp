#pragma once

#include <vector>

#include "ncc/corpus.hpp"
#include "ncc/nbow.hpp"
#include "ncc/rnnlm.hpp"
#include "ncc/seq2seq.hpp"
#include "ncc/trainer.hpp"

namespace ncc {

/// Next-token cross-entropy over bos/eos-wrapped sequences; one unit per
/// sequence, weighted by its number of predicted tokens.
class LmObjective : public Objective {
 public:
  LmObjective(RnnLm& model, std::vector<IdSequence> train, std::vector<IdSequence> valid = {});

  ParameterSet& parameters() override { return model_.parameters(); }
  std::size_t num_examples() const override { return train_.size(); }
  WorkResult compute(std::span<const std::size_t> unit, Gradients* grads) const override;
  std::optional<WorkResult> validation() const override;

 private:
  RnnLm& model_;
  std::vector<IdSequence> train_;
  std::vector<IdSequence> valid_;
};

struct SeqPair {
  IdSequence src;
  /// bos ... eos
  IdSequence tgt;
};

/// Teacher-forced decoder cross-entropy; one unit per pair.
class Seq2SeqObjective : public Objective {
 public:
  Seq2SeqObjective(Seq2Seq& model, std::vector<SeqPair> train, std::vector<SeqPair> valid = {});

  ParameterSet& parameters() override { return model_.parameters(); }
  std::size_t num_examples() const override { return train_.size(); }
  WorkResult compute(std::span<const std::size_t> unit, Gradients* grads) const override;
  std::optional<WorkResult> validation() const override;

 private:
  Seq2Seq& model_;
  std::vector<SeqPair> train_;
  std::vector<SeqPair> valid_;
};

/// In-batch softmax over (code, query) pairs. The negatives of a row are
/// the other rows of its micro-batch, so each micro-batch is one unit and a
/// trailing micro-batch with a single pair is skipped.
class RetrievalObjective : public Objective {
 public:
  RetrievalObjective(NbowEncoder& model, std::vector<IdSequence> codes, std::vector<IdSequence> queries);

  ParameterSet& parameters() override { return model_.parameters(); }
  std::size_t num_examples() const override { return codes_.size(); }
  std::vector<std::vector<std::size_t>> split(std::span<const std::size_t> batch) const override;
  WorkResult compute(std::span<const std::size_t> unit, Gradients* grads) const override;

 private:
  NbowEncoder& model_;
  std::vector<IdSequence> codes_;
  std::vector<IdSequence> queries_;
};

}  // namespace ncc
