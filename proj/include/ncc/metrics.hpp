#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ncc/corpus.hpp"
#include "ncc/model.hpp"

namespace ncc {

/// Rank of the correct item; nullopt when it fell outside the candidate list.
using RankedPrediction = std::optional<std::size_t>;

inline constexpr std::size_t default_mrr_cutoff = 10;

/// Mean of 1/rank, counting ranks above `cutoff` (and misses) as 0.
/// Throws EmptyInput.
double mrr(const std::vector<RankedPrediction>& ranks, std::size_t cutoff = default_mrr_cutoff);

using TokenSeq = std::vector<std::string>;

struct BleuOptions {
  int max_n = 4;
  /// Add one to numerator and denominator of every p_n with n >= 2.
  bool smooth = false;
};

struct BleuStats {
  std::vector<double> matches;  // clipped n-gram matches, index n-1
  std::vector<double> totals;   // hypothesis n-gram counts
  double hyp_len = 0.0;
  double ref_len = 0.0;
};

/// Corpus-level BLEU with one reference per hypothesis. Orders for which the
/// hypotheses hold no n-gram at all are left out of the geometric mean, so
/// bleu(h, h) is 1 even for very short h. Throws LengthMismatch.
double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            const BleuOptions& options = {});
BleuStats bleu_stats(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references, int max_n);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// LCS-based precision/recall/F. beta = 1 gives the harmonic mean; larger
/// values weight recall. Throws EmptyInput.
RougeScore rouge_l(const TokenSeq& hypothesis, const TokenSeq& reference, double beta = 1.0);

/// Mean F over pairs. Throws LengthMismatch / EmptyInput.
double rouge_l_corpus(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
                      double beta = 1.0);

/// exp(mean negative log-probability of every predicted token), each
/// sequence predicting ids 1..n-1 from its prefix.
double perplexity(const LanguageModel& model, const std::vector<IdSequence>& corpus);

}  // namespace ncc
