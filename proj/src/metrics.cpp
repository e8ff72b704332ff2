#include "ncc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ncc/error.hpp"

namespace ncc {

double mrr(const std::vector<RankedPrediction>& ranks, std::size_t cutoff) {
  if (ranks.empty()) throw Error(ErrorCode::EmptyInput, "mrr over zero items");
  double sum = 0.0;
  for (const auto& r : ranks) {
    if (r && *r >= 1 && *r <= cutoff) sum += 1.0 / static_cast<double>(*r);
  }
  return sum / static_cast<double>(ranks.size());
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, double>;

NgramCounts count_ngrams(const TokenSeq& seq, int n) {
  NgramCounts counts;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= seq.size(); ++i) {
    counts[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                    seq.begin() + static_cast<std::ptrdiff_t>(i + len))] += 1.0;
  }
  return counts;
}

}  // namespace

BleuStats bleu_stats(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references, int max_n) {
  if (hypotheses.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                               std::to_string(references.size()) + " references");
  }
  BleuStats s;
  s.matches.assign(static_cast<std::size_t>(max_n), 0.0);
  s.totals.assign(static_cast<std::size_t>(max_n), 0.0);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    s.hyp_len += static_cast<double>(hypotheses[i].size());
    s.ref_len += static_cast<double>(references[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto hyp = count_ngrams(hypotheses[i], n);
      const auto ref = count_ngrams(references[i], n);
      for (const auto& [gram, c] : hyp) {
        s.totals[static_cast<std::size_t>(n - 1)] += c;
        auto it = ref.find(gram);
        if (it != ref.end()) s.matches[static_cast<std::size_t>(n - 1)] += std::min(c, it->second);
      }
    }
  }
  return s;
}

double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            const BleuOptions& options) {
  const auto s = bleu_stats(hypotheses, references, options.max_n);
  if (s.hyp_len == 0.0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= options.max_n; ++n) {
    double num = s.matches[static_cast<std::size_t>(n - 1)];
    double den = s.totals[static_cast<std::size_t>(n - 1)];
    if (options.smooth && n >= 2) {
      num += 1.0;
      den += 1.0;
    }
    // Hypotheses too short to contain any n-gram of this order: the order
    // carries no evidence and is left out of the geometric mean.
    if (den == 0.0) continue;
    if (num == 0.0) return 0.0;
    log_sum += std::log(num / den);
    ++orders;
  }
  const double bp = s.hyp_len < s.ref_len ? std::exp(1.0 - s.ref_len / s.hyp_len) : 1.0;
  return bp * std::exp(log_sum / orders);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(const TokenSeq& hypothesis, const TokenSeq& reference, double beta) {
  if (hypothesis.empty() || reference.empty()) throw Error(ErrorCode::EmptyInput, "rouge_l needs non-empty sequences");
  const double l = static_cast<double>(lcs_length(hypothesis, reference));
  RougeScore r;
  r.precision = l / static_cast<double>(hypothesis.size());
  r.recall = l / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  const double denom = r.recall + b2 * r.precision;
  r.f = denom == 0.0 ? 0.0 : (1.0 + b2) * r.precision * r.recall / denom;
  return r;
}

double rouge_l_corpus(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references, double beta) {
  if (hypotheses.size() != references.size()) throw Error(ErrorCode::LengthMismatch, "rouge_l corpus size mismatch");
  if (hypotheses.empty()) throw Error(ErrorCode::EmptyInput, "rouge_l over zero pairs");
  double sum = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    // An empty hypothesis shares nothing with its reference.
    if (hypotheses[i].empty()) continue;
    sum += rouge_l(hypotheses[i], references[i], beta).f;
  }
  return sum / static_cast<double>(hypotheses.size());
}

double perplexity(const LanguageModel& model, const std::vector<IdSequence>& corpus) {
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& seq : corpus) {
    for (double lp : model.sequence_log_probs(seq)) {
      nll -= lp;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyInput, "perplexity over zero predicted tokens");
  return std::exp(nll / static_cast<double>(n));
}

}  // namespace ncc
