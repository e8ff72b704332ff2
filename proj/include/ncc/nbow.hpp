#pragma once

#include <span>
#include <vector>

#include "ncc/corpus.hpp"
#include "ncc/model.hpp"

namespace ncc {

enum class Side { code, query };

struct NbowConfig {
  std::size_t code_vocab = 0;
  std::size_t query_vocab = 0;
  std::size_t dim = 64;
  double scale = 10.0;
};

/// Neural bag-of-words dual encoder: each side is the L2-normalized mean of
/// its token embeddings; similarity is scale * cosine.
class NbowEncoder : public Model {
 public:
  explicit NbowEncoder(NbowConfig config);


  std::string_view model_name() const override { return "nbow"; }
  const NbowConfig& config() const noexcept { return config_; }

  /// Unit-norm encoding. Throws EmptyInput for an empty token list.
  Vec encode(std::span<const int> tokens, Side side) const;

  /// In-batch softmax loss summed over the B rows (codes[i] matches
  /// queries[i]); adds the gradient of the sum into `grads` when non-null.
  double batch_loss(const std::vector<IdSequence>& codes, const std::vector<IdSequence>& queries,
                    Gradients* grads) const;

 private:
  std::size_t table(Side side) const { return side == Side::code ? code_embed_ : query_embed_; }

  NbowConfig config_;
  std::size_t code_embed_, query_embed_;
};

Vec nbow_encode(std::span<const int> tokens, Side side, const NbowEncoder& encoder);

struct RetrievalLossResult {
  double loss = 0.0;
  std::vector<Vec> d_code;
  std::vector<Vec> d_query;
};

/// S_ij = scale * (q_i . c_j); loss = mean_i -log softmax(S_i)[i].
/// Throws BatchTooSmall when B < 2.
RetrievalLossResult retrieval_loss(const std::vector<Vec>& code_vecs, const std::vector<Vec>& query_vecs,
                                   double scale);

}  // namespace ncc
