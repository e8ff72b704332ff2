#include "ncc/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ncc/error.hpp"

namespace ncc {

NamedTensors Model::export_state() const {
  NamedTensors out;
  for (const auto& p : params_) out.emplace_back(p.name, p.value);
  return out;
}

void Model::import_state(const NamedTensors& state) {
  std::map<std::string_view, const Tensor*> by_name;
  for (const auto& [name, t] : state) by_name[name] = &t;
  for (auto& p : params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw Error(ErrorCode::DataMissing, "checkpoint lacks parameter '" + p.name + "'");
    if (it->second->shape() != p.value.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter '" + p.name + "' has shape " +
                                                shape_string(it->second->shape()) + ", expected " +
                                                shape_string(p.value.shape()));
    }
    p.value = *it->second;
  }
}

void Model::initialize(Rng& rng, double scale) { init_uniform(params_, rng, scale); }

Vec LanguageModel::sequence_log_probs(std::span<const int> seq) const {
  Vec out;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Vec dist = next_distribution(seq.first(i));
    out.push_back(std::log(dist.at(static_cast<std::size_t>(seq[i]))));
  }
  return out;
}

std::vector<Vec> LanguageModel::prefix_distributions(std::span<const int> seq) const {
  std::vector<Vec> out;
  for (std::size_t i = 1; i < seq.size(); ++i) out.push_back(next_distribution(seq.first(i)));
  return out;
}

std::vector<TokenProb> top_k(std::span<const double> dist, std::size_t k) {
  std::vector<int> ids(dist.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  const std::size_t n = std::min(k, ids.size());
  auto better = [&](int a, int b) { return dist[a] != dist[b] ? dist[a] > dist[b] : a < b; };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), better);
  std::vector<TokenProb> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({ids[i], dist[ids[i]]});
  return out;
}

std::vector<TokenProb> lm_topk(const LanguageModel& model, std::span<const int> prefix, std::size_t k) {
  return top_k(model.next_distribution(prefix), k);
}

std::size_t rank_of(std::span<const double> scores, int target) {
  const double s = scores[static_cast<std::size_t>(target)];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int id = static_cast<int>(i);
    if (scores[i] > s || (scores[i] == s && id < target)) ++rank;
  }
  return rank;
}

}  // namespace ncc
