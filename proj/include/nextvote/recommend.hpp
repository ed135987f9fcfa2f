#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "nextvote/model.hpp"

namespace nextvote {

// Bin holding partial histories of length k: the first bin whose upper bound
// covers k. k below the first bound clamps to the first bin, k above the last
// bound to the last. Returns a 0-based index into scheme.bounds.
inline int32_t select_bin(const BinScheme& scheme, int32_t partial_length) {
  const auto bins = static_cast<int32_t>(scheme.bounds.size());
  for (int32_t b = 0; b < bins; ++b) {
    const int32_t hi = scheme.bounds[static_cast<size_t>(b)].hi;
    if (hi == BinScheme::kNoUpperBound || partial_length <= hi) return b;
  }
  return bins - 1;
}

// A renormalized next-vote distribution. probs[k-1] is item k's probability;
// ranking lists all items by descending probability, ties by ascending index.
struct Prediction {
  std::vector<double> probs;
  std::vector<int32_t> ranking;

  // 1-based rank of an item in the ranking.
  int32_t rank_of(int32_t item) const {
    for (size_t at = 0; at < ranking.size(); ++at)
      if (ranking[at] == item) return static_cast<int32_t>(at) + 1;
    throw std::out_of_range("item index outside the ranking");
  }
};

struct Recommendation {
  int32_t item = 0;
  double probability = 0;
};

namespace detail {

// Which sub-predictor a prefix of the given length routes to; only the binned
// family has more than one.
inline int32_t submodel_index(const TrainedModel& model, int32_t partial_length) {
  if (const auto* binned = std::get_if<BinnedModel>(&model.family))
    return select_bin(binned->scheme, partial_length);
  return 0;
}

inline int32_t submodel_count(const TrainedModel& model) {
  if (const auto* binned = std::get_if<BinnedModel>(&model.family))
    return static_cast<int32_t>(binned->forests.size());
  return 1;
}

inline std::vector<double> forest_raw_scores(const Forest& forest, const BinaryCase& evidence) {
  std::vector<double> raw(forest.trees.size());
  for (size_t k = 0; k < forest.trees.size(); ++k) raw[k] = forest.trees[k].predict(evidence);
  return raw;
}

// Per-item next-vote scores before renormalization, each in (0, 1).
inline std::vector<double> raw_next_scores(const TrainedModel& model,
                                           std::span<const int32_t> partial) {
  const int32_t gamma = model.catalog.item_count();
  for (int32_t v : partial)
    if (v < 1 || v > gamma) throw DataError("history contains an item outside the catalog");
  if (const auto* baseline = std::get_if<BaselineModel>(&model.family))
    return forest_raw_scores(baseline->forest, build_evidence_bag(partial, gamma));
  if (const auto* binned = std::get_if<BinnedModel>(&model.family)) {
    const int32_t bin = select_bin(binned->scheme, static_cast<int32_t>(partial.size()));
    return forest_raw_scores(binned->forests[static_cast<size_t>(bin)],
                             build_evidence_bag(partial, gamma));
  }
  if (const auto* expanded = std::get_if<ExpandedModel>(&model.family))
    return forest_raw_scores(expanded->forest,
                             build_evidence_expanded(partial, expanded->scheme, gamma));
  return cluster_predict_all(std::get<ClusterModel>(model.family), build_evidence_bag(partial, gamma));
}

inline void renormalize(std::vector<double>& raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  for (double& p : raw) p /= total;
}

// 1-based rank without sorting: 1 + items strictly ahead + equal items with a
// smaller index.
inline int32_t rank_of_item(const std::vector<double>& probs, int32_t item) {
  const double mine = probs[static_cast<size_t>(item) - 1];
  int32_t ahead = 0;
  for (size_t k = 0; k < probs.size(); ++k) {
    const auto other = static_cast<int32_t>(k) + 1;
    if (other == item) continue;
    if (probs[k] > mine || (probs[k] == mine && other < item)) ++ahead;
  }
  return ahead + 1;
}

}  // namespace detail

// Full next-vote distribution and ranking for a partial history.
inline Prediction predict_next(const TrainedModel& model, std::span<const int32_t> partial) {
  Prediction prediction;
  prediction.probs = detail::raw_next_scores(model, partial);
  detail::renormalize(prediction.probs);
  prediction.ranking.resize(prediction.probs.size());
  std::iota(prediction.ranking.begin(), prediction.ranking.end(), 1);
  std::sort(prediction.ranking.begin(), prediction.ranking.end(), [&](int32_t a, int32_t b) {
    const double pa = prediction.probs[static_cast<size_t>(a) - 1];
    const double pb = prediction.probs[static_cast<size_t>(b) - 1];
    if (pa != pb) return pa > pb;
    return a < b;
  });
  return prediction;
}

inline Prediction predict_next(const TrainedModel& model, const VoteHistory& partial) {
  return predict_next(model, std::span<const int32_t>(partial.votes));
}

// Top-N slice of the ranking. exclude_seen drops items present in the partial
// history before taking the slice; probabilities stay normalized over all
// items so scores remain comparable across calls.
inline std::vector<Recommendation> recommend(const TrainedModel& model,
                                             std::span<const int32_t> partial, int32_t top_n,
                                             bool exclude_seen = false) {
  const int32_t gamma = model.catalog.item_count();
  if (top_n < 1 || top_n > gamma)
    throw std::invalid_argument("recommendation count must lie in [1, item count]");
  const Prediction prediction = predict_next(model, partial);
  std::vector<Recommendation> out;
  out.reserve(static_cast<size_t>(top_n));
  for (int32_t item : prediction.ranking) {
    if (exclude_seen &&
        std::find(partial.begin(), partial.end(), item) != partial.end())
      continue;
    out.push_back({item, prediction.probs[static_cast<size_t>(item) - 1]});
    if (static_cast<int32_t>(out.size()) == top_n) break;
  }
  return out;
}

}  // namespace nextvote
