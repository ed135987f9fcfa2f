#pragma once

#include <cstdint>
#include <vector>

#include "nextvote/detail/parallel.hpp"
#include "nextvote/tree.hpp"

namespace nextvote {

// One tree per item over a shared case space; trees[k-1] predicts item k's
// variable (the item variable in bag space, the target variable when expanded).
struct Forest {
  VariableSpace space;
  std::vector<DecisionTree> trees;

  int64_t total_leaves() const {
    int64_t leaves = 0;
    for (const DecisionTree& tree : trees) leaves += tree.leaf_count();
    return leaves;
  }
};

inline Forest learn_forest(const CaseSet& data, const ScoreParams& params = {},
                           int32_t threads = 1) {
  Forest forest{data.space, {}};
  const int32_t gamma = data.space.item_count();
  forest.trees.resize(static_cast<size_t>(gamma));
  const TrainContext ctx(data);
  const std::vector<int32_t> candidates = data.space.candidates_in_tie_order();
  detail::parallel_for(gamma, threads, [&](int64_t k) {
    forest.trees[static_cast<size_t>(k)] =
        grow_tree(static_cast<int32_t>(k), candidates, ctx, params);
  });
  return forest;
}

}  // namespace nextvote
