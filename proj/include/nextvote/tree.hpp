#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nextvote/cases.hpp"

namespace nextvote {
namespace detail {

// std::lgamma writes the global signgam on glibc; use the reentrant variant
// when it exists so tree learning can run on multiple threads.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

}  // namespace detail

// ln integral_0^1 theta^n1 (1-theta)^n0 dtheta = ln( n1! n0! / (n1+n0+1)! ),
// the marginal likelihood of a leaf's counts under a uniform parameter prior.
inline double leaf_log_marginal(int64_t n1, int64_t n0) {
  return detail::log_gamma(static_cast<double>(n1) + 1.0) +
         detail::log_gamma(static_cast<double>(n0) + 1.0) -
         detail::log_gamma(static_cast<double>(n1 + n0) + 2.0);
}

struct ScoreParams {
  double kappa = 0.01;  // per-leaf structure penalty factor, in (0, 1]
};

// Flat binary decision tree over case variables. split_var < 0 marks a leaf.
// Counts are kept on every node; internal-node counts equal the sum of their
// children's and make the document form self-checking.
struct TreeNode {
  int32_t split_var = -1;
  int32_t child_x0 = -1;
  int32_t child_x1 = -1;
  int64_t n1 = 0;
  int64_t n0 = 0;

  bool is_leaf() const { return split_var < 0; }
};

struct DecisionTree {
  int32_t target = -1;  // dense id of the variable this tree predicts
  std::vector<TreeNode> nodes;

  int32_t leaf_count() const {
    int32_t leaves = 0;
    for (const TreeNode& node : nodes) leaves += node.is_leaf() ? 1 : 0;
    return leaves;
  }

  const TreeNode& leaf_for(const BinaryCase& evidence) const {
    int32_t at = 0;
    while (!nodes[at].is_leaf())
      at = evidence.contains(nodes[at].split_var) ? nodes[at].child_x1 : nodes[at].child_x0;
    return nodes[at];
  }

  // Posterior-mean probability that the target is positive given the evidence.
  double predict(const BinaryCase& evidence) const {
    const TreeNode& leaf = leaf_for(evidence);
    return (static_cast<double>(leaf.n1) + 1.0) / (static_cast<double>(leaf.n1 + leaf.n0) + 2.0);
  }
};

// Bayesian structure score: sum of leaf marginals plus leaf_count * ln(kappa).
inline double tree_log_score(const DecisionTree& tree, const ScoreParams& params) {
  double score = 0;
  for (const TreeNode& node : tree.nodes)
    if (node.is_leaf()) score += leaf_log_marginal(node.n1, node.n0);
  return score + static_cast<double>(tree.leaf_count()) * std::log(params.kappa);
}

// Shared read-only index over one case set: for each variable, the ascending
// list of cases where it is positive. Built once, reused by every tree.
class TrainContext {
 public:
  explicit TrainContext(const CaseSet& data) : data_(&data) {
    inverted_.resize(static_cast<size_t>(data.space.variable_count()));
    for (size_t id = 0; id < data.cases.size(); ++id)
      for (int32_t v : data.cases[id].positives)
        inverted_[static_cast<size_t>(v)].push_back(static_cast<int32_t>(id));
  }

  const CaseSet& data() const { return *data_; }
  int64_t case_count() const { return data_->case_count(); }
  int32_t variable_count() const { return data_->space.variable_count(); }
  const std::vector<int32_t>& cases_with(int32_t var) const {
    return inverted_[static_cast<size_t>(var)];
  }
  int64_t positive_count(int32_t var) const {
    return static_cast<int64_t>(inverted_[static_cast<size_t>(var)].size());
  }

 private:
  const CaseSet* data_;
  std::vector<std::vector<int32_t>> inverted_;
};

namespace detail {

// Frontier node during greedy growth. Sparse-statistics scheme: a split's x1
// side is counted by scanning its (small) case list, and the x0 side is
// obtained by subtracting those counts from the parent's, so the all-x0 spine
// never materializes its cases. Nodes on that spine keep only the variables
// negated along their path and enumerate candidate-positive cases on demand.
struct GrowNode {
  int64_t n1 = 0;
  int64_t n0 = 0;
  int32_t depth = 0;
  bool materialized = false;
  std::vector<int32_t> cases_t1;   // target-positive cases here (if materialized)
  std::vector<int32_t> cases_t0;   // target-negative cases here (if materialized)
  std::vector<int32_t> path_neg;   // variables forced x0 along the path (if not)
  std::vector<int32_t> path_vars;  // every variable split on along the path
  std::vector<uint8_t> path_bits;  // branch taken at each ancestor, x0=0 / x1=1
  std::vector<int32_t> with_t1;    // per variable: positives among cases_t1
  std::vector<int32_t> with_t0;    // per variable: positives among cases_t0

  double best_delta = 0;
  int32_t best_rank = -1;  // index into the candidate order; -1 when no gain

  int32_t split_var = -1;
  int32_t child_x0 = -1;
  int32_t child_x1 = -1;
};

inline void count_positives(const CaseSet& data, const std::vector<int32_t>& case_ids,
                            std::vector<int32_t>& counts) {
  for (int32_t id : case_ids)
    for (int32_t v : data.cases[static_cast<size_t>(id)].positives) ++counts[static_cast<size_t>(v)];
}

inline bool case_avoids(const BinaryCase& c, const std::vector<int32_t>& banned) {
  for (int32_t v : banned)
    if (c.contains(v)) return false;
  return true;
}

// Picks the node's best split. Score change of splitting on v:
//   ln(kappa) + LM(n1-a1, n0-a0) + LM(a1, a0) - LM(n1, n0)
// where a1/a0 count target-positive/negative cases with v positive. Strictly
// greater wins, so equal deltas resolve to the earliest candidate.
inline void score_candidates(GrowNode& node, std::span<const int32_t> candidates, int32_t target,
                             double log_kappa) {
  node.best_delta = 0;
  node.best_rank = -1;
  const double lm_here = leaf_log_marginal(node.n1, node.n0);
  const int64_t total = node.n1 + node.n0;
  for (size_t rank = 0; rank < candidates.size(); ++rank) {
    const int32_t v = candidates[rank];
    if (v == target) continue;
    if (std::find(node.path_vars.begin(), node.path_vars.end(), v) != node.path_vars.end()) continue;
    const int64_t a1 = node.with_t1[static_cast<size_t>(v)];
    const int64_t a0 = node.with_t0[static_cast<size_t>(v)];
    if (a1 + a0 == 0 || a1 + a0 == total) continue;  // an empty child can never help
    const double delta = log_kappa + leaf_log_marginal(node.n1 - a1, node.n0 - a0) +
                         leaf_log_marginal(a1, a0) - lm_here;
    if (node.best_rank < 0 || delta > node.best_delta) {
      node.best_delta = delta;
      node.best_rank = static_cast<int32_t>(rank);
    }
  }
  if (node.best_rank >= 0 && !(node.best_delta > 0)) node.best_rank = -1;
}

}  // namespace detail

// Greedy Bayesian tree growth for one target. Starts from a single leaf and
// repeatedly applies, across all current leaves, the split with the largest
// strictly positive score change. Ties break on candidate order, then on
// shallower depth, then on the leftmost (x0-most) path.
inline DecisionTree grow_tree(int32_t target, std::span<const int32_t> candidates,
                              const TrainContext& ctx, const ScoreParams& params = {}) {
  using detail::GrowNode;
  if (!(params.kappa > 0.0 && params.kappa <= 1.0))
    throw std::invalid_argument("kappa must lie in (0, 1]");
  const double log_kappa = std::log(params.kappa);
  const CaseSet& data = ctx.data();
  const auto var_count = static_cast<size_t>(ctx.variable_count());

  std::vector<GrowNode> nodes;
  nodes.emplace_back();
  {
    GrowNode& root = nodes.back();
    root.cases_t1 = ctx.cases_with(target);
    root.n1 = static_cast<int64_t>(root.cases_t1.size());
    root.n0 = ctx.case_count() - root.n1;
    root.with_t1.assign(var_count, 0);
    root.with_t0.assign(var_count, 0);
    detail::count_positives(data, root.cases_t1, root.with_t1);
    // Root spans everything, so v-positives split exactly into the two rows.
    for (size_t v = 0; v < var_count; ++v)
      root.with_t0[v] = static_cast<int32_t>(ctx.positive_count(static_cast<int32_t>(v))) -
                        root.with_t1[v];
    detail::score_candidates(root, candidates, target, log_kappa);
  }
  std::vector<int32_t> frontier{0};

  while (true) {
    // Best leaf to split, by (delta, candidate rank, depth, leftmost path).
    int32_t pick = -1;
    for (int32_t leaf : frontier) {
      const GrowNode& node = nodes[static_cast<size_t>(leaf)];
      if (node.best_rank < 0) continue;
      if (pick < 0) {
        pick = leaf;
        continue;
      }
      const GrowNode& best = nodes[static_cast<size_t>(pick)];
      if (node.best_delta != best.best_delta) {
        if (node.best_delta > best.best_delta) pick = leaf;
      } else if (node.best_rank != best.best_rank) {
        if (node.best_rank < best.best_rank) pick = leaf;
      } else if (node.depth != best.depth) {
        if (node.depth < best.depth) pick = leaf;
      } else if (node.path_bits < best.path_bits) {
        pick = leaf;
      }
    }
    if (pick < 0) break;

    const int32_t split_var = candidates[static_cast<size_t>(nodes[static_cast<size_t>(pick)].best_rank)];
    GrowNode x1_child, x0_child;
    {
      GrowNode& parent = nodes[static_cast<size_t>(pick)];
      parent.split_var = split_var;

      // x1 side: materialize its case lists and count positives directly.
      if (parent.materialized) {
        for (int32_t id : parent.cases_t1)
          if (data.cases[static_cast<size_t>(id)].contains(split_var)) x1_child.cases_t1.push_back(id);
        for (int32_t id : parent.cases_t0)
          if (data.cases[static_cast<size_t>(id)].contains(split_var)) x1_child.cases_t0.push_back(id);
      } else {
        // Parent is the all-x0 spine: its cases are those avoiding path_neg.
        for (int32_t id : ctx.cases_with(split_var)) {
          const BinaryCase& c = data.cases[static_cast<size_t>(id)];
          if (!detail::case_avoids(c, parent.path_neg)) continue;
          (c.contains(target) ? x1_child.cases_t1 : x1_child.cases_t0).push_back(id);
        }
      }
      x1_child.materialized = true;
      x1_child.n1 = static_cast<int64_t>(x1_child.cases_t1.size());
      x1_child.n0 = static_cast<int64_t>(x1_child.cases_t0.size());
      x1_child.with_t1.assign(var_count, 0);
      x1_child.with_t0.assign(var_count, 0);
      detail::count_positives(data, x1_child.cases_t1, x1_child.with_t1);
      detail::count_positives(data, x1_child.cases_t0, x1_child.with_t0);

      // x0 side: everything the parent had minus the x1 side.
      x0_child.n1 = parent.n1 - x1_child.n1;
      x0_child.n0 = parent.n0 - x1_child.n0;
      x0_child.with_t1 = parent.with_t1;
      x0_child.with_t0 = parent.with_t0;
      for (size_t v = 0; v < var_count; ++v) {
        x0_child.with_t1[v] -= x1_child.with_t1[v];
        x0_child.with_t0[v] -= x1_child.with_t0[v];
      }
      if (parent.materialized) {
        x0_child.materialized = true;
        for (int32_t id : parent.cases_t1)
          if (!data.cases[static_cast<size_t>(id)].contains(split_var)) x0_child.cases_t1.push_back(id);
        for (int32_t id : parent.cases_t0)
          if (!data.cases[static_cast<size_t>(id)].contains(split_var)) x0_child.cases_t0.push_back(id);
      } else {
        x0_child.path_neg = parent.path_neg;
        x0_child.path_neg.push_back(split_var);
      }

      for (GrowNode* child : {&x0_child, &x1_child}) {
        child->depth = parent.depth + 1;
        child->path_vars = parent.path_vars;
        child->path_vars.push_back(split_var);
        child->path_bits = parent.path_bits;
      }
      x0_child.path_bits.push_back(0);
      x1_child.path_bits.push_back(1);
      detail::score_candidates(x0_child, candidates, target, log_kappa);
      detail::score_candidates(x1_child, candidates, target, log_kappa);

      // The parent is internal now; its per-variable counts are dead weight.
      parent.with_t1 = {};
      parent.with_t0 = {};
      parent.cases_t1 = {};
      parent.cases_t0 = {};
    }

    const auto x0_index = static_cast<int32_t>(nodes.size());
    nodes.push_back(std::move(x0_child));
    const auto x1_index = static_cast<int32_t>(nodes.size());
    nodes.push_back(std::move(x1_child));
    nodes[static_cast<size_t>(pick)].child_x0 = x0_index;
    nodes[static_cast<size_t>(pick)].child_x1 = x1_index;
    frontier.erase(std::find(frontier.begin(), frontier.end(), pick));
    frontier.push_back(x0_index);
    frontier.push_back(x1_index);
  }

  // Flatten into preorder (node, x0 subtree, x1 subtree).
  DecisionTree tree;
  tree.target = target;
  tree.nodes.reserve(nodes.size());
  struct Frame {
    int32_t grow;
    int32_t parent;  // flat index whose child slot to fill, -1 for root
    bool is_x1;
  };
  std::vector<Frame> work{{0, -1, false}};
  while (!work.empty()) {
    const Frame frame = work.back();
    work.pop_back();
    const GrowNode& g = nodes[static_cast<size_t>(frame.grow)];
    const auto flat = static_cast<int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{g.split_var, -1, -1, g.n1, g.n0});
    if (frame.parent >= 0) {
      TreeNode& p = tree.nodes[static_cast<size_t>(frame.parent)];
      (frame.is_x1 ? p.child_x1 : p.child_x0) = flat;
    }
    if (g.split_var >= 0) {
      // LIFO stack: push x1 first so the x0 subtree is emitted first.
      work.push_back({g.child_x1, flat, true});
      work.push_back({g.child_x0, flat, false});
    }
  }
  return tree;
}

}  // namespace nextvote
