#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nextvote/catalog.hpp"
#include "nextvote/cluster.hpp"
#include "nextvote/forest.hpp"
#include "nextvote/transforms.hpp"

namespace nextvote {

// The four trainable model families. Binned carries one forest per bin;
// the others carry a single predictor.
struct BaselineModel {
  Forest forest;
};

struct BinnedModel {
  BinScheme scheme;
  std::vector<Forest> forests;  // forests[b] trained on bin b's cases
};

struct ExpandedModel {
  ExpansionScheme scheme;
  Forest forest;
};

struct TrainedModel {
  ItemCatalog catalog;
  ScoreParams score;  // kappa used during tree growth; ignored by the cluster family
  std::variant<BaselineModel, BinnedModel, ExpandedModel, ClusterModel> family;
};

// FNV-1a over the catalog tokens (with a separator byte so token boundaries
// matter); detects evaluating a model against the wrong item universe.
inline uint64_t catalog_hash(const ItemCatalog& catalog) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (const std::string& token : catalog.tokens()) {
    for (char ch : token) mix(static_cast<unsigned char>(ch));
    mix(0);
  }
  return h;
}

namespace detail {

using nlohmann::json;

// Trees are stored as nested arrays: a leaf is [n1, n0], an internal node is
// [split-token, x0-subtree, x1-subtree]. Internal counts are derived, so the
// document stores only what cannot be recomputed.
inline json tree_node_to_json(const DecisionTree& tree, int32_t at, const VariableSpace& space) {
  const TreeNode& node = tree.nodes[static_cast<size_t>(at)];
  if (node.is_leaf()) return json::array({node.n1, node.n0});
  return json::array({space.token(node.split_var), tree_node_to_json(tree, node.child_x0, space),
                      tree_node_to_json(tree, node.child_x1, space)});
}

inline json forest_to_json(const Forest& forest) {
  json trees = json::array();
  for (const DecisionTree& tree : forest.trees)
    trees.push_back(tree_node_to_json(tree, 0, forest.space));
  return trees;
}

// Rebuilds one subtree in preorder; returns the flat index of the subtree root
// and fills in the node's counts (internal counts = sum of children).
inline int32_t tree_node_from_json(const json& doc, const VariableSpace& space,
                                   DecisionTree& tree) {
  if (!doc.is_array()) throw DataError("model document: tree node must be an array");
  const auto at = static_cast<int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (doc.size() == 2) {
    if (!doc[0].is_number_integer() || !doc[1].is_number_integer())
      throw DataError("model document: leaf counts must be integers");
    TreeNode& leaf = tree.nodes[static_cast<size_t>(at)];
    leaf.n1 = doc[0].get<int64_t>();
    leaf.n0 = doc[1].get<int64_t>();
    if (leaf.n1 < 0 || leaf.n0 < 0) throw DataError("model document: negative leaf count");
    return at;
  }
  if (doc.size() == 3) {
    if (!doc[0].is_string()) throw DataError("model document: split variable must be a token string");
    const int32_t split_var = space.parse_token(doc[0].get<std::string>());
    const int32_t x0 = tree_node_from_json(doc[1], space, tree);
    const int32_t x1 = tree_node_from_json(doc[2], space, tree);
    TreeNode& node = tree.nodes[static_cast<size_t>(at)];
    node.split_var = split_var;
    node.child_x0 = x0;
    node.child_x1 = x1;
    node.n1 = tree.nodes[static_cast<size_t>(x0)].n1 + tree.nodes[static_cast<size_t>(x1)].n1;
    node.n0 = tree.nodes[static_cast<size_t>(x0)].n0 + tree.nodes[static_cast<size_t>(x1)].n0;
    return at;
  }
  throw DataError("model document: tree node must have 2 (leaf) or 3 (split) entries");
}

inline Forest forest_from_json(const json& doc, const VariableSpace& space) {
  if (!doc.is_array()) throw DataError("model document: forest must be an array of trees");
  Forest forest{space, {}};
  if (static_cast<int32_t>(doc.size()) != space.item_count())
    throw DataError("model document: forest must hold one tree per item");
  forest.trees.reserve(doc.size());
  for (size_t k = 0; k < doc.size(); ++k) {
    DecisionTree tree;
    tree.target = static_cast<int32_t>(k);
    tree_node_from_json(doc[k], space, tree);
    // Reject split variables repeating along a path and targets used as splits.
    struct Checker {
      const DecisionTree& tree;
      void walk(int32_t at, std::vector<int32_t>& path) const {
        const TreeNode& node = tree.nodes[static_cast<size_t>(at)];
        if (node.is_leaf()) return;
        if (node.split_var == tree.target)
          throw DataError("model document: tree splits on its own target");
        for (int32_t seen : path)
          if (seen == node.split_var)
            throw DataError("model document: split variable repeats along a path");
        path.push_back(node.split_var);
        walk(node.child_x0, path);
        walk(node.child_x1, path);
        path.pop_back();
      }
    };
    std::vector<int32_t> path;
    Checker{tree}.walk(0, path);
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

inline json bins_to_json(const BinScheme& scheme) {
  json bins = json::array();
  for (const BinScheme::Interval& bound : scheme.bounds)
    bins.push_back(json::array({bound.lo, bound.hi}));
  return bins;
}

inline BinScheme bins_from_json(const json& doc, bool prefix_mode) {
  if (!doc.is_array() || doc.empty()) throw DataError("model document: empty bin list");
  BinScheme scheme;
  scheme.prefix_mode = prefix_mode;
  int32_t expected_lo = 1;
  for (size_t b = 0; b < doc.size(); ++b) {
    if (!doc[b].is_array() || doc[b].size() != 2)
      throw DataError("model document: bin bound must be a [lo, hi] pair");
    BinScheme::Interval bound{doc[b][0].get<int32_t>(), doc[b][1].get<int32_t>()};
    if (bound.lo != expected_lo)
      throw DataError("model document: bins must tile [1, inf) contiguously");
    const bool last = b + 1 == doc.size();
    if (last != (bound.hi == BinScheme::kNoUpperBound) || (!last && bound.hi < bound.lo))
      throw DataError("model document: exactly the last bin is unbounded");
    scheme.bounds.push_back(bound);
    if (!last) expected_lo = bound.hi + 1;
  }
  return scheme;
}

}  // namespace detail

constexpr const char* kModelFormatName = "nextvote-model";
constexpr int kModelFormatVersion = 1;

inline void save_model(const TrainedModel& model, std::ostream& out) {
  using nlohmann::json;
  json doc;
  doc["format"] = kModelFormatName;
  doc["version"] = kModelFormatVersion;
  json catalog;
  catalog["items"] = model.catalog.tokens();
  char hash_text[17];
  std::snprintf(hash_text, sizeof hash_text, "%016llx",
                static_cast<unsigned long long>(catalog_hash(model.catalog)));
  catalog["hash"] = hash_text;
  doc["catalog"] = std::move(catalog);
  doc["kappa"] = model.score.kappa;

  if (const auto* baseline = std::get_if<BaselineModel>(&model.family)) {
    doc["type"] = "baseline";
    doc["forest"] = detail::forest_to_json(baseline->forest);
  } else if (const auto* binned = std::get_if<BinnedModel>(&model.family)) {
    doc["type"] = "binned";
    doc["bins"] = detail::bins_to_json(binned->scheme);
    doc["prefix"] = binned->scheme.prefix_mode;
    json forests = json::array();
    for (const Forest& forest : binned->forests) forests.push_back(detail::forest_to_json(forest));
    doc["forests"] = std::move(forests);
  } else if (const auto* expanded = std::get_if<ExpandedModel>(&model.family)) {
    doc["type"] = "expanded";
    doc["history_length"] = expanded->scheme.history_length;
    doc["forest"] = detail::forest_to_json(expanded->forest);
  } else {
    const auto& cluster = std::get<ClusterModel>(model.family);
    doc["type"] = "cluster";
    doc["classes"] = cluster.class_count();
    doc["prior"] = cluster.prior;
    doc["item_prob"] = cluster.item_prob;
  }
  out << doc.dump(1, '\t') << '\n';
}

inline TrainedModel load_model(std::istream& in) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& error) {
    throw DataError(std::string("model document is not valid JSON: ") + error.what());
  }
  try {
    if (doc.value("format", "") != kModelFormatName)
      throw DataError("not a model document (missing format marker)");
    if (doc.value("version", -1) != kModelFormatVersion)
      throw DataError("unsupported model document version");

    TrainedModel model;
    const json& catalog = doc.at("catalog");
    for (const json& token : catalog.at("items")) {
      const std::string text = token.get<std::string>();
      if (model.catalog.index_of(text))
        throw DataError("model document: duplicate catalog token '" + text + "'");
      model.catalog.add(text);
    }
    if (model.catalog.item_count() == 0) throw DataError("model document: empty catalog");
    char hash_text[17];
    std::snprintf(hash_text, sizeof hash_text, "%016llx",
                  static_cast<unsigned long long>(catalog_hash(model.catalog)));
    if (catalog.at("hash").get<std::string>() != hash_text)
      throw CatalogMismatchError("model document catalog hash does not match its item list");

    model.score.kappa = doc.at("kappa").get<double>();
    if (!(model.score.kappa > 0.0 && model.score.kappa <= 1.0))
      throw DataError("model document: kappa outside (0, 1]");

    const int32_t gamma = model.catalog.item_count();
    const std::string type = doc.at("type").get<std::string>();
    if (type == "baseline") {
      model.family = BaselineModel{detail::forest_from_json(doc.at("forest"), VariableSpace::bag(gamma))};
    } else if (type == "binned") {
      BinnedModel binned;
      binned.scheme = detail::bins_from_json(doc.at("bins"), doc.at("prefix").get<bool>());
      const json& forests = doc.at("forests");
      if (!forests.is_array() || forests.size() != binned.scheme.bounds.size())
        throw DataError("model document: binned family needs one forest per bin");
      for (const json& forest : forests)
        binned.forests.push_back(detail::forest_from_json(forest, VariableSpace::bag(gamma)));
      model.family = std::move(binned);
    } else if (type == "expanded") {
      ExpandedModel expanded;
      expanded.scheme.history_length = doc.at("history_length").get<int32_t>();
      if (expanded.scheme.history_length < 1)
        throw DataError("model document: history length must be >= 1");
      expanded.forest = detail::forest_from_json(
          doc.at("forest"), VariableSpace::expanded(gamma, expanded.scheme.history_length));
      model.family = std::move(expanded);
    } else if (type == "cluster") {
      ClusterModel cluster;
      cluster.prior = doc.at("prior").get<std::vector<double>>();
      cluster.item_prob = doc.at("item_prob").get<std::vector<std::vector<double>>>();
      const auto classes = static_cast<size_t>(doc.at("classes").get<int32_t>());
      if (classes < 1 || cluster.prior.size() != classes || cluster.item_prob.size() != classes)
        throw DataError("model document: cluster class count does not match its tables");
      double prior_sum = 0;
      for (double pi : cluster.prior) {
        if (!(pi > 0.0 && pi < 1.0) && classes > 1)
          throw DataError("model document: class prior outside (0, 1)");
        prior_sum += pi;
      }
      if (std::abs(prior_sum - 1.0) > 1e-9)
        throw DataError("model document: class prior does not sum to 1");
      for (const std::vector<double>& row : cluster.item_prob) {
        if (row.size() != static_cast<size_t>(gamma))
          throw DataError("model document: item probability row length mismatch");
        for (double p : row)
          if (!(p > 0.0 && p < 1.0))
            throw DataError("model document: item probability outside (0, 1)");
      }
      model.family = std::move(cluster);
    } else {
      throw DataError("model document: unknown model type '" + type + "'");
    }
    return model;
  } catch (const json::exception& error) {
    throw DataError(std::string("model document is malformed: ") + error.what());
  }
}

}  // namespace nextvote
