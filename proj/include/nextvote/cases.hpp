#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "nextvote/errors.hpp"

namespace nextvote {

// Variable roles across the two case spaces. Bag space holds only item
// variables; the expanded space holds target, lagged, and cache variables.
enum class VarRole : uint8_t { item = 0, target = 1, lag = 2, cache = 3 };

struct VariableId {
  VarRole role = VarRole::item;
  int32_t item = 0;        // item index in [1, gamma]
  int32_t lag_offset = 0;  // j >= 1, present only for role == lag

  bool operator==(const VariableId& other) const {
    return role == other.role && item == other.item && lag_offset == other.lag_offset;
  }
};

// Deterministic ordering used to break score ties: role, then item, then lag offset.
inline bool tie_less(const VariableId& a, const VariableId& b) {
  return std::tuple(static_cast<int>(a.role), a.item, a.lag_offset) <
         std::tuple(static_cast<int>(b.role), b.item, b.lag_offset);
}

// Descriptor of a case variable space plus the dense-id packing used everywhere
// internally. Bag space packs item k at k-1. Expanded space with history length
// l packs targets first, then the l lag blocks, then the cache block, each block
// ordered by item; gamma*(l+2) variables total.
class VariableSpace {
 public:
  enum class Kind { bag, expanded };

  // Default: an empty bag space. Usable spaces come from bag() or expanded().
  VariableSpace() : kind_(Kind::bag), gamma_(0), history_length_(0) {}

  static VariableSpace bag(int32_t item_count) { return VariableSpace(Kind::bag, item_count, 0); }
  static VariableSpace expanded(int32_t item_count, int32_t history_length) {
    if (history_length < 1) throw std::invalid_argument("history length must be >= 1");
    return VariableSpace(Kind::expanded, item_count, history_length);
  }

  Kind kind() const { return kind_; }
  int32_t item_count() const { return gamma_; }
  int32_t history_length() const { return history_length_; }

  int32_t variable_count() const {
    return kind_ == Kind::bag ? gamma_ : gamma_ * (history_length_ + 2);
  }

  int32_t dense_id(const VariableId& v) const {
    check_item(v.item);
    switch (v.role) {
      case VarRole::item:
        require(kind_ == Kind::bag, "item variables exist only in bag space");
        return v.item - 1;
      case VarRole::target:
        require(kind_ == Kind::expanded, "target variables exist only in expanded space");
        return v.item - 1;
      case VarRole::lag:
        require(kind_ == Kind::expanded, "lag variables exist only in expanded space");
        require(v.lag_offset >= 1 && v.lag_offset <= history_length_, "lag offset out of range");
        return gamma_ * v.lag_offset + v.item - 1;
      case VarRole::cache:
        require(kind_ == Kind::expanded, "cache variables exist only in expanded space");
        return gamma_ * (history_length_ + 1) + v.item - 1;
    }
    throw std::invalid_argument("bad variable role");
  }

  VariableId variable(int32_t dense) const {
    if (dense < 0 || dense >= variable_count()) throw std::out_of_range("dense variable id out of range");
    if (kind_ == Kind::bag) return {VarRole::item, dense + 1, 0};
    const int32_t block = dense / gamma_;
    const int32_t item = dense % gamma_ + 1;
    if (block == 0) return {VarRole::target, item, 0};
    if (block <= history_length_) return {VarRole::lag, item, block};
    return {VarRole::cache, item, 0};
  }

  // Textual form used by the case dump and the model document:
  // item:5, target:5, lag:5:2, cache:5.
  std::string token(int32_t dense) const {
    const VariableId v = variable(dense);
    switch (v.role) {
      case VarRole::item: return "item:" + std::to_string(v.item);
      case VarRole::target: return "target:" + std::to_string(v.item);
      case VarRole::lag: return "lag:" + std::to_string(v.item) + ":" + std::to_string(v.lag_offset);
      case VarRole::cache: return "cache:" + std::to_string(v.item);
    }
    throw std::invalid_argument("bad variable role");
  }

  int32_t parse_token(const std::string& text) const {
    const size_t c1 = text.find(':');
    if (c1 == std::string::npos) throw DataError("malformed variable token '" + text + "'");
    const std::string role = text.substr(0, c1);
    const size_t c2 = text.find(':', c1 + 1);
    VariableId v;
    try {
      if (role == "lag") {
        if (c2 == std::string::npos) throw DataError("lag token needs an offset");
        v = {VarRole::lag, std::stoi(text.substr(c1 + 1, c2 - c1 - 1)), std::stoi(text.substr(c2 + 1))};
      } else {
        if (c2 != std::string::npos) throw DataError("unexpected second field");
        const int32_t item = std::stoi(text.substr(c1 + 1));
        if (role == "item") v = {VarRole::item, item, 0};
        else if (role == "target") v = {VarRole::target, item, 0};
        else if (role == "cache") v = {VarRole::cache, item, 0};
        else throw DataError("unknown role");
      }
    } catch (const DataError&) {
      throw DataError("malformed variable token '" + text + "'");
    } catch (const std::exception&) {
      throw DataError("malformed variable token '" + text + "'");
    }
    try {
      return dense_id(v);
    } catch (const std::exception&) {
      throw DataError("variable token '" + text + "' does not belong to this space");
    }
  }

  // Dense ids of every predictor-eligible variable, sorted by the tie order.
  std::vector<int32_t> candidates_in_tie_order() const {
    std::vector<int32_t> out;
    if (kind_ == Kind::bag) {
      out.reserve(gamma_);
      for (int32_t k = 1; k <= gamma_; ++k) out.push_back(k - 1);
      return out;
    }
    out.reserve(static_cast<size_t>(gamma_) * (history_length_ + 1));
    for (int32_t k = 1; k <= gamma_; ++k)
      for (int32_t d = 1; d <= history_length_; ++d) out.push_back(gamma_ * d + k - 1);
    for (int32_t k = 1; k <= gamma_; ++k) out.push_back(gamma_ * (history_length_ + 1) + k - 1);
    return out;
  }

  bool operator==(const VariableSpace& other) const {
    return kind_ == other.kind_ && gamma_ == other.gamma_ && history_length_ == other.history_length_;
  }

 private:
  VariableSpace(Kind kind, int32_t gamma, int32_t history_length)
      : kind_(kind), gamma_(gamma), history_length_(history_length) {
    if (gamma < 1) throw std::invalid_argument("item count must be >= 1");
  }

  static void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
  }
  void check_item(int32_t item) const {
    if (item < 1 || item > gamma_) throw std::invalid_argument("item index outside [1, gamma]");
  }

  Kind kind_;
  int32_t gamma_;
  int32_t history_length_;
};

// Sparse binary case: dense ids of the variables set to x1, sorted ascending.
// Everything absent is x0 (closed world).
struct BinaryCase {
  std::vector<int32_t> positives;

  bool contains(int32_t dense) const {
    return std::binary_search(positives.begin(), positives.end(), dense);
  }
  void finish() {
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
  }
  bool operator==(const BinaryCase& other) const { return positives == other.positives; }
};

struct CaseSet {
  VariableSpace space;
  std::vector<BinaryCase> cases;

  int64_t case_count() const { return static_cast<int64_t>(cases.size()); }
};

// Debug dump: one case per line, positive variables as role:item[:lag] tokens
// in tie order.
inline void dump_cases(const CaseSet& data, std::ostream& out) {
  for (const BinaryCase& c : data.cases) {
    std::vector<VariableId> vars;
    vars.reserve(c.positives.size());
    for (int32_t dense : c.positives) vars.push_back(data.space.variable(dense));
    std::sort(vars.begin(), vars.end(), tie_less);
    for (size_t i = 0; i < vars.size(); ++i) {
      if (i > 0) out << ' ';
      out << data.space.token(data.space.dense_id(vars[i]));
    }
    out << '\n';
  }
}

}  // namespace nextvote
