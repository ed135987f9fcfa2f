#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nextvote/errors.hpp"

namespace nextvote {

// Dense 1-based item index space. Tokens are arbitrary strings; numeric-looking
// tokens get no special treatment.
class ItemCatalog {
 public:
  int32_t item_count() const { return static_cast<int32_t>(index_to_id_.size()); }

  // Returns the existing index for a known token, or assigns the next free one.
  int32_t add(std::string_view token) {
    auto it = id_to_index_.find(std::string(token));
    if (it != id_to_index_.end()) return it->second;
    index_to_id_.emplace_back(token);
    int32_t index = static_cast<int32_t>(index_to_id_.size());
    id_to_index_.emplace(index_to_id_.back(), index);
    return index;
  }

  std::optional<int32_t> index_of(std::string_view token) const {
    auto it = id_to_index_.find(std::string(token));
    if (it == id_to_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& token_of(int32_t index) const {
    if (index < 1 || index > item_count())
      throw std::out_of_range("item index " + std::to_string(index) + " outside catalog");
    return index_to_id_[static_cast<size_t>(index) - 1];
  }

  const std::vector<std::string>& tokens() const { return index_to_id_; }

  bool operator==(const ItemCatalog& other) const { return index_to_id_ == other.index_to_id_; }

 private:
  std::vector<std::string> index_to_id_;
  std::unordered_map<std::string, int32_t> id_to_index_;
};

// One user's ordered votes, as 1-based item indices. Repeats are permitted.
struct VoteHistory {
  std::vector<int32_t> votes;

  int32_t length() const { return static_cast<int32_t>(votes.size()); }
  bool operator==(const VoteHistory& other) const { return votes == other.votes; }
};

struct SessionDataset {
  ItemCatalog catalog;
  std::vector<VoteHistory> histories;
  int64_t total_votes = 0;

  int64_t session_count() const { return static_cast<int64_t>(histories.size()); }
};

struct SplitSpec {
  double test_fraction = 0.2;
  uint64_t seed = 0;
};

struct CorpusStats {
  double mean_length = 0;
  double median_length = 0;
  int32_t max_length = 0;
  int64_t total_votes = 0;
  int64_t session_count = 0;
};

enum class CatalogMode {
  extend,  // unseen tokens get fresh indices
  frozen,  // unseen tokens are an error
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

// Reads a session corpus: one session per line, whitespace-separated item tokens
// in time order, `#`-prefixed lines are comments. A frozen catalog rejects
// unseen tokens; an extendable one grows.
inline SessionDataset parse_sessions(std::istream& in, ItemCatalog catalog = ItemCatalog{},
                                     CatalogMode mode = CatalogMode::extend) {
  SessionDataset data;
  data.catalog = std::move(catalog);
  std::string line;
  while (std::getline(in, line)) {
    size_t first = 0;
    while (first < line.size() && detail::is_space(line[first])) ++first;
    if (first == line.size() || line[first] == '#') continue;
    VoteHistory history;
    for (std::string_view token : detail::split_tokens(line)) {
      if (mode == CatalogMode::frozen) {
        auto index = data.catalog.index_of(token);
        if (!index)
          throw CatalogMismatchError("token '" + std::string(token) + "' not in catalog");
        history.votes.push_back(*index);
      } else {
        history.votes.push_back(data.catalog.add(token));
      }
    }
    data.total_votes += history.length();
    data.histories.push_back(std::move(history));
  }
  if (data.histories.empty()) throw DataError("session input contains no sessions");
  return data;
}

inline void write_sessions(const SessionDataset& data, std::ostream& out) {
  for (const VoteHistory& history : data.histories) {
    for (size_t j = 0; j < history.votes.size(); ++j) {
      if (j > 0) out << ' ';
      out << data.catalog.token_of(history.votes[j]);
    }
    out << '\n';
  }
}

// Catalog file format: one `index<TAB>token` pair per line, indices dense from 1.
inline void write_catalog_file(const ItemCatalog& catalog, std::ostream& out) {
  for (int32_t i = 1; i <= catalog.item_count(); ++i) out << i << '\t' << catalog.token_of(i) << '\n';
}

inline ItemCatalog read_catalog_file(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("catalog line " + std::to_string(line_no) + ": missing tab separator");
    const std::string index_text = line.substr(0, tab);
    std::string token = line.substr(tab + 1);
    if (token.empty()) throw DataError("catalog line " + std::to_string(line_no) + ": empty token");
    size_t pos = 0;
    long index = 0;
    try {
      index = std::stol(index_text, &pos);
    } catch (const std::exception&) {
      throw DataError("catalog line " + std::to_string(line_no) + ": malformed index token");
    }
    if (pos != index_text.size() || index < 1)
      throw DataError("catalog line " + std::to_string(line_no) + ": malformed index token");
    if (static_cast<size_t>(index) != tokens.size() + 1)
      throw DataError("catalog line " + std::to_string(line_no) + ": indices must be dense from 1");
    tokens.push_back(std::move(token));
  }
  ItemCatalog catalog;
  for (const std::string& token : tokens) {
    if (catalog.index_of(token))
      throw DataError("catalog contains duplicate token '" + token + "'");
    catalog.add(token);
  }
  return catalog;
}

// Deterministic session-level split. Sessions are never divided; both sides
// share the input catalog and keep the input's relative order.
inline std::pair<SessionDataset, SessionDataset> split_train_test(const SessionDataset& data,
                                                                  const SplitSpec& spec) {
  if (data.histories.empty()) throw DataError("cannot split an empty dataset");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw DataError("test fraction must lie strictly between 0 and 1");
  const size_t n = data.histories.size();
  const auto n_test = static_cast<size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test == n)
    throw DataError("test fraction " + std::to_string(spec.test_fraction) +
                    " leaves one side of the split empty");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates driven directly by the engine output, so the partition is
  // identical across standard library implementations.
  std::mt19937_64 engine(spec.seed);
  for (size_t i = n - 1; i > 0; --i) {
    size_t j = static_cast<size_t>(engine() % (i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> in_test(n, false);
  for (size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

  SessionDataset train, test;
  train.catalog = data.catalog;
  test.catalog = data.catalog;
  for (size_t i = 0; i < n; ++i) {
    SessionDataset& side = in_test[i] ? test : train;
    side.histories.push_back(data.histories[i]);
    side.total_votes += data.histories[i].length();
  }
  return {std::move(train), std::move(test)};
}

inline CorpusStats corpus_stats(const SessionDataset& data) {
  if (data.histories.empty()) throw DataError("cannot compute statistics of an empty dataset");
  CorpusStats stats;
  stats.session_count = data.session_count();
  std::vector<int32_t> lengths;
  lengths.reserve(data.histories.size());
  for (const VoteHistory& history : data.histories) {
    lengths.push_back(history.length());
    stats.total_votes += history.length();
    stats.max_length = std::max(stats.max_length, history.length());
  }
  stats.mean_length = static_cast<double>(stats.total_votes) / static_cast<double>(lengths.size());
  std::sort(lengths.begin(), lengths.end());
  const size_t n = lengths.size();
  stats.median_length = (n % 2 == 1)
                            ? static_cast<double>(lengths[n / 2])
                            : (static_cast<double>(lengths[n / 2 - 1]) + static_cast<double>(lengths[n / 2])) / 2.0;
  return stats;
}

}  // namespace nextvote
