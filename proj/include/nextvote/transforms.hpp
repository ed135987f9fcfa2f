#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nextvote/cases.hpp"
#include "nextvote/catalog.hpp"

namespace nextvote {

// Order-discarding transformation: one case per history, marking the items
// that occur at least once anywhere in it.
inline BinaryCase bag_of_votes_case(std::span<const int32_t> votes, int32_t item_count) {
  BinaryCase c;
  c.positives.reserve(votes.size());
  for (int32_t v : votes) {
    if (v < 1 || v > item_count) throw DataError("vote index outside [1, gamma]");
    c.positives.push_back(v - 1);
  }
  c.finish();
  return c;
}

inline BinaryCase bag_of_votes_case(const VoteHistory& history, int32_t item_count) {
  return bag_of_votes_case(std::span<const int32_t>(history.votes), item_count);
}

inline CaseSet bag_dataset(const SessionDataset& data) {
  CaseSet out{VariableSpace::bag(data.catalog.item_count()), {}};
  out.cases.reserve(data.histories.size());
  for (const VoteHistory& history : data.histories)
    out.cases.push_back(bag_of_votes_case(history, data.catalog.item_count()));
  return out;
}

// Length bins over [1, inf). hi == kNoUpperBound marks the open-ended last bin.
struct BinScheme {
  static constexpr int32_t kNoUpperBound = -1;

  struct Interval {
    int32_t lo = 1;
    int32_t hi = kNoUpperBound;

    bool contains(int32_t length) const { return length >= lo && (hi == kNoUpperBound || length <= hi); }
  };

  std::vector<Interval> bounds;
  bool prefix_mode = true;

  int32_t bin_count() const { return static_cast<int32_t>(bounds.size()); }
};

// Greedy equal-vote-mass bin boundaries. Walks the distinct history lengths in
// ascending order, accumulating original-history vote mass, and closes each bin
// at the first length whose inclusion reaches the quota of
// remaining_mass / remaining_bins. A bin is forced shut early when exactly one
// distinct length per unfilled bin remains, so no bin ends up empty.
inline BinScheme compute_bin_bounds(const SessionDataset& data, int32_t bin_count,
                                    bool prefix_mode = true) {
  if (bin_count < 1) throw std::invalid_argument("bin count must be >= 1");
  if (data.histories.empty()) throw DataError("cannot bin an empty dataset");

  std::vector<std::pair<int32_t, int64_t>> mass_by_length;  // (length, votes at that length)
  {
    std::vector<int32_t> lengths;
    lengths.reserve(data.histories.size());
    for (const VoteHistory& h : data.histories) lengths.push_back(h.length());
    std::sort(lengths.begin(), lengths.end());
    for (int32_t len : lengths) {
      if (!mass_by_length.empty() && mass_by_length.back().first == len)
        mass_by_length.back().second += len;
      else
        mass_by_length.emplace_back(len, len);
    }
  }
  const auto distinct = static_cast<int32_t>(mass_by_length.size());
  if (bin_count > distinct)
    throw DataError("bin count " + std::to_string(bin_count) + " exceeds the " +
                    std::to_string(distinct) + " distinct history lengths");

  BinScheme scheme;
  scheme.prefix_mode = prefix_mode;
  double remaining = 0;
  for (const auto& [len, mass] : mass_by_length) remaining += static_cast<double>(mass);

  int32_t i = 0;
  int32_t lo = 1;
  for (int32_t b = 1; b <= bin_count; ++b) {
    if (b == bin_count) {
      scheme.bounds.push_back({lo, BinScheme::kNoUpperBound});
      break;
    }
    const double quota = remaining / static_cast<double>(bin_count - b + 1);
    double mass = 0;
    int32_t hi = 0;
    while (true) {
      const bool must_close = (distinct - i - 1) == (bin_count - b);
      mass += static_cast<double>(mass_by_length[i].second);
      hi = mass_by_length[i].first;
      ++i;
      if (mass >= quota || must_close) break;
    }
    scheme.bounds.push_back({lo, hi});
    lo = hi + 1;
    remaining -= mass;
  }
  return scheme;
}

// Distributes bag-of-votes cases into bins. In prefix mode a history lands in
// the bin containing its length and additionally contributes, to every earlier
// bin, the bag case of its first hi(bin) votes.
inline std::vector<CaseSet> bin_assign(const SessionDataset& data, const BinScheme& scheme) {
  const int32_t gamma = data.catalog.item_count();
  std::vector<CaseSet> bins;
  bins.reserve(scheme.bounds.size());
  for (int32_t b = 0; b < scheme.bin_count(); ++b)
    bins.push_back(CaseSet{VariableSpace::bag(gamma), {}});

  for (const VoteHistory& history : data.histories) {
    const int32_t len = history.length();
    int32_t own = -1;
    for (int32_t b = 0; b < scheme.bin_count(); ++b) {
      if (scheme.bounds[b].contains(len)) {
        own = b;
        break;
      }
    }
    if (own < 0) throw DataError("bin scheme does not cover history length " + std::to_string(len));
    if (scheme.prefix_mode) {
      for (int32_t b = 0; b < own; ++b) {
        std::span<const int32_t> prefix(history.votes.data(),
                                        static_cast<size_t>(scheme.bounds[b].hi));
        bins[b].cases.push_back(bag_of_votes_case(prefix, gamma));
      }
    }
    bins[own].cases.push_back(bag_of_votes_case(history, gamma));
  }
  return bins;
}

struct ExpansionScheme {
  int32_t history_length = 1;  // l >= 1
};

namespace detail {

// Lag and cache positives for the vote at 1-based position `pos` given the
// votes before it; shared by training expansion and prediction evidence.
inline void add_predictor_positives(std::span<const int32_t> before, const VariableSpace& space,
                                    BinaryCase& out) {
  const int32_t gamma = space.item_count();
  const int32_t l = space.history_length();
  const auto n = static_cast<int32_t>(before.size());
  for (int32_t d = 1; d <= l && d <= n; ++d)
    out.positives.push_back(gamma * d + before[n - d] - 1);
  std::vector<int32_t> seen(before.begin(), before.end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (int32_t k : seen) out.positives.push_back(gamma * (l + 1) + k - 1);
}

}  // namespace detail

// Data expansion: every vote becomes one case with its target variable set,
// lag variables for the previous l votes, and cache variables for everything
// voted earlier in the history.
inline std::vector<BinaryCase> expand_history(const VoteHistory& history,
                                              const ExpansionScheme& scheme, int32_t item_count) {
  const VariableSpace space = VariableSpace::expanded(item_count, scheme.history_length);
  std::vector<BinaryCase> out;
  out.reserve(history.votes.size());
  for (size_t j = 0; j < history.votes.size(); ++j) {
    const int32_t v = history.votes[j];
    if (v < 1 || v > item_count) throw DataError("vote index outside [1, gamma]");
    BinaryCase c;
    c.positives.push_back(v - 1);  // target
    detail::add_predictor_positives(std::span<const int32_t>(history.votes.data(), j), space, c);
    c.finish();
    out.push_back(std::move(c));
  }
  return out;
}

inline CaseSet expand_dataset(const SessionDataset& data, const ExpansionScheme& scheme) {
  CaseSet out{VariableSpace::expanded(data.catalog.item_count(), scheme.history_length), {}};
  out.cases.reserve(static_cast<size_t>(data.total_votes));
  for (const VoteHistory& history : data.histories)
    for (BinaryCase& c : expand_history(history, scheme, data.catalog.item_count()))
      out.cases.push_back(std::move(c));
  return out;
}

// Prediction evidence. The partial history may be empty (first vote).
inline BinaryCase build_evidence_bag(std::span<const int32_t> partial, int32_t item_count) {
  return bag_of_votes_case(partial, item_count);
}

inline BinaryCase build_evidence_expanded(std::span<const int32_t> partial,
                                          const ExpansionScheme& scheme, int32_t item_count) {
  for (int32_t v : partial)
    if (v < 1 || v > item_count) throw DataError("vote index outside [1, gamma]");
  const VariableSpace space = VariableSpace::expanded(item_count, scheme.history_length);
  BinaryCase c;
  detail::add_predictor_positives(partial, space, c);
  c.finish();
  return c;
}

}  // namespace nextvote
