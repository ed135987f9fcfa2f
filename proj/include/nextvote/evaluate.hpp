#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nextvote/recommend.hpp"

namespace nextvote {

// Probability that a user inspects 0-based list position k: 2^(-k/alpha),
// halving every alpha positions.
inline double halflife_weight(int64_t position, double alpha) {
  if (position < 0) throw std::invalid_argument("list position must be >= 0");
  if (!(alpha > 0)) throw std::invalid_argument("half-life must be positive");
  return std::exp2(-static_cast<double>(position) / alpha);
}

// One user's ranked-list outcome: which 0-based list positions held a
// preferred item, how long the list was, and how many preferred items exist.
struct RankedListOutcome {
  std::vector<int32_t> hit_positions;
  int32_t list_length = 0;
  int32_t preferred_count = 0;
};

// Expected-utility list accuracy: mean over users of achieved halflife utility
// over the best achievable (all preferred items packed at the top).
inline double cf_accuracy_list(std::span<const RankedListOutcome> lists, double alpha) {
  if (lists.empty()) throw DataError("list accuracy needs at least one user");
  double total = 0;
  for (const RankedListOutcome& user : lists) {
    if (user.preferred_count < 1) throw DataError("a user has an empty preferred set");
    if (user.list_length < 1) throw DataError("a user has an empty recommendation list");
    double achieved = 0;
    for (int32_t k : user.hit_positions) {
      if (k < 0 || k >= user.list_length)
        throw DataError("hit position outside the recommendation list");
      achieved += halflife_weight(k, alpha);
    }
    double best = 0;
    for (int32_t k = 0; k < user.preferred_count; ++k) best += halflife_weight(k, alpha);
    total += achieved / best;
  }
  return total / static_cast<double>(lists.size());
}

struct EvalConfig {
  double alpha = 10.0;
  bool per_vote = true;       // per-vote averaging; false aggregates per session first
  bool per_position = false;  // emit a per-vote-position breakdown
  int32_t threads = 1;
};

struct EvalReport {
  struct Slice {
    int64_t vote_count = 0;
    double cf_accuracy = 0;
    double mean_log_prob = 0;
  };
  struct PositionSlice : Slice {
    int32_t position = 0;  // 1-based vote position within a session
  };

  double cf_accuracy = 0;
  double mean_log_prob = 0;
  int64_t vote_count = 0;
  int64_t session_count = 0;
  double alpha = 10.0;
  std::vector<Slice> submodels;            // one row per sub-predictor the model routed to
  std::vector<PositionSlice> per_position;  // filled only when requested
};

namespace detail {

struct SessionEval {
  std::vector<int64_t> sub_votes;
  std::vector<double> sub_cf, sub_lp;
  std::vector<double> pos_cf, pos_lp;  // indexed by 0-based vote position
  double utility = 0;      // sum of halflife contributions
  double best_utility = 0;  // utility if every vote had ranked first
};

}  // namespace detail

// Sequential next-vote scoring: every vote of every test session is predicted
// from the votes before it; its halflife contribution 2^(-(rank-1)/alpha) and
// ln(renormalized probability) are accumulated. Sessions are scored in
// parallel and reduced in input order, so results do not depend on threading.
inline EvalReport evaluate(const TrainedModel& model, const SessionDataset& test,
                           const EvalConfig& cfg = {}) {
  if (!(cfg.alpha > 0)) throw std::invalid_argument("half-life must be positive");
  if (test.histories.empty()) throw DataError("test corpus contains no sessions");
  const int32_t gamma = model.catalog.item_count();
  const int32_t subs = detail::submodel_count(model);
  int32_t longest = 0;
  for (const VoteHistory& history : test.histories) {
    longest = std::max(longest, history.length());
    for (int32_t vote : history.votes)
      if (vote < 1 || vote > gamma)
        throw DataError("test vote " + std::to_string(vote) + " is outside the catalog");
  }

  std::vector<detail::SessionEval> results(test.histories.size());
  detail::parallel_for(static_cast<int64_t>(test.histories.size()), cfg.threads, [&](int64_t i) {
    const VoteHistory& history = test.histories[static_cast<size_t>(i)];
    detail::SessionEval session;
    session.sub_votes.assign(static_cast<size_t>(subs), 0);
    session.sub_cf.assign(static_cast<size_t>(subs), 0.0);
    session.sub_lp.assign(static_cast<size_t>(subs), 0.0);
    session.pos_cf.assign(static_cast<size_t>(history.length()), 0.0);
    session.pos_lp.assign(static_cast<size_t>(history.length()), 0.0);
    for (int32_t j = 0; j < history.length(); ++j) {
      const std::span<const int32_t> prefix(history.votes.data(), static_cast<size_t>(j));
      const std::vector<double> raw = detail::raw_next_scores(model, prefix);
      double total = 0;
      for (double p : raw) total += p;
      const int32_t actual = history.votes[static_cast<size_t>(j)];
      const int32_t rank = detail::rank_of_item(raw, actual);
      const double contribution = halflife_weight(rank - 1, cfg.alpha);
      const double log_prob = std::log(raw[static_cast<size_t>(actual) - 1] / total);
      const auto sub = static_cast<size_t>(detail::submodel_index(model, j));
      session.sub_votes[sub] += 1;
      session.sub_cf[sub] += contribution;
      session.sub_lp[sub] += log_prob;
      session.pos_cf[static_cast<size_t>(j)] = contribution;
      session.pos_lp[static_cast<size_t>(j)] = log_prob;
      session.utility += contribution;
      session.best_utility += halflife_weight(j, cfg.alpha);
    }
    results[static_cast<size_t>(i)] = std::move(session);
  });

  EvalReport report;
  report.alpha = cfg.alpha;
  report.session_count = test.session_count();
  report.submodels.assign(static_cast<size_t>(subs), {});
  std::vector<EvalReport::PositionSlice> positions(static_cast<size_t>(longest));
  double cf_total = 0, lp_total = 0, ratio_total = 0;
  for (const detail::SessionEval& session : results) {
    for (size_t s = 0; s < static_cast<size_t>(subs); ++s) {
      report.submodels[s].vote_count += session.sub_votes[s];
      report.submodels[s].cf_accuracy += session.sub_cf[s];
      report.submodels[s].mean_log_prob += session.sub_lp[s];
      report.vote_count += session.sub_votes[s];
      cf_total += session.sub_cf[s];
      lp_total += session.sub_lp[s];
    }
    for (size_t j = 0; j < session.pos_cf.size(); ++j) {
      positions[j].position = static_cast<int32_t>(j) + 1;
      positions[j].vote_count += 1;
      positions[j].cf_accuracy += session.pos_cf[j];
      positions[j].mean_log_prob += session.pos_lp[j];
    }
    ratio_total += session.utility / session.best_utility;
  }
  const auto mean = [](double total, int64_t count) {
    return count > 0 ? total / static_cast<double>(count) : 0.0;
  };
  report.cf_accuracy = cfg.per_vote
                           ? mean(cf_total, report.vote_count)
                           : ratio_total / static_cast<double>(report.session_count);
  report.mean_log_prob = mean(lp_total, report.vote_count);
  for (EvalReport::Slice& row : report.submodels) {
    row.cf_accuracy = mean(row.cf_accuracy, row.vote_count);
    row.mean_log_prob = mean(row.mean_log_prob, row.vote_count);
  }
  if (cfg.per_position) {
    for (EvalReport::PositionSlice& row : positions) {
      row.cf_accuracy = mean(row.cf_accuracy, row.vote_count);
      row.mean_log_prob = mean(row.mean_log_prob, row.vote_count);
    }
    report.per_position = std::move(positions);
  }
  return report;
}

// Convenience single-metric views of evaluate().
inline double cf_accuracy_pervote(const TrainedModel& model, const SessionDataset& test,
                                  double alpha = 10.0) {
  EvalConfig cfg;
  cfg.alpha = alpha;
  return evaluate(model, test, cfg).cf_accuracy;
}

inline double log_score(const TrainedModel& model, const SessionDataset& test) {
  return evaluate(model, test).mean_log_prob;
}

namespace detail {

inline std::string format_real(double value) {
  char text[64];
  std::snprintf(text, sizeof text, "%.12g", value);
  return text;
}

}  // namespace detail

// Flat key=value form. Field order and formatting are fixed so equal reports
// serialize byte-identically.
inline void write_report_text(const EvalReport& report, std::ostream& out) {
  out << "cf_accuracy " << detail::format_real(report.cf_accuracy) << '\n';
  out << "mean_log_prob " << detail::format_real(report.mean_log_prob) << '\n';
  out << "vote_count " << report.vote_count << '\n';
  out << "session_count " << report.session_count << '\n';
  out << "alpha " << detail::format_real(report.alpha) << '\n';
  out << "submodel_count " << report.submodels.size() << '\n';
  for (size_t s = 0; s < report.submodels.size(); ++s) {
    const EvalReport::Slice& row = report.submodels[s];
    out << "submodel." << s << ".vote_count " << row.vote_count << '\n';
    out << "submodel." << s << ".cf_accuracy " << detail::format_real(row.cf_accuracy) << '\n';
    out << "submodel." << s << ".mean_log_prob " << detail::format_real(row.mean_log_prob) << '\n';
  }
  for (const EvalReport::PositionSlice& row : report.per_position) {
    out << "position." << row.position << ".vote_count " << row.vote_count << '\n';
    out << "position." << row.position << ".cf_accuracy " << detail::format_real(row.cf_accuracy)
        << '\n';
    out << "position." << row.position << ".mean_log_prob "
        << detail::format_real(row.mean_log_prob) << '\n';
  }
}

inline void write_report_json(const EvalReport& report, std::ostream& out) {
  using nlohmann::json;
  json doc;
  doc["cf_accuracy"] = report.cf_accuracy;
  doc["mean_log_prob"] = report.mean_log_prob;
  doc["vote_count"] = report.vote_count;
  doc["session_count"] = report.session_count;
  doc["alpha"] = report.alpha;
  json submodels = json::array();
  for (const EvalReport::Slice& row : report.submodels) {
    json entry;
    entry["vote_count"] = row.vote_count;
    entry["cf_accuracy"] = row.cf_accuracy;
    entry["mean_log_prob"] = row.mean_log_prob;
    submodels.push_back(std::move(entry));
  }
  doc["submodels"] = std::move(submodels);
  if (!report.per_position.empty()) {
    json positions = json::array();
    for (const EvalReport::PositionSlice& row : report.per_position) {
      json entry;
      entry["position"] = row.position;
      entry["vote_count"] = row.vote_count;
      entry["cf_accuracy"] = row.cf_accuracy;
      entry["mean_log_prob"] = row.mean_log_prob;
      positions.push_back(std::move(entry));
    }
    doc["per_position"] = std::move(positions);
  }
  out << doc.dump(1, '\t') << '\n';
}

}  // namespace nextvote
