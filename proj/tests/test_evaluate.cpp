#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "train_helpers.hpp"

#include <nextvote/evaluate.hpp>

using namespace nextvote;

namespace {

DecisionTree single_leaf(int32_t target, int64_t n1, int64_t n0) {
  DecisionTree tree;
  tree.target = target;
  tree.nodes.push_back(TreeNode{-1, -1, -1, n1, n0});
  return tree;
}

ItemCatalog numbered_catalog(int32_t gamma) {
  ItemCatalog catalog;
  for (int32_t k = 1; k <= gamma; ++k) catalog.add("i" + std::to_string(k));
  return catalog;
}

TrainedModel leaf_model(const std::vector<std::pair<int64_t, int64_t>>& counts) {
  TrainedModel model;
  model.catalog = numbered_catalog(static_cast<int32_t>(counts.size()));
  Forest forest{VariableSpace::bag(static_cast<int32_t>(counts.size())), {}};
  for (size_t k = 0; k < counts.size(); ++k)
    forest.trees.push_back(single_leaf(static_cast<int32_t>(k), counts[k].first, counts[k].second));
  model.family = BaselineModel{std::move(forest)};
  return model;
}

SessionDataset make_dataset(int32_t gamma, const std::vector<std::vector<int32_t>>& sessions) {
  SessionDataset data;
  data.catalog = numbered_catalog(gamma);
  for (const std::vector<int32_t>& votes : sessions) {
    data.histories.push_back(VoteHistory{votes});
    data.total_votes += static_cast<int64_t>(votes.size());
  }
  return data;
}

SessionDataset random_dataset(int32_t gamma, int sessions, int max_len, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int32_t>> rows;
  for (int i = 0; i < sessions; ++i) {
    std::vector<int32_t> votes(1 + rng() % max_len);
    for (int32_t& v : votes) v = 1 + static_cast<int32_t>(rng() % gamma);
    rows.push_back(std::move(votes));
  }
  return make_dataset(gamma, rows);
}

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  write_report_text(report, out);
  return out.str();
}

}  // namespace

TEST_CASE("halflife weights halve every alpha positions") {
  CHECK(halflife_weight(0, 10.0) == 1.0);
  CHECK(halflife_weight(10, 10.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(halflife_weight(20, 10.0) == Catch::Approx(0.25).margin(1e-15));
  CHECK(halflife_weight(5, 10.0) == Catch::Approx(std::exp2(-0.5)).margin(1e-15));
  CHECK(halflife_weight(3, 3.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK_THROWS_AS(halflife_weight(-1, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(halflife_weight(0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(halflife_weight(0, -2.0), std::invalid_argument);
}

TEST_CASE("ranked-list utility accuracy fixtures") {
  const double alpha = 10.0;
  SECTION("a perfect list scores 1") {
    const RankedListOutcome user{{0}, 5, 1};
    CHECK(cf_accuracy_list(std::vector{user}, alpha) == Catch::Approx(1.0).margin(1e-15));
    const RankedListOutcome both{{0, 1}, 5, 2};
    CHECK(cf_accuracy_list(std::vector{both}, alpha) == Catch::Approx(1.0).margin(1e-15));
  }
  SECTION("a perfect user and a complete miss average to one half") {
    const std::vector<RankedListOutcome> users{{{0}, 4, 1}, {{}, 4, 1}};
    CHECK(cf_accuracy_list(users, alpha) == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("a single deep hit decays by the halflife curve") {
    const std::vector<RankedListOutcome> users{{{5}, 20, 1}};
    CHECK(cf_accuracy_list(users, alpha) == Catch::Approx(std::exp2(-0.5)).margin(1e-15));
  }
  SECTION("degenerate inputs are rejected") {
    CHECK_THROWS_AS(cf_accuracy_list(std::vector<RankedListOutcome>{}, alpha), DataError);
    CHECK_THROWS_AS(cf_accuracy_list(std::vector<RankedListOutcome>{{{0}, 4, 0}}, alpha), DataError);
    CHECK_THROWS_AS(cf_accuracy_list(std::vector<RankedListOutcome>{{{0}, 0, 1}}, alpha), DataError);
    CHECK_THROWS_AS(cf_accuracy_list(std::vector<RankedListOutcome>{{{4}, 4, 1}}, alpha), DataError);
    CHECK_THROWS_AS(cf_accuracy_list(std::vector<RankedListOutcome>{{{-1}, 4, 1}}, alpha), DataError);
  }
}

TEST_CASE("per-vote accuracy equals the one-preferred-item ranked-list utility") {
  std::mt19937_64 rng(321);
  int64_t votes_checked = 0;
  for (int round = 0; round < 10; ++round) {
    const int32_t gamma = 4 + static_cast<int32_t>(rng() % 5);
    std::vector<std::pair<int64_t, int64_t>> counts;
    for (int32_t k = 0; k < gamma; ++k)
      counts.emplace_back(static_cast<int64_t>(rng() % 10), static_cast<int64_t>(rng() % 10));
    const TrainedModel model = leaf_model(counts);
    const SessionDataset test = random_dataset(gamma, 6, 4, 400 + round);
    const double alpha = round % 2 == 0 ? 10.0 : 5.5;

    // reference: one ranked list per vote, exactly one preferred item
    std::vector<RankedListOutcome> lists;
    for (const VoteHistory& history : test.histories)
      for (int32_t j = 0; j < history.length(); ++j) {
        const std::span<const int32_t> prefix(history.votes.data(), static_cast<size_t>(j));
        const Prediction prediction = predict_next(model, prefix);
        lists.push_back({{prediction.rank_of(history.votes[static_cast<size_t>(j)]) - 1}, gamma, 1});
      }
    votes_checked += static_cast<int64_t>(lists.size());

    EvalConfig cfg;
    cfg.alpha = alpha;
    const EvalReport report = evaluate(model, test, cfg);
    CHECK(std::abs(report.cf_accuracy - cf_accuracy_list(lists, alpha)) < 1e-12);
    CHECK(report.vote_count == static_cast<int64_t>(lists.size()));
  }
  CHECK(votes_checked >= 100);
}

TEST_CASE("ranking first everywhere scores exactly one") {
  // constant scores tie; ties rank ascending, so item 1 is always first
  const TrainedModel model = leaf_model({{0, 0}, {0, 0}, {0, 0}});
  const SessionDataset test = make_dataset(3, {{1}, {1, 1}, {1, 1, 1}});
  const EvalReport report = evaluate(model, test);
  CHECK(report.cf_accuracy == 1.0);
}

TEST_CASE("an evidence-free model is uniform and scores ln(1/gamma)") {
  SECTION("five items") {
    const TrainedModel model = leaf_model(std::vector<std::pair<int64_t, int64_t>>(5, {0, 0}));
    const SessionDataset test = random_dataset(5, 8, 5, 9);
    CHECK(std::abs(evaluate(model, test).mean_log_prob - std::log(1.0 / 5.0)) < 1e-12);
  }
  SECTION("a thousand and one items") {
    const TrainedModel model = leaf_model(std::vector<std::pair<int64_t, int64_t>>(1001, {0, 0}));
    const SessionDataset test = random_dataset(1001, 5, 4, 10);
    CHECK(std::abs(evaluate(model, test).mean_log_prob - std::log(1.0 / 1001.0)) < 1e-12);
  }
}

TEST_CASE("session and vote bookkeeping") {
  const TrainedModel model = leaf_model({{8, 0}, {0, 8}});
  const SessionDataset test = make_dataset(2, {{1}, {2, 2}});
  const double w = std::exp2(-0.1);  // contribution of a rank-2 vote at alpha 10

  const EvalReport report = evaluate(model, test);
  CHECK(report.session_count == 2);
  CHECK(report.vote_count == 3);
  CHECK(report.alpha == 10.0);
  // votes: item 1 ranked first; item 2 ranked second twice
  CHECK(report.cf_accuracy == Catch::Approx((1.0 + w + w) / 3.0).margin(1e-12));
  CHECK(report.mean_log_prob ==
        Catch::Approx((std::log(0.9) + 2 * std::log(0.1)) / 3.0).margin(1e-12));

  SECTION("session-level aggregation averages per-session utility ratios") {
    EvalConfig cfg;
    cfg.per_vote = false;
    const EvalReport by_session = evaluate(model, test, cfg);
    const double ratio_second = (w + w) / (1.0 + w);  // both votes ranked second
    CHECK(by_session.cf_accuracy == Catch::Approx((1.0 + ratio_second) / 2.0).margin(1e-12));
    CHECK(by_session.mean_log_prob == Catch::Approx(report.mean_log_prob).margin(1e-15));
  }
  SECTION("per-position breakdown") {
    EvalConfig cfg;
    cfg.per_position = true;
    const EvalReport detailed = evaluate(model, test, cfg);
    REQUIRE(detailed.per_position.size() == 2);
    CHECK(detailed.per_position[0].position == 1);
    CHECK(detailed.per_position[0].vote_count == 2);
    CHECK(detailed.per_position[0].cf_accuracy == Catch::Approx((1.0 + w) / 2.0).margin(1e-12));
    CHECK(detailed.per_position[1].position == 2);
    CHECK(detailed.per_position[1].vote_count == 1);
    CHECK(detailed.per_position[1].cf_accuracy == Catch::Approx(w).margin(1e-12));
    CHECK(report.per_position.empty());  // only on request
  }
}

TEST_CASE("binned evaluation routes votes by prefix length") {
  TrainedModel model;
  model.catalog = numbered_catalog(2);
  BinnedModel binned;
  binned.scheme.bounds = {{1, 2}, {3, BinScheme::kNoUpperBound}};
  for (int b = 0; b < 2; ++b) {
    Forest forest{VariableSpace::bag(2), {}};
    forest.trees = {single_leaf(0, b == 0 ? 5 : 0, 5), single_leaf(1, 5, b == 0 ? 5 : 0)};
    binned.forests.push_back(std::move(forest));
  }
  model.family = std::move(binned);

  // prefix lengths 0,1,2 route to bin 0; length 3 routes to bin 1
  const SessionDataset test = make_dataset(2, {{1}, {1, 2}, {1, 2, 1, 2}});
  const EvalReport report = evaluate(model, test);
  REQUIRE(report.submodels.size() == 2);
  CHECK(report.submodels[0].vote_count == 6);
  CHECK(report.submodels[1].vote_count == 1);
  CHECK(report.submodels[0].vote_count + report.submodels[1].vote_count == report.vote_count);
}

TEST_CASE("evaluation validates its inputs") {
  const TrainedModel model = leaf_model({{1, 1}, {1, 1}});
  CHECK_THROWS_AS(evaluate(model, make_dataset(2, {})), DataError);
  EvalConfig bad;
  bad.alpha = 0;
  CHECK_THROWS_AS(evaluate(model, make_dataset(2, {{1}}), bad), std::invalid_argument);
  // an out-of-catalog vote in the test corpus surfaces as a data error
  CHECK_THROWS_AS(evaluate(model, make_dataset(2, {{1, 7}})), DataError);
}

TEST_CASE("report serialization is stable") {
  const TrainedModel model = leaf_model({{8, 0}, {0, 8}});
  const SessionDataset test = make_dataset(2, {{1}, {2, 2}});
  const EvalReport report = evaluate(model, test);

  SECTION("text form is fixed field-by-field") {
    const std::string text = report_text(report);
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line.rfind("cf_accuracy ", 0) == 0);
    std::getline(lines, line);
    CHECK(line.rfind("mean_log_prob ", 0) == 0);
    std::getline(lines, line);
    CHECK(line == "vote_count 3");
    std::getline(lines, line);
    CHECK(line == "session_count 2");
    std::getline(lines, line);
    CHECK(line == "alpha 10");
    std::getline(lines, line);
    CHECK(line == "submodel_count 1");
    std::getline(lines, line);
    CHECK(line == "submodel.0.vote_count 3");
  }
  SECTION("json form carries the same numbers") {
    std::ostringstream out;
    write_report_json(report, out);
    const nlohmann::json doc = nlohmann::json::parse(out.str());
    CHECK(doc.at("cf_accuracy").get<double>() == report.cf_accuracy);
    CHECK(doc.at("mean_log_prob").get<double>() == report.mean_log_prob);
    CHECK(doc.at("vote_count").get<int64_t>() == 3);
    CHECK(doc.at("session_count").get<int64_t>() == 2);
    CHECK(doc.at("submodels").size() == 1);
    CHECK(!doc.contains("per_position"));
  }
}

TEST_CASE("thread count never changes a report") {
  const SessionDataset train = random_dataset(5, 60, 8, 13);
  const SessionDataset test = random_dataset(5, 25, 8, 14);
  for (int family = 0; family < 3; ++family) {
    TrainedModel model;
    if (family == 0) model = helpers::train_baseline(train);
    if (family == 1) model = helpers::train_binned(train, 2);
    if (family == 2) model = helpers::train_expanded(train, 2);
    EvalConfig serial;
    serial.per_position = true;
    EvalConfig threaded = serial;
    threaded.threads = 4;
    CHECK(report_text(evaluate(model, test, serial)) ==
          report_text(evaluate(model, test, threaded)));
  }
}

TEST_CASE("a single-bin model reports byte-identically to the baseline") {
  const SessionDataset train = random_dataset(6, 80, 9, 15);
  const SessionDataset test = random_dataset(6, 30, 9, 16);
  const EvalReport baseline = evaluate(helpers::train_baseline(train), test);
  const EvalReport one_bin = evaluate(helpers::train_binned(train, 1), test);
  CHECK(report_text(baseline) == report_text(one_bin));
}
