#include <random>
#include <sstream>

#include "catch_amalgamated.hpp"

#include <nextvote/catalog.hpp>

using namespace nextvote;

namespace {

SessionDataset parse_text(const std::string& text, ItemCatalog catalog = {},
                          CatalogMode mode = CatalogMode::extend) {
  std::istringstream in(text);
  return parse_sessions(in, std::move(catalog), mode);
}

ItemCatalog numbered_catalog(int32_t count) {
  ItemCatalog catalog;
  for (int32_t k = 1; k <= count; ++k) catalog.add(std::to_string(k));
  return catalog;
}

}  // namespace

TEST_CASE("catalog assigns dense 1-based indices and stays an inverse pair") {
  ItemCatalog catalog;
  CHECK(catalog.add("alpha") == 1);
  CHECK(catalog.add("beta") == 2);
  CHECK(catalog.add("alpha") == 1);  // existing token keeps its index
  CHECK(catalog.item_count() == 2);
  CHECK(catalog.token_of(1) == "alpha");
  CHECK(catalog.token_of(2) == "beta");
  CHECK(catalog.index_of("beta") == 2);
  CHECK_FALSE(catalog.index_of("gamma").has_value());
  CHECK_THROWS_AS(catalog.token_of(0), std::out_of_range);
  CHECK_THROWS_AS(catalog.token_of(3), std::out_of_range);
}

TEST_CASE("session lines parse in time order against a known catalog") {
  const SessionDataset data = parse_text("1 4\n", numbered_catalog(4), CatalogMode::frozen);
  REQUIRE(data.histories.size() == 1);
  CHECK(data.histories[0].votes == std::vector<int32_t>{1, 4});
}

TEST_CASE("total votes sum across sessions") {
  const SessionDataset data = parse_text("1 4\n2 4 1\n", numbered_catalog(4), CatalogMode::frozen);
  CHECK(data.session_count() == 2);
  CHECK(data.total_votes == 5);
}

TEST_CASE("comments and blank lines are skipped, unseen tokens extend the catalog") {
  const SessionDataset data = parse_text("# header\n\n  \t\nnews sports\n  # indented comment\nsports\n");
  CHECK(data.session_count() == 2);
  CHECK(data.catalog.item_count() == 2);
  CHECK(data.histories[0].votes == std::vector<int32_t>{1, 2});
  CHECK(data.histories[1].votes == std::vector<int32_t>{2});
}

TEST_CASE("a frozen catalog rejects unseen tokens") {
  CHECK_THROWS_AS(parse_text("1 9\n", numbered_catalog(4), CatalogMode::frozen),
                  CatalogMismatchError);
}

TEST_CASE("an input with no sessions is an error") {
  CHECK_THROWS_AS(parse_text(""), DataError);
  CHECK_THROWS_AS(parse_text("# only comments\n\n"), DataError);
}

TEST_CASE("every parsed index lies inside the catalog") {
  std::mt19937_64 rng(11);
  std::ostringstream corpus;
  for (int i = 0; i < 50; ++i) {
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int j = 0; j < len; ++j) corpus << "tok" << rng() % 17 << (j + 1 == len ? "" : " ");
    corpus << '\n';
  }
  const SessionDataset data = parse_text(corpus.str());
  for (const VoteHistory& history : data.histories) {
    REQUIRE(history.length() >= 1);
    for (int32_t v : history.votes) {
      CHECK(v >= 1);
      CHECK(v <= data.catalog.item_count());
    }
  }
}

TEST_CASE("write_sessions round-trips through the parser") {
  const SessionDataset data =
      parse_text("news sports news\nweather\nscores news\n");
  std::ostringstream out;
  write_sessions(data, out);
  const SessionDataset again = parse_text(out.str(), data.catalog, CatalogMode::frozen);
  REQUIRE(again.histories.size() == data.histories.size());
  for (size_t i = 0; i < data.histories.size(); ++i)
    CHECK(again.histories[i].votes == data.histories[i].votes);
  CHECK(again.total_votes == data.total_votes);
}

TEST_CASE("catalog files round-trip and reject malformed input") {
  ItemCatalog catalog;
  catalog.add("front page");
  catalog.add("sports");
  std::ostringstream out;
  write_catalog_file(catalog, out);
  CHECK(out.str() == "1\tfront page\n2\tsports\n");
  std::istringstream in(out.str());
  CHECK(read_catalog_file(in) == catalog);

  auto reject = [](const std::string& text) {
    std::istringstream bad(text);
    CHECK_THROWS_AS(read_catalog_file(bad), DataError);
  };
  reject("1 front\n");           // no tab
  reject("2\tfront\n");          // indices must start at 1
  reject("1\tfront\n3\tback\n");  // gap
  reject("x\tfront\n");          // malformed index
  reject("1\tfront\n2\tfront\n");  // duplicate token
  reject("1\t\n");               // empty token
}

TEST_CASE("train/test split has the requested sizes and is deterministic") {
  std::ostringstream corpus;
  for (int i = 0; i < 10; ++i) corpus << "a b c\n";
  const SessionDataset data = parse_text(corpus.str());
  SplitSpec spec;
  spec.test_fraction = 0.2;
  spec.seed = 42;

  const auto [train, test] = split_train_test(data, spec);
  CHECK(train.session_count() == 8);
  CHECK(test.session_count() == 2);
  CHECK(train.total_votes + test.total_votes == data.total_votes);
  CHECK(train.catalog == data.catalog);
  CHECK(test.catalog == data.catalog);

  const auto [train2, test2] = split_train_test(data, spec);
  CHECK(train2.histories.size() == train.histories.size());
  for (size_t i = 0; i < train.histories.size(); ++i)
    CHECK(train2.histories[i].votes == train.histories[i].votes);

  SplitSpec other = spec;
  other.seed = 43;
  const auto [train3, test3] = split_train_test(data, other);
  CHECK(train3.session_count() == 8);  // sizes are seed-independent
}

TEST_CASE("split partitions the sessions without loss") {
  std::ostringstream corpus;
  for (int i = 0; i < 25; ++i) corpus << "t" << i << '\n';  // distinct single-vote sessions
  const SessionDataset data = parse_text(corpus.str());
  SplitSpec spec;
  spec.test_fraction = 0.4;
  spec.seed = 7;
  const auto [train, test] = split_train_test(data, spec);
  std::vector<int32_t> seen;
  for (const VoteHistory& h : train.histories) seen.push_back(h.votes[0]);
  for (const VoteHistory& h : test.histories) seen.push_back(h.votes[0]);
  std::sort(seen.begin(), seen.end());
  std::vector<int32_t> expected(25);
  for (int i = 0; i < 25; ++i) expected[static_cast<size_t>(i)] = i + 1;
  CHECK(seen == expected);
}

TEST_CASE("degenerate split fractions are rejected") {
  const SessionDataset data = parse_text("a\nb\nc\nd\n");
  for (double fraction : {0.0, 1.0, -0.5, 1.5}) {
    SplitSpec spec;
    spec.test_fraction = fraction;
    CHECK_THROWS_AS(split_train_test(data, spec), DataError);
  }
  SplitSpec tiny;
  tiny.test_fraction = 0.01;  // rounds to an empty test side
  CHECK_THROWS_AS(split_train_test(data, tiny), DataError);
}

TEST_CASE("corpus statistics over history lengths") {
  SECTION("two sessions") {
    const CorpusStats stats = corpus_stats(parse_text("a b\na b c\n"));
    CHECK(stats.mean_length == 2.5);
    CHECK(stats.median_length == 2.5);
    CHECK(stats.max_length == 3);
    CHECK(stats.total_votes == 5);
    CHECK(stats.session_count == 2);
  }
  SECTION("single session of one vote") {
    const CorpusStats stats = corpus_stats(parse_text("x\n"));
    CHECK(stats.mean_length == 1.0);
    CHECK(stats.median_length == 1.0);
    CHECK(stats.max_length == 1);
  }
  SECTION("odd count takes the middle length") {
    const CorpusStats stats = corpus_stats(parse_text("a\na b\na b c d\n"));
    CHECK(stats.median_length == 2.0);
  }
}
