// End-to-end library walkthrough: ingest a session corpus, split it, train a
// lag-features model, score it on the held-out sessions, and print the items
// most likely to follow a short prefix.

#include <fstream>
#include <iostream>

#include <nextvote/nextvote.hpp>

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : "sessions.txt";
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << '\n';
    return 1;
  }
  const nextvote::SessionDataset data = nextvote::parse_sessions(in);
  const nextvote::CorpusStats stats = nextvote::corpus_stats(data);
  std::cout << data.session_count() << " sessions over " << data.catalog.item_count()
            << " items, mean length " << stats.mean_length << '\n';

  nextvote::SplitSpec split;
  split.test_fraction = 0.25;
  split.seed = 7;
  const auto [train, test] = nextvote::split_train_test(data, split);

  nextvote::TrainedModel model;
  model.catalog = train.catalog;
  nextvote::ExpandedModel expanded;
  expanded.scheme.history_length = 1;
  expanded.forest = nextvote::learn_forest(nextvote::expand_dataset(train, expanded.scheme),
                                           model.score);
  model.family = std::move(expanded);

  const nextvote::EvalReport report = nextvote::evaluate(model, test);
  std::cout << "held-out accuracy " << report.cf_accuracy << ", mean log-probability "
            << report.mean_log_prob << " over " << report.vote_count << " votes\n";

  const std::vector<int32_t> prefix{data.catalog.index_of("news").value_or(1)};
  std::cout << "after '" << data.catalog.token_of(prefix[0]) << "':\n";
  for (const nextvote::Recommendation& pick : nextvote::recommend(model, prefix, 3))
    std::cout << "  " << data.catalog.token_of(pick.item) << "  " << pick.probability << '\n';
  return 0;
}
