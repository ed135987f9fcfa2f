// Command-line front end: train/evaluate/recommend/stats over session corpora.
// Exit codes: 0 success, 1 usage, 2 data error, 3 model/catalog mismatch.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <nextvote/nextvote.hpp>

namespace {

struct Options {
  std::string transform = "bag";
  int32_t bins = 2;
  bool no_prefix = false;
  int32_t history_len = 1;
  double kappa = 0.01;
  int32_t classes = 5;
  double alpha = 10.0;
  uint64_t seed = 0;
  int32_t threads = 1;
  std::string train_path, test_path, model_path, report_path;
  int32_t top = 10;
  bool exclude_seen = false;
  bool per_position = false;
  std::vector<std::string> prefix_tokens;
};

nextvote::SessionDataset read_sessions_file(const std::string& path,
                                            nextvote::ItemCatalog catalog = {},
                                            nextvote::CatalogMode mode = nextvote::CatalogMode::extend) {
  std::ifstream in(path);
  if (!in) throw nextvote::DataError("cannot open session file '" + path + "'");
  return nextvote::parse_sessions(in, std::move(catalog), mode);
}

nextvote::TrainedModel read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nextvote::DataError("cannot open model file '" + path + "'");
  return nextvote::load_model(in);
}

int run_train(const Options& opt) {
  const nextvote::SessionDataset data = read_sessions_file(opt.train_path);
  const nextvote::ScoreParams score{opt.kappa};

  nextvote::TrainedModel model;
  model.catalog = data.catalog;
  model.score = score;
  std::cout << "transform " << opt.transform << '\n';
  std::cout << "sessions " << data.session_count() << '\n';
  std::cout << "items " << data.catalog.item_count() << '\n';

  if (opt.transform == "bag") {
    const nextvote::CaseSet cases = nextvote::bag_dataset(data);
    std::cout << "cases " << cases.case_count() << '\n';
    nextvote::BaselineModel baseline{nextvote::learn_forest(cases, score, opt.threads)};
    std::cout << "total_leaves " << baseline.forest.total_leaves() << '\n';
    model.family = std::move(baseline);
  } else if (opt.transform == "bin") {
    nextvote::BinnedModel binned;
    binned.scheme = nextvote::compute_bin_bounds(data, opt.bins, !opt.no_prefix);
    const std::vector<nextvote::CaseSet> bins = nextvote::bin_assign(data, binned.scheme);
    int64_t leaves = 0;
    for (size_t b = 0; b < bins.size(); ++b) {
      const nextvote::BinScheme::Interval& bound = binned.scheme.bounds[b];
      std::cout << "bin." << b << ".lo " << bound.lo << '\n';
      std::cout << "bin." << b << ".hi " << bound.hi << '\n';
      std::cout << "bin." << b << ".cases " << bins[b].case_count() << '\n';
      binned.forests.push_back(nextvote::learn_forest(bins[b], score, opt.threads));
      leaves += binned.forests.back().total_leaves();
    }
    std::cout << "total_leaves " << leaves << '\n';
    model.family = std::move(binned);
  } else if (opt.transform == "expand") {
    nextvote::ExpandedModel expanded;
    expanded.scheme.history_length = opt.history_len;
    const nextvote::CaseSet cases = nextvote::expand_dataset(data, expanded.scheme);
    std::cout << "cases " << cases.case_count() << '\n';
    expanded.forest = nextvote::learn_forest(cases, score, opt.threads);
    std::cout << "total_leaves " << expanded.forest.total_leaves() << '\n';
    model.family = std::move(expanded);
  } else {  // cluster
    const nextvote::CaseSet cases = nextvote::bag_dataset(data);
    std::cout << "cases " << cases.case_count() << '\n';
    nextvote::EMConfig cfg;
    cfg.class_count = opt.classes;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    nextvote::EMTrace trace;
    nextvote::ClusterModel cluster = nextvote::em_fit(cases, cfg, &trace);
    std::cout << "classes " << cluster.class_count() << '\n';
    std::cout << "em_iterations "
              << trace.loglik[static_cast<size_t>(trace.best_restart)].size() << '\n';
    std::cout << "em_loglik "
              << nextvote::detail::format_real(
                     trace.loglik[static_cast<size_t>(trace.best_restart)].back())
              << '\n';
    model.family = std::move(cluster);
  }

  std::ofstream out(opt.model_path);
  if (!out) throw nextvote::DataError("cannot write model file '" + opt.model_path + "'");
  nextvote::save_model(model, out);
  return 0;
}

int run_evaluate(const Options& opt) {
  const nextvote::TrainedModel model = read_model_file(opt.model_path);
  const nextvote::SessionDataset test =
      read_sessions_file(opt.test_path, model.catalog, nextvote::CatalogMode::frozen);
  nextvote::EvalConfig cfg;
  cfg.alpha = opt.alpha;
  cfg.threads = opt.threads;
  cfg.per_position = opt.per_position;
  const nextvote::EvalReport report = nextvote::evaluate(model, test, cfg);
  nextvote::write_report_text(report, std::cout);
  if (!opt.report_path.empty()) {
    std::ofstream out(opt.report_path);
    if (!out) throw nextvote::DataError("cannot write report file '" + opt.report_path + "'");
    nextvote::write_report_json(report, out);
  }
  return 0;
}

int run_recommend(const Options& opt) {
  const nextvote::TrainedModel model = read_model_file(opt.model_path);
  std::vector<int32_t> prefix;
  prefix.reserve(opt.prefix_tokens.size());
  for (const std::string& token : opt.prefix_tokens) {
    const auto index = model.catalog.index_of(token);
    if (!index)
      throw nextvote::CatalogMismatchError("token '" + token + "' not in the model's catalog");
    prefix.push_back(*index);
  }
  const int32_t top = std::min(opt.top, model.catalog.item_count());
  const std::vector<nextvote::Recommendation> picks =
      nextvote::recommend(model, prefix, top, opt.exclude_seen);
  for (size_t at = 0; at < picks.size(); ++at)
    std::cout << (at + 1) << ' ' << model.catalog.token_of(picks[at].item) << ' '
              << nextvote::detail::format_real(picks[at].probability) << '\n';
  return 0;
}

int run_stats(const Options& opt) {
  const nextvote::SessionDataset data = read_sessions_file(opt.train_path);
  const nextvote::CorpusStats stats = nextvote::corpus_stats(data);
  std::cout << "sessions " << stats.session_count << '\n';
  std::cout << "items " << data.catalog.item_count() << '\n';
  std::cout << "total_votes " << stats.total_votes << '\n';
  std::cout << "mean_length " << nextvote::detail::format_real(stats.mean_length) << '\n';
  std::cout << "median_length " << nextvote::detail::format_real(stats.median_length) << '\n';
  std::cout << "max_length " << stats.max_length << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Next-vote prediction over session traces"};
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand("train", "Train a model and write a model document");
  train->add_option("--train", opt.train_path, "Training session file")->required();
  train->add_option("--model", opt.model_path, "Output model document")->required();
  CLI::Option* transform =
      train->add_option("--transform", opt.transform, "Model family: bag, bin, expand, or cluster")
          ->check(CLI::IsMember({"bag", "bin", "expand", "cluster"}));
  CLI::Option* bins_opt =
      train->add_option("--bins", opt.bins, "Length-bin count")->check(CLI::Range(1, 1000000));
  CLI::Option* no_prefix_opt = train->add_flag(
      "--no-prefix", opt.no_prefix, "Do not replicate truncated histories into earlier bins");
  CLI::Option* history_opt = train->add_option("--history-len", opt.history_len,
                                               "Lag window for the expanded family")
                                 ->check(CLI::Range(1, 1000000));
  train->add_option("--kappa", opt.kappa, "Per-leaf structure penalty factor")
      ->check(CLI::Range(1e-300, 1.0));
  CLI::Option* classes_opt = train->add_option("--classes", opt.classes,
                                               "Latent class count for the cluster family")
                                 ->check(CLI::Range(1, 1000000));
  train->add_option("--seed", opt.seed, "Random seed");
  train->add_option("--threads", opt.threads, "Worker thread count")->check(CLI::Range(1, 4096));

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a model on held-out sessions");
  evaluate->add_option("--model", opt.model_path, "Model document")->required();
  evaluate->add_option("--test", opt.test_path, "Test session file")->required();
  evaluate->add_option("--report", opt.report_path, "Write the report as JSON to this path");
  evaluate->add_option("--alpha", opt.alpha, "Rank half-life")->check(CLI::PositiveNumber);
  evaluate->add_option("--threads", opt.threads, "Worker thread count")->check(CLI::Range(1, 4096));
  evaluate->add_flag("--per-position", opt.per_position, "Include a per-vote-position breakdown");

  CLI::App* recommend = app.add_subcommand("recommend", "Rank items to follow a vote prefix");
  recommend->add_option("--model", opt.model_path, "Model document")->required();
  recommend->add_option("--top", opt.top, "Number of items to print")->check(CLI::Range(1, 1 << 30));
  recommend->add_flag("--exclude-seen", opt.exclude_seen, "Skip items already in the prefix");
  recommend->add_option("prefix", opt.prefix_tokens, "Vote history so far, oldest first");

  CLI::App* stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("--train", opt.train_path, "Session file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 1;
  }

  // Family-specific flags only make sense with their family.
  if (train->parsed()) {
    const bool is_bin = opt.transform == "bin";
    const bool is_expand = opt.transform == "expand";
    const bool is_cluster = opt.transform == "cluster";
    if ((bins_opt->count() > 0 || no_prefix_opt->count() > 0) && !is_bin) {
      std::cerr << "usage error: --bins/--no-prefix require --transform bin\n";
      return 1;
    }
    if (history_opt->count() > 0 && !is_expand) {
      std::cerr << "usage error: --history-len requires --transform expand\n";
      return 1;
    }
    if (classes_opt->count() > 0 && !is_cluster) {
      std::cerr << "usage error: --classes requires --transform cluster\n";
      return 1;
    }
    (void)transform;
  }

  try {
    if (train->parsed()) return run_train(opt);
    if (evaluate->parsed()) return run_evaluate(opt);
    if (recommend->parsed()) return run_recommend(opt);
    return run_stats(opt);
  } catch (const nextvote::CatalogMismatchError& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 3;
  } catch (const nextvote::DataError& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& error) {
    std::cerr << "usage error: " << error.what() << '\n';
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 2;
  }
}
