#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nextvote/cases.hpp"
#include "nextvote/detail/parallel.hpp"

namespace nextvote {

// Latent-class naive Bayes over bag-of-votes cases:
//   P(class c, votes x) = prior[c] * prod_k item_prob[c][k]^x_k (1-item_prob[c][k])^(1-x_k)
struct ClusterModel {
  std::vector<double> prior;                   // P(C = c), sums to 1
  std::vector<std::vector<double>> item_prob;  // [class][item-1] = P(x_k = 1 | c), in (0,1)

  int32_t class_count() const { return static_cast<int32_t>(prior.size()); }
  int32_t item_count() const { return prior.empty() ? 0 : static_cast<int32_t>(item_prob[0].size()); }
};

struct EMConfig {
  int32_t class_count = 5;
  int32_t max_iterations = 200;
  double tolerance = 1e-6;  // stop once the per-iteration log-likelihood gain drops below this
  uint64_t seed = 0;
  double smoothing = 1.0;  // pseudo-count added in the M-step; must stay positive
  int32_t restarts = 1;
  int32_t threads = 1;
};

// Per-restart training curves, for convergence diagnostics and tests.
struct EMTrace {
  // loglik[r][t]: data log-likelihood of the parameters entering iteration t of restart r.
  std::vector<std::vector<double>> loglik;
  // penalized[r][t]: loglik plus the pseudo-count parameter prior that the smoothed
  // M-step maximizes; this is the quantity EM improves monotonically.
  std::vector<std::vector<double>> penalized;
  int32_t best_restart = 0;
};

namespace detail {

// Per-class quantities reused across cases: log prior, sum of ln(1-p) over all
// items, and per-item log odds, so one case costs O(classes * positives).
struct ClusterWorkspace {
  std::vector<double> log_prior;
  std::vector<double> all_negative;          // [c] = sum_k ln(1 - p_ck)
  std::vector<std::vector<double>> log_odds;  // [c][k-1] = ln p_ck - ln(1 - p_ck)

  explicit ClusterWorkspace(const ClusterModel& model) {
    const auto classes = static_cast<size_t>(model.class_count());
    log_prior.resize(classes);
    all_negative.assign(classes, 0.0);
    log_odds.resize(classes);
    for (size_t c = 0; c < classes; ++c) {
      log_prior[c] = std::log(model.prior[c]);
      log_odds[c].resize(model.item_prob[c].size());
      for (size_t k = 0; k < model.item_prob[c].size(); ++k) {
        const double p = model.item_prob[c][k];
        all_negative[c] += std::log1p(-p);
        log_odds[c][k] = std::log(p) - std::log1p(-p);
      }
    }
  }

  // ln P(C=c, case) for every class.
  void class_log_joint(const BinaryCase& bag_case, std::vector<double>& out) const {
    const size_t classes = log_prior.size();
    out.resize(classes);
    for (size_t c = 0; c < classes; ++c) {
      double lw = log_prior[c] + all_negative[c];
      for (int32_t k : bag_case.positives) lw += log_odds[c][static_cast<size_t>(k)];
      out[c] = lw;
    }
  }
};

inline double log_sum_exp(const std::vector<double>& values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  double sum = 0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

inline void require_bag_space(const CaseSet& data) {
  if (data.space.kind() != VariableSpace::Kind::bag)
    throw std::invalid_argument("cluster model requires bag-of-votes cases");
}

// The parameter-prior term matching the smoothed M-step (Dirichlet/Beta
// pseudo-counts); EM on the smoothed updates ascends loglik plus this.
inline double smoothing_penalty(const ClusterModel& model, double smoothing) {
  double penalty = 0;
  for (double pi : model.prior) penalty += smoothing * std::log(pi);
  for (const std::vector<double>& row : model.item_prob)
    for (double p : row) penalty += smoothing * (std::log(p) + std::log1p(-p));
  return penalty;
}

}  // namespace detail

// Total data log-likelihood: sum over cases of ln sum_c P(C=c, case).
inline double cluster_loglik(const ClusterModel& model, const CaseSet& data) {
  detail::require_bag_space(data);
  const detail::ClusterWorkspace ws(model);
  double total = 0;
  std::vector<double> lw;
  for (const BinaryCase& c : data.cases) {
    ws.class_log_joint(c, lw);
    total += detail::log_sum_exp(lw);
  }
  return total;
}

// EM fit over bag cases. Deterministic given the config: initialization draws
// from the seed alone, the E-step writes per-case rows, and every reduction
// runs in case order regardless of thread count.
inline ClusterModel em_fit(const CaseSet& data, const EMConfig& cfg, EMTrace* trace = nullptr) {
  detail::require_bag_space(data);
  if (cfg.class_count < 1) throw std::invalid_argument("class count must be >= 1");
  if (!(cfg.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
  if (!(cfg.smoothing > 0)) throw std::invalid_argument("smoothing must be positive");
  if (cfg.max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
  if (cfg.restarts < 1) throw std::invalid_argument("restart count must be >= 1");
  if (data.cases.empty()) throw DataError("cannot fit a cluster model to an empty case set");

  const auto n = static_cast<int64_t>(data.cases.size());
  const auto classes = static_cast<size_t>(cfg.class_count);
  const auto gamma = static_cast<size_t>(data.space.item_count());
  const double s = cfg.smoothing;

  std::mt19937_64 seeder(cfg.seed);
  ClusterModel best;
  double best_loglik = -std::numeric_limits<double>::infinity();
  if (trace) *trace = EMTrace{};

  for (int32_t restart = 0; restart < cfg.restarts; ++restart) {
    // Responsibilities start as a seeded perturbation of uniform; the engine
    // bits are mapped to doubles directly so every platform draws alike.
    std::mt19937_64 rng(seeder());
    std::vector<std::vector<double>> resp(static_cast<size_t>(n), std::vector<double>(classes));
    for (auto& row : resp) {
      double total = 0;
      for (double& r : row) {
        r = 1.0 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
        total += r;
      }
      for (double& r : row) r /= total;
    }

    ClusterModel model;
    model.prior.assign(classes, 0.0);
    model.item_prob.assign(classes, std::vector<double>(gamma, 0.0));
    auto m_step = [&] {
      std::vector<double> class_weight(classes, 0.0);
      std::vector<std::vector<double>> item_weight(classes, std::vector<double>(gamma, 0.0));
      for (int64_t i = 0; i < n; ++i) {
        const std::vector<double>& row = resp[static_cast<size_t>(i)];
        for (size_t c = 0; c < classes; ++c) class_weight[c] += row[c];
        for (int32_t k : data.cases[static_cast<size_t>(i)].positives)
          for (size_t c = 0; c < classes; ++c) item_weight[c][static_cast<size_t>(k)] += row[c];
      }
      const double nd = static_cast<double>(n);
      for (size_t c = 0; c < classes; ++c) {
        model.prior[c] = (class_weight[c] + s) / (nd + static_cast<double>(classes) * s);
        for (size_t k = 0; k < gamma; ++k)
          model.item_prob[c][k] = (item_weight[c][static_cast<size_t>(k)] + s) / (class_weight[c] + 2.0 * s);
      }
    };
    m_step();

    std::vector<double> loglik_curve, penalized_curve;
    std::vector<double> case_loglik(static_cast<size_t>(n));
    double previous = -std::numeric_limits<double>::infinity();
    for (int32_t iteration = 0; iteration < cfg.max_iterations; ++iteration) {
      const detail::ClusterWorkspace ws(model);
      detail::parallel_for(n, cfg.threads, [&](int64_t i) {
        std::vector<double>& row = resp[static_cast<size_t>(i)];
        ws.class_log_joint(data.cases[static_cast<size_t>(i)], row);
        const double lse = detail::log_sum_exp(row);
        case_loglik[static_cast<size_t>(i)] = lse;
        for (double& r : row) r = std::exp(r - lse);
      });
      double loglik = 0;
      for (int64_t i = 0; i < n; ++i) loglik += case_loglik[static_cast<size_t>(i)];
      loglik_curve.push_back(loglik);
      penalized_curve.push_back(loglik + detail::smoothing_penalty(model, s));
      if (iteration > 0 && loglik - previous < cfg.tolerance) break;
      previous = loglik;
      if (iteration + 1 == cfg.max_iterations) break;
      m_step();
    }

    const double final_loglik = loglik_curve.back();
    if (final_loglik > best_loglik) {
      best_loglik = final_loglik;
      best = model;
      if (trace) trace->best_restart = restart;
    }
    if (trace) {
      trace->loglik.push_back(std::move(loglik_curve));
      trace->penalized.push_back(std::move(penalized_curve));
    }
  }
  return best;
}

// P(x_j = 1 | all other bag variables), leaving item j's own evidence out of
// the class posterior: P(c | evidence_{-j}) is proportional to
// prior[c] * prod_{k != j} P(x_k = e_k | c).
inline double cluster_predict(const ClusterModel& model, const BinaryCase& evidence, int32_t item) {
  if (item < 1 || item > model.item_count()) throw std::invalid_argument("item index outside [1, gamma]");
  const detail::ClusterWorkspace ws(model);
  std::vector<double> lw;
  ws.class_log_joint(evidence, lw);
  const auto j = static_cast<size_t>(item - 1);
  const bool j_positive = evidence.contains(item - 1);
  std::vector<double> numerator(lw.size()), denominator(lw.size());
  for (size_t c = 0; c < lw.size(); ++c) {
    const double p = model.item_prob[c][j];
    const double own = j_positive ? std::log(p) : std::log1p(-p);
    denominator[c] = lw[c] - own;
    numerator[c] = denominator[c] + std::log(p);
  }
  return std::exp(detail::log_sum_exp(numerator) - detail::log_sum_exp(denominator));
}

// All gamma leave-one-out predictions at once; O(classes * gamma) after the
// shared evidence pass.
inline std::vector<double> cluster_predict_all(const ClusterModel& model, const BinaryCase& evidence) {
  const detail::ClusterWorkspace ws(model);
  std::vector<double> lw;
  ws.class_log_joint(evidence, lw);
  const auto gamma = static_cast<size_t>(model.item_count());
  std::vector<double> out(gamma);
  std::vector<double> numerator(lw.size()), denominator(lw.size());
  for (size_t j = 0; j < gamma; ++j) {
    const bool j_positive = evidence.contains(static_cast<int32_t>(j));
    for (size_t c = 0; c < lw.size(); ++c) {
      const double p = model.item_prob[c][j];
      const double own = j_positive ? std::log(p) : std::log1p(-p);
      denominator[c] = lw[c] - own;
      numerator[c] = denominator[c] + std::log(p);
    }
    out[j] = std::exp(detail::log_sum_exp(numerator) - detail::log_sum_exp(denominator));
  }
  return out;
}

// Class posterior P(c | full evidence); rows sum to 1.
inline std::vector<double> cluster_responsibilities(const ClusterModel& model,
                                                    const BinaryCase& evidence) {
  const detail::ClusterWorkspace ws(model);
  std::vector<double> lw;
  ws.class_log_joint(evidence, lw);
  const double lse = detail::log_sum_exp(lw);
  for (double& v : lw) v = std::exp(v - lse);
  return lw;
}

}  // namespace nextvote
