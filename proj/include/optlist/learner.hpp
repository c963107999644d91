#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optlist/optimizers.hpp"
#include "optlist/scoring.hpp"

namespace optlist {

// Ordered optimizer list learned from a validation cost matrix, plus the
// provenance needed to regenerate it.
struct HyperparameterList {
  std::vector<OptimizerConfig> entries;
  std::vector<std::string> entry_ids;
  std::vector<double> j_valid_trace;  // J after each prefix length
  Json provenance = Json::object();

  std::size_t k() const { return entries.size(); }
  Json to_json() const;
  static HyperparameterList from_json(const Json& j);
};

struct BestOfKCurve {
  std::vector<double> j_valid;  // index i -> prefix length i+1
  std::vector<double> j_test;
};

// Greedy selection over column indices of a tasks x optimizers cost matrix:
// first pick minimizes the mean cost, later picks minimize the mean of
// min(running best, cost). Ties break toward the lowest column index.
struct GreedySelection {
  std::vector<std::size_t> selected;
  std::vector<double> j_trace;
};
GreedySelection greedy_select(const DenseMatrix& costs, std::size_t k);

// Exact minimizer over k-subsets; guarded to C(n, k) <= 1e6 subsets.
struct BruteForceSelection {
  std::vector<std::size_t> best_set;
  double j = 0.0;
};
BruteForceSelection brute_force_select(const DenseMatrix& costs,
                                       std::size_t k);

// Best-of-k curves for a fixed optimizer order: the per-task winner among
// the first i entries is chosen by validation cost and reports test cost.
BestOfKCurve evaluate_sequence(const DenseMatrix& costs_valid,
                               const DenseMatrix& costs_test,
                               const std::vector<std::size_t>& order);

// CostMatrix front-ends.
HyperparameterList greedy_learn(const CostMatrix& train_matrix, std::size_t k,
                                const std::vector<OptimizerConfig>& pool);
BestOfKCurve evaluate_list(const HyperparameterList& list,
                           const CostMatrix& matrix);

// Simulated random search by replaying stored costs: each resample draws a
// permutation of the eligible optimizers and accumulates a best-of-k curve.
struct RandomSearchCurve {
  std::vector<double> median_valid, p25_valid, p75_valid;
  std::vector<double> median_test, p25_test, p75_test;
  bool truncated = false;  // fewer eligible optimizers than max_trials
};
RandomSearchCurve random_search_curve(const std::vector<std::size_t>& eligible,
                                      const CostMatrix& matrix,
                                      std::size_t max_trials,
                                      std::size_t resamples, RngKey key);

enum class PosthocMode { kMinMax, kPercentile5To95 };

// Bounds over the hyperparameters of each task's best-validation optimizer,
// and the subset of the pool inside that box. All configs must share one
// family.
struct PosthocBounds {
  std::vector<std::string> dimension_names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> eligible;
};
PosthocBounds posthoc_bounds(const CostMatrix& costs_valid,
                             const std::vector<OptimizerConfig>& pool,
                             PosthocMode mode);

}  // namespace optlist
