#include "optlist/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optlist/errors.hpp"

namespace optlist {

namespace {

double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

// Running-best J for adding column j on top of per-task bests b.
double j_with_candidate(const DenseMatrix& costs,
                        const std::vector<double>& best, std::size_t j) {
  double acc = 0.0;
  for (std::size_t t = 0; t < costs.rows; ++t) {
    acc += std::min(best[t], costs.at(t, j));
  }
  return acc / static_cast<double>(costs.rows);
}

}  // namespace

GreedySelection greedy_select(const DenseMatrix& costs, std::size_t k) {
  if (k > costs.cols) {
    throw UsageError("greedy_select: k exceeds the optimizer pool");
  }
  if (costs.rows == 0) throw UsageError("greedy_select: empty matrix");
  GreedySelection result;
  std::vector<double> best(costs.rows,
                           std::numeric_limits<double>::infinity());
  std::vector<bool> used(costs.cols, false);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t argmin = costs.cols;
    double best_j = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < costs.cols; ++j) {
      if (used[j]) continue;
      const double cand = j_with_candidate(costs, best, j);
      if (cand < best_j) {  // strict: ties keep the lowest index
        best_j = cand;
        argmin = j;
      }
    }
    used[argmin] = true;
    result.selected.push_back(argmin);
    for (std::size_t t = 0; t < costs.rows; ++t) {
      best[t] = std::min(best[t], costs.at(t, argmin));
    }
    result.j_trace.push_back(mean(best));
  }
  return result;
}

BruteForceSelection brute_force_select(const DenseMatrix& costs,
                                       std::size_t k) {
  const std::size_t n = costs.cols;
  if (k > n) throw UsageError("brute_force_select: k exceeds the pool");
  double combos = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  if (combos > 1e6) {
    throw UsageError("brute_force_select: C(n, k) exceeds the 1e6 guard");
  }

  BruteForceSelection out;
  out.j = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  std::vector<double> best(costs.rows);
  while (true) {
    std::fill(best.begin(), best.end(),
              std::numeric_limits<double>::infinity());
    for (std::size_t i : idx) {
      for (std::size_t t = 0; t < costs.rows; ++t) {
        best[t] = std::min(best[t], costs.at(t, i));
      }
    }
    const double j = mean(best);
    if (j < out.j) {
      out.j = j;
      out.best_set = idx;
    }
    // next combination
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (idx[pos] != pos + n - k) break;
      if (pos == 0) return out;
    }
    if (idx[pos] == pos + n - k) return out;
    ++idx[pos];
    for (std::size_t i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

BestOfKCurve evaluate_sequence(const DenseMatrix& costs_valid,
                               const DenseMatrix& costs_test,
                               const std::vector<std::size_t>& order) {
  if (costs_valid.rows != costs_test.rows ||
      costs_valid.cols != costs_test.cols) {
    throw ShapeError("evaluate_sequence: matrices disagree");
  }
  BestOfKCurve curve;
  const std::size_t n_tasks = costs_valid.rows;
  std::vector<double> best_valid(n_tasks,
                                 std::numeric_limits<double>::infinity());
  std::vector<double> winner_test(n_tasks, 0.0);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const std::size_t j = order[step];
    if (j >= costs_valid.cols) {
      throw UsageError("evaluate_sequence: column index out of range");
    }
    double acc_valid = 0.0;
    double acc_test = 0.0;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      // Winner chosen by validation cost; its test cost is what we report.
      if (costs_valid.at(t, j) < best_valid[t]) {
        best_valid[t] = costs_valid.at(t, j);
        winner_test[t] = costs_test.at(t, j);
      }
      acc_valid += best_valid[t];
      acc_test += winner_test[t];
    }
    curve.j_valid.push_back(acc_valid / static_cast<double>(n_tasks));
    curve.j_test.push_back(acc_test / static_cast<double>(n_tasks));
  }
  return curve;
}

Json HyperparameterList::to_json() const {
  Json entries_json = Json::array();
  for (const OptimizerConfig& c : entries) entries_json.push_back(c.to_json());
  return Json{{"k", entries.size()},
              {"provenance", provenance},
              {"entries", entries_json}};
}

HyperparameterList HyperparameterList::from_json(const Json& j) {
  HyperparameterList list;
  for (const Json& e : j.at("entries")) {
    list.entries.push_back(OptimizerConfig::from_json(e));
    list.entry_ids.push_back(list.entries.back().optimizer_id());
  }
  if (j.contains("provenance")) list.provenance = j.at("provenance");
  if (j.at("k").get<std::size_t>() != list.entries.size()) {
    throw ValidationError("hyperparameter list: k != entries length");
  }
  return list;
}

HyperparameterList greedy_learn(const CostMatrix& train_matrix, std::size_t k,
                                const std::vector<OptimizerConfig>& pool) {
  if (pool.size() != train_matrix.optimizers.size()) {
    throw UsageError("greedy_learn: pool and matrix columns disagree");
  }
  const GreedySelection sel = greedy_select(train_matrix.costs_valid, k);
  HyperparameterList list;
  for (std::size_t j : sel.selected) {
    list.entries.push_back(pool[j]);
    list.entry_ids.push_back(train_matrix.optimizers[j]);
  }
  list.j_valid_trace = sel.j_trace;
  list.provenance = Json{{"training_tasks", train_matrix.tasks},
                         {"store_hash", train_matrix.store_hash},
                         {"normalizer", normalizer_name(train_matrix.normalizer)},
                         {"aggregator", aggregator_name(train_matrix.aggregator)},
                         {"k", k}};
  return list;
}

BestOfKCurve evaluate_list(const HyperparameterList& list,
                           const CostMatrix& matrix) {
  std::vector<std::size_t> order;
  order.reserve(list.entry_ids.size());
  for (const std::string& id : list.entry_ids) {
    order.push_back(matrix.optimizer_index(id));
  }
  return evaluate_sequence(matrix.costs_valid, matrix.costs_test, order);
}

RandomSearchCurve random_search_curve(const std::vector<std::size_t>& eligible,
                                      const CostMatrix& matrix,
                                      std::size_t max_trials,
                                      std::size_t resamples, RngKey key) {
  if (eligible.empty()) {
    throw UsageError("random_search_curve: no eligible optimizers");
  }
  if (resamples < 1) {
    throw UsageError("random_search_curve: resamples must be >= 1");
  }
  RandomSearchCurve out;
  const std::size_t depth = std::min(max_trials, eligible.size());
  out.truncated = depth < max_trials;

  std::vector<std::vector<double>> valid_at_k(depth), test_at_k(depth);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::vector<std::size_t> perm = eligible;
    Rng rng(key.child(r));
    for (std::size_t i = perm.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(perm[i - 1], perm[j]);
    }
    perm.resize(depth);
    const BestOfKCurve curve =
        evaluate_sequence(matrix.costs_valid, matrix.costs_test, perm);
    for (std::size_t i = 0; i < depth; ++i) {
      valid_at_k[i].push_back(curve.j_valid[i]);
      test_at_k[i].push_back(curve.j_test[i]);
    }
  }
  for (std::size_t i = 0; i < depth; ++i) {
    out.median_valid.push_back(nearest_rank_percentile(valid_at_k[i], 50.0));
    out.p25_valid.push_back(nearest_rank_percentile(valid_at_k[i], 25.0));
    out.p75_valid.push_back(nearest_rank_percentile(valid_at_k[i], 75.0));
    out.median_test.push_back(nearest_rank_percentile(test_at_k[i], 50.0));
    out.p25_test.push_back(nearest_rank_percentile(test_at_k[i], 25.0));
    out.p75_test.push_back(nearest_rank_percentile(test_at_k[i], 75.0));
  }
  return out;
}

PosthocBounds posthoc_bounds(const CostMatrix& costs_valid,
                             const std::vector<OptimizerConfig>& pool,
                             PosthocMode mode) {
  if (pool.size() != costs_valid.optimizers.size()) {
    throw UsageError("posthoc_bounds: pool and matrix columns disagree");
  }
  if (pool.empty()) throw UsageError("posthoc_bounds: empty pool");
  for (const OptimizerConfig& c : pool) {
    if (c.family != pool.front().family) {
      throw UsageError("posthoc_bounds: pool mixes optimizer families");
    }
  }
  PosthocBounds out;
  out.dimension_names = pool.front().hparam_names();
  const std::size_t dims = out.dimension_names.size();

  // Each task's best-validation optimizer contributes one vector.
  std::vector<std::vector<double>> collected(dims);
  const DenseMatrix& costs = costs_valid.costs_valid;
  for (std::size_t t = 0; t < costs.rows; ++t) {
    std::size_t argmin = 0;
    for (std::size_t j = 1; j < costs.cols; ++j) {
      if (costs.at(t, j) < costs.at(t, argmin)) argmin = j;
    }
    const std::vector<double> v = pool[argmin].hparam_vector();
    for (std::size_t d = 0; d < dims; ++d) collected[d].push_back(v[d]);
  }

  out.lower.resize(dims);
  out.upper.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    if (mode == PosthocMode::kMinMax) {
      out.lower[d] = *std::min_element(collected[d].begin(),
                                       collected[d].end());
      out.upper[d] = *std::max_element(collected[d].begin(),
                                       collected[d].end());
    } else {
      out.lower[d] = nearest_rank_percentile(collected[d], 5.0);
      out.upper[d] = nearest_rank_percentile(collected[d], 95.0);
    }
  }
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const std::vector<double> v = pool[j].hparam_vector();
    bool inside = true;
    for (std::size_t d = 0; d < dims && inside; ++d) {
      inside = v[d] >= out.lower[d] && v[d] <= out.upper[d];
    }
    if (inside) out.eligible.push_back(j);
  }
  return out;
}

}  // namespace optlist
