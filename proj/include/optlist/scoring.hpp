#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optlist/json_util.hpp"
#include "optlist/optimizers.hpp"
#include "optlist/task.hpp"

namespace optlist {

struct RunProfile {
  int total_steps = 2000;
  int eval_every = 50;
  int eval_batches = 10;
  int seeds = 3;

  void validate() const;
  int eval_points() const { return total_steps / eval_every + 1; }
  // The fingerprint two runs must share to live in one store.
  bool same_fingerprint(const RunProfile& o) const {
    return total_steps == o.total_steps && eval_every == o.eval_every &&
           eval_batches == o.eval_batches;
  }
  Json to_json() const;
  static RunProfile from_json(const Json& j);
};

// Per-split loss traces for one (task, optimizer, seed) run. Entries at and
// after diverged_at hold NaN.
struct TrainingCurve {
  std::string task_id;
  std::string optimizer_id;
  int seed = 0;
  std::vector<int> steps;
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  std::vector<double> test_loss;
  std::optional<int> diverged_at;
  std::size_t n_params = 0;
  double wall_time_s = 0.0;

  const std::vector<double>& split_losses(Split s) const;
};

// Runs the full training loop; evaluations at steps {0, eval_every, ...}
// average eval_batches fresh batches per split. Divergence fills the rest of
// the curve with NaN; it is data, not an error. Deterministic in all inputs
// (wall_time_s aside).
TrainingCurve train_and_record(const Task& task, const OptimizerConfig& opt,
                               int seed, const RunProfile& profile);

struct NormalizationConstants {
  std::string task_id;
  double init_valid_loss = 0.0;
  double best_valid_loss = 0.0;
};

enum class Normalizer { kDefault, kPercentile95 };
enum class Aggregator { kMean, kMin };

const char* normalizer_name(Normalizer n);
const char* aggregator_name(Aggregator a);
Normalizer normalizer_from_name(const std::string& s);
Aggregator aggregator_from_name(const std::string& s);

// (L - best) / (init - best) clipped to [0, 1]; non-finite points map to 1.
// Throws DegenerateTaskError when init == best.
std::vector<double> normalize_curve(const TrainingCurve& curve,
                                    const NormalizationConstants& constants,
                                    Split split);

double aggregate(std::span<const double> normalized, Aggregator aggregator);

// Nearest-rank percentile (p in (0, 100]) of the given values.
double nearest_rank_percentile(std::vector<double> values, double p);

// init = mean over seeds of the step-0 validation loss; best = min over all
// finite validation values. Curves may be horizon-truncated upstream.
NormalizationConstants default_constants(
    std::span<const TrainingCurve> task_curves);

// init <- 95th percentile of all recorded validation losses; best <- min
// final-eval validation loss (finite curves only).
NormalizationConstants percentile_constants(
    std::span<const TrainingCurve> task_curves);

struct CostMatrix {
  std::vector<std::string> tasks;
  std::vector<std::string> optimizers;
  DenseMatrix costs_valid;  // tasks x optimizers, in [0, 1]
  DenseMatrix costs_test;
  Normalizer normalizer = Normalizer::kDefault;
  Aggregator aggregator = Aggregator::kMean;
  std::string store_hash;

  std::size_t optimizer_index(const std::string& id) const;
};

// Spearman rank correlation with average ranks on ties.
double spearman_correlation(std::span<const double> a,
                            std::span<const double> b);

}  // namespace optlist
