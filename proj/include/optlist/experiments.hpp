#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optlist/learner.hpp"
#include "optlist/store.hpp"

namespace optlist {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "iid_generalization", "num_tasks_sweep",     "family_holdout",
      "param_count_buckets", "short_horizon",      "theta_size_sweep",
      "cross_family_matrix", "normalization_ablation"};
  return names;
}

struct ExperimentSpec {
  std::string name;
  int resamples = 20;
  std::uint64_t master_seed = 1;
  double fraction = 0.5;           // iid split
  std::size_t k_max = 100;         // depth of best-of-k curves
  std::size_t rand_trials = 100;   // depth of random-search baselines
  std::size_t list_k = 10;         // fixed-k protocols
  std::vector<std::size_t> train_task_counts = {8, 16, 32, 64, 128};
  std::vector<std::string> held_out_families;
  std::vector<double> horizon_fractions = {0.2};
  std::vector<std::size_t> theta_sizes = {16, 32, 64, 128, 256};
  std::optional<RunProfile> profile;  // must match the store when present

  void validate() const;
  Json to_json() const;
  static ExperimentSpec from_json(const Json& j);
};

struct ReportRow {
  std::string condition;
  std::size_t k = 0;
  double j_median = 0.0;
  double j_p25 = 0.0;
  double j_p75 = 0.0;
  std::string split;  // valid | test
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReportRow> rows;
  Json metadata = Json::object();
  // Optional extra artifact (cross-family grid): rows of
  // {train_family, test_family, j_raw, j_norm}.
  std::vector<std::array<std::string, 4>> grid;
};

// Deterministic in key; sizes within one of fraction * N.
std::pair<std::vector<std::string>, std::vector<std::string>> split_tasks_iid(
    const std::vector<std::string>& task_ids, double fraction, RngKey key);

// Rows of `matrix` restricted to the named tasks, in the given order.
CostMatrix cost_matrix_row_subset(const CostMatrix& matrix,
                                  const std::vector<std::string>& task_ids);

// Families are recoverable from task ids (family "-" hash).
std::string family_of_task_id(const std::string& task_id);

std::pair<std::vector<std::string>, std::vector<std::string>>
holdout_by_family(const std::vector<std::string>& task_ids,
                  const std::vector<std::string>& held_out_families);

// Bucket b holds tasks with 10^b <= n_params < 10^(b+1).
std::map<int, std::vector<std::string>> bucket_by_param_count(
    const std::vector<std::string>& task_ids, const EvaluationStore& store);

// Completes the (task x optimizer x seed) cross product, skipping existing
// records; per-run divergence is recorded, never fatal. Returns the store
// content hash. Result is independent of the worker count.
std::string run_evaluation_sweep(EvaluationStore& store,
                                 const std::vector<TaskConfig>& tasks,
                                 const std::vector<OptimizerConfig>& optimizers,
                                 int workers, std::ostream& log);

ExperimentReport run_experiment(const ExperimentSpec& spec,
                                const EvaluationStore& store);

// <name>_report.csv (+ _grid.csv when present) and <name>_metadata.json.
// Regeneration from the same store and seed is byte-identical.
std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::filesystem::path& out_dir);

}  // namespace optlist
