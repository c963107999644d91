#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optlist/optimizers.hpp"
#include "optlist/scoring.hpp"
#include "optlist/task.hpp"

namespace optlist {

struct CurveRecord {
  int schema_version = 1;
  TrainingCurve curve;
  RunProfile profile;

  // One JSON line, field order fixed, losses at 17 significant digits with
  // "NaN" for non-finite entries.
  std::string json_line() const;
  // json_line without wall_time_s; the unit of content hashing.
  std::string canonical_content() const;
  static CurveRecord parse_line(const std::string& line);

  std::string key() const {
    return curve.task_id + "|" + curve.optimizer_id + "|" +
           std::to_string(curve.seed);
  }
};

struct StoreGap {
  std::string task_id;
  std::string optimizer_id;
  int seed = 0;
};

// Append-only JSONL store, one shard file per task under <dir>/curves/, plus
// task and optimizer config registries and a rebuildable index.json summary.
// Single writer per shard; readers rescan the shards.
class EvaluationStore {
 public:
  explicit EvaluationStore(std::filesystem::path dir);

  // Creates the directory layout and pins the profile; reopening an existing
  // store with a different fingerprint is an error.
  void open(const RunProfile& profile);
  // Opens an existing store as written (profile read from index or records).
  void open_existing();

  const std::filesystem::path& dir() const { return dir_; }
  const RunProfile& profile() const { return profile_; }

  bool contains(const std::string& task_id, const std::string& optimizer_id,
                int seed) const;
  std::size_t record_count() const { return keys_.size(); }

  // Durable line-atomic append. Throws StoreConflictError on duplicate keys
  // and IncompatibleProfileError on fingerprint mismatch.
  void append(const CurveRecord& record);

  void register_task(const TaskConfig& config);
  void register_optimizer(const OptimizerConfig& config);
  const std::map<std::string, TaskConfig>& tasks() const { return tasks_; }
  const std::map<std::string, OptimizerConfig>& optimizers() const {
    return optimizers_;
  }

  std::vector<std::string> task_ids() const;
  std::vector<std::string> optimizer_ids() const;

  // All records for one task, parsed from its shard.
  std::vector<CurveRecord> load_task_records(const std::string& task_id) const;

  // All matching records grouped by (task, optimizer) plus the gap report of
  // missing triples. Gaps are data, not errors.
  std::map<std::pair<std::string, std::string>, std::vector<CurveRecord>>
  load_matrix_inputs(const std::vector<std::string>& task_ids,
                     const std::vector<std::string>& optimizer_ids,
                     std::vector<StoreGap>* gaps) const;

  std::vector<StoreGap> find_gaps(
      const std::vector<std::string>& task_ids,
      const std::vector<std::string>& optimizer_ids) const;

  // Order-independent hash over record canonical content and registered
  // configs; wall times excluded so reruns hash identically.
  std::string content_hash() const;

  // Convenience summary (counts, profile, hash); advisory and rebuildable.
  void write_index() const;

 private:
  std::filesystem::path shard_path(const std::string& task_id) const;
  void scan_existing();
  void load_configs();

  std::filesystem::path dir_;
  RunProfile profile_;
  bool profile_set_ = false;
  std::set<std::string> keys_;
  std::map<std::string, std::uint64_t> record_hashes_;  // key -> content hash
  std::map<std::string, TaskConfig> tasks_;
  std::map<std::string, OptimizerConfig> optimizers_;
};

// Validation cost matrix exported as CSV: header "task_id,<optimizer ids>",
// one row per task. Returns (rows, cols) written.
std::pair<std::size_t, std::size_t> export_feature_matrix(
    const EvaluationStore& store, Normalizer normalizer, Aggregator aggregator,
    const std::filesystem::path& out_path);

struct CostMatrixOptions {
  Normalizer normalizer = Normalizer::kDefault;
  Aggregator aggregator = Aggregator::kMean;
  // Truncate curves to steps <= horizon before normalizing/aggregating
  // (train-side short-horizon studies).
  std::optional<int> horizon_steps;
};

// Seed-averaged aggregate of normalized curves per (task, optimizer); test
// costs use validation-derived constants. Constants always come from every
// stored curve of the task, so optimizer subsets share one normalization.
CostMatrix build_cost_matrix(const EvaluationStore& store,
                             const std::vector<std::string>& task_ids,
                             const std::vector<std::string>& optimizer_ids,
                             const CostMatrixOptions& options);

}  // namespace optlist
