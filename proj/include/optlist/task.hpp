#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optlist/json_util.hpp"
#include "optlist/matrix.hpp"
#include "optlist/rng.hpp"

namespace optlist {

enum class Split { kTrain, kValid, kTest };

const char* split_name(Split s);

// Families covered by the desk-scale suite. The sampled families mirror the
// synthetic problem generators; twod_fixed holds the hand-designed 2D tasks.
inline const std::vector<std::string>& task_family_names() {
  static const std::vector<std::string> names = {
      "quadratic_like",        "losg_quadratic",
      "losg_bowl",             "losg_norm",
      "losg_dependency_chain", "losg_outward_snake",
      "losg_min_max_well",     "losg_sum_of_quadratics",
      "losg_fully_connected",  "mlp_classification_synthetic",
      "mlp_ae_synthetic",      "twod_fixed"};
  return names;
}

// Families drawn by "mixed" sampling (everything except the fixed 2D set).
std::vector<std::string> sampled_task_family_names();

bool is_task_family(const std::string& name);

struct TransformSpec {
  std::string kind;  // sparse_problems | rescale_problems | log_objective
  Json params = Json::object();

  bool operator==(const TransformSpec& o) const {
    return kind == o.kind && params == o.params;
  }
};

struct TaskConfig {
  std::string family;
  Json params = Json::object();
  std::optional<TransformSpec> transform;
  std::int64_t config_seed = 0;

  // Pure function of (family, params, transform, config_seed).
  std::string task_id() const;

  Json to_json() const;
  static TaskConfig from_json(const Json& j);

  bool operator==(const TaskConfig& o) const {
    return family == o.family && params == o.params &&
           transform == o.transform && config_seed == o.config_seed;
  }
};

struct Batch {
  DenseMatrix inputs;        // empty sentinel for data-free objectives
  DenseMatrix targets;       // autoencoder / regression targets
  std::vector<int> labels;   // classification labels
  std::uint64_t batch_seed = 0;

  bool is_empty() const { return inputs.empty(); }
};

// A sampled, fully specified optimization problem exposing initialization,
// data generation, forward loss, and gradients. Immutable after
// instantiation; loss/gradient are pure in (params, batch).
class Task {
 public:
  explicit Task(TaskConfig config) : config_(std::move(config)) {}
  virtual ~Task() = default;

  const TaskConfig& config() const { return config_; }
  const std::string& task_id() const { return task_id_; }

  virtual std::size_t param_count() const = 0;
  virtual std::vector<double> initial_params(std::int64_t seed) const = 0;

  // Data-free objectives return the empty-batch sentinel (batch_seed still
  // set so per-step gradient noise stays keyed). just_train instances remap
  // every split onto the train stream.
  Batch batch(Split split, RngKey key) const;

  // Transform chain (rescale / log) applied last; never returns a silent
  // NaN from a finite base value.
  double loss(std::span<const double> params, const Batch& b) const;

  // Base gradient -> family gradient noise -> rescale/log chain rule ->
  // sparse extra noise -> sparse mask, in that order, so masked entries
  // stay exactly zero.
  std::vector<double> gradient(std::span<const double> params,
                               const Batch& b) const;

  bool just_train() const { return just_train_; }
  // True when the objective passes through log(max(eps, x)).
  virtual bool has_log_output() const;
  // Whether the loss value `v` sits on the log clamp (the unguarded value
  // would have been -inf).
  bool log_clamped(double v) const;

 protected:
  virtual double base_loss(std::span<const double> params,
                           const Batch& b) const = 0;
  virtual void base_gradient(std::span<const double> params, const Batch& b,
                             std::span<double> out) const = 0;
  virtual Batch make_batch(Split split, RngKey key) const;

  void set_just_train(bool v) { just_train_ = v; }
  void check_params(std::span<const double> params) const;

 private:
  TaskConfig config_;
  std::string task_id_ = config_.task_id();
  bool just_train_ = false;
};

// Builds the task, deriving all latent problem data from config_seed so two
// instantiations are identical. Throws ValidationError with the offending
// field path on schema violations.
std::unique_ptr<Task> instantiate(const TaskConfig& config);

// Draws one config from the family's documented sampling distribution.
TaskConfig sample_task_config(const std::string& family, RngKey key);

// The twelve hand-designed 2D tasks, in canonical order.
std::vector<TaskConfig> fixed_twod_task_configs();

struct RejectionPolicy {
  int probe_steps = 100;
  double rel_change_threshold = 1e-12;
  // "unable to optimize" also covers probes that move the loss without ever
  // improving it; protects normalization from init == best downstream.
  bool require_improvement = true;
  // Rule (c) uses an analytic flop model, not measured time, so rejection is
  // reproducible across machines and runs.
  double per_run_seconds_budget = 0.1;
  double flops_per_second = 2e9;
  // Run shape assumed by the flop model.
  int total_steps = 2000;
  int eval_every = 50;
  int eval_batches = 10;
};

struct RejectionResult {
  bool accepted = false;
  std::string reason;  // empty when accepted
};

// Accept/reject per: (a) non-finite loss at init, (b) probe runs with Adam
// learning rates {1e-4, 1e-3, 1e-2} unable to optimize, (c) estimated run
// time over budget.
RejectionResult reject_task(const TaskConfig& config,
                            const RejectionPolicy& policy);

// Analytic per-run flop estimate (instantiation + training + evaluations).
double estimate_run_flops(const TaskConfig& config,
                          const RejectionPolicy& policy);

}  // namespace optlist
