#include "optlist/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "optlist/errors.hpp"

namespace fs = std::filesystem;

namespace optlist {

namespace {

constexpr std::uint64_t kExperimentSalt = 0xE9CE41ull;

DenseMatrix row_subset(const DenseMatrix& m,
                       const std::vector<std::size_t>& rows) {
  DenseMatrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      out.at(i, c) = m.at(rows[i], c);
    }
  }
  return out;
}

DenseMatrix column_subset(const DenseMatrix& m,
                          const std::vector<std::size_t>& cols) {
  DenseMatrix out(m.rows, cols.size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.at(r, j) = m.at(r, cols[j]);
    }
  }
  return out;
}

std::vector<std::size_t> indices_of(const std::vector<std::string>& universe,
                                    const std::vector<std::string>& subset) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < universe.size(); ++i) pos[universe[i]] = i;
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (const std::string& s : subset) {
    const auto it = pos.find(s);
    if (it == pos.end()) {
      throw IncompleteStoreError("experiment: id not in matrix: " + s);
    }
    out.push_back(it->second);
  }
  return out;
}

struct Stats {
  double median = 0.0, p25 = 0.0, p75 = 0.0;
};

Stats stats_of(const std::vector<double>& values) {
  Stats s;
  s.median = nearest_rank_percentile(values, 50.0);
  s.p25 = nearest_rank_percentile(values, 25.0);
  s.p75 = nearest_rank_percentile(values, 75.0);
  return s;
}

// Collects per-resample best-of-k curves and emits one row per (k, split).
class CurveAccumulator {
 public:
  explicit CurveAccumulator(std::size_t depth)
      : valid_(depth), test_(depth) {}

  void add(const BestOfKCurve& curve) {
    for (std::size_t i = 0; i < valid_.size(); ++i) {
      valid_[i].push_back(curve.j_valid[i]);
      test_[i].push_back(curve.j_test[i]);
    }
  }

  void emit(const std::string& condition, std::vector<ReportRow>& rows,
            const std::vector<std::size_t>* only_k = nullptr) const {
    for (std::size_t i = 0; i < valid_.size(); ++i) {
      const std::size_t k = i + 1;
      if (only_k && std::find(only_k->begin(), only_k->end(), k) ==
                        only_k->end()) {
        continue;
      }
      if (valid_[i].empty()) continue;
      const Stats sv = stats_of(valid_[i]);
      const Stats st = stats_of(test_[i]);
      rows.push_back({condition, k, sv.median, sv.p25, sv.p75, "valid"});
      rows.push_back({condition, k, st.median, st.p25, st.p75, "test"});
    }
  }

  std::size_t depth() const { return valid_.size(); }

 private:
  std::vector<std::vector<double>> valid_;
  std::vector<std::vector<double>> test_;
};

std::vector<std::size_t> subsample(std::vector<std::size_t> pool,
                                   std::size_t count, Rng& rng) {
  for (std::size_t i = pool.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(pool[i - 1], pool[j]);
  }
  pool.resize(std::min(count, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void ExperimentSpec::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += n + " ";
    throw UsageError("experiment: unknown name '" + name +
                     "'; expected one of: " + valid);
  }
  if (resamples < 1) throw UsageError("experiment: resamples must be >= 1");
  if (fraction <= 0.0 || fraction >= 1.0) {
    throw UsageError("experiment: fraction must be in (0, 1)");
  }
  if (list_k < 1 || k_max < 1) {
    throw UsageError("experiment: k values must be >= 1");
  }
  for (double h : horizon_fractions) {
    if (h <= 0.0 || h > 1.0) {
      throw UsageError("experiment: horizon fractions must be in (0, 1]");
    }
  }
  for (const std::string& f : held_out_families) {
    if (!is_task_family(f)) {
      throw UsageError("experiment: unknown family '" + f + "'");
    }
  }
}

Json ExperimentSpec::to_json() const {
  Json j;
  j["name"] = name;
  j["resamples"] = resamples;
  j["master_seed"] = master_seed;
  j["fraction"] = fraction;
  j["k_max"] = k_max;
  j["rand_trials"] = rand_trials;
  j["list_k"] = list_k;
  j["train_task_counts"] = train_task_counts;
  j["held_out_families"] = held_out_families;
  j["horizon_fractions"] = horizon_fractions;
  j["theta_sizes"] = theta_sizes;
  if (profile) j["profile"] = profile->to_json();
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const Json& j) {
  ExperimentSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.resamples = j.value("resamples", s.resamples);
    s.master_seed = j.value("master_seed", s.master_seed);
    s.fraction = j.value("fraction", s.fraction);
    s.k_max = j.value("k_max", s.k_max);
    s.rand_trials = j.value("rand_trials", s.rand_trials);
    s.list_k = j.value("list_k", s.list_k);
    if (j.contains("train_task_counts")) {
      s.train_task_counts =
          j.at("train_task_counts").get<std::vector<std::size_t>>();
    }
    if (j.contains("held_out_families")) {
      s.held_out_families =
          j.at("held_out_families").get<std::vector<std::string>>();
    }
    if (j.contains("horizon_fractions")) {
      s.horizon_fractions =
          j.at("horizon_fractions").get<std::vector<double>>();
    }
    if (j.contains("theta_sizes")) {
      s.theta_sizes = j.at("theta_sizes").get<std::vector<std::size_t>>();
    }
    if (j.contains("profile") && !j.at("profile").is_null()) {
      s.profile = RunProfile::from_json(j.at("profile"));
    }
  } catch (const Json::exception& e) {
    throw UsageError(std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

CostMatrix cost_matrix_row_subset(const CostMatrix& matrix,
                                  const std::vector<std::string>& task_ids) {
  CostMatrix out;
  out.tasks = task_ids;
  out.optimizers = matrix.optimizers;
  out.normalizer = matrix.normalizer;
  out.aggregator = matrix.aggregator;
  out.store_hash = matrix.store_hash;
  const std::vector<std::size_t> rows = indices_of(matrix.tasks, task_ids);
  out.costs_valid = row_subset(matrix.costs_valid, rows);
  out.costs_test = row_subset(matrix.costs_test, rows);
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_tasks_iid(
    const std::vector<std::string>& task_ids, double fraction, RngKey key) {
  if (fraction <= 0.0 || fraction >= 1.0) {
    throw UsageError("split_tasks_iid: fraction must be in (0, 1)");
  }
  if (task_ids.size() < 2) {
    throw UsageError("split_tasks_iid: need at least two tasks");
  }
  std::vector<std::string> shuffled = task_ids;
  std::sort(shuffled.begin(), shuffled.end());
  Rng rng(key);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(shuffled[i - 1], shuffled[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(
      fraction * static_cast<double>(shuffled.size())));
  const std::size_t clamped =
      std::clamp<std::size_t>(n_train, 1, shuffled.size() - 1);
  std::vector<std::string> train(shuffled.begin(),
                                 shuffled.begin() + clamped);
  std::vector<std::string> test(shuffled.begin() + clamped, shuffled.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

std::string family_of_task_id(const std::string& task_id) {
  const std::size_t dash = task_id.rfind('-');
  if (dash == std::string::npos) return task_id;
  return task_id.substr(0, dash);
}

std::pair<std::vector<std::string>, std::vector<std::string>>
holdout_by_family(const std::vector<std::string>& task_ids,
                  const std::vector<std::string>& held_out_families) {
  if (held_out_families.empty()) {
    throw UsageError("holdout_by_family: no families to hold out");
  }
  std::set<std::string> held(held_out_families.begin(),
                             held_out_families.end());
  for (const std::string& f : held) {
    if (!is_task_family(f)) {
      throw UsageError("holdout_by_family: unknown family '" + f + "'");
    }
  }
  std::set<std::string> present;
  for (const std::string& id : task_ids) present.insert(family_of_task_id(id));
  for (const std::string& f : held) {
    if (!present.count(f)) {
      throw UsageError("holdout_by_family: family '" + f +
                       "' has no tasks in the store");
    }
  }
  std::vector<std::string> train, test;
  for (const std::string& id : task_ids) {
    if (held.count(family_of_task_id(id))) {
      test.push_back(id);
    } else {
      train.push_back(id);
    }
  }
  if (train.empty()) {
    throw UsageError("holdout_by_family: holding out every family leaves no "
                     "training tasks");
  }
  return {train, test};
}

std::map<int, std::vector<std::string>> bucket_by_param_count(
    const std::vector<std::string>& task_ids, const EvaluationStore& store) {
  std::map<int, std::vector<std::string>> buckets;
  for (const std::string& id : task_ids) {
    const auto records = store.load_task_records(id);
    if (records.empty()) {
      throw IncompleteStoreError("bucket_by_param_count: no records for " +
                                 id);
    }
    const double n = static_cast<double>(records.front().curve.n_params);
    const int bucket = static_cast<int>(std::floor(std::log10(n)));
    buckets[bucket].push_back(id);
  }
  return buckets;
}

std::string run_evaluation_sweep(EvaluationStore& store,
                                 const std::vector<TaskConfig>& tasks,
                                 const std::vector<OptimizerConfig>& optimizers,
                                 int workers, std::ostream& log) {
  if (workers < 1) throw UsageError("sweep: workers must be >= 1");
  const RunProfile profile = store.profile();
  for (const TaskConfig& t : tasks) store.register_task(t);
  for (const OptimizerConfig& o : optimizers) store.register_optimizer(o);

  std::atomic<std::size_t> written{0};
  std::atomic<std::size_t> skipped{0};
  std::mutex store_mutex;
  std::mutex log_mutex;

  auto worker_fn = [&](int worker_index) {
    for (std::size_t ti = static_cast<std::size_t>(worker_index);
         ti < tasks.size(); ti += static_cast<std::size_t>(workers)) {
      const TaskConfig& config = tasks[ti];
      const std::string task_id = config.task_id();
      // Skip instantiation when the task is already complete.
      bool complete = true;
      for (const OptimizerConfig& opt : optimizers) {
        const std::string opt_id = opt.optimizer_id();
        for (int seed = 0; seed < profile.seeds && complete; ++seed) {
          complete = store.contains(task_id, opt_id, seed);
        }
        if (!complete) break;
      }
      if (complete) {
        skipped += static_cast<std::size_t>(optimizers.size()) *
                   static_cast<std::size_t>(profile.seeds);
        continue;
      }
      const std::unique_ptr<Task> task = instantiate(config);
      for (const OptimizerConfig& opt : optimizers) {
        const std::string opt_id = opt.optimizer_id();
        for (int seed = 0; seed < profile.seeds; ++seed) {
          if (store.contains(task_id, opt_id, seed)) {
            ++skipped;
            continue;
          }
          CurveRecord record;
          record.curve = train_and_record(*task, opt, seed, profile);
          record.profile = profile;
          {
            std::scoped_lock lock(store_mutex);
            store.append(record);
          }
          ++written;
        }
      }
      {
        std::scoped_lock lock(log_mutex);
        log << "sweep: task " << task_id << " done (" << written.load()
            << " written, " << skipped.load() << " skipped)\n";
      }
    }
  };

  if (workers == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);
    for (std::thread& t : pool) t.join();
  }

  store.write_index();
  log << "sweep: " << written.load() << " written, " << skipped.load()
      << " skipped\n";
  return store.content_hash();
}

// ---------------------------------------------------------------------------
// Experiment protocols
// ---------------------------------------------------------------------------

namespace {

struct ExperimentContext {
  const EvaluationStore& store;
  ExperimentSpec spec;
  std::vector<std::string> all_tasks;
  std::vector<std::string> all_optimizers;
  std::vector<OptimizerConfig> pool_configs;  // aligned with all_optimizers
  CostMatrix matrix;                          // default/mean over everything
  std::map<std::string, std::vector<std::size_t>> family_columns;
  RngKey root;

  std::vector<std::size_t> pool_for(const std::string& family) const {
    const auto it = family_columns.find(family);
    return it == family_columns.end() ? std::vector<std::size_t>{}
                                      : it->second;
  }
};

CostMatrix submatrix_rows(const CostMatrix& m,
                          const std::vector<std::string>& task_subset) {
  return cost_matrix_row_subset(m, task_subset);
}

// Greedy list over a column pool, evaluated on a disjoint task set. Both
// matrices share the full optimizer column space.
BestOfKCurve learned_curve(const CostMatrix& train, const CostMatrix& test,
                           const std::vector<std::size_t>& pool,
                           std::size_t k) {
  const DenseMatrix train_costs = column_subset(train.costs_valid, pool);
  const GreedySelection sel =
      greedy_select(train_costs, std::min(k, pool.size()));
  std::vector<std::size_t> order;
  order.reserve(sel.selected.size());
  for (std::size_t idx : sel.selected) order.push_back(pool[idx]);
  return evaluate_sequence(test.costs_valid, test.costs_test, order);
}

BestOfKCurve random_curve(const CostMatrix& test,
                          const std::vector<std::size_t>& eligible,
                          std::size_t trials, RngKey key) {
  const RandomSearchCurve rs =
      random_search_curve(eligible, test, trials, 1, key);
  BestOfKCurve out;
  out.j_valid = rs.median_valid;
  out.j_test = rs.median_test;
  return out;
}

void pad_curve(BestOfKCurve& curve, std::size_t depth) {
  while (curve.j_valid.size() < depth && !curve.j_valid.empty()) {
    curve.j_valid.push_back(curve.j_valid.back());
    curve.j_test.push_back(curve.j_test.back());
  }
}

void run_iid_generalization(ExperimentContext& ctx,
                            std::vector<ReportRow>& rows, Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("iid_generalization: no adam8p pool in store");
  }
  const std::size_t k_learn = std::min(ctx.spec.k_max, adam8p.size());
  const std::size_t k_rand = std::min(ctx.spec.rand_trials, adam8p.size());
  CurveAccumulator learned(k_learn);
  CurveAccumulator rand8(k_rand);
  CurveAccumulator rand1(std::min(ctx.spec.rand_trials,
                                  std::max<std::size_t>(
                                      ctx.pool_for("adam1p").size(), 1)));
  CurveAccumulator rand4(std::min(ctx.spec.rand_trials,
                                  std::max<std::size_t>(
                                      ctx.pool_for("adam4p").size(), 1)));
  CurveAccumulator posthoc_minmax(k_rand);
  CurveAccumulator posthoc_pct(k_rand);

  std::vector<OptimizerConfig> adam8p_configs;
  for (std::size_t j : adam8p) adam8p_configs.push_back(ctx.pool_configs[j]);

  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    const auto [train_ids, test_ids] =
        split_tasks_iid(ctx.all_tasks, ctx.spec.fraction, key.child("split"));
    const CostMatrix train = submatrix_rows(ctx.matrix, train_ids);
    const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);

    learned.add(learned_curve(train, test, adam8p, k_learn));
    rand8.add(random_curve(test, adam8p, k_rand, key.child("rand8")));
    if (!ctx.pool_for("adam1p").empty()) {
      rand1.add(random_curve(test, ctx.pool_for("adam1p"),
                             rand1.depth(), key.child("rand1")));
    }
    if (!ctx.pool_for("adam4p").empty()) {
      rand4.add(random_curve(test, ctx.pool_for("adam4p"),
                             rand4.depth(), key.child("rand4")));
    }

    // Post-hoc search spaces from the best-per-task hyperparameters on the
    // training half of the split, replayed on the test half.
    CostMatrix train_adam8p = train;
    train_adam8p.optimizers.clear();
    for (std::size_t j : adam8p) {
      train_adam8p.optimizers.push_back(ctx.all_optimizers[j]);
    }
    train_adam8p.costs_valid = column_subset(train.costs_valid, adam8p);
    train_adam8p.costs_test = column_subset(train.costs_test, adam8p);
    for (PosthocMode mode :
         {PosthocMode::kMinMax, PosthocMode::kPercentile5To95}) {
      const PosthocBounds bounds =
          posthoc_bounds(train_adam8p, adam8p_configs, mode);
      std::vector<std::size_t> eligible;
      for (std::size_t local : bounds.eligible) {
        eligible.push_back(adam8p[local]);
      }
      BestOfKCurve curve = random_curve(
          test, eligible, std::min(k_rand, eligible.size()),
          key.child(mode == PosthocMode::kMinMax ? "posthoc_minmax"
                                                 : "posthoc_pct"));
      pad_curve(curve, k_rand);
      (mode == PosthocMode::kMinMax ? posthoc_minmax : posthoc_pct).add(curve);
    }
  }

  learned.emit("learned_adam8p", rows);
  rand8.emit("rand_adam8p", rows);
  if (!ctx.pool_for("adam1p").empty()) rand1.emit("rand_adam1p", rows);
  if (!ctx.pool_for("adam4p").empty()) rand4.emit("rand_adam4p", rows);
  posthoc_minmax.emit("rand_posthoc_minmax", rows);
  posthoc_pct.emit("rand_posthoc_percentile", rows);
  metadata["pool_sizes"] = Json{{"adam8p", adam8p.size()},
                                {"adam1p", ctx.pool_for("adam1p").size()},
                                {"adam4p", ctx.pool_for("adam4p").size()}};
}

void run_num_tasks_sweep(ExperimentContext& ctx, std::vector<ReportRow>& rows,
                         Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("num_tasks_sweep: no adam8p pool in store");
  }
  const std::size_t k_learn = std::min(ctx.spec.k_max, adam8p.size());
  std::map<std::size_t, CurveAccumulator> by_count;
  for (std::size_t n : ctx.spec.train_task_counts) {
    by_count.emplace(n, CurveAccumulator(k_learn));
  }

  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    const auto [train_ids, test_ids] =
        split_tasks_iid(ctx.all_tasks, ctx.spec.fraction, key.child("split"));
    const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);
    std::vector<std::size_t> train_rows(train_ids.size());
    for (std::size_t i = 0; i < train_ids.size(); ++i) train_rows[i] = i;
    const CostMatrix train_full = submatrix_rows(ctx.matrix, train_ids);

    for (auto& [count, acc] : by_count) {
      if (count > train_ids.size()) continue;
      Rng rng(key.child("subsample").child(count));
      const std::vector<std::size_t> chosen =
          subsample(train_rows, count, rng);
      std::vector<std::string> subset;
      for (std::size_t i : chosen) subset.push_back(train_ids[i]);
      const CostMatrix train = submatrix_rows(train_full, subset);
      acc.add(learned_curve(train, test, adam8p, k_learn));
    }
  }
  for (const auto& [count, acc] : by_count) {
    acc.emit("train_tasks=" + std::to_string(count), rows);
  }
  metadata["train_task_counts"] = ctx.spec.train_task_counts;
}

void run_family_holdout(ExperimentContext& ctx, std::vector<ReportRow>& rows,
                        Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("family_holdout: no adam8p pool in store");
  }
  const auto [train_ids, test_ids] =
      holdout_by_family(ctx.all_tasks, ctx.spec.held_out_families);
  if (test_ids.empty()) {
    throw UsageError("family_holdout: held-out families have no tasks");
  }
  const std::size_t k_learn = std::min(ctx.spec.k_max, adam8p.size());
  const std::size_t k_rand = std::min(ctx.spec.rand_trials, adam8p.size());
  CurveAccumulator learned(k_learn), bestcase(k_learn), rand8(k_rand);
  const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);
  const CostMatrix heldout_train = test;  // best case trains on the test
                                          // families directly

  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    // Quartiles come from subsampling 80% of the training tasks.
    std::vector<std::size_t> all_rows(train_ids.size());
    for (std::size_t i = 0; i < train_ids.size(); ++i) all_rows[i] = i;
    Rng rng(key.child("subsample"));
    const std::size_t n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(0.8 * static_cast<double>(
                                              train_ids.size())));
    const std::vector<std::size_t> chosen = subsample(all_rows, n_sub, rng);
    std::vector<std::string> subset;
    for (std::size_t i : chosen) subset.push_back(train_ids[i]);
    const CostMatrix train = submatrix_rows(ctx.matrix, subset);

    learned.add(learned_curve(train, test, adam8p, k_learn));
    bestcase.add(learned_curve(heldout_train, test, adam8p, k_learn));
    rand8.add(random_curve(test, adam8p, k_rand, key.child("rand8")));
  }
  learned.emit("learned_other_families", rows);
  bestcase.emit("bestcase_trained_on_heldout", rows);
  rand8.emit("rand_adam8p", rows);
  metadata["held_out_families"] = ctx.spec.held_out_families;
  metadata["heldout_task_count"] = test_ids.size();
}

void run_param_count_buckets(ExperimentContext& ctx,
                             std::vector<ReportRow>& rows, Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  const auto buckets = bucket_by_param_count(ctx.all_tasks, ctx.store);
  const std::size_t k = std::min(ctx.spec.list_k, adam8p.size());

  // Uniform mixture control draws the same number of tasks per bucket.
  std::size_t min_bucket = std::numeric_limits<std::size_t>::max();
  for (const auto& [b, ids] : buckets) {
    min_bucket = std::min(min_bucket, ids.size());
  }

  std::map<std::string, std::map<int, std::vector<double>>> ratios;
  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    for (const auto& [train_bucket, train_pool] : buckets) {
      Rng rng(key.child("bucket").child(static_cast<std::uint64_t>(
          train_bucket + 64)));
      std::vector<std::size_t> rows_idx(train_pool.size());
      for (std::size_t i = 0; i < rows_idx.size(); ++i) rows_idx[i] = i;
      const std::size_t n_sub = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 0.8 * static_cast<double>(train_pool.size())));
      const std::vector<std::size_t> chosen =
          subsample(rows_idx, n_sub, rng);
      std::vector<std::string> subset;
      for (std::size_t i : chosen) subset.push_back(train_pool[i]);
      const CostMatrix train = submatrix_rows(ctx.matrix, subset);
      const DenseMatrix train_costs =
          column_subset(train.costs_valid, adam8p);
      const GreedySelection sel = greedy_select(train_costs, k);
      std::vector<std::size_t> order;
      for (std::size_t idx : sel.selected) order.push_back(adam8p[idx]);
      const BestOfKCurve on_train =
          evaluate_sequence(train.costs_valid, train.costs_test, order);
      const double j_train = on_train.j_test.back();
      for (const auto& [test_bucket, test_pool] : buckets) {
        const CostMatrix test = submatrix_rows(ctx.matrix, test_pool);
        const BestOfKCurve on_test =
            evaluate_sequence(test.costs_valid, test.costs_test, order);
        const double ratio = j_train / on_test.j_test.back();
        ratios["train_bucket=" + std::to_string(train_bucket)][test_bucket]
            .push_back(ratio);
      }
    }
    // mixture control
    {
      Rng rng(key.child("mixture"));
      std::vector<std::string> subset;
      for (const auto& [b, ids] : buckets) {
        std::vector<std::size_t> rows_idx(ids.size());
        for (std::size_t i = 0; i < rows_idx.size(); ++i) rows_idx[i] = i;
        const std::vector<std::size_t> chosen =
            subsample(rows_idx, std::max<std::size_t>(1, min_bucket), rng);
        for (std::size_t i : chosen) subset.push_back(ids[i]);
      }
      std::sort(subset.begin(), subset.end());
      const CostMatrix train = submatrix_rows(ctx.matrix, subset);
      const DenseMatrix train_costs =
          column_subset(train.costs_valid, adam8p);
      const GreedySelection sel = greedy_select(train_costs, k);
      std::vector<std::size_t> order;
      for (std::size_t idx : sel.selected) order.push_back(adam8p[idx]);
      const BestOfKCurve on_train =
          evaluate_sequence(train.costs_valid, train.costs_test, order);
      const double j_train = on_train.j_test.back();
      for (const auto& [test_bucket, test_pool] : buckets) {
        const CostMatrix test = submatrix_rows(ctx.matrix, test_pool);
        const BestOfKCurve on_test =
            evaluate_sequence(test.costs_valid, test.costs_test, order);
        ratios["train_bucket=mixture"][test_bucket].push_back(
            j_train / on_test.j_test.back());
      }
    }
  }

  for (const auto& [condition, per_bucket] : ratios) {
    for (const auto& [test_bucket, values] : per_bucket) {
      const Stats s = stats_of(values);
      rows.push_back({condition + "|test_bucket=" + std::to_string(test_bucket),
                      k, s.median, s.p25, s.p75, "test"});
    }
  }
  Json sizes = Json::object();
  for (const auto& [b, ids] : buckets) {
    sizes[std::to_string(b)] = ids.size();
  }
  metadata["bucket_sizes"] = sizes;
  metadata["ratio_definition"] =
      "median over resamples of J_train_tasks / J_test_bucket at k=" +
      std::to_string(k) + " (test-split costs, validation-ordered)";
}

void run_short_horizon(ExperimentContext& ctx, std::vector<ReportRow>& rows,
                       Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("short_horizon: no adam8p pool in store");
  }
  const int total = ctx.store.profile().total_steps;
  const std::size_t k_learn = std::min(ctx.spec.k_max, adam8p.size());
  const std::size_t k_rand = std::min(ctx.spec.rand_trials, adam8p.size());

  // One truncated matrix per horizon, shared across resamples.
  std::vector<std::pair<int, CostMatrix>> horizon_matrices;
  for (double frac : ctx.spec.horizon_fractions) {
    const int h = std::max(1, static_cast<int>(std::llround(
                                  frac * static_cast<double>(total))));
    CostMatrixOptions options;
    options.horizon_steps = h;
    horizon_matrices.emplace_back(
        h, build_cost_matrix(ctx.store, ctx.all_tasks, ctx.all_optimizers,
                             options));
  }

  std::map<int, CurveAccumulator> learned;
  for (const auto& [h, m] : horizon_matrices) {
    learned.emplace(h, CurveAccumulator(k_learn));
  }
  CurveAccumulator rand8(k_rand);

  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    const auto [train_ids, test_ids] =
        split_tasks_iid(ctx.all_tasks, ctx.spec.fraction, key.child("split"));
    const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);
    for (const auto& [h, matrix_h] : horizon_matrices) {
      const CostMatrix train_h = submatrix_rows(matrix_h, train_ids);
      learned.at(h).add(learned_curve(train_h, test, adam8p, k_learn));
    }
    rand8.add(random_curve(test, adam8p, k_rand, key.child("rand8")));
  }
  for (const auto& [h, acc] : learned) {
    acc.emit("learned_horizon=" + std::to_string(h), rows);
  }
  rand8.emit("rand_adam8p", rows);
  metadata["total_steps"] = total;
}

void run_theta_size_sweep(ExperimentContext& ctx,
                          std::vector<ReportRow>& rows, Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("theta_size_sweep: no adam8p pool in store");
  }
  std::map<std::size_t, CurveAccumulator> by_size;
  for (std::size_t size : ctx.spec.theta_sizes) {
    if (size < 1 || size > adam8p.size()) continue;
    by_size.emplace(size, CurveAccumulator(std::min<std::size_t>(
                              ctx.spec.list_k, size)));
  }
  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    const auto [train_ids, test_ids] =
        split_tasks_iid(ctx.all_tasks, ctx.spec.fraction, key.child("split"));
    const CostMatrix train = submatrix_rows(ctx.matrix, train_ids);
    const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);
    for (auto& [size, acc] : by_size) {
      Rng rng(key.child("theta").child(size));
      const std::vector<std::size_t> pool = subsample(adam8p, size, rng);
      acc.add(learned_curve(train, test, pool, acc.depth()));
    }
  }
  const std::vector<std::size_t> report_k = {1, ctx.spec.list_k};
  for (const auto& [size, acc] : by_size) {
    acc.emit("theta=" + std::to_string(size), rows, &report_k);
  }
  metadata["theta_sizes"] = ctx.spec.theta_sizes;
}

void run_cross_family_matrix(ExperimentContext& ctx,
                             std::vector<ReportRow>& rows, Json& metadata,
                             std::vector<std::array<std::string, 4>>& grid) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError("cross_family_matrix: no adam8p pool in store");
  }
  std::map<std::string, std::vector<std::string>> by_family;
  for (const std::string& id : ctx.all_tasks) {
    by_family[family_of_task_id(id)].push_back(id);
  }
  std::vector<std::string> families;
  for (const auto& [f, ids] : by_family) families.push_back(f);
  const std::size_t k = std::min(ctx.spec.list_k, adam8p.size());

  // raw J grid: train family row, test family column
  std::map<std::string, std::map<std::string, double>> raw;
  for (const std::string& train_family : families) {
    const CostMatrix train =
        submatrix_rows(ctx.matrix, by_family[train_family]);
    const DenseMatrix train_costs = column_subset(train.costs_valid, adam8p);
    const GreedySelection sel = greedy_select(train_costs, k);
    std::vector<std::size_t> order;
    for (std::size_t idx : sel.selected) order.push_back(adam8p[idx]);
    for (const std::string& test_family : families) {
      const CostMatrix test =
          submatrix_rows(ctx.matrix, by_family[test_family]);
      const BestOfKCurve curve =
          evaluate_sequence(test.costs_valid, test.costs_test, order);
      raw[train_family][test_family] = curve.j_test.back();
    }
  }
  // Per-column 0-1 normalization over train families.
  for (const std::string& test_family : families) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const std::string& train_family : families) {
      lo = std::min(lo, raw[train_family][test_family]);
      hi = std::max(hi, raw[train_family][test_family]);
    }
    for (const std::string& train_family : families) {
      const double v = raw[train_family][test_family];
      const double norm = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      grid.push_back({train_family, test_family, format_double17(v),
                      format_double17(norm)});
      rows.push_back({"train=" + train_family + "|test=" + test_family, k, v,
                      v, v, "test"});
    }
  }
  metadata["families"] = families;
  metadata["grid_normalization"] = "per test-family column, 0-1 over train "
                                   "families";
}

void run_normalization_ablation(ExperimentContext& ctx,
                                std::vector<ReportRow>& rows,
                                Json& metadata) {
  const auto adam8p = ctx.pool_for("adam8p");
  if (adam8p.empty()) {
    throw IncompleteStoreError(
        "normalization_ablation: no adam8p pool in store");
  }
  const std::size_t k_learn = std::min(ctx.spec.k_max, adam8p.size());
  const std::size_t k_rand = std::min(ctx.spec.rand_trials, adam8p.size());

  struct Variant {
    std::string condition;
    Normalizer normalizer;
    Aggregator aggregator;
  };
  const std::vector<Variant> variants = {
      {"train_mean_default", Normalizer::kDefault, Aggregator::kMean},
      {"train_min_default", Normalizer::kDefault, Aggregator::kMin},
      {"train_mean_percentile95", Normalizer::kPercentile95,
       Aggregator::kMean},
      {"train_min_percentile95", Normalizer::kPercentile95, Aggregator::kMin},
  };

  // Training matrices per variant; evaluation always uses default/mean.
  std::vector<CostMatrix> train_matrices;
  std::vector<std::vector<std::string>> variant_tasks;
  for (const Variant& v : variants) {
    CostMatrixOptions options;
    options.normalizer = v.normalizer;
    options.aggregator = v.aggregator;
    try {
      train_matrices.push_back(build_cost_matrix(
          ctx.store, ctx.all_tasks, ctx.all_optimizers, options));
      variant_tasks.push_back(ctx.all_tasks);
    } catch (const DegenerateTaskError&) {
      // Percentile constants can collapse on tasks every optimizer flattens;
      // drop those tasks from the training matrices only.
      std::vector<std::string> kept;
      for (const std::string& id : ctx.all_tasks) {
        try {
          build_cost_matrix(ctx.store, {id}, ctx.all_optimizers, options);
          kept.push_back(id);
        } catch (const DegenerateTaskError&) {
        }
      }
      train_matrices.push_back(
          build_cost_matrix(ctx.store, kept, ctx.all_optimizers, options));
      variant_tasks.push_back(kept);
    }
  }

  std::vector<CurveAccumulator> accs(variants.size(),
                                     CurveAccumulator(k_learn));
  CurveAccumulator rand8(k_rand);
  for (int r = 0; r < ctx.spec.resamples; ++r) {
    const RngKey key = ctx.root.child("resample").child(r);
    const auto [train_ids, test_ids] =
        split_tasks_iid(ctx.all_tasks, ctx.spec.fraction, key.child("split"));
    const CostMatrix test = submatrix_rows(ctx.matrix, test_ids);
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      std::vector<std::string> train_ids_v;
      const std::set<std::string> available(variant_tasks[vi].begin(),
                                            variant_tasks[vi].end());
      for (const std::string& id : train_ids) {
        if (available.count(id)) train_ids_v.push_back(id);
      }
      const CostMatrix train =
          submatrix_rows(train_matrices[vi], train_ids_v);
      accs[vi].add(learned_curve(train, test, adam8p, k_learn));
    }
    rand8.add(random_curve(test, adam8p, k_rand, key.child("rand8")));
  }
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    accs[vi].emit(variants[vi].condition, rows);
  }
  rand8.emit("rand_adam8p", rows);
  metadata["evaluation"] = "default normalizer, mean aggregator";
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec,
                                const EvaluationStore& store) {
  spec.validate();
  if (spec.profile && !spec.profile->same_fingerprint(store.profile())) {
    throw ValidationError("experiment: spec profile differs from the store");
  }

  ExperimentContext ctx{store};
  ctx.spec = spec;
  ctx.all_tasks = store.task_ids();
  ctx.all_optimizers = store.optimizer_ids();
  if (ctx.all_tasks.empty() || ctx.all_optimizers.empty()) {
    throw IncompleteStoreError("experiment: store has no tasks or optimizers");
  }
  const std::vector<StoreGap> gaps =
      store.find_gaps(ctx.all_tasks, ctx.all_optimizers);
  if (!gaps.empty()) {
    std::string msg = "experiment: store incomplete; missing " +
                      std::to_string(gaps.size()) + " records, e.g.";
    for (std::size_t i = 0; i < std::min<std::size_t>(gaps.size(), 5); ++i) {
      msg += " (" + gaps[i].task_id + ", " + gaps[i].optimizer_id + ", seed " +
             std::to_string(gaps[i].seed) + ")";
    }
    throw IncompleteStoreError(msg);
  }

  ctx.matrix = build_cost_matrix(store, ctx.all_tasks, ctx.all_optimizers,
                                 CostMatrixOptions{});
  for (std::size_t j = 0; j < ctx.all_optimizers.size(); ++j) {
    const OptimizerConfig& cfg = store.optimizers().at(ctx.all_optimizers[j]);
    ctx.pool_configs.push_back(cfg);
    ctx.family_columns[cfg.family].push_back(j);
  }
  ctx.root = RngKey::from_seed(kExperimentSalt).child(spec.master_seed)
                 .child(spec.name);

  ExperimentReport report;
  report.spec = spec;
  report.metadata["spec"] = spec.to_json();
  report.metadata["store_hash"] = store.content_hash();
  report.metadata["task_count"] = ctx.all_tasks.size();
  report.metadata["optimizer_count"] = ctx.all_optimizers.size();

  Json& metadata = report.metadata;
  if (spec.name == "iid_generalization") {
    run_iid_generalization(ctx, report.rows, metadata);
  } else if (spec.name == "num_tasks_sweep") {
    run_num_tasks_sweep(ctx, report.rows, metadata);
  } else if (spec.name == "family_holdout") {
    run_family_holdout(ctx, report.rows, metadata);
  } else if (spec.name == "param_count_buckets") {
    run_param_count_buckets(ctx, report.rows, metadata);
  } else if (spec.name == "short_horizon") {
    run_short_horizon(ctx, report.rows, metadata);
  } else if (spec.name == "theta_size_sweep") {
    run_theta_size_sweep(ctx, report.rows, metadata);
  } else if (spec.name == "cross_family_matrix") {
    run_cross_family_matrix(ctx, report.rows, metadata, report.grid);
  } else if (spec.name == "normalization_ablation") {
    run_normalization_ablation(ctx, report.rows, metadata);
  }
  return report;
}

std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::filesystem::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  const fs::path csv_path = out_dir / (report.spec.name + "_report.csv");
  {
    std::ofstream out(csv_path, std::ios::binary);
    out << "condition,k,j_median,j_p25,j_p75,split\n";
    for (const ReportRow& r : report.rows) {
      out << r.condition << "," << r.k << "," << format_double17(r.j_median)
          << "," << format_double17(r.j_p25) << ","
          << format_double17(r.j_p75) << "," << r.split << "\n";
    }
  }
  written.push_back(csv_path.string());

  if (!report.grid.empty()) {
    const fs::path grid_path = out_dir / (report.spec.name + "_grid.csv");
    std::ofstream out(grid_path, std::ios::binary);
    out << "train_family,test_family,j_raw,j_norm\n";
    for (const auto& row : report.grid) {
      out << row[0] << "," << row[1] << "," << row[2] << "," << row[3]
          << "\n";
    }
    written.push_back(grid_path.string());
  }

  const fs::path meta_path = out_dir / (report.spec.name + "_metadata.json");
  {
    std::ofstream out(meta_path, std::ios::binary);
    out << report.metadata.dump(2) << "\n";
  }
  written.push_back(meta_path.string());
  return written;
}

}  // namespace optlist
