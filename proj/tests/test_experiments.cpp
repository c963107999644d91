#include <fstream>
#include <sstream>

#include <doctest.h>

#include "optlist/errors.hpp"
#include "optlist/experiments.hpp"

using namespace optlist;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("optlist_exp_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunProfile tiny_profile() {
  RunProfile p;
  p.total_steps = 40;
  p.eval_every = 10;
  p.eval_batches = 2;
  p.seeds = 2;
  return p;
}

std::vector<TaskConfig> tiny_tasks() {
  std::vector<TaskConfig> tasks;
  const auto fixed = fixed_twod_task_configs();
  for (std::size_t i = 0; i < 6; ++i) tasks.push_back(fixed[i]);
  const RngKey key = RngKey::from_seed(505);
  tasks.push_back(sample_task_config("losg_bowl", key.child(1)));
  tasks.push_back(sample_task_config("losg_dependency_chain", key.child(2)));
  return tasks;
}

std::vector<OptimizerConfig> tiny_pool() {
  std::vector<OptimizerConfig> pool;
  const RngKey key = RngKey::from_seed(606);
  for (int i = 0; i < 8; ++i) {
    pool.push_back(sample_optimizer("adam8p", key.child("a8").child(i)));
  }
  for (int i = 0; i < 4; ++i) {
    pool.push_back(sample_optimizer("adam1p", key.child("a1").child(i)));
  }
  for (int i = 0; i < 4; ++i) {
    pool.push_back(sample_optimizer("adam4p", key.child("a4").child(i)));
  }
  return pool;
}

// One shared store for the experiment tests; built once.
const fs::path& shared_store_dir() {
  static TempDir tmp;
  static bool built = false;
  if (!built) {
    EvaluationStore store(tmp.path);
    store.open(tiny_profile());
    std::ostringstream sink;
    run_evaluation_sweep(store, tiny_tasks(), tiny_pool(), 2, sink);
    built = true;
  }
  return tmp.path;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("iid splits are disjoint, exhaustive, and deterministic") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("task" + std::to_string(i));
  const RngKey key = RngKey::from_seed(99);
  const auto [train, test] = split_tasks_iid(ids, 0.5, key);
  CHECK(train.size() == 5);
  CHECK(test.size() == 5);
  std::set<std::string> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 10);
  const auto [train2, test2] = split_tasks_iid(ids, 0.5, key);
  CHECK(train == train2);
  CHECK(test == test2);
  CHECK_THROWS_AS(split_tasks_iid({"only"}, 0.5, key), UsageError);
}

TEST_CASE("family holdout separates exactly the named families") {
  const std::vector<std::string> ids = {
      "quadratic_like-aaaa", "losg_bowl-bbbb", "quadratic_like-cccc",
      "losg_norm-dddd"};
  const auto [train, test] = holdout_by_family(ids, {"quadratic_like"});
  CHECK(test == std::vector<std::string>{"quadratic_like-aaaa",
                                         "quadratic_like-cccc"});
  for (const std::string& id : train) {
    CHECK(family_of_task_id(id) != "quadratic_like");
  }
  CHECK_THROWS_AS(holdout_by_family(ids, {}), UsageError);
  CHECK_THROWS_AS(holdout_by_family(ids, {"bogus_family"}), UsageError);
  CHECK_THROWS_AS(
      holdout_by_family({"losg_bowl-x"}, {"losg_bowl"}), UsageError);
}

TEST_CASE("param-count buckets follow powers of ten") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  const auto buckets = bucket_by_param_count(store.task_ids(), store);
  std::size_t total = 0;
  for (const auto& [b, ids] : buckets) {
    total += ids.size();
    for (const std::string& id : ids) {
      const auto records = store.load_task_records(id);
      const double n = static_cast<double>(records.front().curve.n_params);
      CHECK(n >= std::pow(10.0, b));
      CHECK(n < std::pow(10.0, b + 1));
    }
  }
  CHECK(total == store.task_ids().size());
}

TEST_CASE("sweep covers the cross product and resumes idempotently") {
  TempDir tmp;
  const auto tasks = tiny_tasks();
  const auto pool = tiny_pool();
  std::ostringstream sink;

  EvaluationStore store(tmp.path);
  store.open(tiny_profile());
  const std::string hash1 =
      run_evaluation_sweep(store, tasks, pool, 1, sink);
  CHECK(store.record_count() == tasks.size() * pool.size() * 2);

  // rerun only fills gaps; hash unchanged
  const std::string hash2 =
      run_evaluation_sweep(store, tasks, pool, 1, sink);
  CHECK(hash1 == hash2);
  CHECK(store.record_count() == tasks.size() * pool.size() * 2);

  // a different worker count lands on the identical store
  EvaluationStore parallel(shared_store_dir());
  parallel.open_existing();
  CHECK(parallel.content_hash() == hash1);
}

TEST_CASE("experiment requires a complete store") {
  TempDir tmp;
  EvaluationStore store(tmp.path);
  store.open(tiny_profile());
  const auto tasks = tiny_tasks();
  const auto pool = tiny_pool();
  std::ostringstream sink;
  run_evaluation_sweep(store, tasks, pool, 1, sink);
  // register a task with no records
  store.register_task(sample_task_config("losg_bowl",
                                         RngKey::from_seed(8181)));
  ExperimentSpec spec;
  spec.name = "iid_generalization";
  spec.resamples = 2;
  spec.k_max = 6;
  spec.rand_trials = 6;
  CHECK_THROWS_AS(run_experiment(spec, store), IncompleteStoreError);
}

TEST_CASE("iid generalization report has the expected conditions") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "iid_generalization";
  spec.resamples = 3;
  spec.k_max = 8;
  spec.rand_trials = 8;
  const ExperimentReport report = run_experiment(spec, store);
  std::set<std::string> conditions;
  for (const ReportRow& r : report.rows) {
    conditions.insert(r.condition);
    CHECK(r.j_median >= 0.0);
    CHECK(r.j_median <= 1.0);
    CHECK(r.j_p25 <= r.j_p75);
    CHECK((r.split == "valid" || r.split == "test"));
  }
  CHECK(conditions.count("learned_adam8p"));
  CHECK(conditions.count("rand_adam8p"));
  CHECK(conditions.count("rand_adam1p"));
  CHECK(conditions.count("rand_adam4p"));
  CHECK(conditions.count("rand_posthoc_minmax"));
  CHECK(conditions.count("rand_posthoc_percentile"));

  // learned J_valid is non-increasing in k
  std::map<std::size_t, double> valid_by_k;
  for (const ReportRow& r : report.rows) {
    if (r.condition == "learned_adam8p" && r.split == "valid") {
      valid_by_k[r.k] = r.j_median;
    }
  }
  double prev = 2.0;
  for (const auto& [k, j] : valid_by_k) {
    CHECK(j <= prev + 1e-12);
    prev = j;
  }
}

TEST_CASE("reports regenerate byte-identically") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "num_tasks_sweep";
  spec.resamples = 2;
  spec.k_max = 5;
  spec.train_task_counts = {2, 4};
  TempDir out1, out2;
  const ExperimentReport r1 = run_experiment(spec, store);
  const ExperimentReport r2 = run_experiment(spec, store);
  write_report(r1, out1.path);
  write_report(r2, out2.path);
  CHECK(read_file(out1.path / "num_tasks_sweep_report.csv") ==
        read_file(out2.path / "num_tasks_sweep_report.csv"));
  CHECK(read_file(out1.path / "num_tasks_sweep_metadata.json") ==
        read_file(out2.path / "num_tasks_sweep_metadata.json"));
  CHECK(read_file(out1.path / "num_tasks_sweep_report.csv")
            .find("train_tasks=2") != std::string::npos);
}

TEST_CASE("short horizon at the full horizon equals the iid learned curve") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec iid;
  iid.name = "iid_generalization";
  iid.resamples = 2;
  iid.k_max = 6;
  iid.rand_trials = 6;
  ExperimentSpec horizon = iid;
  horizon.name = "short_horizon";
  horizon.horizon_fractions = {1.0};
  const ExperimentReport a = run_experiment(iid, store);
  const ExperimentReport b = run_experiment(horizon, store);
  std::map<std::pair<std::size_t, std::string>, double> learned_iid;
  for (const ReportRow& r : a.rows) {
    if (r.condition == "learned_adam8p") learned_iid[{r.k, r.split}] = r.j_median;
  }
  int compared = 0;
  for (const ReportRow& r : b.rows) {
    if (r.condition.rfind("learned_horizon=", 0) == 0) {
      REQUIRE(learned_iid.count({r.k, r.split}) == 1);
      CHECK(r.j_median == learned_iid[{r.k, r.split}]);
      ++compared;
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("theta size sweep reports k = 1 and k = list_k") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "theta_size_sweep";
  spec.resamples = 2;
  spec.list_k = 4;
  spec.theta_sizes = {4, 8};
  const ExperimentReport report = run_experiment(spec, store);
  std::set<std::pair<std::string, std::size_t>> seen;
  for (const ReportRow& r : report.rows) seen.insert({r.condition, r.k});
  CHECK(seen.count({"theta=4", 1}));
  CHECK(seen.count({"theta=4", 4}));
  CHECK(seen.count({"theta=8", 1}));
  CHECK(seen.count({"theta=8", 4}));
}

TEST_CASE("cross family grid is column normalized") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "cross_family_matrix";
  spec.list_k = 4;
  spec.resamples = 1;
  const ExperimentReport report = run_experiment(spec, store);
  CHECK_FALSE(report.grid.empty());
  for (const auto& row : report.grid) {
    const double norm = std::stod(row[3]);
    CHECK(norm >= 0.0);
    CHECK(norm <= 1.0);
  }
}

TEST_CASE("normalization ablation trains all four variants") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "normalization_ablation";
  spec.resamples = 2;
  spec.k_max = 6;
  spec.rand_trials = 6;
  const ExperimentReport report = run_experiment(spec, store);
  std::set<std::string> conditions;
  for (const ReportRow& r : report.rows) conditions.insert(r.condition);
  CHECK(conditions.count("train_mean_default"));
  CHECK(conditions.count("train_min_default"));
  CHECK(conditions.count("train_mean_percentile95"));
  CHECK(conditions.count("train_min_percentile95"));
  CHECK(conditions.count("rand_adam8p"));
}

TEST_CASE("family holdout experiment runs end to end") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "family_holdout";
  spec.resamples = 2;
  spec.k_max = 6;
  spec.rand_trials = 6;
  spec.held_out_families = {"twod_fixed"};
  const ExperimentReport report = run_experiment(spec, store);
  std::set<std::string> conditions;
  for (const ReportRow& r : report.rows) conditions.insert(r.condition);
  CHECK(conditions.count("learned_other_families"));
  CHECK(conditions.count("bestcase_trained_on_heldout"));
  CHECK(conditions.count("rand_adam8p"));
}

TEST_CASE("param count bucket experiment emits train/test ratios") {
  EvaluationStore store(shared_store_dir());
  store.open_existing();
  ExperimentSpec spec;
  spec.name = "param_count_buckets";
  spec.resamples = 2;
  spec.list_k = 4;
  const ExperimentReport report = run_experiment(spec, store);
  CHECK_FALSE(report.rows.empty());
  bool mixture_seen = false;
  for (const ReportRow& r : report.rows) {
    CHECK(r.condition.find("test_bucket=") != std::string::npos);
    if (r.condition.rfind("train_bucket=mixture", 0) == 0) mixture_seen = true;
    CHECK(r.j_median > 0.0);
  }
  CHECK(mixture_seen);
  CHECK(report.metadata.contains("ratio_definition"));
}

TEST_CASE("experiment spec JSON round trip and validation") {
  ExperimentSpec spec;
  spec.name = "iid_generalization";
  const Json j = spec.to_json();
  const ExperimentSpec back = ExperimentSpec::from_json(j);
  CHECK(back.name == spec.name);
  CHECK(back.resamples == spec.resamples);

  Json bad = j;
  bad["name"] = "nonsense";
  CHECK_THROWS_AS(ExperimentSpec::from_json(bad), UsageError);
  bad = j;
  bad["fraction"] = 1.5;
  CHECK_THROWS_AS(ExperimentSpec::from_json(bad), UsageError);
}
