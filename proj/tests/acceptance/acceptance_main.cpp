// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 5-10 share a single desk-scale evaluation sweep; the
// store is resumable, so reruns only redo the analysis.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "optlist/experiments.hpp"
#include "optlist/finite_diff.hpp"
#include "optlist/learner.hpp"
#include "optlist/store.hpp"

using namespace optlist;
namespace fs = std::filesystem;

namespace {

class Checker {
 public:
  void report(int criterion, bool ok, const std::string& message) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": "
              << message << std::endl;
    if (!ok) ++failures_;
  }
  void aux(bool ok, const std::string& message) {
    std::cout << (ok ? "PASS" : "FAIL") << " aux check: " << message
              << std::endl;
    if (!ok) ++failures_;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string format3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// --------------------------------------------------------------------------
// Criterion 1: analytic gradients vs the finite-difference oracle.
// --------------------------------------------------------------------------
void criterion_gradient_oracle(Checker& check) {
  const auto start = std::chrono::steady_clock::now();
  const RngKey root = RngKey::from_seed(0xACCE01);
  double worst = 0.0;
  std::string worst_family;
  for (const std::string& family : task_family_names()) {
    int done = 0;
    std::uint64_t attempt = 0;
    while (done < 20) {
      const RngKey key = root.child(family).child(attempt++);
      TaskConfig config = sample_task_config(family, key);
      config.transform.reset();
      if (config.params.contains("noise")) config.params["noise"] = nullptr;
      const auto task = instantiate(config);
      if (task->param_count() > 400) continue;
      const std::vector<double> x = task->initial_params(done);
      const Batch batch = task->batch(Split::kTrain, key.child("batch"));
      if (!std::isfinite(task->loss(x, batch))) continue;
      const std::vector<double> analytic = task->gradient(x, batch);

      std::vector<std::size_t> coords(x.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
      if (coords.size() > 24) {
        Rng rng(key.child("coords"));
        for (std::size_t i = coords.size(); i > 1; --i) {
          const auto j = static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
          std::swap(coords[i - 1], coords[j]);
        }
        coords.resize(24);
      }
      std::vector<double> probe = x;
      for (std::size_t i : coords) {
        const double h = 1e-5 * (1.0 + std::abs(x[i]));
        const double xi = probe[i];
        probe[i] = xi + h;
        const double fp = task->loss(probe, batch);
        probe[i] = xi - h;
        const double fm = task->loss(probe, batch);
        probe[i] = xi;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel =
            std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
        if (rel > worst) {
          worst = rel;
          worst_family = family;
        }
      }
      ++done;
    }
  }
  const double elapsed = seconds_since(start);
  check.report(1, worst <= 1e-4 && elapsed < 60.0,
               "gradient oracle, 20 probes x " +
                   std::to_string(task_family_names().size()) +
                   " families, max rel err " + format3(worst) + " (worst " +
                   worst_family + "), " + format3(elapsed) + "s");
}

// --------------------------------------------------------------------------
// Criterion 2: family nesting (adam8p -> adam4p, nadamw -> adam4p).
// --------------------------------------------------------------------------
void criterion_optimizer_nesting(Checker& check) {
  std::vector<TaskConfig> configs;
  configs.push_back(fixed_twod_task_configs()[0]);  // Bowl1
  configs.push_back(fixed_twod_task_configs()[4]);  // Rosenbrock
  {
    TaskConfig c;
    c.family = "losg_quadratic";
    c.config_seed = 11;
    c.params = Json{{"dim", 20}, {"noise", nullptr}};
    configs.push_back(c);
  }

  OptimizerConfig four;
  four.family = "adam4p";
  four.lr = 0.01;
  four.beta1 = 0.9;
  four.beta2 = 0.999;
  four.epsilon = 1e-8;
  OptimizerConfig eight = four;
  eight.family = "adam8p";
  OptimizerConfig nadamw = four;
  nadamw.family = "nadamw";
  nadamw.nesterov = false;
  nadamw.warmup = 0.0;
  nadamw.constant = 1.0;
  nadamw.min_lr_mult = 0.0;

  double worst = 0.0;
  for (const TaskConfig& config : configs) {
    const auto task = instantiate(config);
    std::vector<double> p4 = task->initial_params(0);
    std::vector<double> p8 = p4;
    std::vector<double> pn = p4;
    OptimizerState s4 = OptimizerState::zeros(p4.size());
    OptimizerState s8 = OptimizerState::zeros(p4.size());
    OptimizerState sn = OptimizerState::zeros(p4.size());
    const RngKey key = RngKey::from_seed(0xACCE02).child(config.task_id());
    for (int t = 0; t < 500; ++t) {
      const Batch b = task->batch(Split::kTrain, key.child(t));
      const std::vector<double> g = task->gradient(p4, b);
      apply_update(four, s4, p4, g, {t, 500});
      apply_update(eight, s8, p8, g, {t, 500});
      apply_update(nadamw, sn, pn, g, {t, 500});
      for (std::size_t i = 0; i < p4.size(); ++i) {
        const double scale = std::max(1.0, std::abs(p4[i]));
        worst = std::max(worst, std::abs(p8[i] - p4[i]) / scale);
        worst = std::max(worst, std::abs(pn[i] - p4[i]) / scale);
      }
    }
  }
  check.report(2, worst <= 1e-12,
               "optimizer nesting over 500 steps on 3 tasks, max per-step "
               "rel deviation " +
                   format3(worst));
}

// --------------------------------------------------------------------------
// Criterion 3: greedy selection vs brute force on random matrices.
// --------------------------------------------------------------------------
void criterion_greedy_correctness(Checker& check) {
  const auto start = std::chrono::steady_clock::now();
  const RngKey root = RngKey::from_seed(0xACCE03);
  bool ok = true;
  std::string detail = "all equalities and orderings held";
  for (int trial = 0; trial < 100 && ok; ++trial) {
    Rng shape(root.child("shape").child(trial));
    const auto tasks = static_cast<std::size_t>(shape.uniform_int(1, 8));
    const auto opts = static_cast<std::size_t>(shape.uniform_int(2, 12));
    DenseMatrix m(tasks, opts);
    Rng rng(root.child("values").child(trial));
    for (double& v : m.data) v = rng.uniform();

    const GreedySelection g1 = greedy_select(m, 1);
    const BruteForceSelection b1 = brute_force_select(m, 1);
    if (g1.selected[0] != b1.best_set[0] ||
        std::abs(g1.j_trace[0] - b1.j) > 1e-12) {
      ok = false;
      detail = "greedy(k=1) differs from brute force on trial " +
               std::to_string(trial);
      break;
    }
    const std::size_t k = std::min<std::size_t>(4, opts);
    const GreedySelection gk = greedy_select(m, opts);
    for (std::size_t i = 1; i < gk.j_trace.size(); ++i) {
      if (gk.j_trace[i] > gk.j_trace[i - 1] + 1e-15) {
        ok = false;
        detail = "greedy J_valid increased in k on trial " +
                 std::to_string(trial);
      }
    }
    const BruteForceSelection bk = brute_force_select(m, k);
    if (gk.j_trace[k - 1] < bk.j - 1e-12) {
      ok = false;
      detail = "greedy beat brute force on trial " + std::to_string(trial);
    }
    const BruteForceSelection ball = brute_force_select(m, opts);
    if (std::abs(gk.j_trace.back() - ball.j) > 1e-12) {
      ok = false;
      detail = "greedy at k=|pool| missed the exact optimum on trial " +
               std::to_string(trial);
    }
  }
  const double elapsed = seconds_since(start);
  check.report(3, ok && elapsed < 60.0,
               "greedy vs brute force on 100 random matrices, " + detail +
                   ", " + format3(elapsed) + "s");
}

// --------------------------------------------------------------------------
// Criterion 4: normalization contract.
// --------------------------------------------------------------------------
void criterion_normalization(Checker& check, const CostMatrix& matrix) {
  bool ok = true;
  std::string detail;

  TrainingCurve curve;
  curve.task_id = "t";
  curve.steps = {0, 1, 2};
  curve.valid_loss = {10.0, 6.0, 2.0};
  curve.train_loss = curve.valid_loss;
  curve.test_loss = curve.valid_loss;
  const NormalizationConstants constants{"t", 10.0, 2.0};
  const auto normalized = normalize_curve(curve, constants, Split::kValid);
  if (normalized != std::vector<double>{1.0, 0.5, 0.0} ||
      aggregate(normalized, Aggregator::kMean) != 0.5) {
    ok = false;
    detail = "hand-arithmetic example failed; ";
  }

  TrainingCurve diverged = curve;
  diverged.valid_loss = {10.0, std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
  diverged.diverged_at = 1;
  const auto dn = normalize_curve(diverged, constants, Split::kValid);
  if (dn[1] != 1.0 || dn[2] != 1.0) {
    ok = false;
    detail += "diverged curve did not score 1; ";
  }

  double lo = 1.0, hi = 0.0;
  for (double v : matrix.costs_valid.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : matrix.costs_test.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo < 0.0 || hi > 1.0) {
    ok = false;
    detail += "matrix entries escape [0,1]; ";
  }
  check.report(4, ok,
               "normalization contract (hand example exact, divergence -> 1, "
               "matrix range [" +
                   format3(lo) + ", " + format3(hi) + "])" +
                   (detail.empty() ? "" : " - " + detail));
}

// --------------------------------------------------------------------------
// Shared desk-scale sweep for criteria 5-10.
// --------------------------------------------------------------------------
struct DeskSweep {
  std::vector<TaskConfig> tasks;
  std::vector<OptimizerConfig> optimizers;
  RunProfile profile;
  fs::path store_a;
  fs::path store_b;
  std::string hash_a;
  std::string hash_b;
};

DeskSweep build_desk_sweep(const fs::path& workdir) {
  DeskSweep sweep;
  sweep.profile.total_steps = 2000;
  sweep.profile.eval_every = 50;
  sweep.profile.eval_batches = 10;
  sweep.profile.seeds = 3;
  sweep.store_a = workdir / "store_a";
  sweep.store_b = workdir / "store_b";

  // 128 accepted sampled tasks + the 12 fixed 2D tasks.
  const RngKey task_root = RngKey::from_seed(1002).child("desk_tasks");
  const std::vector<std::string> families = sampled_task_family_names();
  RejectionPolicy policy;
  std::uint64_t attempt = 0;
  std::map<std::string, int> rejected_by_reason;
  while (sweep.tasks.size() < 128) {
    const RngKey key = task_root.child(attempt++);
    Rng pick(key.child("pick_family"));
    const std::string family = families[static_cast<std::size_t>(
        pick.uniform_int(0, static_cast<std::int64_t>(families.size()) - 1))];
    const TaskConfig config = sample_task_config(family, key);
    const RejectionResult result = reject_task(config, policy);
    if (result.accepted) {
      sweep.tasks.push_back(config);
    } else {
      rejected_by_reason[result.reason] += 1;
    }
  }
  for (const TaskConfig& c : fixed_twod_task_configs()) {
    sweep.tasks.push_back(c);
  }
  std::cout << "desk sweep: sampled " << attempt << " configs for 128 "
            << "accepted; rejections:";
  for (const auto& [reason, count] : rejected_by_reason) {
    std::cout << " " << reason << "=" << count;
  }
  std::cout << std::endl;

  const RngKey opt_root = RngKey::from_seed(2002).child("desk_opts");
  for (int i = 0; i < 256; ++i) {
    sweep.optimizers.push_back(
        sample_optimizer("adam8p", opt_root.child("adam8p").child(i)));
  }
  for (int i = 0; i < 32; ++i) {
    sweep.optimizers.push_back(
        sample_optimizer("adam1p", opt_root.child("adam1p").child(i)));
  }
  for (int i = 0; i < 32; ++i) {
    sweep.optimizers.push_back(
        sample_optimizer("adam4p", opt_root.child("adam4p").child(i)));
  }
  return sweep;
}

// --------------------------------------------------------------------------
// Criteria 5-10.
// --------------------------------------------------------------------------
void criteria_desk_scale(Checker& check, const fs::path& workdir) {
  DeskSweep sweep = build_desk_sweep(workdir);

  auto start = std::chrono::steady_clock::now();
  {
    EvaluationStore store(sweep.store_a);
    store.open(sweep.profile);
    std::ofstream log(workdir / "sweep_a.log");
    sweep.hash_a = run_evaluation_sweep(store, sweep.tasks, sweep.optimizers,
                                        4, log);
  }
  std::cout << "desk sweep A (" << sweep.tasks.size() << " tasks x "
            << sweep.optimizers.size() << " optimizers x "
            << sweep.profile.seeds << " seeds) took "
            << format3(seconds_since(start)) << "s wall" << std::endl;

  start = std::chrono::steady_clock::now();
  {
    EvaluationStore store(sweep.store_b);
    store.open(sweep.profile);
    std::ofstream log(workdir / "sweep_b.log");
    sweep.hash_b = run_evaluation_sweep(store, sweep.tasks, sweep.optimizers,
                                        2, log);
  }
  std::cout << "desk sweep B took " << format3(seconds_since(start))
            << "s wall" << std::endl;

  EvaluationStore store(sweep.store_a);
  store.open_existing();
  const std::vector<std::string> all_tasks = store.task_ids();
  const std::vector<std::string> all_opts = store.optimizer_ids();
  const CostMatrix matrix =
      build_cost_matrix(store, all_tasks, all_opts, CostMatrixOptions{});

  criterion_normalization(check, matrix);

  // Column pools by family.
  std::map<std::string, std::vector<std::size_t>> pools;
  for (std::size_t j = 0; j < all_opts.size(); ++j) {
    pools[store.optimizers().at(all_opts[j]).family].push_back(j);
  }
  const std::vector<std::size_t>& adam8p = pools["adam8p"];

  const fs::path report_dir = workdir / "reports";

  // ---- Criterion 5 + reports: iid generalization ----
  {
    ExperimentSpec spec;
    spec.name = "iid_generalization";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.fraction = 0.5;
    spec.k_max = 100;
    spec.rand_trials = 100;
    const ExperimentReport report = run_experiment(spec, store);
    write_report(report, report_dir);
    double learned10 = -1.0, rand100 = -1.0;
    for (const ReportRow& r : report.rows) {
      if (r.split != "test") continue;
      if (r.condition == "learned_adam8p" && r.k == 10) learned10 = r.j_median;
      if (r.condition == "rand_adam8p" && r.k == 100) rand100 = r.j_median;
    }
    check.report(5, learned10 >= 0.0 && rand100 >= 0.0 &&
                        learned10 <= rand100,
                 "iid 50/50 x20: learned k=10 median test J " +
                     format3(learned10) + " <= rand adam8p k=100 " +
                     format3(rand100));

    // criterion 9 second half: byte-identical reports from the twin store
    EvaluationStore store_b(sweep.store_b);
    store_b.open_existing();
    const ExperimentReport report_b = run_experiment(spec, store_b);
    const fs::path dir_b = workdir / "reports_b";
    write_report(report_b, dir_b);
    auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    };
    const bool reports_equal =
        read(report_dir / "iid_generalization_report.csv") ==
            read(dir_b / "iid_generalization_report.csv") &&
        read(report_dir / "iid_generalization_metadata.json") ==
            read(dir_b / "iid_generalization_metadata.json");
    check.report(9, sweep.hash_a == sweep.hash_b && reports_equal,
                 "sweeps with 4 vs 2 workers: store hashes " + sweep.hash_a +
                     (sweep.hash_a == sweep.hash_b ? " == " : " != ") +
                     sweep.hash_b + ", reports byte-identical: " +
                     (reports_equal ? "yes" : "no"));
  }

  // ---- Criterion 6: more training tasks help (paired over resamples) ----
  {
    const double fraction = 128.0 / static_cast<double>(all_tasks.size());
    const RngKey root = RngKey::from_seed(0xACCE06);
    int favorable = 0;
    const int resamples = 20;
    for (int r = 0; r < resamples; ++r) {
      const RngKey key = root.child(r);
      const auto [train_ids, test_ids] =
          split_tasks_iid(all_tasks, fraction, key.child("split"));
      const CostMatrix train = cost_matrix_row_subset(matrix, train_ids);
      const CostMatrix test = cost_matrix_row_subset(matrix, test_ids);

      auto learned_j10 = [&](const CostMatrix& train_matrix) {
        DenseMatrix costs(train_matrix.tasks.size(), adam8p.size());
        for (std::size_t t = 0; t < train_matrix.tasks.size(); ++t) {
          for (std::size_t j = 0; j < adam8p.size(); ++j) {
            costs.at(t, j) = train_matrix.costs_valid.at(t, adam8p[j]);
          }
        }
        const GreedySelection sel =
            greedy_select(costs, std::min<std::size_t>(10, adam8p.size()));
        std::vector<std::size_t> order;
        for (std::size_t idx : sel.selected) order.push_back(adam8p[idx]);
        const BestOfKCurve curve =
            evaluate_sequence(test.costs_valid, test.costs_test, order);
        return curve.j_test.back();
      };

      const double j_full = learned_j10(train);
      // random 8-task subset of the training half
      std::vector<std::string> small_ids = train_ids;
      Rng rng(key.child("small"));
      for (std::size_t i = small_ids.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(small_ids[i - 1], small_ids[j]);
      }
      small_ids.resize(8);
      std::sort(small_ids.begin(), small_ids.end());
      const double j_small =
          learned_j10(cost_matrix_row_subset(matrix, small_ids));
      if (j_full <= j_small) ++favorable;
    }
    const double frac =
        static_cast<double>(favorable) / static_cast<double>(resamples);
    check.report(6, frac >= 0.8,
                 "128-task lists beat 8-task lists at k=10 in " +
                     std::to_string(favorable) + "/20 resamplings");
  }

  // ---- Criterion 7: short horizon ----
  {
    ExperimentSpec spec;
    spec.name = "short_horizon";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.k_max = 10;
    spec.rand_trials = 10;
    spec.horizon_fractions = {0.2};
    const ExperimentReport report = run_experiment(spec, store);
    write_report(report, report_dir);
    const int horizon_steps =
        static_cast<int>(0.2 * sweep.profile.total_steps);
    double learned = -1.0, rand10 = -1.0;
    for (const ReportRow& r : report.rows) {
      if (r.split != "test" || r.k != 10) continue;
      if (r.condition ==
          "learned_horizon=" + std::to_string(horizon_steps)) {
        learned = r.j_median;
      }
      if (r.condition == "rand_adam8p") rand10 = r.j_median;
    }
    check.report(7, learned >= 0.0 && rand10 >= 0.0 && learned <= rand10,
                 "20% horizon list at k=10 median test J " + format3(learned) +
                     " <= rand adam8p k=10 " + format3(rand10));
  }

  // ---- Criterion 8: theta size sweep ----
  {
    ExperimentSpec spec;
    spec.name = "theta_size_sweep";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.list_k = 10;
    spec.theta_sizes = {16, 32, 64, 128, 256};
    const ExperimentReport report = run_experiment(spec, store);
    write_report(report, report_dir);
    double j32 = -1.0, j256 = -1.0;
    for (const ReportRow& r : report.rows) {
      if (r.split != "test" || r.k != 10) continue;
      if (r.condition == "theta=32") j32 = r.j_median;
      if (r.condition == "theta=256") j256 = r.j_median;
    }
    check.report(8, j32 >= 0.0 && j256 >= 0.0 && j256 <= j32,
                 "theta sweep at k=10: |theta|=256 median test J " +
                     format3(j256) + " <= |theta|=32 " + format3(j32));
  }

  // ---- Criterion 10: aggregation ablation ----
  {
    // (a) Spearman between mean- and min-aggregated costs per task.
    CostMatrixOptions min_options;
    min_options.aggregator = Aggregator::kMin;
    const CostMatrix min_matrix =
        build_cost_matrix(store, all_tasks, all_opts, min_options);
    double worst_rho = 1.0;
    int tasks_checked = 0;
    for (std::size_t t = 0; t < all_tasks.size(); ++t) {
      const auto records = store.load_task_records(all_tasks[t]);
      std::set<std::string> diverged;
      for (const CurveRecord& r : records) {
        if (r.curve.diverged_at) diverged.insert(r.curve.optimizer_id);
      }
      std::vector<double> mean_costs, min_costs;
      for (std::size_t j = 0; j < all_opts.size(); ++j) {
        if (diverged.count(all_opts[j])) continue;
        mean_costs.push_back(matrix.costs_valid.at(t, j));
        min_costs.push_back(min_matrix.costs_valid.at(t, j));
      }
      if (mean_costs.size() < 10) continue;
      ++tasks_checked;
      worst_rho = std::min(
          worst_rho, spearman_correlation(mean_costs, min_costs));
    }
    const bool rho_ok = tasks_checked > 0 && worst_rho > 0.0;

    // (b) percentile-normalized training still beats random search.
    ExperimentSpec spec;
    spec.name = "normalization_ablation";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.k_max = 10;
    spec.rand_trials = 10;
    const ExperimentReport report = run_experiment(spec, store);
    write_report(report, report_dir);
    double pct = -1.0, rand10 = -1.0;
    for (const ReportRow& r : report.rows) {
      if (r.split != "test" || r.k != 10) continue;
      if (r.condition == "train_mean_percentile95") pct = r.j_median;
      if (r.condition == "rand_adam8p") rand10 = r.j_median;
    }
    const bool pct_ok = pct >= 0.0 && rand10 >= 0.0 && pct <= rand10;
    check.report(10, rho_ok && pct_ok,
                 "mean-vs-min Spearman > 0 on " +
                     std::to_string(tasks_checked) + " tasks (worst " +
                     format3(worst_rho) + "); percentile-trained list k=10 " +
                     format3(pct) + " <= rand " + format3(rand10));
  }

  // ---- Remaining report coverage + aux checks ----
  {
    ExperimentSpec spec;
    spec.name = "num_tasks_sweep";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.k_max = 20;
    spec.fraction = 128.0 / static_cast<double>(all_tasks.size());
    spec.train_task_counts = {8, 16, 32, 64, 128};
    write_report(run_experiment(spec, store), report_dir);
  }
  {
    ExperimentSpec spec;
    spec.name = "family_holdout";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.k_max = 20;
    spec.rand_trials = 20;
    spec.held_out_families = {"quadratic_like"};
    write_report(run_experiment(spec, store), report_dir);
  }
  {
    ExperimentSpec spec;
    spec.name = "param_count_buckets";
    spec.resamples = 20;
    spec.master_seed = 7;
    spec.list_k = 10;
    write_report(run_experiment(spec, store), report_dir);
  }
  {
    ExperimentSpec spec;
    spec.name = "cross_family_matrix";
    spec.resamples = 1;
    spec.master_seed = 7;
    spec.list_k = 10;
    const ExperimentReport report = run_experiment(spec, store);
    write_report(report, report_dir);
    // diagonal at or below the column median for >= 80% of families
    std::map<std::string, std::vector<std::pair<std::string, double>>> cols;
    for (const auto& row : report.grid) {
      cols[row[1]].push_back({row[0], std::stod(row[3])});
    }
    int good = 0;
    for (const auto& [test_family, entries] : cols) {
      std::vector<double> values;
      double diag = 1.0;
      for (const auto& [train_family, v] : entries) {
        values.push_back(v);
        if (train_family == test_family) diag = v;
      }
      if (diag <= nearest_rank_percentile(values, 50.0)) ++good;
    }
    const double frac =
        static_cast<double>(good) / static_cast<double>(cols.size());
    check.aux(frac >= 0.8,
              "cross-family diagonal <= column median for " +
                  std::to_string(good) + "/" + std::to_string(cols.size()) +
                  " families");
  }
  {
    const fs::path features = workdir / "features.csv";
    const auto [rows, cols] = export_feature_matrix(
        store, Normalizer::kDefault, Aggregator::kMean, features);
    check.aux(rows == all_tasks.size() && cols == all_opts.size() + 1,
              "feature matrix export " + std::to_string(rows) + " x " +
                  std::to_string(cols));
  }
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = "acceptance_work";
  if (argc > 1) workdir = argv[1];
  fs::create_directories(workdir);
  std::cout << "acceptance workdir: " << fs::absolute(workdir) << std::endl;

  Checker check;
  criterion_gradient_oracle(check);
  criterion_optimizer_nesting(check);
  criterion_greedy_correctness(check);
  criteria_desk_scale(check, workdir);

  if (check.failures() == 0) {
    std::cout << "acceptance: all criteria passed" << std::endl;
    return 0;
  }
  std::cout << "acceptance: " << check.failures() << " criteria FAILED"
            << std::endl;
  return 1;
}
