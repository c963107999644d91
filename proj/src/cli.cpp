#include "optlist/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "optlist/errors.hpp"
#include "optlist/experiments.hpp"
#include "optlist/learner.hpp"
#include "optlist/store.hpp"

namespace fs = std::filesystem;

namespace optlist::cli {

namespace {

// --config overlay: JSON keys mirror long flag names (without dashes);
// explicit flags win.
Json load_config_overlay(int argc, const char* const* argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) {
        throw UsageError(std::string("cannot open config file ") +
                         argv[i + 1]);
      }
      return Json::parse(in);
    }
  }
  return Json::object();
}

template <typename T>
void overlay_default(const Json& overlay, const std::string& key, T& value) {
  if (overlay.contains(key)) value = overlay.at(key).get<T>();
}

std::string default_store_path() {
  const char* env = std::getenv("OPTLIST_STORE");
  return env ? env : "";
}

std::vector<TaskConfig> read_task_configs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open task file " + path.string());
  std::vector<TaskConfig> configs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      configs.push_back(TaskConfig::from_json(Json::parse(line)));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return configs;
}

std::vector<OptimizerConfig> read_optimizer_configs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open optimizer file " + path.string());
  std::vector<OptimizerConfig> configs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      configs.push_back(OptimizerConfig::from_json(Json::parse(line)));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return configs;
}

std::string families_help(const std::vector<std::string>& names) {
  std::string s;
  for (const std::string& n : names) s += n + " ";
  return s;
}

int cmd_sample_tasks(const std::string& family, int count,
                     std::uint64_t seed, const std::string& out_path,
                     bool reject, double budget_seconds, std::ostream& out) {
  std::vector<std::string> valid = task_family_names();
  valid.push_back("mixed");
  if (std::find(valid.begin(), valid.end(), family) == valid.end()) {
    throw UsageError("unknown task family '" + family +
                     "'; valid families: " + families_help(valid));
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw UsageError("cannot open output file " + out_path);

  RejectionPolicy policy;
  policy.per_run_seconds_budget = budget_seconds;

  const RngKey root = RngKey::from_seed(seed).child("sample_tasks");
  const std::vector<std::string> sampled_families =
      sampled_task_family_names();
  int accepted = 0;
  int rejected = 0;
  std::uint64_t attempt = 0;

  if (family == "twod_fixed") {
    const auto fixed = fixed_twod_task_configs();
    if (count > static_cast<int>(fixed.size())) {
      throw UsageError("twod_fixed has exactly " +
                       std::to_string(fixed.size()) + " tasks");
    }
    for (int i = 0; i < count; ++i) {
      file << fixed[static_cast<std::size_t>(i)].to_json().dump() << "\n";
      ++accepted;
    }
  } else {
    while (accepted < count) {
      const RngKey key = root.child(attempt);
      ++attempt;
      std::string f = family;
      if (family == "mixed") {
        Rng rng(key.child("pick_family"));
        f = sampled_families[static_cast<std::size_t>(rng.uniform_int(
            0, static_cast<std::int64_t>(sampled_families.size()) - 1))];
      }
      const TaskConfig config = sample_task_config(f, key);
      if (reject) {
        const RejectionResult result = reject_task(config, policy);
        if (!result.accepted) {
          ++rejected;
          continue;
        }
      }
      file << config.to_json().dump() << "\n";
      ++accepted;
    }
  }
  out << "accepted " << accepted << ", rejected " << rejected << "\n";
  return 0;
}

int cmd_sample_optimizers(const std::string& family, int count,
                          std::uint64_t seed, const std::string& out_path,
                          std::ostream& out) {
  if (!is_optimizer_family(family)) {
    throw UsageError("unknown optimizer family '" + family +
                     "'; valid families: " +
                     families_help(optimizer_family_names()));
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw UsageError("cannot open output file " + out_path);
  const RngKey root = RngKey::from_seed(seed).child("sample_optimizers")
                          .child(family);
  for (int i = 0; i < count; ++i) {
    const OptimizerConfig c =
        sample_optimizer(family, root.child(static_cast<std::uint64_t>(i)));
    file << "{\"optimizer_id\":\"" << c.optimizer_id() << "\","
         << c.to_json_line().substr(1) << "\n";
  }
  out << "wrote " << count << " " << family << " configs\n";
  return 0;
}

int cmd_evaluate(const std::string& tasks_path, const std::string& opts_path,
                 int seeds, int steps, int eval_every, int eval_batches,
                 int workers, const std::string& store_path,
                 std::ostream& out) {
  if (store_path.empty()) {
    throw UsageError("no store path (use --store or OPTLIST_STORE)");
  }
  // Validate every input config before any training.
  const std::vector<TaskConfig> tasks = read_task_configs(tasks_path);
  const std::vector<OptimizerConfig> opts = read_optimizer_configs(opts_path);
  for (const TaskConfig& t : tasks) instantiate(t);

  RunProfile profile;
  profile.total_steps = steps;
  profile.eval_every = eval_every;
  profile.eval_batches = eval_batches;
  profile.seeds = seeds;
  profile.validate();

  EvaluationStore store((fs::path(store_path)));
  store.open(profile);
  const std::size_t before = store.record_count();
  const std::string hash =
      run_evaluation_sweep(store, tasks, opts, workers, out);
  out << "records written " << (store.record_count() - before)
      << ", skipped " << before << " existing\n";
  out << "store hash " << hash << "\n";
  return 0;
}

int cmd_learn_list(const std::string& store_path,
                   const std::string& tasks_path, int k,
                   const std::string& normalizer_name_arg,
                   const std::string& aggregator_name_arg,
                   const std::string& out_path, std::ostream& out) {
  if (store_path.empty()) {
    throw UsageError("no store path (use --store or OPTLIST_STORE)");
  }
  EvaluationStore store((fs::path(store_path)));
  store.open_existing();

  std::vector<std::string> task_ids;
  if (tasks_path.empty()) {
    task_ids = store.task_ids();
  } else {
    for (const TaskConfig& c : read_task_configs(tasks_path)) {
      task_ids.push_back(c.task_id());
    }
  }
  const std::vector<std::string> optimizer_ids = store.optimizer_ids();
  if (k < 1 || static_cast<std::size_t>(k) > optimizer_ids.size()) {
    throw UsageError("--k must be in [1, " +
                     std::to_string(optimizer_ids.size()) + "]");
  }
  const std::vector<StoreGap> gaps = store.find_gaps(task_ids, optimizer_ids);
  if (!gaps.empty()) {
    std::string msg = "store incomplete; " + std::to_string(gaps.size()) +
                      " missing records, e.g.";
    for (std::size_t i = 0; i < std::min<std::size_t>(gaps.size(), 5); ++i) {
      msg += " (" + gaps[i].task_id + ", " + gaps[i].optimizer_id + ", seed " +
             std::to_string(gaps[i].seed) + ")";
    }
    throw IncompleteStoreError(msg);
  }

  CostMatrixOptions options;
  options.normalizer = normalizer_from_name(normalizer_name_arg);
  options.aggregator = aggregator_from_name(aggregator_name_arg);
  const CostMatrix matrix =
      build_cost_matrix(store, task_ids, optimizer_ids, options);
  std::vector<OptimizerConfig> pool;
  for (const std::string& id : optimizer_ids) {
    pool.push_back(store.optimizers().at(id));
  }
  const HyperparameterList list =
      greedy_learn(matrix, static_cast<std::size_t>(k), pool);

  if (!out_path.empty()) {
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw UsageError("cannot open output file " + out_path);
    file << list.to_json().dump(2) << "\n";
  }
  out << hparam_table(list.entries);
  out << "J_valid trace:";
  for (double j : list.j_valid_trace) out << " " << format_double17(j);
  out << "\n";
  return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& store_path,
                   const std::string& out_dir, std::ostream& out) {
  if (store_path.empty()) {
    throw UsageError("no store path (use --store or OPTLIST_STORE)");
  }
  std::ifstream in(spec_path);
  if (!in) throw UsageError("cannot open spec file " + spec_path);
  Json spec_json;
  try {
    spec_json = Json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("spec file: " + std::string(e.what()));
  }
  const ExperimentSpec spec = ExperimentSpec::from_json(spec_json);
  EvaluationStore store((fs::path(store_path)));
  store.open_existing();
  const ExperimentReport report = run_experiment(spec, store);
  const std::vector<std::string> files = write_report(report, out_dir);
  std::set<std::string> conditions;
  for (const ReportRow& r : report.rows) conditions.insert(r.condition);
  for (const std::string& c : conditions) out << "condition " << c << "\n";
  for (const std::string& f : files) out << "wrote " << f << "\n";
  return 0;
}

int cmd_export_features(const std::string& store_path,
                        const std::string& out_path,
                        const std::string& normalizer_name_arg,
                        const std::string& aggregator_name_arg,
                        std::ostream& out) {
  if (store_path.empty()) {
    throw UsageError("no store path (use --store or OPTLIST_STORE)");
  }
  EvaluationStore store((fs::path(store_path)));
  store.open_existing();
  const std::vector<StoreGap> gaps =
      store.find_gaps(store.task_ids(), store.optimizer_ids());
  if (!gaps.empty()) {
    throw IncompleteStoreError("store incomplete; " +
                               std::to_string(gaps.size()) +
                               " missing records");
  }
  const auto [rows, cols] = export_feature_matrix(
      store, normalizer_from_name(normalizer_name_arg),
      aggregator_from_name(aggregator_name_arg), out_path);
  out << "wrote " << rows << " rows x " << cols << " cols to " << out_path
      << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  try {
    const Json overlay = load_config_overlay(argc, argv);

    CLI::App app{"Learned hyperparameter lists over a synthetic task suite"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON file whose keys mirror long flag names");

    // sample-tasks
    auto* sample_tasks = app.add_subcommand(
        "sample-tasks", "Sample task configs with rejection filtering");
    std::string st_family = "mixed";
    int st_count = 8;
    std::uint64_t st_seed = 0;
    std::string st_out = "tasks.jsonl";
    bool st_reject = true;
    double st_budget = 0.1;
    overlay_default(overlay, "family", st_family);
    overlay_default(overlay, "count", st_count);
    overlay_default(overlay, "seed", st_seed);
    overlay_default(overlay, "out", st_out);
    overlay_default(overlay, "reject", st_reject);
    overlay_default(overlay, "budget-seconds", st_budget);
    sample_tasks->add_option("--family", st_family,
                             "Task family (or 'mixed')");
    sample_tasks->add_option("--count", st_count, "Accepted configs to emit");
    sample_tasks->add_option("--seed", st_seed, "Sampling seed");
    sample_tasks->add_option("--out", st_out, "Output JSONL path");
    sample_tasks->add_flag("--reject,!--no-reject", st_reject,
                           "Apply rejection filtering (default on)");
    sample_tasks->add_option("--budget-seconds", st_budget,
                             "Per-run time budget for rejection rule (c)");

    // sample-optimizers
    auto* sample_opts = app.add_subcommand("sample-optimizers",
                                           "Sample optimizer configs");
    std::string so_family = "adam8p";
    int so_count = 8;
    std::uint64_t so_seed = 0;
    std::string so_out = "optimizers.jsonl";
    overlay_default(overlay, "family", so_family);
    overlay_default(overlay, "count", so_count);
    overlay_default(overlay, "seed", so_seed);
    overlay_default(overlay, "out", so_out);
    sample_opts->add_option("--family", so_family, "Optimizer family");
    sample_opts->add_option("--count", so_count, "Configs to emit");
    sample_opts->add_option("--seed", so_seed, "Sampling seed");
    sample_opts->add_option("--out", so_out, "Output JSONL path");

    // evaluate
    auto* evaluate = app.add_subcommand(
        "evaluate", "Train every (task, optimizer, seed) into the store");
    std::string ev_tasks, ev_opts;
    int ev_seeds = 3, ev_steps = 2000, ev_every = 50, ev_batches = 10;
    int ev_workers = 1;
    std::string ev_store = default_store_path();
    overlay_default(overlay, "tasks", ev_tasks);
    overlay_default(overlay, "opts", ev_opts);
    overlay_default(overlay, "seeds", ev_seeds);
    overlay_default(overlay, "steps", ev_steps);
    overlay_default(overlay, "eval-every", ev_every);
    overlay_default(overlay, "eval-batches", ev_batches);
    overlay_default(overlay, "workers", ev_workers);
    overlay_default(overlay, "store", ev_store);
    evaluate->add_option("--tasks", ev_tasks, "Task configs JSONL")
        ->required();
    evaluate->add_option("--opts", ev_opts, "Optimizer configs JSONL")
        ->required();
    evaluate->add_option("--seeds", ev_seeds, "Seeds per pair");
    evaluate->add_option("--steps", ev_steps, "Training steps");
    evaluate->add_option("--eval-every", ev_every, "Evaluation period");
    evaluate->add_option("--eval-batches", ev_batches,
                         "Batches averaged per evaluation");
    evaluate->add_option("--workers", ev_workers, "Worker threads");
    evaluate->add_option("--store", ev_store, "Store directory");

    // learn-list
    auto* learn = app.add_subcommand("learn-list",
                                     "Learn the greedy hyperparameter list");
    std::string ll_store = default_store_path(), ll_tasks, ll_out;
    int ll_k = 10;
    std::string ll_norm = "default", ll_agg = "mean";
    overlay_default(overlay, "store", ll_store);
    overlay_default(overlay, "tasks", ll_tasks);
    overlay_default(overlay, "k", ll_k);
    overlay_default(overlay, "normalizer", ll_norm);
    overlay_default(overlay, "aggregator", ll_agg);
    overlay_default(overlay, "out", ll_out);
    learn->add_option("--store", ll_store, "Store directory");
    learn->add_option("--tasks", ll_tasks,
                      "Training task configs JSONL (default: all in store)");
    learn->add_option("--k", ll_k, "List length");
    learn->add_option("--normalizer", ll_norm, "default|percentile95");
    learn->add_option("--aggregator", ll_agg, "mean|min");
    learn->add_option("--out", ll_out, "Output list JSON path");

    // experiment
    auto* experiment = app.add_subcommand("experiment",
                                          "Run an experiment protocol");
    std::string ex_spec, ex_store = default_store_path(), ex_out = ".";
    overlay_default(overlay, "spec", ex_spec);
    overlay_default(overlay, "store", ex_store);
    overlay_default(overlay, "out-dir", ex_out);
    experiment->add_option("--spec", ex_spec, "Experiment spec JSON")
        ->required();
    experiment->add_option("--store", ex_store, "Store directory");
    experiment->add_option("--out-dir", ex_out, "Report output directory");

    // export-features
    auto* export_features = app.add_subcommand(
        "export-features", "Export the task x optimizer cost matrix CSV");
    std::string xf_store = default_store_path(), xf_out = "features.csv";
    std::string xf_norm = "default", xf_agg = "mean";
    overlay_default(overlay, "store", xf_store);
    overlay_default(overlay, "out", xf_out);
    overlay_default(overlay, "normalizer", xf_norm);
    overlay_default(overlay, "aggregator", xf_agg);
    export_features->add_option("--store", xf_store, "Store directory");
    export_features->add_option("--out", xf_out, "Output CSV path");
    export_features->add_option("--normalizer", xf_norm,
                                "default|percentile95");
    export_features->add_option("--aggregator", xf_agg, "mean|min");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        // --help
        out << app.help();
        return 0;
      }
      err << "error: " << e.what() << "\n";
      return 2;
    }

    if (sample_tasks->parsed()) {
      return cmd_sample_tasks(st_family, st_count, st_seed, st_out, st_reject,
                              st_budget, out);
    }
    if (sample_opts->parsed()) {
      return cmd_sample_optimizers(so_family, so_count, so_seed, so_out, out);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(ev_tasks, ev_opts, ev_seeds, ev_steps, ev_every,
                          ev_batches, ev_workers, ev_store, out);
    }
    if (learn->parsed()) {
      return cmd_learn_list(ll_store, ll_tasks, ll_k, ll_norm, ll_agg, ll_out,
                            out);
    }
    if (experiment->parsed()) {
      return cmd_experiment(ex_spec, ex_store, ex_out, out);
    }
    if (export_features->parsed()) {
      return cmd_export_features(xf_store, xf_out, xf_norm, xf_agg, out);
    }
    err << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const IncompatibleProfileError& e) {
    err << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const IncompleteStoreError& e) {
    err << "incomplete store: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace optlist::cli
