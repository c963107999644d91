#include <fstream>
#include <sstream>

#include <doctest.h>

#include "optlist/cli.hpp"
#include "optlist/learner.hpp"
#include "optlist/store.hpp"

using namespace optlist;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("optlist_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"optlist"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code =
      cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

// Builds a small complete store via the CLI; returns the store path.
fs::path build_tiny_store(const TempDir& tmp) {
  const fs::path tasks = tmp.path / "tasks.jsonl";
  const fs::path opts = tmp.path / "opts.jsonl";
  const fs::path store = tmp.path / "store";
  CliResult r = run_cli({"sample-tasks", "--family", "twod_fixed", "--count",
                         "4", "--seed", "1", "--out", tasks.string()});
  REQUIRE(r.code == 0);
  r = run_cli({"sample-optimizers", "--family", "adam8p", "--count", "6",
               "--seed", "2", "--out", opts.string()});
  REQUIRE(r.code == 0);
  const fs::path opts1 = tmp.path / "opts1.jsonl";
  r = run_cli({"sample-optimizers", "--family", "adam1p", "--count", "3",
               "--seed", "3", "--out", opts1.string()});
  REQUIRE(r.code == 0);
  const fs::path opts4 = tmp.path / "opts4.jsonl";
  r = run_cli({"sample-optimizers", "--family", "adam4p", "--count", "3",
               "--seed", "4", "--out", opts4.string()});
  REQUIRE(r.code == 0);
  // merge optimizer pools into one file
  std::ofstream merged(opts, std::ios::app | std::ios::binary);
  merged << read_file(opts1) << read_file(opts4);
  merged.close();
  r = run_cli({"evaluate", "--tasks", tasks.string(), "--opts", opts.string(),
               "--seeds", "1", "--steps", "40", "--eval-every", "10",
               "--eval-batches", "2", "--workers", "2", "--store",
               store.string()});
  REQUIRE(r.code == 0);
  return store;
}

}  // namespace

TEST_CASE("sample-tasks writes the requested number of accepted configs") {
  TempDir tmp;
  const fs::path out = tmp.path / "tasks.jsonl";
  const CliResult r =
      run_cli({"sample-tasks", "--family", "quadratic_like", "--count", "8",
               "--seed", "1", "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("accepted 8") != std::string::npos);
  const std::string first = read_file(out);
  CHECK(line_count(first) == 8);

  const CliResult again =
      run_cli({"sample-tasks", "--family", "quadratic_like", "--count", "8",
               "--seed", "1", "--out", out.string()});
  CHECK(again.code == 0);
  CHECK(read_file(out) == first);
}

TEST_CASE("sample-tasks rejects unknown families with the valid list") {
  TempDir tmp;
  const CliResult r =
      run_cli({"sample-tasks", "--family", "bogus", "--count", "1", "--out",
               (tmp.path / "x.jsonl").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("quadratic_like") != std::string::npos);
}

TEST_CASE("sample-optimizers honors ranges, determinism, and count 0") {
  TempDir tmp;
  const fs::path out = tmp.path / "opts.jsonl";
  CliResult r = run_cli({"sample-optimizers", "--family", "nadamw", "--count",
                         "4", "--seed", "5", "--out", out.string()});
  CHECK(r.code == 0);
  const std::string first = read_file(out);
  CHECK(line_count(first) == 4);
  std::istringstream lines(first);
  std::string line;
  while (std::getline(lines, line)) {
    const OptimizerConfig c = OptimizerConfig::from_json(Json::parse(line));
    CHECK(c.family == "nadamw");
    CHECK(c.lr >= 1e-5);
    CHECK(c.lr <= 1.0);
    CHECK(c.epsilon >= 1e-8);
    CHECK(c.epsilon <= 1e4);
  }
  r = run_cli({"sample-optimizers", "--family", "nadamw", "--count", "4",
               "--seed", "5", "--out", out.string()});
  CHECK(read_file(out) == first);

  const fs::path empty = tmp.path / "empty.jsonl";
  r = run_cli({"sample-optimizers", "--family", "adam1p", "--count", "0",
               "--out", empty.string()});
  CHECK(r.code == 0);
  CHECK(read_file(empty).empty());
}

TEST_CASE("evaluate completes, resumes, and is worker-count independent") {
  TempDir tmp;
  const fs::path tasks = tmp.path / "tasks.jsonl";
  const fs::path opts = tmp.path / "opts.jsonl";
  run_cli({"sample-tasks", "--family", "twod_fixed", "--count", "2", "--out",
           tasks.string()});
  run_cli({"sample-optimizers", "--family", "adam4p", "--count", "2", "--out",
           opts.string()});

  const fs::path store1 = tmp.path / "store1";
  CliResult r = run_cli({"evaluate", "--tasks", tasks.string(), "--opts",
                         opts.string(), "--seeds", "1", "--steps", "20",
                         "--eval-every", "10", "--eval-batches", "2",
                         "--workers", "1", "--store", store1.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("records written 4") != std::string::npos);
  const auto hash_pos = r.out.find("store hash ");
  REQUIRE(hash_pos != std::string::npos);
  const std::string hash1 = r.out.substr(hash_pos + 11, 32);

  // resume: everything already present
  r = run_cli({"evaluate", "--tasks", tasks.string(), "--opts", opts.string(),
               "--seeds", "1", "--steps", "20", "--eval-every", "10",
               "--eval-batches", "2", "--workers", "1", "--store",
               store1.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("records written 0") != std::string::npos);
  CHECK(r.out.find("skipped 4 existing") != std::string::npos);
  CHECK(r.out.find(hash1) != std::string::npos);

  const fs::path store2 = tmp.path / "store2";
  r = run_cli({"evaluate", "--tasks", tasks.string(), "--opts", opts.string(),
               "--seeds", "1", "--steps", "20", "--eval-every", "10",
               "--eval-batches", "2", "--workers", "3", "--store",
               store2.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find(hash1) != std::string::npos);
}

TEST_CASE("evaluate validates inputs before any training") {
  TempDir tmp;
  const fs::path tasks = tmp.path / "tasks.jsonl";
  {
    std::ofstream out(tasks);
    out << "{\"family\":\"losg_bowl\",\"config_seed\":1,\"params\":{},"
        << "\"transform\":null}\n";  // missing cond
  }
  const fs::path opts = tmp.path / "opts.jsonl";
  run_cli({"sample-optimizers", "--family", "adam1p", "--count", "1", "--out",
           opts.string()});
  const fs::path store = tmp.path / "store";
  const CliResult r = run_cli({"evaluate", "--tasks", tasks.string(),
                               "--opts", opts.string(), "--store",
                               store.string()});
  CHECK(r.code == 3);
  CHECK_FALSE(fs::exists(store / "curves"));
}

TEST_CASE("learn-list produces the exhaustive argmin at k=1") {
  TempDir tmp;
  const fs::path store = build_tiny_store(tmp);
  const fs::path list_path = tmp.path / "list.json";
  const CliResult r =
      run_cli({"learn-list", "--store", store.string(), "--k", "1", "--out",
               list_path.string()});
  CHECK(r.code == 0);

  const HyperparameterList list =
      HyperparameterList::from_json(Json::parse(read_file(list_path)));
  REQUIRE(list.entries.size() == 1);

  EvaluationStore s(store);
  s.open_existing();
  const CostMatrix m = build_cost_matrix(s, s.task_ids(), s.optimizer_ids(),
                                         CostMatrixOptions{});
  std::size_t best = 0;
  double best_mean = 1e9;
  for (std::size_t j = 0; j < m.optimizers.size(); ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < m.tasks.size(); ++t) {
      acc += m.costs_valid.at(t, j);
    }
    if (acc / m.tasks.size() < best_mean) {
      best_mean = acc / m.tasks.size();
      best = j;
    }
  }
  CHECK(list.entry_ids[0] == m.optimizers[best]);
}

TEST_CASE("learn-list rejects k larger than the pool") {
  TempDir tmp;
  const fs::path store = build_tiny_store(tmp);
  const CliResult r =
      run_cli({"learn-list", "--store", store.string(), "--k", "999"});
  CHECK(r.code == 2);
}

TEST_CASE("learn-list reports gaps with exit code 4") {
  TempDir tmp;
  const fs::path store = build_tiny_store(tmp);
  const fs::path extra_tasks = tmp.path / "extra.jsonl";
  run_cli({"sample-tasks", "--family", "twod_fixed", "--count", "6", "--out",
           extra_tasks.string()});
  const CliResult r = run_cli({"learn-list", "--store", store.string(),
                               "--tasks", extra_tasks.string(), "--k", "1"});
  CHECK(r.code == 4);
  CHECK(r.err.find("missing") != std::string::npos);
}

TEST_CASE("experiment subcommand writes reports with baselines") {
  TempDir tmp;
  const fs::path store = build_tiny_store(tmp);
  const fs::path spec = tmp.path / "spec.json";
  {
    std::ofstream out(spec);
    out << R"({"name":"iid_generalization","resamples":2,"k_max":5,)"
        << R"("rand_trials":5,"master_seed":7})";
  }
  const fs::path out_dir = tmp.path / "reports";
  const CliResult r =
      run_cli({"experiment", "--spec", spec.string(), "--store",
               store.string(), "--out-dir", out_dir.string()});
  CHECK(r.code == 0);
  const std::string csv =
      read_file(out_dir / "iid_generalization_report.csv");
  CHECK(csv.find("condition,k,j_median,j_p25,j_p75,split") == 0);
  for (const char* cond :
       {"learned_adam8p", "rand_adam8p", "rand_adam1p", "rand_adam4p",
        "rand_posthoc_minmax", "rand_posthoc_percentile"}) {
    CHECK(csv.find(cond) != std::string::npos);
  }
  // regeneration is byte identical
  const fs::path out_dir2 = tmp.path / "reports2";
  run_cli({"experiment", "--spec", spec.string(), "--store", store.string(),
           "--out-dir", out_dir2.string()});
  CHECK(read_file(out_dir2 / "iid_generalization_report.csv") == csv);
}

TEST_CASE("export-features emits tasks x optimizers and is idempotent") {
  TempDir tmp;
  const fs::path store = build_tiny_store(tmp);
  const fs::path out = tmp.path / "features.csv";
  const CliResult r = run_cli({"export-features", "--store", store.string(),
                               "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("4 rows x 13 cols") != std::string::npos);
  const std::string first = read_file(out);
  CHECK(line_count(first) == 5);  // header + 4 tasks
  run_cli({"export-features", "--store", store.string(), "--out",
           out.string()});
  CHECK(read_file(out) == first);
}

TEST_CASE("config overlay supplies defaults and flags override") {
  TempDir tmp;
  const fs::path config = tmp.path / "config.json";
  const fs::path out = tmp.path / "from_config.jsonl";
  {
    std::ofstream f(config);
    f << "{\"family\":\"adam1p\",\"count\":3,\"seed\":9,\"out\":\""
      << out.string() << "\"}";
  }
  CliResult r = run_cli({"--config", config.string(), "sample-optimizers"});
  CHECK(r.code == 0);
  CHECK(line_count(read_file(out)) == 3);

  // explicit flag wins over the config value
  r = run_cli({"--config", config.string(), "sample-optimizers", "--count",
               "5"});
  CHECK(r.code == 0);
  CHECK(line_count(read_file(out)) == 5);
}

TEST_CASE("unknown flags are rejected") {
  const CliResult r = run_cli({"sample-optimizers", "--bogus-flag", "1"});
  CHECK(r.code == 2);
}
