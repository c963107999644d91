#include "optlist/store.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "optlist/errors.hpp"

namespace fs = std::filesystem;

namespace optlist {

namespace {

std::string compose_record(const CurveRecord& r, bool with_wall_time) {
  const TrainingCurve& c = r.curve;
  std::string s = "{\"schema_version\":" + std::to_string(r.schema_version);
  s += ",\"task_id\":\"" + c.task_id + "\"";
  s += ",\"optimizer_id\":\"" + c.optimizer_id + "\"";
  s += ",\"seed\":" + std::to_string(c.seed);
  s += ",\"steps\":[";
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(c.steps[i]);
  }
  s += "]";
  s += ",\"train_loss\":" + loss_array_json(c.train_loss);
  s += ",\"valid_loss\":" + loss_array_json(c.valid_loss);
  s += ",\"test_loss\":" + loss_array_json(c.test_loss);
  s += ",\"diverged_at\":";
  s += c.diverged_at ? std::to_string(*c.diverged_at) : "null";
  s += ",\"n_params\":" + std::to_string(c.n_params);
  if (with_wall_time) {
    s += ",\"wall_time_s\":" + format_double17(c.wall_time_s);
  }
  s += ",\"profile\":{\"total_steps\":" + std::to_string(r.profile.total_steps);
  s += ",\"eval_every\":" + std::to_string(r.profile.eval_every);
  s += ",\"eval_batches\":" + std::to_string(r.profile.eval_batches);
  s += "}}";
  return s;
}

std::vector<double> parse_loss_array(const Json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(parse_loss(v));
  return out;
}

}  // namespace

std::string CurveRecord::json_line() const {
  return compose_record(*this, true);
}

std::string CurveRecord::canonical_content() const {
  return compose_record(*this, false);
}

CurveRecord CurveRecord::parse_line(const std::string& line) {
  const Json j = Json::parse(line);
  CurveRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != 1) {
    throw ValidationError("curve record: unsupported schema_version " +
                          std::to_string(r.schema_version));
  }
  TrainingCurve& c = r.curve;
  c.task_id = j.at("task_id").get<std::string>();
  c.optimizer_id = j.at("optimizer_id").get<std::string>();
  c.seed = j.at("seed").get<int>();
  c.steps = j.at("steps").get<std::vector<int>>();
  c.train_loss = parse_loss_array(j.at("train_loss"));
  c.valid_loss = parse_loss_array(j.at("valid_loss"));
  c.test_loss = parse_loss_array(j.at("test_loss"));
  if (!j.at("diverged_at").is_null()) {
    c.diverged_at = j.at("diverged_at").get<int>();
  }
  c.n_params = j.at("n_params").get<std::size_t>();
  c.wall_time_s = j.value("wall_time_s", 0.0);
  const Json& p = j.at("profile");
  r.profile.total_steps = p.at("total_steps").get<int>();
  r.profile.eval_every = p.at("eval_every").get<int>();
  r.profile.eval_batches = p.at("eval_batches").get<int>();
  const std::size_t n = c.steps.size();
  if (c.train_loss.size() != n || c.valid_loss.size() != n ||
      c.test_loss.size() != n) {
    throw ValidationError("curve record: split lengths differ from steps");
  }
  return r;
}

EvaluationStore::EvaluationStore(fs::path dir) : dir_(std::move(dir)) {}

void EvaluationStore::open(const RunProfile& profile) {
  profile.validate();
  fs::create_directories(dir_ / "curves");
  if (fs::exists(dir_ / "profile.json")) {
    std::ifstream in(dir_ / "profile.json");
    const RunProfile existing = RunProfile::from_json(Json::parse(in));
    if (!existing.same_fingerprint(profile)) {
      throw IncompatibleProfileError(
          "store at " + dir_.string() +
          " was written with a different evaluation profile");
    }
    profile_ = existing;
  } else {
    profile_ = profile;
    std::ofstream out(dir_ / "profile.json");
    out << profile_.to_json().dump(2) << "\n";
  }
  profile_set_ = true;
  scan_existing();
  load_configs();
}

void EvaluationStore::open_existing() {
  if (!fs::exists(dir_ / "profile.json")) {
    throw IncompleteStoreError("store at " + dir_.string() +
                               " has no profile.json");
  }
  std::ifstream in(dir_ / "profile.json");
  profile_ = RunProfile::from_json(Json::parse(in));
  profile_set_ = true;
  scan_existing();
  load_configs();
}

std::filesystem::path EvaluationStore::shard_path(
    const std::string& task_id) const {
  return dir_ / "curves" / (task_id + ".jsonl");
}

void EvaluationStore::scan_existing() {
  keys_.clear();
  record_hashes_.clear();
  const fs::path curves = dir_ / "curves";
  if (!fs::exists(curves)) return;
  std::vector<fs::path> shards;
  for (const auto& entry : fs::directory_iterator(curves)) {
    if (entry.path().extension() == ".jsonl") shards.push_back(entry.path());
  }
  std::sort(shards.begin(), shards.end());
  for (const fs::path& shard : shards) {
    std::ifstream in(shard, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) {
        // A write was cut short; the in-flight record is dropped.
        std::cerr << "warning: ignoring truncated trailing line in "
                  << shard.string() << "\n";
        break;
      }
      const std::string line = content.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) continue;
      CurveRecord rec;
      try {
        rec = CurveRecord::parse_line(line);
      } catch (const std::exception& e) {
        if (pos >= content.size()) {
          std::cerr << "warning: ignoring unparseable trailing line in "
                    << shard.string() << "\n";
          break;
        }
        throw ValidationError("store shard " + shard.string() +
                              ": bad record: " + e.what());
      }
      const std::string key = rec.key();
      keys_.insert(key);
      record_hashes_[key] = fnv1a64(rec.canonical_content());
    }
  }
}

void EvaluationStore::load_configs() {
  tasks_.clear();
  optimizers_.clear();
  const fs::path task_file = dir_ / "tasks.jsonl";
  if (fs::exists(task_file)) {
    std::ifstream in(task_file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const TaskConfig c = TaskConfig::from_json(Json::parse(line));
      tasks_.emplace(c.task_id(), c);
    }
  }
  const fs::path opt_file = dir_ / "optimizers.jsonl";
  if (fs::exists(opt_file)) {
    std::ifstream in(opt_file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const OptimizerConfig c = OptimizerConfig::from_json(Json::parse(line));
      optimizers_.emplace(c.optimizer_id(), c);
    }
  }
}

bool EvaluationStore::contains(const std::string& task_id,
                               const std::string& optimizer_id,
                               int seed) const {
  return keys_.count(task_id + "|" + optimizer_id + "|" +
                     std::to_string(seed)) > 0;
}

void EvaluationStore::append(const CurveRecord& record) {
  if (!profile_set_) throw UsageError("store: open() before append()");
  if (!record.profile.same_fingerprint(profile_)) {
    throw IncompatibleProfileError("append: record profile differs from store "
                                   "profile");
  }
  const std::string key = record.key();
  if (keys_.count(key)) {
    throw StoreConflictError("append: duplicate record " + key);
  }
  std::ofstream out(shard_path(record.curve.task_id),
                    std::ios::app | std::ios::binary);
  if (!out) {
    throw std::runtime_error("append: cannot open shard for " +
                             record.curve.task_id);
  }
  out << record.json_line() << "\n";
  out.flush();
  if (!out) {
    throw std::runtime_error("append: write failed for " + key);
  }
  keys_.insert(key);
  record_hashes_[key] = fnv1a64(record.canonical_content());
}

void EvaluationStore::register_task(const TaskConfig& config) {
  const std::string id = config.task_id();
  if (tasks_.count(id)) return;
  tasks_.emplace(id, config);
  std::ofstream out(dir_ / "tasks.jsonl", std::ios::app | std::ios::binary);
  out << config.to_json().dump() << "\n";
}

void EvaluationStore::register_optimizer(const OptimizerConfig& config) {
  const std::string id = config.optimizer_id();
  if (optimizers_.count(id)) return;
  optimizers_.emplace(id, config);
  std::ofstream out(dir_ / "optimizers.jsonl",
                    std::ios::app | std::ios::binary);
  out << "{\"optimizer_id\":\"" << id << "\","
      << config.to_json_line().substr(1) << "\n";
}

std::vector<std::string> EvaluationStore::task_ids() const {
  std::vector<std::string> ids;
  ids.reserve(tasks_.size());
  for (const auto& [id, cfg] : tasks_) ids.push_back(id);
  return ids;
}

std::vector<std::string> EvaluationStore::optimizer_ids() const {
  std::vector<std::string> ids;
  ids.reserve(optimizers_.size());
  for (const auto& [id, cfg] : optimizers_) ids.push_back(id);
  return ids;
}

std::vector<CurveRecord> EvaluationStore::load_task_records(
    const std::string& task_id) const {
  std::vector<CurveRecord> records;
  const fs::path shard = shard_path(task_id);
  if (!fs::exists(shard)) return records;
  std::ifstream in(shard, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!in.eof() || !line.empty()) {
      try {
        records.push_back(CurveRecord::parse_line(line));
      } catch (const std::exception&) {
        // trailing partial line; scan_existing already warned
        break;
      }
    }
  }
  return records;
}

std::map<std::pair<std::string, std::string>, std::vector<CurveRecord>>
EvaluationStore::load_matrix_inputs(
    const std::vector<std::string>& task_ids,
    const std::vector<std::string>& optimizer_ids,
    std::vector<StoreGap>* gaps) const {
  std::map<std::pair<std::string, std::string>, std::vector<CurveRecord>> out;
  for (const std::string& task : task_ids) {
    std::vector<CurveRecord> records = load_task_records(task);
    for (CurveRecord& r : records) {
      for (const std::string& opt : optimizer_ids) {
        if (r.curve.optimizer_id == opt) {
          out[{task, opt}].push_back(std::move(r));
          break;
        }
      }
    }
  }
  if (gaps) {
    for (const std::string& task : task_ids) {
      for (const std::string& opt : optimizer_ids) {
        for (int seed = 0; seed < profile_.seeds; ++seed) {
          if (!contains(task, opt, seed)) {
            gaps->push_back({task, opt, seed});
          }
        }
      }
    }
  }
  return out;
}

std::vector<StoreGap> EvaluationStore::find_gaps(
    const std::vector<std::string>& task_ids,
    const std::vector<std::string>& optimizer_ids) const {
  std::vector<StoreGap> gaps;
  for (const std::string& task : task_ids) {
    for (const std::string& opt : optimizer_ids) {
      for (int seed = 0; seed < profile_.seeds; ++seed) {
        if (!contains(task, opt, seed)) gaps.push_back({task, opt, seed});
      }
    }
  }
  return gaps;
}

std::string EvaluationStore::content_hash() const {
  // Order-independent: records may arrive from any worker in any order.
  std::uint64_t sum = 0;
  std::uint64_t xors = 0;
  for (const auto& [key, h] : record_hashes_) {
    sum += mix64(h);
    xors ^= mix64(h + 0x1234567ull);
  }
  for (const auto& [id, cfg] : tasks_) {
    const std::uint64_t h = fnv1a64(cfg.to_json().dump());
    sum += mix64(h);
    xors ^= mix64(h + 0x1234567ull);
  }
  for (const auto& [id, cfg] : optimizers_) {
    const std::uint64_t h = fnv1a64(cfg.to_json_line());
    sum += mix64(h);
    xors ^= mix64(h + 0x1234567ull);
  }
  return hash_hex(sum) + hash_hex(xors);
}

void EvaluationStore::write_index() const {
  Json index;
  index["record_count"] = keys_.size();
  index["task_count"] = tasks_.size();
  index["optimizer_count"] = optimizers_.size();
  index["content_hash"] = content_hash();
  index["profile"] = profile_.to_json();
  const fs::path tmp = dir_ / "index.json.tmp";
  {
    std::ofstream out(tmp);
    out << index.dump(2) << "\n";
  }
  fs::rename(tmp, dir_ / "index.json");
}

std::pair<std::size_t, std::size_t> export_feature_matrix(
    const EvaluationStore& store, Normalizer normalizer, Aggregator aggregator,
    const std::filesystem::path& out_path) {
  const std::vector<std::string> tasks = store.task_ids();
  const std::vector<std::string> opts = store.optimizer_ids();
  CostMatrixOptions options;
  options.normalizer = normalizer;
  options.aggregator = aggregator;
  const CostMatrix m = build_cost_matrix(store, tasks, opts, options);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("export_feature_matrix: cannot open " +
                             out_path.string());
  }
  out << "task_id";
  for (const std::string& opt : m.optimizers) out << "," << opt;
  out << "\n";
  for (std::size_t r = 0; r < m.tasks.size(); ++r) {
    out << m.tasks[r];
    for (std::size_t c = 0; c < m.optimizers.size(); ++c) {
      out << "," << format_double17(m.costs_valid.at(r, c));
    }
    out << "\n";
  }
  return {m.tasks.size(), m.optimizers.size() + 1};
}

namespace {

void truncate_curve(TrainingCurve& c, int horizon) {
  std::size_t keep = 0;
  while (keep < c.steps.size() && c.steps[keep] <= horizon) ++keep;
  keep = std::max<std::size_t>(keep, 1);
  c.steps.resize(keep);
  c.train_loss.resize(keep);
  c.valid_loss.resize(keep);
  c.test_loss.resize(keep);
}

}  // namespace

CostMatrix build_cost_matrix(const EvaluationStore& store,
                             const std::vector<std::string>& task_ids,
                             const std::vector<std::string>& optimizer_ids,
                             const CostMatrixOptions& options) {
  CostMatrix m;
  m.tasks = task_ids;
  m.optimizers = optimizer_ids;
  m.normalizer = options.normalizer;
  m.aggregator = options.aggregator;
  m.store_hash = store.content_hash();
  m.costs_valid = DenseMatrix(task_ids.size(), optimizer_ids.size());
  m.costs_test = DenseMatrix(task_ids.size(), optimizer_ids.size());

  std::map<std::string, std::size_t> opt_index;
  for (std::size_t i = 0; i < optimizer_ids.size(); ++i) {
    opt_index[optimizer_ids[i]] = i;
  }

  for (std::size_t ti = 0; ti < task_ids.size(); ++ti) {
    std::vector<CurveRecord> records = store.load_task_records(task_ids[ti]);
    std::vector<TrainingCurve> curves;
    curves.reserve(records.size());
    for (CurveRecord& r : records) {
      TrainingCurve c = std::move(r.curve);
      if (options.horizon_steps) truncate_curve(c, *options.horizon_steps);
      curves.push_back(std::move(c));
    }
    // Constants come from every stored curve of the task so that optimizer
    // subsets share one normalization.
    const NormalizationConstants constants =
        options.normalizer == Normalizer::kDefault
            ? default_constants(curves)
            : percentile_constants(curves);

    // Seed-averaged aggregate per requested optimizer.
    std::vector<double> acc_valid(optimizer_ids.size(), 0.0);
    std::vector<double> acc_test(optimizer_ids.size(), 0.0);
    std::vector<int> counts(optimizer_ids.size(), 0);
    for (const TrainingCurve& c : curves) {
      const auto it = opt_index.find(c.optimizer_id);
      if (it == opt_index.end()) continue;
      const std::vector<double> nv =
          normalize_curve(c, constants, Split::kValid);
      const std::vector<double> nt =
          normalize_curve(c, constants, Split::kTest);
      acc_valid[it->second] += aggregate(nv, options.aggregator);
      acc_test[it->second] += aggregate(nt, options.aggregator);
      counts[it->second] += 1;
    }
    for (std::size_t oi = 0; oi < optimizer_ids.size(); ++oi) {
      if (counts[oi] != store.profile().seeds) {
        throw IncompleteStoreError(
            "build_cost_matrix: task " + task_ids[ti] + " optimizer " +
            optimizer_ids[oi] + " has " + std::to_string(counts[oi]) +
            " seeds, expected " + std::to_string(store.profile().seeds));
      }
      m.costs_valid.at(ti, oi) = acc_valid[oi] / counts[oi];
      m.costs_test.at(ti, oi) = acc_test[oi] / counts[oi];
    }
  }
  return m;
}

}  // namespace optlist
