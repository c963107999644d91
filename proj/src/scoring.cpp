#include "optlist/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "optlist/errors.hpp"

namespace optlist {

namespace {
constexpr std::uint64_t kRunSeed = 0x7EA1F00Dull;

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}
}  // namespace

void RunProfile::validate() const {
  if (total_steps < 1 || eval_every < 1 || eval_batches < 1 || seeds < 1) {
    throw ValidationError("profile: all counts must be >= 1");
  }
  if (total_steps % eval_every != 0) {
    throw ValidationError("profile: eval_every must divide total_steps");
  }
}

Json RunProfile::to_json() const {
  return Json{{"total_steps", total_steps},
              {"eval_every", eval_every},
              {"eval_batches", eval_batches},
              {"seeds", seeds}};
}

RunProfile RunProfile::from_json(const Json& j) {
  RunProfile p;
  p.total_steps = j.at("total_steps").get<int>();
  p.eval_every = j.at("eval_every").get<int>();
  p.eval_batches = j.at("eval_batches").get<int>();
  if (j.contains("seeds")) p.seeds = j.at("seeds").get<int>();
  p.validate();
  return p;
}

const std::vector<double>& TrainingCurve::split_losses(Split s) const {
  switch (s) {
    case Split::kTrain: return train_loss;
    case Split::kValid: return valid_loss;
    case Split::kTest: return test_loss;
  }
  return valid_loss;
}

TrainingCurve train_and_record(const Task& task, const OptimizerConfig& opt,
                               int seed, const RunProfile& profile) {
  profile.validate();
  const auto t_start = std::chrono::steady_clock::now();

  TrainingCurve curve;
  curve.task_id = task.task_id();
  curve.optimizer_id = opt.optimizer_id();
  curve.seed = seed;
  curve.n_params = task.param_count();

  // Batch keys depend on (task, seed, step) only, never on the optimizer, so
  // every optimizer sees identical data and evaluations pair up.
  const RngKey run_root = RngKey::from_seed(kRunSeed)
                              .child(task.task_id())
                              .child(static_cast<std::uint64_t>(seed));
  const RngKey train_root = run_root.child("train_batches");
  const RngKey eval_root = run_root.child("eval_batches");

  std::vector<double> params = task.initial_params(seed);
  OptimizerState state = OptimizerState::zeros(params.size());

  const int n_points = profile.eval_points();
  curve.steps.reserve(n_points);

  auto eval_split = [&](int step, Split split) -> double {
    const RngKey key = eval_root.child(static_cast<std::uint64_t>(step))
                           .child(static_cast<std::uint64_t>(split));
    double acc = 0.0;
    for (int b = 0; b < profile.eval_batches; ++b) {
      const Batch batch =
          task.batch(split, key.child(static_cast<std::uint64_t>(b)));
      acc += task.loss(params, batch);
    }
    return acc / profile.eval_batches;
  };

  auto record_eval = [&](int step) -> bool {
    const double tr = eval_split(step, Split::kTrain);
    const double va = eval_split(step, Split::kValid);
    const double te = eval_split(step, Split::kTest);
    curve.steps.push_back(step);
    const bool finite =
        std::isfinite(tr) && std::isfinite(va) && std::isfinite(te);
    if (finite) {
      curve.train_loss.push_back(tr);
      curve.valid_loss.push_back(va);
      curve.test_loss.push_back(te);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      curve.train_loss.push_back(nan);
      curve.valid_loss.push_back(nan);
      curve.test_loss.push_back(nan);
    }
    return finite;
  };

  auto fill_divergent_tail = [&](int from_step) {
    curve.diverged_at = from_step;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int step = (curve.steps.empty() ? 0 : curve.steps.back() + profile.eval_every);
         static_cast<int>(curve.steps.size()) < n_points;
         step += profile.eval_every) {
      curve.steps.push_back(step);
      curve.train_loss.push_back(nan);
      curve.valid_loss.push_back(nan);
      curve.test_loss.push_back(nan);
    }
  };

  if (!record_eval(0)) {
    // Non-finite at initialization; reject_task should have caught this, but
    // divergence is still data here.
    curve.steps.pop_back();
    curve.train_loss.pop_back();
    curve.valid_loss.pop_back();
    curve.test_loss.pop_back();
    fill_divergent_tail(0);
  } else {
    for (int t = 0; t < profile.total_steps; ++t) {
      const Batch batch =
          task.batch(Split::kTrain, train_root.child(static_cast<std::uint64_t>(t)));
      const std::vector<double> raw = task.gradient(params, batch);
      const std::vector<double> grad = regularized_gradient(opt, params, raw);
      if (!all_finite(grad)) {
        fill_divergent_tail(t + 1);
        break;
      }
      apply_update(opt, state, params, grad,
                   ScheduleContext{t, profile.total_steps});
      if (!all_finite(params)) {
        fill_divergent_tail(t + 1);
        break;
      }
      if ((t + 1) % profile.eval_every == 0) {
        if (!record_eval(t + 1)) {
          curve.diverged_at = t + 1;
          if (static_cast<int>(curve.steps.size()) < n_points) {
            fill_divergent_tail(t + 1);
          }
          break;
        }
      }
    }
  }

  curve.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return curve;
}

const char* normalizer_name(Normalizer n) {
  return n == Normalizer::kDefault ? "default" : "percentile95";
}

const char* aggregator_name(Aggregator a) {
  return a == Aggregator::kMean ? "mean" : "min";
}

Normalizer normalizer_from_name(const std::string& s) {
  if (s == "default") return Normalizer::kDefault;
  if (s == "percentile95") return Normalizer::kPercentile95;
  throw UsageError("normalizer: expected default|percentile95, got '" + s +
                   "'");
}

Aggregator aggregator_from_name(const std::string& s) {
  if (s == "mean") return Aggregator::kMean;
  if (s == "min") return Aggregator::kMin;
  throw UsageError("aggregator: expected mean|min, got '" + s + "'");
}

std::vector<double> normalize_curve(const TrainingCurve& curve,
                                    const NormalizationConstants& constants,
                                    Split split) {
  if (constants.task_id != curve.task_id) {
    throw UsageError("normalize_curve: constants for task " +
                     constants.task_id + " applied to " + curve.task_id);
  }
  const double init = constants.init_valid_loss;
  const double best = constants.best_valid_loss;
  if (!(best < init)) {
    throw DegenerateTaskError("normalize_curve: init == best for task " +
                              curve.task_id +
                              " (task should have been rejected)");
  }
  const std::vector<double>& raw = curve.split_losses(split);
  std::vector<double> out(raw.size());
  const double range = init - best;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      out[i] = 1.0;
    } else {
      out[i] = std::clamp((raw[i] - best) / range, 0.0, 1.0);
    }
  }
  return out;
}

double aggregate(std::span<const double> normalized, Aggregator aggregator) {
  if (normalized.empty()) {
    throw UsageError("aggregate: empty sequence");
  }
  if (aggregator == Aggregator::kMean) {
    double acc = 0.0;
    for (double v : normalized) acc += v;
    return acc / static_cast<double>(normalized.size());
  }
  return *std::min_element(normalized.begin(), normalized.end());
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw UsageError("nearest_rank_percentile: empty values");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(
      std::max(1.0, std::ceil(p / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

NormalizationConstants default_constants(
    std::span<const TrainingCurve> task_curves) {
  if (task_curves.empty()) {
    throw IncompleteStoreError("default_constants: no curves for task");
  }
  NormalizationConstants k;
  k.task_id = task_curves.front().task_id;
  // All optimizers share the per-seed step-0 loss; average distinct seeds.
  std::map<int, double> init_by_seed;
  double best = std::numeric_limits<double>::infinity();
  for (const TrainingCurve& c : task_curves) {
    if (!c.valid_loss.empty() && std::isfinite(c.valid_loss.front())) {
      init_by_seed.emplace(c.seed, c.valid_loss.front());
    }
    for (double v : c.valid_loss) {
      if (std::isfinite(v)) best = std::min(best, v);
    }
  }
  if (init_by_seed.empty() || !std::isfinite(best)) {
    throw DegenerateTaskError("default_constants: no finite validation data "
                              "for task " +
                              k.task_id);
  }
  double acc = 0.0;
  for (const auto& [seed, v] : init_by_seed) acc += v;
  k.init_valid_loss = acc / static_cast<double>(init_by_seed.size());
  k.best_valid_loss = best;
  return k;
}

NormalizationConstants percentile_constants(
    std::span<const TrainingCurve> task_curves) {
  if (task_curves.empty()) {
    throw IncompleteStoreError("percentile_constants: no curves for task");
  }
  NormalizationConstants k;
  k.task_id = task_curves.front().task_id;
  std::vector<double> pooled;
  double best_final = std::numeric_limits<double>::infinity();
  for (const TrainingCurve& c : task_curves) {
    for (double v : c.valid_loss) {
      if (std::isfinite(v)) pooled.push_back(v);
    }
    if (!c.valid_loss.empty() && std::isfinite(c.valid_loss.back())) {
      best_final = std::min(best_final, c.valid_loss.back());
    }
  }
  if (pooled.empty() || !std::isfinite(best_final)) {
    throw IncompleteStoreError(
        "percentile_constants: no finite validation data for task " +
        k.task_id);
  }
  k.init_valid_loss = nearest_rank_percentile(pooled, 95.0);
  k.best_valid_loss = best_final;
  if (!(k.best_valid_loss < k.init_valid_loss)) {
    throw DegenerateTaskError(
        "percentile_constants: degenerate constants for task " + k.task_id);
  }
  return k;
}

std::size_t CostMatrix::optimizer_index(const std::string& id) const {
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    if (optimizers[i] == id) return i;
  }
  throw IncompleteStoreError("cost matrix: optimizer " + id + " not present");
}

namespace {
std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman_correlation(std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw UsageError("spearman_correlation: need two equal-length sequences");
  }
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace optlist
