#include <cmath>

#include <doctest.h>

#include "optlist/errors.hpp"
#include "optlist/scoring.hpp"

using namespace optlist;

namespace {

TrainingCurve make_curve(const std::string& task_id,
                         std::vector<double> valid) {
  TrainingCurve c;
  c.task_id = task_id;
  c.optimizer_id = "opt";
  c.seed = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    c.steps.push_back(static_cast<int>(i));
  }
  c.train_loss = valid;
  c.test_loss = valid;
  c.valid_loss = std::move(valid);
  return c;
}

TaskConfig bowl_config(double cond) {
  TaskConfig c;
  c.family = "losg_bowl";
  c.params = Json{{"cond", cond}, {"noise", nullptr}};
  return c;
}

OptimizerConfig adam4p(double lr) {
  OptimizerConfig c;
  c.family = "adam4p";
  c.lr = lr;
  return c;
}

}  // namespace

TEST_CASE("profile validation") {
  RunProfile p;
  p.total_steps = 100;
  p.eval_every = 33;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.eval_every = 25;
  p.validate();
  CHECK(p.eval_points() == 5);
}

TEST_CASE("normalization maps the hand example exactly") {
  const TrainingCurve c = make_curve("t", {10.0, 6.0, 2.0});
  const NormalizationConstants k{"t", 10.0, 2.0};
  const auto n = normalize_curve(c, k, Split::kValid);
  CHECK(n == std::vector<double>{1.0, 0.5, 0.0});
}

TEST_CASE("normalization clips and maps non-finite to one") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const TrainingCurve c = make_curve("t", {10.0, 50.0, nan});
  const NormalizationConstants k{"t", 10.0, 2.0};
  CHECK(normalize_curve(c, k, Split::kValid) ==
        std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("constant curve at init normalizes to all ones") {
  const TrainingCurve c = make_curve("t", {10.0, 10.0, 10.0});
  const NormalizationConstants k{"t", 10.0, 2.0};
  CHECK(normalize_curve(c, k, Split::kValid) ==
        std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("degenerate constants raise") {
  const TrainingCurve c = make_curve("t", {10.0});
  CHECK_THROWS_AS(
      normalize_curve(c, NormalizationConstants{"t", 5.0, 5.0}, Split::kValid),
      DegenerateTaskError);
  CHECK_THROWS_AS(
      normalize_curve(c, NormalizationConstants{"other", 10.0, 2.0},
                      Split::kValid),
      UsageError);
}

TEST_CASE("aggregate mean and min") {
  const std::vector<double> v = {1.0, 0.5, 0.0};
  CHECK(aggregate(v, Aggregator::kMean) == doctest::Approx(0.5));
  CHECK(aggregate(v, Aggregator::kMin) == 0.0);
  const std::vector<double> ones = {1.0, 1.0};
  CHECK(aggregate(ones, Aggregator::kMean) == 1.0);
  CHECK(aggregate(ones, Aggregator::kMin) == 1.0);
  CHECK_THROWS_AS(aggregate(std::vector<double>{}, Aggregator::kMean),
                  UsageError);
}

TEST_CASE("nearest-rank percentile") {
  const std::vector<double> v = {10, 9, 8, 7, 6, 5, 4, 3, 2};
  CHECK(nearest_rank_percentile(v, 95.0) == 10.0);
  CHECK(nearest_rank_percentile(v, 50.0) == 6.0);
  CHECK(nearest_rank_percentile(v, 1.0) == 2.0);
}

TEST_CASE("default constants average per-seed inits") {
  TrainingCurve a = make_curve("t", {10.0, 4.0});
  a.seed = 0;
  TrainingCurve b = make_curve("t", {12.0, 6.0});
  b.seed = 1;
  TrainingCurve a2 = make_curve("t", {10.0, 3.0});
  a2.seed = 0;
  a2.optimizer_id = "opt2";
  const std::vector<TrainingCurve> curves = {a, b, a2};
  const NormalizationConstants k = default_constants(curves);
  CHECK(k.init_valid_loss == doctest::Approx(11.0));
  CHECK(k.best_valid_loss == doctest::Approx(3.0));
}

TEST_CASE("percentile constants pool values and take final minima") {
  TrainingCurve a = make_curve("t", {10.0, 9.0, 8.0, 2.0});
  TrainingCurve b = make_curve("t", {6.0, 3.0, 5.0, 7.0, 4.0});
  b.seed = 1;
  const std::vector<TrainingCurve> curves = {a, b};
  const NormalizationConstants k = percentile_constants(curves);
  CHECK(k.init_valid_loss == 10.0);  // 95th percentile of {2..10}
  CHECK(k.best_valid_loss == 2.0);   // min of finals {2, 4}

  const std::vector<TrainingCurve> flat = {make_curve("t", {3.0, 3.0})};
  CHECK_THROWS_AS(percentile_constants(flat), DegenerateTaskError);
}

TEST_CASE("normalized cost is invariant to affine rescaling") {
  const std::vector<double> raw = {10.0, 7.0, 5.0, 2.0};
  const auto cost_of = [](std::vector<double> values) {
    TrainingCurve c = make_curve("t", std::move(values));
    const std::vector<TrainingCurve> curves = {c};
    const NormalizationConstants k = default_constants(curves);
    return aggregate(normalize_curve(c, k, Split::kValid), Aggregator::kMean);
  };
  std::vector<double> scaled = raw;
  for (double& v : scaled) v = 3.7 * v + 11.0;
  CHECK(std::abs(cost_of(raw) - cost_of(scaled)) <= 1e-12);
}

TEST_CASE("spearman correlation basics") {
  CHECK(spearman_correlation(std::vector<double>{1, 2, 3},
                             std::vector<double>{10, 20, 30}) ==
        doctest::Approx(1.0));
  CHECK(spearman_correlation(std::vector<double>{1, 2, 3},
                             std::vector<double>{3, 2, 1}) ==
        doctest::Approx(-1.0));
}

TEST_CASE("train_and_record on a bowl produces a full finite curve") {
  const auto task = instantiate(bowl_config(1.0));
  RunProfile profile;
  profile.total_steps = 2000;
  profile.eval_every = 50;
  profile.eval_batches = 10;
  profile.seeds = 1;
  const TrainingCurve curve = train_and_record(*task, adam4p(0.1), 0, profile);
  CHECK(curve.steps.size() == 41);
  CHECK(curve.valid_loss.size() == 41);
  CHECK_FALSE(curve.diverged_at.has_value());
  CHECK(curve.n_params == 2);
  CHECK(curve.steps.front() == 0);
  CHECK(curve.steps.back() == 2000);
  // optimization made clear progress
  CHECK(curve.valid_loss.back() < 0.05 * curve.valid_loss.front());
  for (double v : curve.valid_loss) CHECK(std::isfinite(v));
}

TEST_CASE("train_and_record is bit-identical across calls") {
  const auto task = instantiate(bowl_config(10.0));
  RunProfile profile;
  profile.total_steps = 200;
  profile.eval_every = 50;
  profile.eval_batches = 3;
  const TrainingCurve a = train_and_record(*task, adam4p(0.05), 1, profile);
  const TrainingCurve b = train_and_record(*task, adam4p(0.05), 1, profile);
  CHECK(a.steps == b.steps);
  CHECK(a.train_loss == b.train_loss);
  CHECK(a.valid_loss == b.valid_loss);
  CHECK(a.test_loss == b.test_loss);
  CHECK(a.n_params == b.n_params);
}

TEST_CASE("divergence fills the curve tail with markers") {
  // Large steps drive min(x) through zero; 1/min blows up the gradient.
  TaskConfig c;
  c.family = "losg_min_max_well";
  c.config_seed = 4;
  c.params = Json{{"dim", 8}, {"noise", nullptr}};
  const auto task = instantiate(c);
  RunProfile profile;
  profile.total_steps = 500;
  profile.eval_every = 25;
  profile.eval_batches = 2;
  bool diverged = false;
  for (int seed = 0; seed < 10 && !diverged; ++seed) {
    const TrainingCurve curve =
        train_and_record(*task, adam4p(10.0), seed, profile);
    if (curve.diverged_at.has_value()) {
      diverged = true;
      CHECK(curve.steps.size() == 21);
      bool saw_nan = false;
      for (std::size_t i = 0; i < curve.steps.size(); ++i) {
        if (curve.steps[i] >= *curve.diverged_at) {
          CHECK_FALSE(std::isfinite(curve.valid_loss[i]));
          saw_nan = true;
        }
      }
      CHECK(saw_nan);
    }
  }
  CHECK(diverged);
}
