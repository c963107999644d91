#include <cmath>

#include "optlist/errors.hpp"
#include "optlist/optimizers.hpp"
#include "optlist/task.hpp"
#include "task_internal.hpp"

namespace optlist {
namespace {

std::int64_t log_uniform_int(Rng& rng, double lo, double hi) {
  return std::llround(rng.log_uniform(lo, hi));
}

Json maybe_noise(Rng& rng) {
  // Gradient noise with probability 0.5, std sampled log-uniformly.
  if (rng.bernoulli(0.5)) return rng.log_uniform(0.01, 10.0);
  return nullptr;
}

std::optional<TransformSpec> maybe_losg_transform(Rng& rng) {
  if (!rng.bernoulli(0.25)) return std::nullopt;
  TransformSpec t;
  switch (rng.uniform_int(0, 2)) {
    case 0: {
      t.kind = "sparse_problems";
      t.params["zero_prob"] = rng.uniform(0.9, 0.99);
      t.params["noise_std"] =
          rng.bernoulli(0.5) ? Json(rng.log_uniform(0.01, 10.0)) : Json();
      break;
    }
    case 1: {
      t.kind = "rescale_problems";
      t.params["scale"] = rng.log_uniform(0.001, 1000.0);
      break;
    }
    default:
      t.kind = "log_objective";
      break;
  }
  return t;
}

Json sampled_dataset(Rng& rng, bool with_classes) {
  Json d;
  d["input_dim"] = log_uniform_int(rng, 4, 64);
  if (with_classes) d["n_classes"] = rng.bernoulli(0.25) ? 10 : 2;
  d["bs"] = log_uniform_int(rng, 8, 128);
  d["n_samples"] = log_uniform_int(rng, 64, 4096);
  d["just_train"] = rng.bernoulli(0.1);
  return d;
}

Json init_spec_json(Rng& rng) {
  const InitSpec spec = sample_initializer(rng);
  Json j = Json::array();
  j.push_back(spec.name);
  if (spec.param != 0.0) {
    j.push_back(spec.param);
  } else {
    j.push_back(nullptr);
  }
  return j;
}

}  // namespace

TaskConfig sample_task_config(const std::string& family, RngKey key) {
  if (!is_task_family(family)) {
    throw UsageError("sample_task_config: unknown family '" + family + "'");
  }
  Rng rng(key.child("params"));
  TaskConfig c;
  c.family = family;
  c.config_seed =
      static_cast<std::int64_t>(key.child("config_seed").at(0) >> 1);

  if (family == "quadratic_like") {
    Json p;
    p["dims"] = log_uniform_int(rng, 2, 3000);
    const char* a_kinds[] = {"normal", "uniform", "linspace_eigen",
                             "logspace_eigen"};
    const std::string akind = a_kinds[rng.uniform_int(0, 3)];
    Json aparams;
    if (akind == "normal") {
      aparams["mean"] = 0.05 * rng.normal();
      aparams["std"] = rng.uniform(0.0, 0.05);
    } else if (akind == "uniform") {
      aparams["center"] = 0.05 * rng.normal();
      aparams["halfwidth"] = rng.uniform(0.0, 0.05);
    } else {
      const double lo = rng.log_uniform(0.1, 100.0);
      aparams["min"] = lo;
      aparams["max"] = lo * rng.log_uniform(1.0, 100.0);
    }
    p["A_dist"] = Json::array({akind, aparams});
    if (rng.bernoulli(0.5)) {
      p["B_dist"] = Json::array(
          {"normal",
           Json{{"mean", rng.normal()}, {"std", rng.uniform(0.0, 2.0)}}});
    } else {
      p["B_dist"] = Json::array(
          {"uniform",
           Json{{"min", rng.uniform(-5.0, 2.5)}, {"range", rng.uniform(0.0, 5.0)}}});
    }
    if (rng.bernoulli(0.5)) {
      p["initial_dist"] = Json::array(
          {"normal",
           Json{{"mean", rng.normal()}, {"std", rng.uniform(0.0, 2.0)}}});
    } else {
      const double lo = rng.uniform(-5.0, 5.0);
      p["initial_dist"] = Json::array(
          {"uniform", Json{{"min", lo}, {"max", lo + rng.uniform(0.0, 5.0)}}});
    }
    p["output_fn"] = rng.bernoulli(0.5) ? "log" : "identity";
    p["loss_scale"] = rng.log_uniform(1e-5, 1e3);
    p["noise"] = maybe_noise(rng);
    c.params = std::move(p);
    return c;
  }

  if (family == "losg_quadratic") {
    c.params["dim"] = log_uniform_int(rng, 10, 1000);
    c.params["noise"] = maybe_noise(rng);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_bowl") {
    c.params["cond"] = rng.log_uniform(0.01, 100.0);
    c.params["noise"] = maybe_noise(rng);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_norm") {
    c.params["dim"] = log_uniform_int(rng, 3, 1000);
    c.params["p"] = rng.uniform(0.1, 5.0);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_dependency_chain") {
    c.params["dim"] = log_uniform_int(rng, 3, 100);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_outward_snake") {
    c.params["dim"] = log_uniform_int(rng, 3, 100);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_min_max_well") {
    c.params["dim"] = log_uniform_int(rng, 10, 1000);
    c.params["noise"] = maybe_noise(rng);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_sum_of_quadratics") {
    c.params["dim"] = log_uniform_int(rng, 3, 100);
    c.params["bs"] = log_uniform_int(rng, 4, 128);
    c.params["n_samples"] = log_uniform_int(rng, 64, 4096);
    c.params["just_train"] = rng.bernoulli(0.1);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "losg_fully_connected") {
    c.params["n_features"] = log_uniform_int(rng, 1, 16);
    c.params["n_classes"] = 2;
    const std::int64_t n_layers = rng.uniform_int(2, 5);
    Json hidden = Json::array();
    for (std::int64_t i = 0; i < n_layers; ++i) {
      hidden.push_back(log_uniform_int(rng, 4, 32));
    }
    c.params["hidden_sizes"] = hidden;
    c.params["activation"] = activation_name(sample_activation(rng));
    c.params["bs"] = log_uniform_int(rng, 4, 128);
    c.params["n_samples"] = log_uniform_int(rng, 64, 4096);
    c.params["just_train"] = rng.bernoulli(0.1);
    c.transform = maybe_losg_transform(rng);
    return c;
  }
  if (family == "mlp_classification_synthetic") {
    const std::int64_t n_layers = rng.uniform_int(1, 6);
    Json layers = Json::array();
    for (std::int64_t i = 0; i < n_layers; ++i) {
      layers.push_back(log_uniform_int(rng, 16, 128));
    }
    c.params["layer_sizes"] = layers;
    c.params["activation"] = activation_name(sample_activation(rng));
    c.params["w_init"] = init_spec_json(rng);
    c.params["dataset"] = sampled_dataset(rng, true);
    return c;
  }
  if (family == "mlp_ae_synthetic") {
    const std::int64_t n_layers = rng.uniform_int(1, 6);
    Json layers = Json::array();
    for (std::int64_t i = 0; i < n_layers; ++i) {
      layers.push_back(log_uniform_int(rng, 16, 128));
    }
    c.params["hidden_units"] = layers;
    c.params["activation"] = activation_name(sample_activation(rng));
    c.params["w_init"] = init_spec_json(rng);
    const char* out_acts[] = {"tanh", "tanh", "sigmoid", "linear_center",
                              "linear"};
    c.params["output_activation"] = out_acts[rng.uniform_int(0, 4)];
    c.params["distance"] = rng.uniform_int(0, 2) < 2 ? "l2" : "l1";
    c.params["reduction"] = rng.bernoulli(0.5) ? "mean" : "sum";
    c.params["dataset"] = sampled_dataset(rng, false);
    return c;
  }
  if (family == "twod_fixed") {
    const auto fixed = fixed_twod_task_configs();
    return fixed[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(fixed.size()) - 1))];
  }
  throw UsageError("sample_task_config: unhandled family '" + family + "'");
}

namespace {

// Rough per-evaluation flop counts; used only for the deterministic
// time-budget rejection rule, so consistency matters more than exactness.
struct CostModel {
  double instantiate = 0.0;
  double loss_eval = 0.0;
  double grad_eval = 0.0;
};

double mlp_flops(const Json& layer_field, double input_dim, double output_dim,
                 double bs) {
  double per_sample = 0.0;
  double prev = input_dim;
  for (const auto& h : layer_field) {
    const double hv = h.get<double>();
    per_sample += 2.0 * prev * hv + 6.0 * hv;
    prev = hv;
  }
  per_sample += 2.0 * prev * output_dim;
  return bs * per_sample;
}

CostModel cost_model(const TaskConfig& c) {
  const Json& p = c.params;
  CostModel m;
  const std::string& f = c.family;
  if (f == "quadratic_like") {
    const double n = p.at("dims").get<double>();
    const std::string akind = p.at("A_dist").at(0).get<std::string>();
    m.instantiate = akind == "linspace_eigen" || akind == "logspace_eigen"
                        ? 8.0 * n * n * n
                        : 2.0 * n * n;
    m.loss_eval = 2.0 * n * n + 4.0 * n;
    m.grad_eval = 4.0 * n * n + 8.0 * n;
  } else if (f == "losg_quadratic" || f == "losg_norm") {
    const double n = p.at("dim").get<double>();
    m.instantiate = 2.0 * n * n;
    m.loss_eval = 2.0 * n * n + 30.0 * n;
    m.grad_eval = 4.0 * n * n + 60.0 * n;
  } else if (f == "losg_bowl" || f == "twod_fixed") {
    m.loss_eval = 50.0;
    m.grad_eval = 80.0;
  } else if (f == "losg_dependency_chain") {
    const double n = p.at("dim").get<double>();
    m.loss_eval = 30.0 * n;
    m.grad_eval = 60.0 * n;
  } else if (f == "losg_outward_snake" || f == "losg_min_max_well") {
    const double n = p.at("dim").get<double>();
    m.loss_eval = 4.0 * n + 60.0;
    m.grad_eval = 6.0 * n + 90.0;
  } else if (f == "losg_sum_of_quadratics") {
    const double n = p.at("dim").get<double>();
    const double bs = p.at("bs").get<double>();
    const double ns = p.at("n_samples").get<double>();
    m.instantiate = 3.0 * ns * n;
    m.loss_eval = 2.0 * bs * n + 4.0 * bs;
    m.grad_eval = 4.0 * bs * n + 8.0 * bs;
  } else if (f == "losg_fully_connected") {
    const double bs = p.at("bs").get<double>();
    const double ns = p.at("n_samples").get<double>();
    const double nf = p.at("n_features").get<double>();
    const double nc = p.at("n_classes").get<double>();
    m.instantiate = 3.0 * ns * nf;
    m.loss_eval = mlp_flops(p.at("hidden_sizes"), nf, nc, bs);
    m.grad_eval = 3.0 * m.loss_eval;
  } else if (f == "mlp_classification_synthetic" || f == "mlp_ae_synthetic") {
    const Json& d = p.at("dataset");
    const double bs = d.at("bs").get<double>();
    const double ns = d.at("n_samples").get<double>();
    const double in = d.at("input_dim").get<double>();
    const double out = f == "mlp_ae_synthetic"
                           ? in
                           : d.at("n_classes").get<double>();
    const Json& layers = f == "mlp_ae_synthetic" ? p.at("hidden_units")
                                                 : p.at("layer_sizes");
    m.instantiate = 3.0 * ns * in * 3.0;
    m.loss_eval = mlp_flops(layers, in, out, bs);
    m.grad_eval = 3.0 * m.loss_eval;
  }
  // Per-step batch assembly is folded into the eval costs above.
  return m;
}

}  // namespace

double estimate_run_flops(const TaskConfig& config,
                          const RejectionPolicy& policy) {
  const CostModel m = cost_model(config);
  const double steps = policy.total_steps;
  const double evals =
      (static_cast<double>(policy.total_steps) / policy.eval_every + 1.0) *
      3.0 * policy.eval_batches;
  double param_estimate = 0.0;
  if (config.params.contains("dim")) {
    param_estimate = config.params["dim"].get<double>();
  } else if (config.params.contains("dims")) {
    param_estimate = config.params["dims"].get<double>();
  }
  const double update = 12.0 * param_estimate;
  return m.instantiate + steps * (m.grad_eval + update) + evals * m.loss_eval;
}

RejectionResult reject_task(const TaskConfig& config,
                            const RejectionPolicy& policy) {
  if (policy.probe_steps < 1) {
    throw UsageError("reject_task: probe_steps must be >= 1");
  }
  // Rule (c) first: it needs no instantiation, and pruning here keeps huge
  // latent matrices from ever being built.
  const double est_seconds =
      estimate_run_flops(config, policy) / policy.flops_per_second;
  if (est_seconds > policy.per_run_seconds_budget) {
    return {false, "over-time-budget"};
  }

  std::unique_ptr<Task> task;
  try {
    task = instantiate(config);
  } catch (const ValidationError& e) {
    return {false, std::string("config-error: ") + e.what()};
  }

  const RngKey probe_root =
      RngKey::from_seed(0x9B0BEull).child(task->task_id());
  const std::vector<double> x0 = task->initial_params(0);

  // Rule (a): the loss at initialization must be finite, and a log-guarded
  // objective must not be sitting on its clamp (the unguarded value would
  // have been -inf).
  const Batch init_batch = task->batch(Split::kTrain, probe_root.child("init"));
  const double init_loss = task->loss(x0, init_batch);
  if (!std::isfinite(init_loss)) return {false, "non-finite-init"};
  if (task->log_clamped(init_loss)) return {false, "non-finite-init"};

  // Rule (b): probe with the three canonical Adam learning rates. The task
  // is unoptimizable if no probe moves the loss; it is also rejected when no
  // probe ever improves on the init loss, which protects normalization from
  // init == best downstream.
  const double lrs[] = {1e-4, 1e-3, 1e-2};
  const double ref = std::max(1.0, std::abs(init_loss));
  bool changed = false;
  bool improved = false;
  for (std::size_t li = 0; li < 3; ++li) {
    OptimizerConfig probe;
    probe.family = "adam4p";
    probe.lr = lrs[li];
    std::vector<double> x = x0;
    OptimizerState state = OptimizerState::zeros(x.size());
    const RngKey lr_key = probe_root.child("lr").child(li);
    for (int t = 0; t < policy.probe_steps; ++t) {
      const Batch b =
          task->batch(Split::kTrain, lr_key.child(static_cast<std::uint64_t>(t)));
      const double loss = task->loss(x, b);
      if (std::isfinite(loss)) {
        if (std::abs(loss - init_loss) > policy.rel_change_threshold * ref) {
          changed = true;
        }
        if (loss < init_loss - policy.rel_change_threshold * ref) {
          improved = true;
        }
      } else {
        changed = true;  // divergence is a change, not "unable to optimize"
        break;
      }
      const std::vector<double> g = task->gradient(x, b);
      bool finite = true;
      for (double gi : g) finite = finite && std::isfinite(gi);
      if (!finite) break;
      apply_update(probe, state, x,
                   std::span<const double>(g.data(), g.size()),
                   ScheduleContext{t, policy.probe_steps});
      for (double xi : x) finite = finite && std::isfinite(xi);
      if (!finite) break;
    }
    if (changed && improved) break;
  }
  if (!changed) return {false, "unable-to-optimize"};
  if (policy.require_improvement && !improved) {
    return {false, "no-probe-improvement"};
  }
  return {true, ""};
}

}  // namespace optlist
