#include "optlist/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "optlist/errors.hpp"

namespace optlist {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

double sign0(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void check_rates(const OptimizerConfig& c) {
  if (c.lr <= 0.0) throw ValidationError("hparams.lr: must be > 0");
  if (c.beta1 <= 0.0 || c.beta1 >= 1.0) {
    throw ValidationError("hparams.beta1: must be in (0, 1)");
  }
  if (c.beta2 <= 0.0 || c.beta2 >= 1.0) {
    throw ValidationError("hparams.beta2: must be in (0, 1)");
  }
  if (c.epsilon <= 0.0) throw ValidationError("hparams.epsilon: must be > 0");
  if (c.warmup < 0.0 || c.warmup > 1.0 || c.constant < 0.0 ||
      c.constant > 1.0) {
    throw ValidationError("hparams.warmup/constant: must be in [0, 1]");
  }
}
}  // namespace

bool is_optimizer_family(const std::string& name) {
  const auto& names = optimizer_family_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string OptimizerConfig::optimizer_id() const {
  return family + "-" + hash_hex(fnv1a64(to_json_line()));
}

Json OptimizerConfig::to_json() const {
  Json h;
  h["lr"] = lr;
  h["beta1"] = beta1;
  h["beta2"] = beta2;
  h["epsilon"] = epsilon;
  if (family == "nadamw") {
    h["nesterov"] = nesterov;
    h["l2_reg"] = l2_reg;
    h["l2_weight_decay"] = l2_weight_decay;
    h["warmup"] = warmup;
    h["constant"] = constant;
    h["min_lr_mult"] = min_lr_mult;
  } else {
    h["linear_decay"] = linear_decay;
    h["exp_decay"] = exp_decay;
    h["l1"] = l1;
    h["l2"] = l2;
  }
  return Json{{"optimizer_id", optimizer_id()},
              {"family", family},
              {"hparams", h}};
}

std::string OptimizerConfig::to_json_line() const {
  std::string s = "{\"family\":\"" + family + "\",\"hparams\":{";
  auto emit = [&s](const char* key, double v, bool first = false) {
    if (!first) s += ",";
    s += "\"";
    s += key;
    s += "\":";
    s += format_double17(v);
  };
  emit("lr", lr, true);
  emit("beta1", beta1);
  emit("beta2", beta2);
  emit("epsilon", epsilon);
  if (family == "nadamw") {
    s += ",\"nesterov\":";
    s += nesterov ? "true" : "false";
    emit("l2_reg", l2_reg);
    emit("l2_weight_decay", l2_weight_decay);
    emit("warmup", warmup);
    emit("constant", constant);
    emit("min_lr_mult", min_lr_mult);
  } else {
    emit("linear_decay", linear_decay);
    emit("exp_decay", exp_decay);
    emit("l1", l1);
    emit("l2", l2);
  }
  s += "}}";
  return s;
}

OptimizerConfig OptimizerConfig::from_json(const Json& j) {
  OptimizerConfig c;
  try {
    c.family = j.at("family").get<std::string>();
    const Json& h = j.at("hparams");
    c.lr = h.at("lr").get<double>();
    c.beta1 = h.at("beta1").get<double>();
    c.beta2 = h.at("beta2").get<double>();
    c.epsilon = h.at("epsilon").get<double>();
    if (c.family == "nadamw") {
      c.nesterov = h.at("nesterov").get<bool>();
      c.l2_reg = h.at("l2_reg").get<double>();
      c.l2_weight_decay = h.at("l2_weight_decay").get<double>();
      c.warmup = h.at("warmup").get<double>();
      c.constant = h.at("constant").get<double>();
      c.min_lr_mult = h.at("min_lr_mult").get<double>();
    } else {
      c.linear_decay = h.at("linear_decay").get<double>();
      c.exp_decay = h.at("exp_decay").get<double>();
      c.l1 = h.at("l1").get<double>();
      c.l2 = h.at("l2").get<double>();
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("optimizer config: ") + e.what());
  }
  if (!is_optimizer_family(c.family)) {
    throw ValidationError("optimizer config: unknown family '" + c.family +
                          "'");
  }
  check_rates(c);
  return c;
}

std::vector<double> OptimizerConfig::hparam_vector() const {
  if (family == "nadamw") {
    return {lr,     warmup, constant,      min_lr_mult,
            beta1,  beta2,  epsilon,       nesterov ? 1.0 : 0.0,
            l2_reg, l2_weight_decay};
  }
  return {lr, beta1, beta2, epsilon, linear_decay, exp_decay, l1, l2};
}

std::vector<std::string> OptimizerConfig::hparam_names() const {
  if (family == "nadamw") {
    return {"lr",    "warmup", "constant", "min_lr_mult",     "beta1",
            "beta2", "epsilon", "nesterov", "l2_reg", "l2_weight_decay"};
  }
  return {"lr", "beta1", "beta2", "epsilon", "linear_decay", "exp_decay",
          "l1", "l2"};
}

OptimizerConfig sample_optimizer(const std::string& family, RngKey key) {
  if (!is_optimizer_family(family)) {
    throw UsageError("sample_optimizer: unknown family '" + family + "'");
  }
  Rng rng(key);
  OptimizerConfig c;
  c.family = family;
  if (family == "nadamw") {
    c.lr = rng.log_uniform(1e-5, 1.0);
    c.beta1 = 1.0 - rng.log_uniform(1e-3, 1.0);
    c.beta2 = 1.0 - rng.log_uniform(1e-5, 1.0);
    c.epsilon = rng.log_uniform(1e-8, 1e4);
    c.nesterov = rng.bernoulli(0.5);
    c.l2_reg = rng.log_uniform(1e-5, 1e-1);
    c.l2_weight_decay = rng.log_uniform(1e-5, 1e-1);
    const std::int64_t third = rng.uniform_int(0, 2);
    if (third == 1) c.l2_reg = 0.0;
    if (third == 2) c.l2_weight_decay = 0.0;
    c.min_lr_mult = rng.bernoulli(0.5) ? rng.log_uniform(1e-5, 1.0) : 0.0;
    c.warmup = rng.bernoulli(0.5) ? rng.log_uniform(1e-5, 1e-1) : 0.0;
    c.constant = rng.uniform();
    return c;
  }
  c.lr = rng.log_uniform(1e-8, 10.0);
  c.beta1 = 0.9;
  c.beta2 = 0.999;
  c.epsilon = 1e-8;
  if (family == "adam1p") return c;
  c.beta1 = 1.0 - rng.log_uniform(1e-4, 1.0);
  c.beta2 = 1.0 - rng.log_uniform(1e-6, 1.0);
  c.epsilon = rng.log_uniform(1e-8, 1e4);
  if (family == "adam4p") return c;
  c.linear_decay = rng.log_uniform(1e-7, 1e-4);
  c.exp_decay = rng.log_uniform(1e-6, 1e-3);
  if (family == "adam6p") return c;
  c.l1 = rng.log_uniform(1e-8, 1e1);
  c.l2 = rng.log_uniform(1e-8, 1e1);
  return c;
}

std::vector<double> regularized_gradient(const OptimizerConfig& config,
                                         std::span<const double> params,
                                         std::span<const double> raw_grad) {
  if (params.size() != raw_grad.size()) {
    throw ShapeError("regularized_gradient: length mismatch");
  }
  std::vector<double> g(raw_grad.begin(), raw_grad.end());
  if (config.family == "nadamw") {
    if (config.l2_reg != 0.0) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += 2.0 * config.l2_reg * params[i];
      }
    }
    return g;
  }
  if (config.l2 != 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += 2.0 * config.l2 * params[i];
    }
  }
  if (config.l1 != 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += config.l1 * sign0(params[i]);
    }
  }
  return g;
}

double nadamw_learning_rate(const OptimizerConfig& config,
                            const ScheduleContext& ctx) {
  const double t = static_cast<double>(ctx.t);
  const double total = static_cast<double>(ctx.total_steps);
  const double warmup_end = config.warmup * total;
  if (t < warmup_end) return config.lr * t / warmup_end;
  const double decay_start = config.constant * total;
  if (t < decay_start) return config.lr;
  const double floor = config.min_lr_mult;
  const double denom = total - decay_start;
  double arg = denom > 0.0 ? kPi * (t - decay_start) / denom : 0.0;
  arg = std::clamp(arg, 0.0, kPi);
  double alpha = (config.lr - floor) * (0.5 * std::cos(arg) + 0.5) + floor;
  return std::clamp(alpha, std::min(floor, config.lr), config.lr);
}

void apply_update(const OptimizerConfig& config, OptimizerState& state,
                  std::span<double> params, std::span<const double> grad,
                  const ScheduleContext& ctx) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ShapeError("apply_update: length mismatch");
  }
  if (state.t != ctx.t) {
    throw UsageError("apply_update: state.t != ctx.t");
  }
  const double b1 = config.beta1, b2 = config.beta2;
  const auto tp1 = static_cast<double>(state.t + 1);
  const double bc1 = 1.0 - std::pow(b1, tp1);
  const double bc2 = 1.0 - std::pow(b2, tp1);

  if (config.family == "nadamw") {
    const double alpha = nadamw_learning_rate(config, ctx);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i];
      state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
      state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
      const double mhat = state.m[i] / bc1;
      const double vhat = state.v[i] / bc2;
      const double denom = std::sqrt(vhat) + config.epsilon;
      const double u = config.nesterov
                           ? (b1 * mhat + (1.0 - b1) * g) / denom
                           : mhat / denom;
      params[i] -= alpha * u;
      if (config.l2_weight_decay != 0.0) {
        params[i] -= alpha * config.l2_weight_decay * params[i];
      }
    }
  } else {
    const double t = static_cast<double>(state.t);
    const double s_lin = std::max(1.0 - t * config.linear_decay, 0.0);
    const double s_exp = std::exp(-t * config.exp_decay);
    const double scale = config.lr * s_lin * s_exp;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i];
      state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
      state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
      const double mhat = state.m[i] / bc1;
      const double vhat = state.v[i] / bc2;
      const double u = mhat / (std::sqrt(vhat) + config.epsilon);
      params[i] -= scale * u;
    }
  }
  state.t += 1;
}

std::string hparam_table(const std::vector<OptimizerConfig>& configs) {
  if (configs.empty()) return "";
  char buf[256];
  std::string out;
  const bool nadamw = configs.front().family == "nadamw";
  if (nadamw) {
    out += "idx. lr      warmup constant min_lr_mult beta1   beta2   "
           "epsilon   nesterov l2_reg    l2_weight_decay\n";
  } else {
    out += "idx. lr      beta1   beta2   epsilon   linear_decay exp_decay "
           "l1        l2\n";
  }
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const OptimizerConfig& c = configs[i];
    if (nadamw) {
      std::snprintf(buf, sizeof(buf),
                    "%-4zu %.2e %.3f  %.3f    %.2e    %.5f %.5f %.3e %-8s "
                    "%.3e %.3e\n",
                    i, c.lr, c.warmup, c.constant, c.min_lr_mult, c.beta1,
                    c.beta2, c.epsilon, c.nesterov ? "true" : "false",
                    c.l2_reg, c.l2_weight_decay);
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%-4zu %.2e %.5f %.5f %.3e %.3e    %.3e %.3e %.3e\n", i,
                    c.lr, c.beta1, c.beta2, c.epsilon, c.linear_decay,
                    c.exp_decay, c.l1, c.l2);
    }
    out += buf;
  }
  return out;
}

}  // namespace optlist
