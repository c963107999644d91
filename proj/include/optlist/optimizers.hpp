#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "optlist/json_util.hpp"
#include "optlist/rng.hpp"

namespace optlist {

inline const std::vector<std::string>& optimizer_family_names() {
  static const std::vector<std::string> names = {"adam1p", "adam4p", "adam6p",
                                                 "adam8p", "nadamw"};
  return names;
}

bool is_optimizer_family(const std::string& name);

// One point in a family's hyperparameter space. Fields outside a family's
// arity hold that family's defaults (betas/epsilon for adam1p, zeros for
// decays and regularizers, full-run constant schedule for nadamw).
struct OptimizerConfig {
  std::string family;

  double lr = 0.0;       // adam alpha / nadamw alpha_base
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // adam6p/8p schedule and regularizers
  double linear_decay = 0.0;
  double exp_decay = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;

  // nadamw
  bool nesterov = false;
  double l2_reg = 0.0;          // coupled weight decay (enters the gradient)
  double l2_weight_decay = 0.0; // decoupled, scaled by the scheduled lr
  double warmup = 0.0;          // fraction of steps ramping up
  double constant = 1.0;        // fraction of steps before cosine decay
  double min_lr_mult = 0.0;     // decay floor

  std::string optimizer_id() const;
  Json to_json() const;
  // Fixed key order, 17 significant digits; byte-stable across runs.
  std::string to_json_line() const;
  static OptimizerConfig from_json(const Json& j);

  // Hyperparameter vector for post-hoc search-space bounds, with the
  // family's canonical dimension order and names.
  std::vector<double> hparam_vector() const;
  std::vector<std::string> hparam_names() const;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  static OptimizerState zeros(std::size_t n) {
    OptimizerState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
  }
};

struct ScheduleContext {
  std::int64_t t = 0;
  std::int64_t total_steps = 1;
};

OptimizerConfig sample_optimizer(const std::string& family, RngKey key);

// raw_grad + 2 l2 p + l1 sign(p) for adam families (sign(0) = 0); nadamw
// adds only the coupled 2 l2_reg p term here.
std::vector<double> regularized_gradient(const OptimizerConfig& config,
                                         std::span<const double> params,
                                         std::span<const double> raw_grad);

// Warmup ramp, constant hold, then single-cycle cosine decay to the
// min_lr_mult floor (treated as an absolute rate).
double nadamw_learning_rate(const OptimizerConfig& config,
                            const ScheduleContext& ctx);

// One optimizer step in place. Requires state.t == ctx.t; non-finite
// gradients propagate into params for the caller's divergence check.
void apply_update(const OptimizerConfig& config, OptimizerState& state,
                  std::span<double> params, std::span<const double> grad,
                  const ScheduleContext& ctx);

// Human-readable hyperparameter table; nadamw uses the canonical column
// order (lr, warmup, constant, min_lr_mult, betas, epsilon, nesterov, l2s).
std::string hparam_table(const std::vector<OptimizerConfig>& configs);

}  // namespace optlist
