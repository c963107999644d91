#include <algorithm>
#include <cmath>

#include "optlist/errors.hpp"
#include "optlist/task.hpp"

namespace optlist {

namespace {
constexpr double kLogEps = 1e-20;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<std::string> sampled_task_family_names() {
  std::vector<std::string> names = task_family_names();
  names.erase(std::remove(names.begin(), names.end(), "twod_fixed"),
              names.end());
  return names;
}

bool is_task_family(const std::string& name) {
  const auto& names = task_family_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string TaskConfig::task_id() const {
  const std::string canonical = to_json().dump();
  return family + "-" + hash_hex(fnv1a64(canonical));
}

Json TaskConfig::to_json() const {
  Json j;
  j["family"] = family;
  j["config_seed"] = config_seed;
  j["params"] = params;
  if (transform) {
    j["transform"] = Json{{"kind", transform->kind},
                          {"params", transform->params}};
  } else {
    j["transform"] = nullptr;
  }
  return j;
}

TaskConfig TaskConfig::from_json(const Json& j) {
  TaskConfig c;
  try {
    c.family = j.at("family").get<std::string>();
    c.config_seed = j.at("config_seed").get<std::int64_t>();
    c.params = j.at("params");
    if (j.contains("transform") && !j.at("transform").is_null()) {
      TransformSpec t;
      t.kind = j.at("transform").at("kind").get<std::string>();
      if (j.at("transform").contains("params")) {
        t.params = j.at("transform").at("params");
      }
      c.transform = t;
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("task config: ") + e.what());
  }
  if (!is_task_family(c.family)) {
    throw ValidationError("task config: unknown family '" + c.family + "'");
  }
  return c;
}

void Task::check_params(std::span<const double> params) const {
  if (params.size() != param_count()) {
    throw ShapeError("task " + task_id_ + ": params length " +
                     std::to_string(params.size()) + " != param_count " +
                     std::to_string(param_count()));
  }
}

Batch Task::make_batch(Split /*split*/, RngKey key) const {
  Batch b;
  b.batch_seed = key.at(0);
  return b;
}

Batch Task::batch(Split split, RngKey key) const {
  const Split effective = just_train_ ? Split::kTrain : split;
  return make_batch(effective, key);
}

bool Task::has_log_output() const {
  return config_.transform && config_.transform->kind == "log_objective";
}

bool Task::log_clamped(double v) const {
  if (!has_log_output()) return false;
  return v <= std::log(kLogEps) + 1e-6;
}

double Task::loss(std::span<const double> params, const Batch& b) const {
  check_params(params);
  double v = base_loss(params, b);
  if (config_.transform) {
    const TransformSpec& t = *config_.transform;
    if (t.kind == "rescale_problems") {
      v *= t.params.at("scale").get<double>();
    } else if (t.kind == "log_objective") {
      v = std::log(std::max(kLogEps, v));
    }
  }
  return v;
}

std::vector<double> Task::gradient(std::span<const double> params,
                                   const Batch& b) const {
  check_params(params);
  std::vector<double> g(params.size(), 0.0);
  base_gradient(params, b, g);

  // Family-level gradient noise (quadratic/bowl/min_max_well style configs).
  if (config_.params.contains("noise") && !config_.params["noise"].is_null()) {
    const double std_dev = config_.params["noise"].get<double>();
    Rng rng(RngKey::from_seed(b.batch_seed).child("family_noise"));
    for (double& gi : g) gi += std_dev * rng.normal();
  }

  if (config_.transform) {
    const TransformSpec& t = *config_.transform;
    if (t.kind == "rescale_problems") {
      const double scale = t.params.at("scale").get<double>();
      for (double& gi : g) gi *= scale;
    } else if (t.kind == "log_objective") {
      const double base = base_loss(params, b);
      if (base > kLogEps) {
        for (double& gi : g) gi /= base;
      } else {
        for (double& gi : g) gi = 0.0;  // on the clamp the output is flat
      }
    } else if (t.kind == "sparse_problems") {
      if (t.params.contains("noise_std") && !t.params["noise_std"].is_null()) {
        const double std_dev = t.params["noise_std"].get<double>();
        Rng rng(RngKey::from_seed(b.batch_seed).child("sparse_noise"));
        for (double& gi : g) gi += std_dev * rng.normal();
      }
      // Mask last so zeroed entries stay exactly zero.
      const double zero_prob = t.params.at("zero_prob").get<double>();
      Rng rng(RngKey::from_seed(b.batch_seed).child("sparse_mask"));
      for (double& gi : g) {
        if (rng.uniform() < zero_prob) gi = 0.0;
      }
    }
  }
  return g;
}

}  // namespace optlist
