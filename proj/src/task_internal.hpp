#pragma once

// Shared helpers for task family implementations. Internal to src/.

#include <cstdint>
#include <string>

#include "optlist/errors.hpp"
#include "optlist/json_util.hpp"
#include "optlist/rng.hpp"
#include "optlist/task.hpp"

namespace optlist {

inline RngKey config_root_key(const TaskConfig& c) {
  return RngKey::from_seed(static_cast<std::uint64_t>(c.config_seed));
}

inline RngKey init_key(const TaskConfig& c, std::int64_t seed) {
  return config_root_key(c).child("init").child(
      static_cast<std::uint64_t>(seed));
}

// Field accessors that name the offending path in validation errors.
double field_double(const Json& p, const std::string& name);
std::int64_t field_int(const Json& p, const std::string& name,
                       std::int64_t lo, std::int64_t hi);
std::string field_string(const Json& p, const std::string& name);

// Activation functions shared by the MLP-style families.
enum class Activation {
  kRelu, kTanh, kCos, kElu, kSigmoid, kSwish,
  kLeakyRelu4, kLeakyRelu2, kLeakyRelu1,
};
Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);
// Weighted draw matching the documented activation distribution.
Activation sample_activation(Rng& rng);
double activation_apply(Activation a, double x);
double activation_derivative(Activation a, double x);

// Weight initializers. `param` is the sampled hyperparameter for the
// families that have one (gain / bound / std / scale), ignored otherwise.
struct InitSpec {
  std::string name;    // he_normal, glorot_uniform, orthogonal, ...
  double param = 0.0;  // 0 when the initializer takes no hyperparameter
};
InitSpec sample_initializer(Rng& rng);
void fill_weight_matrix(const InitSpec& init, std::size_t fan_in,
                        std::size_t fan_out, Rng& rng,
                        std::span<double> out);

}  // namespace optlist
