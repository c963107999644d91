#include "task_internal.hpp"

#include <cmath>

#include "optlist/matrix.hpp"

namespace optlist {

double field_double(const Json& p, const std::string& name) {
  if (!p.contains(name) || !p[name].is_number()) {
    throw ValidationError("params." + name + ": missing or not a number");
  }
  return p[name].get<double>();
}

std::int64_t field_int(const Json& p, const std::string& name,
                       std::int64_t lo, std::int64_t hi) {
  if (!p.contains(name) || !p[name].is_number_integer()) {
    throw ValidationError("params." + name + ": missing or not an integer");
  }
  const std::int64_t v = p[name].get<std::int64_t>();
  if (v < lo || v > hi) {
    throw ValidationError("params." + name + ": " + std::to_string(v) +
                          " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  return v;
}

std::string field_string(const Json& p, const std::string& name) {
  if (!p.contains(name) || !p[name].is_string()) {
    throw ValidationError("params." + name + ": missing or not a string");
  }
  return p[name].get<std::string>();
}

namespace {
struct ActivationEntry {
  Activation act;
  const char* name;
  int weight;
};
constexpr ActivationEntry kActivations[] = {
    {Activation::kRelu, "relu", 6},
    {Activation::kTanh, "tanh", 3},
    {Activation::kCos, "cos", 1},
    {Activation::kElu, "elu", 1},
    {Activation::kSigmoid, "sigmoid", 1},
    {Activation::kSwish, "swish", 1},
    {Activation::kLeakyRelu4, "leaky_relu4", 1},
    {Activation::kLeakyRelu2, "leaky_relu2", 1},
    {Activation::kLeakyRelu1, "leaky_relu1", 1},
};

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Activation activation_from_name(const std::string& name) {
  for (const auto& e : kActivations) {
    if (name == e.name) return e.act;
  }
  throw ValidationError("params.activation: unknown activation '" + name +
                        "'");
}

const char* activation_name(Activation a) {
  for (const auto& e : kActivations) {
    if (e.act == a) return e.name;
  }
  return "?";
}

Activation sample_activation(Rng& rng) {
  int total = 0;
  for (const auto& e : kActivations) total += e.weight;
  std::int64_t pick = rng.uniform_int(0, total - 1);
  for (const auto& e : kActivations) {
    pick -= e.weight;
    if (pick < 0) return e.act;
  }
  return Activation::kRelu;
}

double activation_apply(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kCos: return std::cos(x);
    case Activation::kElu: return x > 0 ? x : std::expm1(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kSwish: return x * sigmoid(x);
    case Activation::kLeakyRelu4: return x > 0 ? x : 0.4 * x;
    case Activation::kLeakyRelu2: return x > 0 ? x : 0.2 * x;
    case Activation::kLeakyRelu1: return x > 0 ? x : 0.1 * x;
  }
  return x;
}

double activation_derivative(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kCos: return -std::sin(x);
    case Activation::kElu: return x > 0 ? 1.0 : std::exp(x);
    case Activation::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::kSwish: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case Activation::kLeakyRelu4: return x > 0 ? 1.0 : 0.4;
    case Activation::kLeakyRelu2: return x > 0 ? 1.0 : 0.2;
    case Activation::kLeakyRelu1: return x > 0 ? 1.0 : 0.1;
  }
  return 1.0;
}

namespace {
struct InitEntry {
  const char* name;
  int weight;
  bool has_param;
};
constexpr InitEntry kInitializers[] = {
    {"he_normal", 2, false},        {"he_uniform", 2, false},
    {"glorot_normal", 2, false},    {"glorot_uniform", 2, false},
    {"orthogonal", 1, true},        {"random_uniform", 1, true},
    {"random_normal", 1, true},     {"truncated_normal", 1, true},
    {"variance_scaling", 1, true},
};
}  // namespace

InitSpec sample_initializer(Rng& rng) {
  int total = 0;
  for (const auto& e : kInitializers) total += e.weight;
  std::int64_t pick = rng.uniform_int(0, total - 1);
  for (const auto& e : kInitializers) {
    pick -= e.weight;
    if (pick < 0) {
      InitSpec spec;
      spec.name = e.name;
      if (e.has_param) spec.param = rng.log_uniform(0.1, 10.0);
      return spec;
    }
  }
  return {"he_normal", 0.0};
}

void fill_weight_matrix(const InitSpec& init, std::size_t fan_in,
                        std::size_t fan_out, Rng& rng,
                        std::span<double> out) {
  const double fin = static_cast<double>(fan_in);
  const double fout = static_cast<double>(fan_out);
  if (init.name == "he_normal") {
    const double s = std::sqrt(2.0 / fin);
    for (double& v : out) v = s * rng.normal();
  } else if (init.name == "he_uniform") {
    const double b = std::sqrt(6.0 / fin);
    for (double& v : out) v = rng.uniform(-b, b);
  } else if (init.name == "glorot_normal") {
    const double s = std::sqrt(2.0 / (fin + fout));
    for (double& v : out) v = s * rng.normal();
  } else if (init.name == "glorot_uniform") {
    const double b = std::sqrt(6.0 / (fin + fout));
    for (double& v : out) v = rng.uniform(-b, b);
  } else if (init.name == "orthogonal") {
    // Square draw sliced to shape, scaled by the sampled gain.
    const std::size_t n = std::max(fan_in, fan_out);
    RngKey sub = RngKey::from_seed(rng.next_u64());
    DenseMatrix q = random_orthogonal(sub, n);
    for (std::size_t i = 0; i < fan_in; ++i) {
      for (std::size_t j = 0; j < fan_out; ++j) {
        out[i * fan_out + j] = init.param * q.at(i, j);
      }
    }
  } else if (init.name == "random_uniform") {
    for (double& v : out) v = rng.uniform(-init.param, init.param);
  } else if (init.name == "random_normal") {
    for (double& v : out) v = init.param * rng.normal();
  } else if (init.name == "truncated_normal") {
    for (double& v : out) {
      double z = rng.normal();
      while (std::abs(z) > 2.0) z = rng.normal();
      v = init.param * z;
    }
  } else if (init.name == "variance_scaling") {
    const double s = std::sqrt(init.param / fin);
    for (double& v : out) v = s * rng.normal();
  } else {
    throw ValidationError("params.w_init: unknown initializer '" + init.name +
                          "'");
  }
}

}  // namespace optlist
