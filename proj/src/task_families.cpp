#include <algorithm>
#include <cmath>

#include "optlist/errors.hpp"
#include "optlist/task.hpp"
#include "task_internal.hpp"

namespace optlist {

std::unique_ptr<Task> make_mlp_classification_task(TaskConfig config);
std::unique_ptr<Task> make_mlp_ae_task(TaskConfig config);
std::unique_ptr<Task> make_fully_connected_task(TaskConfig config);
std::unique_ptr<Task> make_sum_of_quadratics_task(TaskConfig config);

namespace {

constexpr double kLogEps = 1e-20;
constexpr double kPi = 3.141592653589793238462643383279502884;

double powi(double base, int exp) {
  double acc = 1.0;
  for (int i = 0; i < exp; ++i) acc *= base;
  return acc;
}

std::vector<double> standard_normal_init(const TaskConfig& c,
                                         std::int64_t seed, std::size_t n) {
  Rng rng(init_key(c, seed));
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

// ---------------------------------------------------------------------------
// quadratic_like: output_fn(mean((A (x * loss_scale) - B)^2)); params are
// initialized by initial_dist.sample() / loss_scale. The config's loss_scale
// plays the weight_rescale role.
// ---------------------------------------------------------------------------
class QuadraticLikeTask final : public Task {
 public:
  explicit QuadraticLikeTask(TaskConfig config) : Task(std::move(config)) {
    const Json& p = this->config().params;
    dim_ = static_cast<std::size_t>(field_int(p, "dims", 1, 100000));
    loss_scale_ = field_double(p, "loss_scale");
    if (loss_scale_ <= 0.0) {
      throw ValidationError("params.loss_scale: must be > 0");
    }
    const std::string fn = field_string(p, "output_fn");
    if (fn != "identity" && fn != "log") {
      throw ValidationError("params.output_fn: expected identity|log");
    }
    output_log_ = fn == "log";
    build_latents();
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    const Json& dist = config().params.at("initial_dist");
    Rng rng(init_key(config(), seed));
    std::vector<double> x(dim_);
    const std::string kind = dist.at(0).get<std::string>();
    if (kind == "uniform") {
      const double lo = dist.at(1).at("min").get<double>();
      const double hi = dist.at(1).at("max").get<double>();
      for (double& v : x) v = rng.uniform(lo, hi) / loss_scale_;
    } else if (kind == "normal") {
      const double mean = dist.at(1).at("mean").get<double>();
      const double std_dev = dist.at(1).at("std").get<double>();
      for (double& v : x) v = (mean + std_dev * rng.normal()) / loss_scale_;
    } else {
      throw ValidationError("params.initial_dist: expected uniform|normal");
    }
    return x;
  }

  bool has_log_output() const override {
    return output_log_ || Task::has_log_output();
  }

 protected:
  double base_loss(std::span<const double> params,
                   const Batch&) const override {
    const double q = quad(params);
    return output_log_ ? std::log(std::max(kLogEps, q)) : q;
  }

  void base_gradient(std::span<const double> params, const Batch&,
                     std::span<double> out) const override {
    std::vector<double> r(dim_);
    residual(params, r);
    matvec_transposed(a_, r, out);
    const double scale = 2.0 * loss_scale_ / static_cast<double>(dim_);
    for (double& v : out) v *= scale;
    if (output_log_) {
      double q = 0.0;
      for (double ri : r) q += ri * ri;
      q /= static_cast<double>(dim_);
      if (q > kLogEps) {
        for (double& v : out) v /= q;
      } else {
        for (double& v : out) v = 0.0;
      }
    }
  }

 private:
  void residual(std::span<const double> params, std::span<double> r) const {
    std::vector<double> x(params.begin(), params.end());
    for (double& v : x) v *= loss_scale_;
    matvec(a_, x, r);
    for (std::size_t i = 0; i < dim_; ++i) r[i] -= b_[i];
  }

  double quad(std::span<const double> params) const {
    std::vector<double> r(dim_);
    residual(params, r);
    double q = 0.0;
    for (double ri : r) q += ri * ri;
    return q / static_cast<double>(dim_);
  }

  void build_latents() {
    const Json& p = config().params;
    const RngKey root = config_root_key(config());
    const Json& adist = p.at("A_dist");
    const std::string akind = adist.at(0).get<std::string>();
    if (akind == "normal") {
      const double mean = adist.at(1).at("mean").get<double>();
      const double std_dev = adist.at(1).at("std").get<double>();
      Rng rng(root.child("A"));
      a_ = DenseMatrix(dim_, dim_);
      for (double& v : a_.data) v = mean + std_dev * rng.normal();
    } else if (akind == "uniform") {
      const double center = adist.at(1).at("center").get<double>();
      const double halfwidth = adist.at(1).at("halfwidth").get<double>();
      Rng rng(root.child("A"));
      a_ = DenseMatrix(dim_, dim_);
      for (double& v : a_.data) {
        v = rng.uniform(center - halfwidth, center + halfwidth);
      }
    } else if (akind == "linspace_eigen" || akind == "logspace_eigen") {
      const double lo = adist.at(1).at("min").get<double>();
      const double hi = adist.at(1).at("max").get<double>();
      std::vector<double> eig(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        const double t =
            dim_ == 1 ? 0.0
                      : static_cast<double>(i) / static_cast<double>(dim_ - 1);
        eig[i] = akind == "linspace_eigen"
                     ? lo + t * (hi - lo)
                     : std::exp(std::log(lo) +
                                t * (std::log(hi) - std::log(lo)));
      }
      const DenseMatrix q = random_orthogonal(root.child("A"), dim_);
      DenseMatrix qe(dim_, dim_);  // A = Q diag(eig) Q^T
      for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
          qe.at(i, j) = q.at(i, j) * eig[j];
        }
      }
      a_ = matmul(qe, transpose(q));
    } else {
      throw ValidationError("params.A_dist: unknown kind '" + akind + "'");
    }

    const Json& bdist = p.at("B_dist");
    const std::string bkind = bdist.at(0).get<std::string>();
    Rng rng(root.child("B"));
    b_.resize(dim_);
    if (bkind == "normal") {
      const double mean = bdist.at(1).at("mean").get<double>();
      const double std_dev = bdist.at(1).at("std").get<double>();
      for (double& v : b_) v = mean + std_dev * rng.normal();
    } else if (bkind == "uniform") {
      const double lo = bdist.at(1).at("min").get<double>();
      const double range = bdist.at(1).at("range").get<double>();
      for (double& v : b_) v = rng.uniform(lo, lo + range);
    } else {
      throw ValidationError("params.B_dist: unknown kind '" + bkind + "'");
    }
  }

  std::size_t dim_ = 0;
  double loss_scale_ = 1.0;
  bool output_log_ = false;
  DenseMatrix a_;
  std::vector<double> b_;
};

// ---------------------------------------------------------------------------
// losg_quadratic: mean squared residual of W x - y with standard normal W, y.
// ---------------------------------------------------------------------------
class LosgQuadraticTask final : public Task {
 public:
  explicit LosgQuadraticTask(TaskConfig config) : Task(std::move(config)) {
    dim_ = static_cast<std::size_t>(
        field_int(this->config().params, "dim", 1, 100000));
    const RngKey root = config_root_key(this->config());
    w_ = random_normal_matrix(root.child("W"), dim_, dim_);
    Rng rng(root.child("y"));
    y_.resize(dim_);
    for (double& v : y_) v = rng.normal();
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return standard_normal_init(config(), seed, dim_);
  }

 protected:
  double base_loss(std::span<const double> params,
                   const Batch&) const override {
    std::vector<double> r(dim_);
    matvec(w_, params, r);
    double q = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double ri = r[i] - y_[i];
      q += ri * ri;
    }
    return q / static_cast<double>(dim_);
  }

  void base_gradient(std::span<const double> params, const Batch&,
                     std::span<double> out) const override {
    std::vector<double> r(dim_);
    matvec(w_, params, r);
    for (std::size_t i = 0; i < dim_; ++i) r[i] -= y_[i];
    matvec_transposed(w_, r, out);
    const double scale = 2.0 / static_cast<double>(dim_);
    for (double& v : out) v *= scale;
  }

 private:
  std::size_t dim_ = 0;
  DenseMatrix w_;
  std::vector<double> y_;
};

// ---------------------------------------------------------------------------
// losg_bowl: f(x) = 0.5 (x1^2 + cond * x2^2).
// ---------------------------------------------------------------------------
class LosgBowlTask final : public Task {
 public:
  explicit LosgBowlTask(TaskConfig config) : Task(std::move(config)) {
    cond_ = field_double(this->config().params, "cond");
    if (cond_ <= 0.0) throw ValidationError("params.cond: must be > 0");
  }

  std::size_t param_count() const override { return 2; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    Rng rng(init_key(config(), seed));
    return {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
  }

 protected:
  double base_loss(std::span<const double> x, const Batch&) const override {
    return 0.5 * (x[0] * x[0] + cond_ * x[1] * x[1]);
  }

  void base_gradient(std::span<const double> x, const Batch&,
                     std::span<double> out) const override {
    out[0] = x[0];
    out[1] = cond_ * x[1];
  }

 private:
  double cond_ = 1.0;
};

// ---------------------------------------------------------------------------
// losg_norm: (sum |W x - y|^p)^(1/p); near-zero residual entries contribute
// zero slope to dodge the p < 1 singularity.
// ---------------------------------------------------------------------------
class LosgNormTask final : public Task {
 public:
  explicit LosgNormTask(TaskConfig config) : Task(std::move(config)) {
    const Json& p = this->config().params;
    dim_ = static_cast<std::size_t>(field_int(p, "dim", 1, 100000));
    power_ = field_double(p, "p");
    if (power_ <= 0.0) throw ValidationError("params.p: must be > 0");
    const RngKey root = config_root_key(this->config());
    w_ = random_normal_matrix(root.child("W"), dim_, dim_);
    Rng rng(root.child("y"));
    y_.resize(dim_);
    for (double& v : y_) v = rng.normal();
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return standard_normal_init(config(), seed, dim_);
  }

 protected:
  double base_loss(std::span<const double> params,
                   const Batch&) const override {
    std::vector<double> r(dim_);
    residual(params, r);
    double s = 0.0;
    for (double ri : r) s += std::pow(std::abs(ri), power_);
    return std::pow(s, 1.0 / power_);
  }

  void base_gradient(std::span<const double> params, const Batch&,
                     std::span<double> out) const override {
    std::vector<double> r(dim_);
    residual(params, r);
    double s = 0.0;
    for (double ri : r) s += std::pow(std::abs(ri), power_);
    std::vector<double> dr(dim_, 0.0);
    if (s > 0.0) {
      const double outer = std::pow(s, 1.0 / power_ - 1.0);
      for (std::size_t i = 0; i < dim_; ++i) {
        const double a = std::abs(r[i]);
        if (a < 1e-12) continue;
        dr[i] = outer * std::pow(a, power_ - 1.0) * (r[i] > 0 ? 1.0 : -1.0);
      }
    }
    matvec_transposed(w_, dr, out);
  }

 private:
  void residual(std::span<const double> params, std::span<double> r) const {
    matvec(w_, params, r);
    for (std::size_t i = 0; i < dim_; ++i) r[i] -= y_[i];
  }

  std::size_t dim_ = 0;
  double power_ = 2.0;
  DenseMatrix w_;
  std::vector<double> y_;
};

// ---------------------------------------------------------------------------
// losg_dependency_chain: f(x) = sum_i g_i x_i^2 with cumulative gates
// g_i = prod_{j<i} sigmoid(10 (tau - |x_j|)); parameter i is only penalized
// once everything before it is near zero.
// ---------------------------------------------------------------------------
class LosgDependencyChainTask final : public Task {
 public:
  static constexpr double kTau = 0.5;

  explicit LosgDependencyChainTask(TaskConfig config)
      : Task(std::move(config)) {
    dim_ = static_cast<std::size_t>(
        field_int(this->config().params, "dim", 1, 100000));
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return standard_normal_init(config(), seed, dim_);
  }

 protected:
  double base_loss(std::span<const double> x, const Batch&) const override {
    double gate = 1.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      loss += gate * x[i] * x[i];
      gate *= gate_sigma(x[i]);
    }
    return loss;
  }

  void base_gradient(std::span<const double> x, const Batch&,
                     std::span<double> out) const override {
    std::vector<double> g(dim_);
    double gate = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      g[i] = gate;
      gate *= gate_sigma(x[i]);
    }
    // d/dx_k = 2 g_k x_k + (sigma'_k / sigma_k) * sum_{i>k} g_i x_i^2.
    double suffix = 0.0;
    for (std::size_t k = dim_; k-- > 0;) {
      const double sigma = gate_sigma(x[k]);
      const double sign = x[k] > 0 ? 1.0 : (x[k] < 0 ? -1.0 : 0.0);
      const double dlog_sigma = -10.0 * sign * (1.0 - sigma);
      out[k] = 2.0 * g[k] * x[k] + dlog_sigma * suffix;
      suffix += g[k] * x[k] * x[k];
    }
  }

 private:
  static double gate_sigma(double x) {
    const double z = 10.0 * (kTau - std::abs(x));
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// losg_outward_snake: a valley that winds outward forever. Following the
// valley (angle tracking radius) the loss is -||x|| with unit slope, so the
// useful step size stays constant along the path. Extra coordinates are
// pulled to zero quadratically.
// ---------------------------------------------------------------------------
class LosgOutwardSnakeTask final : public Task {
 public:
  explicit LosgOutwardSnakeTask(TaskConfig config) : Task(std::move(config)) {
    dim_ = static_cast<std::size_t>(
        field_int(this->config().params, "dim", 2, 100000));
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return standard_normal_init(config(), seed, dim_);
  }

 protected:
  double base_loss(std::span<const double> x, const Batch&) const override {
    const double r2 = x[0] * x[0] + x[1] * x[1] + 1e-6;
    const double r = std::sqrt(r2);
    const double theta = std::atan2(x[1], x[0]);
    double tail = 0.0;
    for (std::size_t i = 2; i < dim_; ++i) tail += x[i] * x[i];
    return -r + 2.0 * (1.0 - std::cos(theta - 2.0 * r)) + 0.5 * tail;
  }

  void base_gradient(std::span<const double> x, const Batch&,
                     std::span<double> out) const override {
    const double r2 = x[0] * x[0] + x[1] * x[1] + 1e-6;
    const double r = std::sqrt(r2);
    const double theta = std::atan2(x[1], x[0]);
    const double s = 2.0 * std::sin(theta - 2.0 * r);
    const double dr_dx0 = x[0] / r;
    const double dr_dx1 = x[1] / r;
    const double dtheta_dx0 = -x[1] / r2;
    const double dtheta_dx1 = x[0] / r2;
    out[0] = -dr_dx0 + s * (dtheta_dx0 - 2.0 * dr_dx0);
    out[1] = -dr_dx1 + s * (dtheta_dx1 - 2.0 * dr_dx1);
    for (std::size_t i = 2; i < dim_; ++i) out[i] = x[i];
  }

 private:
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// losg_min_max_well: max(x) + 1/min(x) - 2; gradient touches only the argmax
// and argmin coordinates (first index on ties).
// ---------------------------------------------------------------------------
class LosgMinMaxWellTask final : public Task {
 public:
  explicit LosgMinMaxWellTask(TaskConfig config) : Task(std::move(config)) {
    dim_ = static_cast<std::size_t>(
        field_int(this->config().params, "dim", 2, 100000));
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    // Positive init keeps 1/min well defined at step zero.
    Rng rng(init_key(config(), seed));
    std::vector<double> x(dim_);
    for (double& v : x) v = rng.uniform(0.5, 1.5);
    return x;
  }

 protected:
  double base_loss(std::span<const double> x, const Batch&) const override {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    return *mx + 1.0 / *mn - 2.0;
  }

  void base_gradient(std::span<const double> x, const Batch&,
                     std::span<double> out) const override {
    std::size_t imin = 0, imax = 0;
    for (std::size_t i = 1; i < dim_; ++i) {
      if (x[i] < x[imin]) imin = i;
      if (x[i] > x[imax]) imax = i;
    }
    for (double& v : out) v = 0.0;
    out[imax] += 1.0;
    out[imin] += -1.0 / (x[imin] * x[imin]);
  }

 private:
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// twod_fixed: hand designed 2D test functions with analytic gradients.
// ---------------------------------------------------------------------------
class TwodFixedTask final : public Task {
 public:
  explicit TwodFixedTask(TaskConfig config) : Task(std::move(config)) {
    name_ = field_string(this->config().params, "name");
    if (name_.rfind("TwoD_Bowl", 0) == 0) {
      kind_ = Kind::kBowl;
      cond_ = std::stod(name_.substr(9));
    } else if (name_ == "TwoD_Rosenbrock") {
      kind_ = Kind::kRosenbrock;
    } else if (name_ == "TwoD_StyblinskiTang") {
      kind_ = Kind::kStyblinskiTang;
    } else if (name_ == "TwoD_Ackley") {
      kind_ = Kind::kAckley;
    } else if (name_ == "TwoD_Beale") {
      kind_ = Kind::kBeale;
    } else if (name_ == "TwoD_Branin") {
      kind_ = Kind::kBranin;
    } else if (name_ == "TwoD_LogSumExp") {
      kind_ = Kind::kLogSumExp;
    } else if (name_ == "TwoD_Matyas") {
      kind_ = Kind::kMatyas;
    } else if (name_ == "TwoD_Michalewicz") {
      kind_ = Kind::kMichalewicz;
    } else {
      throw ValidationError("params.name: unknown fixed task '" + name_ + "'");
    }
  }

  std::size_t param_count() const override { return 2; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    Rng rng(init_key(config(), seed));
    switch (kind_) {
      case Kind::kBowl: return {rng.uniform(-5, 5), rng.uniform(-5, 5)};
      case Kind::kRosenbrock: return {rng.uniform(-2, 2), rng.uniform(-2, 2)};
      case Kind::kStyblinskiTang:
        return {rng.uniform(-5, 5), rng.uniform(-5, 5)};
      case Kind::kAckley: return {rng.uniform(-4, 4), rng.uniform(-4, 4)};
      case Kind::kBeale:
        return {rng.uniform(-4.5, 4.5), rng.uniform(-4.5, 4.5)};
      case Kind::kBranin: return {rng.uniform(-5, 10), rng.uniform(0, 15)};
      case Kind::kLogSumExp: return {rng.uniform(-5, 5), rng.uniform(-5, 5)};
      case Kind::kMatyas: return {rng.uniform(-10, 10), rng.uniform(-10, 10)};
      case Kind::kMichalewicz:
        return {rng.uniform(0.1, kPi), rng.uniform(0.1, kPi)};
    }
    return {0.0, 0.0};
  }

 protected:
  double base_loss(std::span<const double> p, const Batch&) const override {
    const double x = p[0], y = p[1];
    switch (kind_) {
      case Kind::kBowl:
        return 0.5 * (x * x + cond_ * y * y);
      case Kind::kRosenbrock: {
        const double a = 1.0 - x;
        const double b = y - x * x;
        return a * a + 100.0 * b * b;
      }
      case Kind::kStyblinskiTang:
        return 0.5 * (powi(x, 4) - 16 * x * x + 5 * x) +
               0.5 * (powi(y, 4) - 16 * y * y + 5 * y);
      case Kind::kAckley: {
        const double s = std::sqrt(0.5 * (x * x + y * y));
        const double c = 0.5 * (std::cos(2 * kPi * x) + std::cos(2 * kPi * y));
        return -20.0 * std::exp(-0.2 * s) - std::exp(c) + 20.0 +
               std::exp(1.0);
      }
      case Kind::kBeale: {
        const double t1 = 1.5 - x + x * y;
        const double t2 = 2.25 - x + x * y * y;
        const double t3 = 2.625 - x + x * y * y * y;
        return t1 * t1 + t2 * t2 + t3 * t3;
      }
      case Kind::kBranin: {
        const double b = 5.1 / (4 * kPi * kPi), c = 5 / kPi;
        const double u = y - b * x * x + c * x - 6.0;
        return u * u + 10.0 * (1 - 1 / (8 * kPi)) * std::cos(x) + 10.0;
      }
      case Kind::kLogSumExp:
        return std::log(std::exp(x) + std::exp(-x) + std::exp(y) +
                        std::exp(-y));
      case Kind::kMatyas:
        return 0.26 * (x * x + y * y) - 0.48 * x * y;
      case Kind::kMichalewicz: {
        const double m = 10;
        const double ix = x * x / kPi, iy = 2 * y * y / kPi;
        return -std::sin(x) * powi(std::sin(ix), 2 * m) -
               std::sin(y) * powi(std::sin(iy), 2 * m);
      }
    }
    return 0.0;
  }

  void base_gradient(std::span<const double> p, const Batch&,
                     std::span<double> out) const override {
    const double x = p[0], y = p[1];
    switch (kind_) {
      case Kind::kBowl:
        out[0] = x;
        out[1] = cond_ * y;
        return;
      case Kind::kRosenbrock: {
        const double b = y - x * x;
        out[0] = -2.0 * (1.0 - x) - 400.0 * x * b;
        out[1] = 200.0 * b;
        return;
      }
      case Kind::kStyblinskiTang:
        out[0] = 2.0 * powi(x, 3) - 16.0 * x + 2.5;
        out[1] = 2.0 * powi(y, 3) - 16.0 * y + 2.5;
        return;
      case Kind::kAckley: {
        const double s = std::sqrt(0.5 * (x * x + y * y));
        const double c = 0.5 * (std::cos(2 * kPi * x) + std::cos(2 * kPi * y));
        const double ec = std::exp(c);
        if (s < 1e-12) {
          out[0] = 0.0;
          out[1] = 0.0;
          return;
        }
        const double radial = 2.0 * std::exp(-0.2 * s) / s;
        out[0] = radial * x + kPi * std::sin(2 * kPi * x) * ec;
        out[1] = radial * y + kPi * std::sin(2 * kPi * y) * ec;
        return;
      }
      case Kind::kBeale: {
        const double t1 = 1.5 - x + x * y;
        const double t2 = 2.25 - x + x * y * y;
        const double t3 = 2.625 - x + x * y * y * y;
        out[0] = 2 * t1 * (y - 1) + 2 * t2 * (y * y - 1) +
                 2 * t3 * (y * y * y - 1);
        out[1] = 2 * t1 * x + 2 * t2 * (2 * x * y) + 2 * t3 * (3 * x * y * y);
        return;
      }
      case Kind::kBranin: {
        const double b = 5.1 / (4 * kPi * kPi), c = 5 / kPi;
        const double u = y - b * x * x + c * x - 6.0;
        out[0] = 2 * u * (-2 * b * x + c) -
                 10.0 * (1 - 1 / (8 * kPi)) * std::sin(x);
        out[1] = 2 * u;
        return;
      }
      case Kind::kLogSumExp: {
        const double z =
            std::exp(x) + std::exp(-x) + std::exp(y) + std::exp(-y);
        out[0] = (std::exp(x) - std::exp(-x)) / z;
        out[1] = (std::exp(y) - std::exp(-y)) / z;
        return;
      }
      case Kind::kMatyas:
        out[0] = 0.52 * x - 0.48 * y;
        out[1] = 0.52 * y - 0.48 * x;
        return;
      case Kind::kMichalewicz: {
        const int m = 10;
        const double ix = x * x / kPi, iy = 2 * y * y / kPi;
        const double sx = std::sin(ix), sy = std::sin(iy);
        out[0] = -(std::cos(x) * powi(sx, 2 * m) +
                   std::sin(x) * 2 * m * powi(sx, 2 * m - 1) * std::cos(ix) *
                       (2 * x / kPi));
        out[1] = -(std::cos(y) * powi(sy, 2 * m) +
                   std::sin(y) * 2 * m * powi(sy, 2 * m - 1) * std::cos(iy) *
                       (4 * y / kPi));
        return;
      }
    }
  }

 private:
  enum class Kind {
    kBowl, kRosenbrock, kStyblinskiTang, kAckley, kBeale,
    kBranin, kLogSumExp, kMatyas, kMichalewicz,
  };

  std::string name_;
  Kind kind_ = Kind::kBowl;
  double cond_ = 1.0;
};

}  // namespace

std::unique_ptr<Task> instantiate(const TaskConfig& config) {
  if (config.transform) {
    const std::string& k = config.transform->kind;
    if (k != "sparse_problems" && k != "rescale_problems" &&
        k != "log_objective") {
      throw ValidationError("transform.kind: unknown transform '" + k + "'");
    }
  }
  const std::string& f = config.family;
  if (f == "quadratic_like") return std::make_unique<QuadraticLikeTask>(config);
  if (f == "losg_quadratic") return std::make_unique<LosgQuadraticTask>(config);
  if (f == "losg_bowl") return std::make_unique<LosgBowlTask>(config);
  if (f == "losg_norm") return std::make_unique<LosgNormTask>(config);
  if (f == "losg_dependency_chain") {
    return std::make_unique<LosgDependencyChainTask>(config);
  }
  if (f == "losg_outward_snake") {
    return std::make_unique<LosgOutwardSnakeTask>(config);
  }
  if (f == "losg_min_max_well") {
    return std::make_unique<LosgMinMaxWellTask>(config);
  }
  if (f == "losg_sum_of_quadratics") return make_sum_of_quadratics_task(config);
  if (f == "losg_fully_connected") return make_fully_connected_task(config);
  if (f == "mlp_classification_synthetic") {
    return make_mlp_classification_task(config);
  }
  if (f == "mlp_ae_synthetic") return make_mlp_ae_task(config);
  if (f == "twod_fixed") return std::make_unique<TwodFixedTask>(config);
  throw ValidationError("family: unknown task family '" + f + "'");
}

std::vector<TaskConfig> fixed_twod_task_configs() {
  static const char* kNames[] = {
      "TwoD_Bowl1",      "TwoD_Bowl10",         "TwoD_Bowl100",
      "TwoD_Bowl1000",   "TwoD_Rosenbrock",     "TwoD_StyblinskiTang",
      "TwoD_Ackley",     "TwoD_Beale",          "TwoD_Branin",
      "TwoD_LogSumExp",  "TwoD_Matyas",         "TwoD_Michalewicz"};
  std::vector<TaskConfig> configs;
  for (const char* name : kNames) {
    TaskConfig c;
    c.family = "twod_fixed";
    c.params = Json{{"name", name}};
    c.config_seed = 0;
    configs.push_back(std::move(c));
  }
  return configs;
}

}  // namespace optlist
