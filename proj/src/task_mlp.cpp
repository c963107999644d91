#include <cmath>

#include "optlist/errors.hpp"
#include "optlist/task.hpp"
#include "task_internal.hpp"

namespace optlist {
namespace {

// ---------------------------------------------------------------------------
// Synthetic datasets. Gaussian blob classes stand in for the image datasets:
// class centers are drawn once from the config seed, rows are center + unit
// noise with round-robin labels. Splits use disjoint key paths unless the
// config says just_train.
// ---------------------------------------------------------------------------

struct SplitData {
  DenseMatrix inputs;
  std::vector<int> labels;
  std::vector<double> targets;  // scalar regression targets
};

SplitData make_blob_split(const DenseMatrix& centers, std::size_t n_samples,
                          RngKey key, bool squash_unit_interval) {
  const std::size_t d = centers.cols;
  const std::size_t n_classes = centers.rows;
  SplitData s;
  s.inputs = DenseMatrix(n_samples, d);
  s.labels.resize(n_samples);
  Rng rng(key);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int label = static_cast<int>(i % n_classes);
    s.labels[i] = label;
    for (std::size_t j = 0; j < d; ++j) {
      double v = centers.at(label, j) + rng.normal();
      if (squash_unit_interval) v = 1.0 / (1.0 + std::exp(-v));
      s.inputs.at(i, j) = v;
    }
  }
  return s;
}

int split_index(Split s) {
  switch (s) {
    case Split::kTrain: return 0;
    case Split::kValid: return 1;
    case Split::kTest: return 2;
  }
  return 0;
}

// Base for tasks with a finite dataset: batches draw rows with replacement.
class DataBackedTask : public Task {
 public:
  explicit DataBackedTask(TaskConfig config) : Task(std::move(config)) {}

 protected:
  void init_dataset_params(const Json& dataset) {
    batch_size_ = static_cast<std::size_t>(
        field_int(dataset, "bs", 1, 1 << 16));
    n_samples_ = static_cast<std::size_t>(
        field_int(dataset, "n_samples", 1, 1 << 24));
    if (dataset.contains("just_train")) {
      set_just_train(dataset["just_train"].get<bool>());
    }
  }

  virtual const SplitData& split_data(int index) const = 0;

  Batch make_batch(Split split, RngKey key) const override {
    const SplitData& data = split_data(split_index(split));
    Rng rng(key);
    Batch b;
    b.batch_seed = rng.next_u64();
    const std::size_t d = data.inputs.cols;
    b.inputs = DenseMatrix(batch_size_, d);
    if (!data.labels.empty()) b.labels.resize(batch_size_);
    if (!data.targets.empty()) b.targets = DenseMatrix(batch_size_, 1);
    for (std::size_t i = 0; i < batch_size_; ++i) {
      const auto row = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(data.inputs.rows) - 1));
      for (std::size_t j = 0; j < d; ++j) {
        b.inputs.at(i, j) = data.inputs.at(row, j);
      }
      if (!data.labels.empty()) b.labels[i] = data.labels[row];
      if (!data.targets.empty()) b.targets.at(i, 0) = data.targets[row];
    }
    return b;
  }

  std::size_t batch_size_ = 1;
  std::size_t n_samples_ = 1;
};

// ---------------------------------------------------------------------------
// losg_sum_of_quadratics: least squares against a synthetic linear dataset
// y = w . x* + noise, minibatched.
// ---------------------------------------------------------------------------
class SumOfQuadraticsTask final : public DataBackedTask {
 public:
  explicit SumOfQuadraticsTask(TaskConfig config)
      : DataBackedTask(std::move(config)) {
    const Json& p = this->config().params;
    dim_ = static_cast<std::size_t>(field_int(p, "dim", 1, 100000));
    init_dataset_params(p);
    const RngKey root = config_root_key(this->config());
    std::vector<double> latent(dim_);
    {
      Rng rng(root.child("latent"));
      for (double& v : latent) v = rng.normal();
    }
    const int n_splits = just_train() ? 1 : 3;
    for (int s = 0; s < n_splits; ++s) {
      SplitData data;
      data.inputs = random_normal_matrix(
          root.child("data").child(static_cast<std::uint64_t>(s)), n_samples_,
          dim_);
      data.targets.resize(n_samples_);
      Rng rng(root.child("targets").child(static_cast<std::uint64_t>(s)));
      for (std::size_t i = 0; i < n_samples_; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          dot += data.inputs.at(i, j) * latent[j];
        }
        data.targets[i] = dot + 0.1 * rng.normal();
      }
      splits_.push_back(std::move(data));
    }
  }

  std::size_t param_count() const override { return dim_; }

  std::vector<double> initial_params(std::int64_t seed) const override {
    Rng rng(init_key(config(), seed));
    std::vector<double> x(dim_);
    for (double& v : x) v = rng.normal();
    return x;
  }

 protected:
  const SplitData& split_data(int index) const override {
    return splits_[just_train() ? 0 : index];
  }

  double base_loss(std::span<const double> params,
                   const Batch& b) const override {
    if (b.is_empty()) throw ShapeError("sum_of_quadratics: empty batch");
    double loss = 0.0;
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        dot += b.inputs.at(i, j) * params[j];
      }
      const double r = dot - b.targets.at(i, 0);
      loss += r * r;
    }
    return loss / static_cast<double>(b.inputs.rows);
  }

  void base_gradient(std::span<const double> params, const Batch& b,
                     std::span<double> out) const override {
    if (b.is_empty()) throw ShapeError("sum_of_quadratics: empty batch");
    for (double& v : out) v = 0.0;
    const double scale = 2.0 / static_cast<double>(b.inputs.rows);
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        dot += b.inputs.at(i, j) * params[j];
      }
      const double r = scale * (dot - b.targets.at(i, 0));
      for (std::size_t j = 0; j < dim_; ++j) {
        out[j] += r * b.inputs.at(i, j);
      }
    }
  }

 private:
  std::size_t dim_ = 0;
  std::vector<SplitData> splits_;
};

// ---------------------------------------------------------------------------
// Shared MLP machinery (manual backprop over a flat parameter vector).
// Layout per layer: row-major W[fan_in x fan_out] then bias[fan_out].
// ---------------------------------------------------------------------------

std::size_t mlp_param_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += sizes[l] * sizes[l + 1] + sizes[l + 1];
  }
  return n;
}

struct MlpForward {
  // pre[l] and act[l] for layer l output (act excludes the final layer,
  // whose head is task specific).
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

void mlp_forward(const std::vector<std::size_t>& sizes, Activation act_fn,
                 std::span<const double> params, std::span<const double> input,
                 MlpForward& fwd) {
  const std::size_t n_layers = sizes.size() - 1;
  fwd.pre.assign(n_layers, {});
  fwd.act.assign(n_layers, {});
  std::size_t offset = 0;
  std::span<const double> current = input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t fin = sizes[l], fout = sizes[l + 1];
    const double* w = params.data() + offset;
    const double* bias = w + fin * fout;
    auto& pre = fwd.pre[l];
    pre.assign(fout, 0.0);
    for (std::size_t i = 0; i < fin; ++i) {
      const double xi = current[i];
      if (xi == 0.0) continue;
      const double* wrow = w + i * fout;
      for (std::size_t j = 0; j < fout; ++j) pre[j] += xi * wrow[j];
    }
    for (std::size_t j = 0; j < fout; ++j) pre[j] += bias[j];
    auto& a = fwd.act[l];
    if (l + 1 < n_layers) {
      a.resize(fout);
      for (std::size_t j = 0; j < fout; ++j) {
        a[j] = activation_apply(act_fn, pre[j]);
      }
      current = a;
    }
    offset += fin * fout + fout;
  }
}

// Backprop from d(loss)/d(final pre-activations); accumulates into grad.
void mlp_backward(const std::vector<std::size_t>& sizes, Activation act_fn,
                  std::span<const double> params, std::span<const double> input,
                  const MlpForward& fwd, std::vector<double> delta,
                  std::span<double> grad) {
  const std::size_t n_layers = sizes.size() - 1;
  std::vector<std::size_t> offsets(n_layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = offset;
    offset += sizes[l] * sizes[l + 1] + sizes[l + 1];
  }
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t fin = sizes[l], fout = sizes[l + 1];
    const double* w = params.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + fin * fout;
    std::span<const double> below =
        l == 0 ? input : std::span<const double>(fwd.act[l - 1]);
    for (std::size_t j = 0; j < fout; ++j) gb[j] += delta[j];
    for (std::size_t i = 0; i < fin; ++i) {
      const double xi = below[i];
      if (xi == 0.0) continue;
      double* grow = gw + i * fout;
      for (std::size_t j = 0; j < fout; ++j) grow[j] += xi * delta[j];
    }
    if (l == 0) break;
    std::vector<double> next(fin, 0.0);
    for (std::size_t i = 0; i < fin; ++i) {
      const double* wrow = w + i * fout;
      double acc = 0.0;
      for (std::size_t j = 0; j < fout; ++j) acc += wrow[j] * delta[j];
      next[i] = acc * activation_derivative(act_fn, fwd.pre[l - 1][i]);
    }
    delta = std::move(next);
  }
}

std::vector<double> mlp_initial_params(const TaskConfig& config,
                                       const std::vector<std::size_t>& sizes,
                                       const InitSpec& init,
                                       std::int64_t seed) {
  std::vector<double> params(mlp_param_count(sizes), 0.0);
  Rng rng(init_key(config, seed));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t fin = sizes[l], fout = sizes[l + 1];
    fill_weight_matrix(init, fin, fout, rng,
                       std::span<double>(params.data() + offset, fin * fout));
    offset += fin * fout + fout;  // biases stay zero
  }
  return params;
}

InitSpec init_spec_from_config(const Json& p) {
  InitSpec spec;
  if (!p.contains("w_init")) {
    spec.name = "glorot_uniform";
    return spec;
  }
  const Json& wi = p.at("w_init");
  spec.name = wi.at(0).get<std::string>();
  if (!wi.at(1).is_null()) spec.param = wi.at(1).get<double>();
  return spec;
}

// ---------------------------------------------------------------------------
// Classification MLPs: losg_fully_connected and
// mlp_classification_synthetic (softmax cross entropy on blob data).
// ---------------------------------------------------------------------------
class MlpClassificationTask final : public DataBackedTask {
 public:
  MlpClassificationTask(TaskConfig config, bool losg_flavor)
      : DataBackedTask(std::move(config)) {
    const Json& p = this->config().params;
    std::size_t input_dim;
    std::size_t n_classes;
    const Json* layer_field;
    if (losg_flavor) {
      input_dim = static_cast<std::size_t>(field_int(p, "n_features", 1, 4096));
      n_classes = static_cast<std::size_t>(field_int(p, "n_classes", 2, 1024));
      layer_field = &p.at("hidden_sizes");
      init_dataset_params(p);
    } else {
      const Json& dataset = p.at("dataset");
      input_dim = static_cast<std::size_t>(
          field_int(dataset, "input_dim", 1, 4096));
      n_classes = static_cast<std::size_t>(
          field_int(dataset, "n_classes", 2, 1024));
      layer_field = &p.at("layer_sizes");
      init_dataset_params(dataset);
    }
    sizes_.push_back(input_dim);
    for (const auto& h : *layer_field) {
      sizes_.push_back(h.get<std::size_t>());
    }
    sizes_.push_back(n_classes);
    act_ = activation_from_name(field_string(p, "activation"));
    init_ = init_spec_from_config(p);

    const RngKey root = config_root_key(this->config());
    DenseMatrix centers(n_classes, input_dim);
    {
      Rng rng(root.child("centers"));
      for (double& v : centers.data) v = 2.0 * rng.normal();
    }
    const int n_splits = just_train() ? 1 : 3;
    for (int s = 0; s < n_splits; ++s) {
      splits_.push_back(make_blob_split(
          centers, n_samples_,
          root.child("data").child(static_cast<std::uint64_t>(s)), false));
    }
  }

  std::size_t param_count() const override { return mlp_param_count(sizes_); }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return mlp_initial_params(config(), sizes_, init_, seed);
  }

 protected:
  const SplitData& split_data(int index) const override {
    return splits_[just_train() ? 0 : index];
  }

  double base_loss(std::span<const double> params,
                   const Batch& b) const override {
    if (b.is_empty()) throw ShapeError("mlp classification: empty batch");
    MlpForward fwd;
    double loss = 0.0;
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      mlp_forward(sizes_, act_, params, b.inputs.row(i), fwd);
      loss += cross_entropy(fwd.pre.back(), b.labels[i], nullptr);
    }
    return loss / static_cast<double>(b.inputs.rows);
  }

  void base_gradient(std::span<const double> params, const Batch& b,
                     std::span<double> out) const override {
    if (b.is_empty()) throw ShapeError("mlp classification: empty batch");
    for (double& v : out) v = 0.0;
    MlpForward fwd;
    const double inv_bs = 1.0 / static_cast<double>(b.inputs.rows);
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      mlp_forward(sizes_, act_, params, b.inputs.row(i), fwd);
      std::vector<double> delta;
      cross_entropy(fwd.pre.back(), b.labels[i], &delta);
      for (double& d : delta) d *= inv_bs;
      mlp_backward(sizes_, act_, params, b.inputs.row(i), fwd,
                   std::move(delta), out);
    }
  }

 private:
  static double cross_entropy(const std::vector<double>& logits, int label,
                              std::vector<double>* dlogits) {
    double m = logits[0];
    for (double z : logits) m = std::max(m, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    const double lse = m + std::log(sum);
    if (dlogits) {
      dlogits->resize(logits.size());
      for (std::size_t j = 0; j < logits.size(); ++j) {
        (*dlogits)[j] = std::exp(logits[j] - lse);
      }
      (*dlogits)[static_cast<std::size_t>(label)] -= 1.0;
    }
    return lse - logits[static_cast<std::size_t>(label)];
  }

  std::vector<std::size_t> sizes_;
  Activation act_ = Activation::kRelu;
  InitSpec init_;
  std::vector<SplitData> splits_;
};

// ---------------------------------------------------------------------------
// mlp_ae_synthetic: reconstruction of sigmoid-squashed blob rows. The last
// layer maps back to the input dimension; output activation, per-dim
// distance (l2 / l1) and reduction (mean / sum) are sampled.
// ---------------------------------------------------------------------------
class MlpAutoencoderTask final : public DataBackedTask {
 public:
  explicit MlpAutoencoderTask(TaskConfig config)
      : DataBackedTask(std::move(config)) {
    const Json& p = this->config().params;
    const Json& dataset = p.at("dataset");
    const auto input_dim = static_cast<std::size_t>(
        field_int(dataset, "input_dim", 1, 4096));
    init_dataset_params(dataset);
    sizes_.push_back(input_dim);
    for (const auto& h : p.at("hidden_units")) {
      sizes_.push_back(h.get<std::size_t>());
    }
    sizes_.push_back(input_dim);
    act_ = activation_from_name(field_string(p, "activation"));
    init_ = init_spec_from_config(p);
    out_act_ = field_string(p, "output_activation");
    if (out_act_ != "tanh" && out_act_ != "sigmoid" && out_act_ != "linear" &&
        out_act_ != "linear_center") {
      throw ValidationError("params.output_activation: unknown '" + out_act_ +
                            "'");
    }
    distance_l1_ = field_string(p, "distance") == "l1";
    reduce_mean_ = field_string(p, "reduction") == "mean";

    const RngKey root = config_root_key(this->config());
    DenseMatrix centers(4, input_dim);  // a few modes to reconstruct
    {
      Rng rng(root.child("centers"));
      for (double& v : centers.data) v = 2.0 * rng.normal();
    }
    const int n_splits = just_train() ? 1 : 3;
    for (int s = 0; s < n_splits; ++s) {
      splits_.push_back(make_blob_split(
          centers, n_samples_,
          root.child("data").child(static_cast<std::uint64_t>(s)), true));
    }
  }

  std::size_t param_count() const override { return mlp_param_count(sizes_); }

  std::vector<double> initial_params(std::int64_t seed) const override {
    return mlp_initial_params(config(), sizes_, init_, seed);
  }

 protected:
  const SplitData& split_data(int index) const override {
    return splits_[just_train() ? 0 : index];
  }

  double base_loss(std::span<const double> params,
                   const Batch& b) const override {
    if (b.is_empty()) throw ShapeError("mlp_ae: empty batch");
    MlpForward fwd;
    double loss = 0.0;
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      mlp_forward(sizes_, act_, params, b.inputs.row(i), fwd);
      loss += sample_loss(fwd.pre.back(), b.inputs.row(i), nullptr);
    }
    return loss / static_cast<double>(b.inputs.rows);
  }

  void base_gradient(std::span<const double> params, const Batch& b,
                     std::span<double> out) const override {
    if (b.is_empty()) throw ShapeError("mlp_ae: empty batch");
    for (double& v : out) v = 0.0;
    MlpForward fwd;
    const double inv_bs = 1.0 / static_cast<double>(b.inputs.rows);
    for (std::size_t i = 0; i < b.inputs.rows; ++i) {
      mlp_forward(sizes_, act_, params, b.inputs.row(i), fwd);
      std::vector<double> delta;
      sample_loss(fwd.pre.back(), b.inputs.row(i), &delta);
      for (double& d : delta) d *= inv_bs;
      mlp_backward(sizes_, act_, params, b.inputs.row(i), fwd,
                   std::move(delta), out);
    }
  }

 private:
  // Loss for one sample given final pre-activations; optionally fills
  // d(loss)/d(pre).
  double sample_loss(const std::vector<double>& pre,
                     std::span<const double> target,
                     std::vector<double>* dpre) const {
    const std::size_t d = pre.size();
    const bool shift_target = out_act_ == "tanh" || out_act_ == "linear_center";
    const double reduce = reduce_mean_ ? 1.0 / static_cast<double>(d) : 1.0;
    if (dpre) dpre->assign(d, 0.0);
    double loss = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double o = pre[j];
      double dact = 1.0;
      if (out_act_ == "tanh") {
        o = std::tanh(pre[j]);
        dact = 1.0 - o * o;
      } else if (out_act_ == "sigmoid") {
        o = 1.0 / (1.0 + std::exp(-pre[j]));
        dact = o * (1.0 - o);
      }
      const double t = shift_target ? 2.0 * target[j] - 1.0 : target[j];
      const double r = o - t;
      if (distance_l1_) {
        loss += reduce * std::abs(r);
        if (dpre) (*dpre)[j] = reduce * (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) *
                               dact;
      } else {
        loss += reduce * r * r;
        if (dpre) (*dpre)[j] = reduce * 2.0 * r * dact;
      }
    }
    return loss;
  }

  std::vector<std::size_t> sizes_;
  Activation act_ = Activation::kRelu;
  InitSpec init_;
  std::string out_act_;
  bool distance_l1_ = false;
  bool reduce_mean_ = true;
  std::vector<SplitData> splits_;
};

}  // namespace

std::unique_ptr<Task> make_sum_of_quadratics_task(TaskConfig config) {
  return std::make_unique<SumOfQuadraticsTask>(std::move(config));
}

std::unique_ptr<Task> make_fully_connected_task(TaskConfig config) {
  return std::make_unique<MlpClassificationTask>(std::move(config), true);
}

std::unique_ptr<Task> make_mlp_classification_task(TaskConfig config) {
  return std::make_unique<MlpClassificationTask>(std::move(config), false);
}

std::unique_ptr<Task> make_mlp_ae_task(TaskConfig config) {
  return std::make_unique<MlpAutoencoderTask>(std::move(config));
}

}  // namespace optlist
