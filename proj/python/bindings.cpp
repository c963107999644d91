#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optlist/experiments.hpp"
#include "optlist/learner.hpp"
#include "optlist/store.hpp"

namespace py = pybind11;
using namespace optlist;

namespace {

Json json_from_pydict(const py::object& obj) {
  return Json::parse(py::str(py::module_::import("json").attr("dumps")(obj))
                         .cast<std::string>());
}

py::object pydict_from_json(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<double> to_numpy(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> from_numpy(const py::array_t<double>& a) {
  const auto buf = a.request();
  const double* data = static_cast<const double*>(buf.ptr);
  return std::vector<double>(data, data + buf.size);
}

DenseMatrix matrix_from_numpy(const py::array_t<double>& a) {
  const auto buf = a.request();
  if (buf.ndim != 2) throw py::value_error("expected a 2-D array");
  DenseMatrix m(static_cast<std::size_t>(buf.shape[0]),
                static_cast<std::size_t>(buf.shape[1]));
  const double* data = static_cast<const double*>(buf.ptr);
  std::copy(data, data + buf.size, m.data.begin());
  return m;
}

class PyTask {
 public:
  explicit PyTask(const py::object& config_dict)
      : task_(instantiate(TaskConfig::from_json(json_from_pydict(config_dict)))) {}

  std::string task_id() const { return task_->task_id(); }
  std::size_t param_count() const { return task_->param_count(); }
  py::array_t<double> initial_params(std::int64_t seed) const {
    return to_numpy(task_->initial_params(seed));
  }
  Batch make_batch(const std::string& split, std::uint64_t key) const {
    Split s = Split::kTrain;
    if (split == "valid") s = Split::kValid;
    if (split == "test") s = Split::kTest;
    return task_->batch(s, RngKey::from_seed(key));
  }
  double loss(const py::array_t<double>& params, const Batch& b) const {
    return task_->loss(from_numpy(params), b);
  }
  py::array_t<double> gradient(const py::array_t<double>& params,
                               const Batch& b) const {
    return to_numpy(task_->gradient(from_numpy(params), b));
  }
  const Task& task() const { return *task_; }

 private:
  std::unique_ptr<Task> task_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Task suite, optimizer families, and hyperparameter-list "
            "learning (native core)";

  py::class_<Batch>(m, "Batch")
      .def_property_readonly("is_empty", &Batch::is_empty)
      .def_property_readonly("batch_seed",
                             [](const Batch& b) { return b.batch_seed; });

  py::class_<PyTask>(m, "Task")
      .def(py::init<const py::object&>(), py::arg("config"))
      .def_property_readonly("task_id", &PyTask::task_id)
      .def_property_readonly("param_count", &PyTask::param_count)
      .def("initial_params", &PyTask::initial_params, py::arg("seed"))
      .def("batch", &PyTask::make_batch, py::arg("split"), py::arg("key"))
      .def("loss", &PyTask::loss, py::arg("params"), py::arg("batch"))
      .def("gradient", &PyTask::gradient, py::arg("params"),
           py::arg("batch"));

  m.def(
      "sample_task_config",
      [](const std::string& family, std::uint64_t seed) {
        return pydict_from_json(
            sample_task_config(family, RngKey::from_seed(seed)).to_json());
      },
      py::arg("family"), py::arg("seed"));

  m.def("task_families", [] { return task_family_names(); });
  m.def("fixed_twod_tasks", [] {
    py::list out;
    for (const TaskConfig& c : fixed_twod_task_configs()) {
      out.append(pydict_from_json(c.to_json()));
    }
    return out;
  });

  m.def(
      "reject_task",
      [](const py::object& config_dict) {
        const RejectionResult r = reject_task(
            TaskConfig::from_json(json_from_pydict(config_dict)),
            RejectionPolicy{});
        return py::make_tuple(r.accepted, r.reason);
      },
      py::arg("config"));

  m.def(
      "sample_optimizer",
      [](const std::string& family, std::uint64_t seed) {
        return pydict_from_json(
            sample_optimizer(family, RngKey::from_seed(seed)).to_json());
      },
      py::arg("family"), py::arg("seed"));

  m.def("optimizer_families", [] { return optimizer_family_names(); });

  m.def(
      "train_and_record",
      [](const py::object& task_config, const py::object& opt_config,
         int seed, int total_steps, int eval_every, int eval_batches) {
        const auto task = instantiate(
            TaskConfig::from_json(json_from_pydict(task_config)));
        const OptimizerConfig opt =
            OptimizerConfig::from_json(json_from_pydict(opt_config));
        RunProfile profile;
        profile.total_steps = total_steps;
        profile.eval_every = eval_every;
        profile.eval_batches = eval_batches;
        profile.seeds = 1;
        const TrainingCurve c = train_and_record(*task, opt, seed, profile);
        py::dict out;
        out["task_id"] = c.task_id;
        out["optimizer_id"] = c.optimizer_id;
        out["seed"] = c.seed;
        out["steps"] = c.steps;
        out["train_loss"] = to_numpy(c.train_loss);
        out["valid_loss"] = to_numpy(c.valid_loss);
        out["test_loss"] = to_numpy(c.test_loss);
        out["n_params"] = c.n_params;
        if (c.diverged_at) {
          out["diverged_at"] = *c.diverged_at;
        } else {
          out["diverged_at"] = py::none();
        }
        return out;
      },
      py::arg("task_config"), py::arg("optimizer_config"), py::arg("seed"),
      py::arg("total_steps") = 2000, py::arg("eval_every") = 50,
      py::arg("eval_batches") = 10);

  m.def(
      "greedy_select",
      [](const py::array_t<double>& costs, std::size_t k) {
        const GreedySelection sel =
            greedy_select(matrix_from_numpy(costs), k);
        return py::make_tuple(sel.selected, to_numpy(sel.j_trace));
      },
      py::arg("costs"), py::arg("k"),
      "Greedy list selection over a tasks x optimizers cost matrix; returns "
      "(selected column indices, J trace)");

  m.def(
      "brute_force_select",
      [](const py::array_t<double>& costs, std::size_t k) {
        const BruteForceSelection sel =
            brute_force_select(matrix_from_numpy(costs), k);
        return py::make_tuple(sel.best_set, sel.j);
      },
      py::arg("costs"), py::arg("k"));

  m.def(
      "normalize_curve",
      [](const py::array_t<double>& losses, double init, double best) {
        TrainingCurve c;
        c.task_id = "py";
        c.valid_loss = from_numpy(losses);
        c.steps.resize(c.valid_loss.size());
        c.train_loss = c.valid_loss;
        c.test_loss = c.valid_loss;
        return to_numpy(normalize_curve(c, NormalizationConstants{"py", init,
                                                                  best},
                                        Split::kValid));
      },
      py::arg("losses"), py::arg("init"), py::arg("best"));

  m.def(
      "log_uniform",
      [](std::uint64_t seed, double lo, double hi) {
        return log_uniform(RngKey::from_seed(seed), lo, hi);
      },
      py::arg("seed"), py::arg("lo"), py::arg("hi"));
}
