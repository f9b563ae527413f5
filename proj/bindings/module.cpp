#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>

#include "tdann/assign.hpp"
#include "tdann/data.hpp"
#include "tdann/divergence.hpp"
#include "tdann/errors.hpp"
#include "tdann/harness.hpp"
#include "tdann/losses.hpp"
#include "tdann/nets.hpp"
#include "tdann/train.hpp"

namespace py = pybind11;
using namespace tdann;

namespace {

Tensor tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-d array");
  std::vector<double> values(a.data(), a.data() + a.size());
  return Tensor::from({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))},
                      std::move(values));
}

py::array_t<double> numpy_from_tensor(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.value().begin(), t.value().end(), out.mutable_data());
  return out;
}

NetSpec net_spec(std::size_t input_dim, std::size_t feature_dim,
                 const std::vector<std::size_t>& label_hidden,
                 const std::vector<std::size_t>& domain_hidden, std::size_t num_classes) {
  NetSpec spec;
  spec.input_dim = input_dim;
  spec.feature_dim = feature_dim;
  spec.label_hidden = label_hidden;
  spec.domain_hidden = domain_hidden;
  spec.num_classes = num_classes;
  return spec;
}

struct PyModel {
  NetSpec spec;
  ModelParams params;

  py::array_t<double> predict(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) const {
    return numpy_from_tensor(predict_probs(params, tensor_from_numpy(x)));
  }

  py::array_t<double> features(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) const {
    Tape tape;
    return numpy_from_tensor(forward_features(tape, params, tensor_from_numpy(x)));
  }

  double accuracy(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                  const std::vector<int>& y) const {
    LabeledSet set;
    set.x = tensor_from_numpy(x);
    set.y = y;
    return evaluate(params, set);
  }

  void save(const std::string& path) const { save_checkpoint(path, spec, params); }

  static PyModel load(const std::string& path) {
    auto [spec, params] = load_checkpoint(path);
    return PyModel{spec, std::move(params)};
  }
};

TrainConfig train_config(double lr, double momentum, std::size_t batch_size,
                         std::size_t steps_per_cycle, double lambda_adapt_max, double c_label_star,
                         double c_unlabeled_star, std::uint64_t seed, bool lambda_ramp,
                         bool early_stop) {
  TrainConfig cfg;
  cfg.lr = lr;
  cfg.momentum = momentum;
  cfg.batch_size = batch_size;
  cfg.steps_per_cycle = steps_per_cycle;
  cfg.lambda_adapt_max = lambda_adapt_max;
  cfg.c_label_star = c_label_star;
  cfg.c_unlabeled_star = c_unlabeled_star;
  cfg.seed = seed;
  cfg.lambda_ramp = lambda_ramp;
  cfg.early_stop = early_stop;
  return cfg;
}

DomainData domain_data(const py::array_t<double, py::array::c_style | py::array::forcecast>& xs,
                       const std::vector<int>& ys,
                       const py::array_t<double, py::array::c_style | py::array::forcecast>& xt,
                       const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& xv,
                       const std::optional<std::vector<int>>& yv) {
  DomainData data;
  data.source_train.x = tensor_from_numpy(xs);
  data.source_train.y = ys;
  data.target_train.x = tensor_from_numpy(xt);
  if (xv && yv) {
    data.target_val.x = tensor_from_numpy(*xv);
    data.target_val.y = *yv;
  }
  return data;
}

}  // namespace

PYBIND11_MODULE(_tdann, m) {
  m.doc() = "Adversarial domain adaptation (DANN / TransDANN) core";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<CycleRecord>(m, "CycleRecord")
      .def_readonly("cycle", &CycleRecord::cycle)
      .def_readonly("c_u", &CycleRecord::c_u)
      .def_readonly("labels_changed", &CycleRecord::labels_changed)
      .def_readonly("loss_task_src", &CycleRecord::loss_task_src)
      .def_readonly("loss_task_tgt", &CycleRecord::loss_task_tgt)
      .def_readonly("loss_domain", &CycleRecord::loss_domain)
      .def_readonly("acc_src_dev", &CycleRecord::acc_src_dev)
      .def_readonly("acc_val", &CycleRecord::acc_val);

  py::class_<CycleTrace>(m, "CycleTrace")
      .def_readonly("cycles", &CycleTrace::cycles)
      .def_readonly("gate_skipped", &CycleTrace::gate_skipped)
      .def_readonly("chose_cold", &CycleTrace::chose_cold)
      .def("to_json", &CycleTrace::to_json);

  py::class_<PyModel>(m, "Model")
      .def("predict", &PyModel::predict, py::arg("x"), "Class probabilities for a batch")
      .def("features", &PyModel::features, py::arg("x"), "Feature map output for a batch")
      .def("accuracy", &PyModel::accuracy, py::arg("x"), py::arg("y"))
      .def("save", &PyModel::save, py::arg("path"))
      .def_static("load", &PyModel::load, py::arg("path"));

  m.def(
      "train_dann",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& xs,
         const std::vector<int>& ys,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& xt,
         std::size_t feature_dim, const std::vector<std::size_t>& label_hidden,
         const std::vector<std::size_t>& domain_hidden, std::size_t num_classes, double lr,
         double momentum, std::size_t batch_size, std::size_t steps, double lambda_adapt_max,
         std::uint64_t seed, bool lambda_ramp) {
        DomainData data = domain_data(xs, ys, xt, std::nullopt, std::nullopt);
        NetSpec spec = net_spec(data.source_train.dim(), feature_dim, label_hidden, domain_hidden,
                                num_classes);
        TrainConfig cfg = train_config(lr, momentum, batch_size, steps, lambda_adapt_max, 1.0, 1.0,
                                       seed, lambda_ramp, false);
        auto [params, trace] = train_dann(data, spec, cfg);
        return py::make_tuple(PyModel{spec, std::move(params)}, trace);
      },
      py::arg("x_source"), py::arg("y_source"), py::arg("x_target"), py::kw_only(),
      py::arg("feature_dim") = 15, py::arg("label_hidden") = std::vector<std::size_t>{},
      py::arg("domain_hidden") = std::vector<std::size_t>{16}, py::arg("num_classes") = 2,
      py::arg("lr") = 0.05, py::arg("momentum") = 0.9, py::arg("batch_size") = 64,
      py::arg("steps") = 2000, py::arg("lambda_adapt_max") = 1.0, py::arg("seed") = 0,
      py::arg("lambda_ramp") = true,
      "Saddle-point DANN training; lambda_adapt_max=0 reduces to supervised training");

  m.def(
      "train_transdann",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& xs,
         const std::vector<int>& ys,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& xt,
         const std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>>& xv,
         const std::optional<std::vector<int>>& yv, std::size_t feature_dim,
         const std::vector<std::size_t>& label_hidden, const std::vector<std::size_t>& domain_hidden,
         std::size_t num_classes, double lr, double momentum, std::size_t batch_size,
         std::size_t steps_per_cycle, double lambda_adapt_max, double c_label_star,
         double c_unlabeled_star, std::uint64_t seed, bool lambda_ramp, bool early_stop) {
        DomainData data = domain_data(xs, ys, xt, xv, yv);
        NetSpec spec = net_spec(data.source_train.dim(), feature_dim, label_hidden, domain_hidden,
                                num_classes);
        TrainConfig cfg = train_config(lr, momentum, batch_size, steps_per_cycle, lambda_adapt_max,
                                       c_label_star, c_unlabeled_star, seed, lambda_ramp, early_stop);
        auto [params, trace] = train_transdann(data, spec, cfg);
        return py::make_tuple(PyModel{spec, std::move(params)}, trace);
      },
      py::arg("x_source"), py::arg("y_source"), py::arg("x_target"),
      py::arg("x_target_val") = std::nullopt, py::arg("y_target_val") = std::nullopt, py::kw_only(),
      py::arg("feature_dim") = 15, py::arg("label_hidden") = std::vector<std::size_t>{},
      py::arg("domain_hidden") = std::vector<std::size_t>{16}, py::arg("num_classes") = 2,
      py::arg("lr") = 0.05, py::arg("momentum") = 0.9, py::arg("batch_size") = 64,
      py::arg("steps_per_cycle") = 2000, py::arg("lambda_adapt_max") = 1.0,
      py::arg("c_label_star") = 1.0, py::arg("c_unlabeled_star") = 1.0, py::arg("seed") = 0,
      py::arg("lambda_ramp") = true, py::arg("early_stop") = false,
      "Alternating TransDANN training with the C_u doubling schedule and validation gate");

  m.def(
      "assign_interim_labels",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
         const std::vector<std::size_t>& budget) {
        Tensor s = tensor_from_numpy(scores);
        ScoreMatrix sm;
        sm.num_examples = s.rows();
        sm.num_classes = s.cols();
        sm.p = s.value();
        return assign_interim_labels(sm, ClassBudget{budget});
      },
      py::arg("scores"), py::arg("budget"),
      "Class-distribution-matched interim labels for an N x k score matrix");

  m.def(
      "estimate_class_budget",
      [](const std::vector<double>& priors, std::size_t n) {
        return estimate_class_budget(priors, n).counts;
      },
      py::arg("priors"), py::arg("n"));

  m.def(
      "assignment_log_likelihood",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scores,
         const std::vector<int>& labels) {
        Tensor s = tensor_from_numpy(scores);
        ScoreMatrix sm;
        sm.num_examples = s.rows();
        sm.num_classes = s.cols();
        sm.p = s.value();
        return assignment_log_likelihood(sm, labels);
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "proxy_distance",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
         std::uint64_t seed) { return proxy_distance(tensor_from_numpy(a), tensor_from_numpy(b), seed); },
      py::arg("features_a"), py::arg("features_b"), py::arg("seed") = 0,
      "Empirical divergence proxy 2(1 - 2 eps_dom) in [0, 2]");

  m.def(
      "theorem2_bound",
      [](double d_vc, long long m, double delta, double dhat, double eps_source,
         const std::optional<double>& lambda_ideal) {
        BoundInputs b;
        b.d_vc = d_vc;
        b.m = m;
        b.delta = delta;
        b.dhat = dhat;
        b.eps_source = eps_source;
        b.lambda_ideal = lambda_ideal;
        BoundTerms t = theorem2_bound(b);
        py::dict out;
        out["eps_source"] = t.eps_source;
        out["dhat_half"] = t.dhat_half;
        out["complexity"] = t.complexity;
        out["lambda_known"] = t.lambda_known;
        out["lambda_ideal"] = t.lambda_known ? py::cast(t.lambda_ideal) : py::none();
        out["bound"] = t.bound;
        return out;
      },
      py::arg("d_vc"), py::arg("m"), py::arg("delta"), py::arg("dhat"), py::arg("eps_source") = 0.0,
      py::arg("lambda_ideal") = std::nullopt);

  m.def("lambda_schedule", &lambda_schedule, py::arg("progress"), py::arg("lambda_adapt_max"));

  m.def(
      "generate_shifted",
      [](const std::string& generator, double rotation_deg, const std::vector<double>& translation,
         double noise_sigma, std::size_t n_source, std::size_t n_target, std::size_t n_val,
         std::uint64_t seed) {
        ShiftSpec spec;
        spec.generator =
            generator == "gaussian_pair" ? ShiftGenerator::gaussian_pair : ShiftGenerator::two_moons;
        spec.rotation_deg = rotation_deg;
        spec.translation = translation;
        spec.noise_sigma = noise_sigma;
        spec.n_source = n_source;
        spec.n_target = n_target;
        spec.n_val = n_val;
        spec.seed = seed;
        ShiftedData d = generate_shifted(spec);
        py::dict out;
        out["x_source"] = numpy_from_tensor(d.source.x);
        out["y_source"] = d.source.y;
        out["x_target"] = numpy_from_tensor(d.target.x);
        if (d.target_val.size() > 0) {
          out["x_target_val"] = numpy_from_tensor(d.target_val.x);
          out["y_target_val"] = d.target_val.y;
        }
        return out;
      },
      py::arg("generator") = "two_moons", py::arg("rotation_deg") = 0.0,
      py::arg("translation") = std::vector<double>{}, py::arg("noise_sigma") = 0.1,
      py::arg("n_source") = 200, py::arg("n_target") = 200, py::arg("n_val") = 200,
      py::arg("seed") = 0);

  m.def(
      "softmax",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits) {
        Tape tape;
        return numpy_from_tensor(softmax(tape, tensor_from_numpy(logits)));
      },
      py::arg("logits"));

  m.def(
      "cross_entropy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs,
         const std::vector<int>& labels) {
        Tape tape;
        return cross_entropy(tape, tensor_from_numpy(probs), labels).item();
      },
      py::arg("probs"), py::arg("labels"));
}
