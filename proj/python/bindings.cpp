#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "emogan/datasets.hpp"
#include "emogan/errors.hpp"
#include "emogan/experiments.hpp"
#include "emogan/metrics.hpp"
#include "emogan/models.hpp"
#include "emogan/training.hpp"

namespace py = pybind11;
using namespace emogan;

namespace {

py::dict loss_set(const LossSet& s) {
  py::dict d;
  d["reconstruction"] = s.reconstruction;
  d["d1"] = s.d1;
  d["encoder"] = s.encoder;
  if (s.d2) d["d2"] = *s.d2;
  if (s.generator) d["generator"] = *s.generator;
  if (s.info) d["info"] = *s.info;
  return d;
}

py::dict train_model(GanModel& model, const Corpus& train_split, const Corpus& validation,
                     std::size_t epochs, std::size_t batch_size, std::uint64_t seed) {
  TrainPlan plan = TrainPlan::defaults(model.kind);
  plan.epochs = epochs;
  plan.batch_size = batch_size;
  plan.seed = seed;
  TrainResult r;
  {
    py::gil_scoped_release release;
    r = train(model, train_split, validation, plan);
  }
  py::list epochs_out;
  for (const EpochRecord& e : r.history.records) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["train"] = loss_set(e.train);
    d["validation"] = loss_set(e.validation);
    epochs_out.append(d);
  }
  py::dict counters;
  counters["step1"] = r.counters.step1;
  counters["step2"] = r.counters.step2;
  counters["step3"] = r.counters.step3;
  counters["step4"] = r.counters.step4;
  counters["step5"] = r.counters.step5;
  py::dict out;
  out["history"] = epochs_out;
  out["counters"] = counters;
  out["csv"] = r.history.to_csv();
  return out;
}

GaussianStats stats_from(const Vector& mean, const Matrix& cov) {
  GaussianStats s;
  s.mean = mean;
  s.covariance = cov;
  s.count = 0;
  return s;
}

std::string run_config(const std::string& text, const std::string& out) {
  ExperimentConfig c = parse_config(text);
  if (!out.empty()) c.out = out;
  py::gil_scoped_release release;
  return run_experiment(c).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adversarial feature generators (M1, M2, M3), five-step training and evaluation metrics.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", error);
  py::register_exception<ContractError>(m, "ContractError", error);
  py::register_exception<DivergenceError>(m, "DivergenceError", error);
  py::register_exception<DegenerateDataError>(m, "DegenerateDataError", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<NumericalDomainError>(m, "NumericalDomainError", error);
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", error);
  py::register_exception<ConfigError>(m, "ConfigError", error);

  py::class_<Corpus>(m, "Corpus")
      .def(py::init([](const Matrix& features, const Labels& labels,
                       const std::vector<std::string>& sessions) {
             Corpus c;
             c.features = features;
             c.labels = labels;
             c.sessions = sessions;
             for (int j = 0; j < features.cols(); ++j) c.feature_names.push_back("f" + std::to_string(j));
             c.validate();
             return c;
           }),
           py::arg("features"), py::arg("labels"), py::arg("sessions") = std::vector<std::string>{})
      .def_readonly("features", &Corpus::features)
      .def_readonly("labels", &Corpus::labels)
      .def_readonly("sessions", &Corpus::sessions)
      .def_property_readonly("feature_dim", &Corpus::feature_dim)
      .def("histogram", [](const Corpus& c) { return c.histogram(); })
      .def("subset", &Corpus::subset)
      .def("__len__", &Corpus::size);

  m.def(
      "toy_corpus",
      [](int feature_dim, std::size_t per_class, double separation, double noise, std::uint64_t seed,
         double shift) {
        ToyCorpusSpec s;
        s.feature_dim = feature_dim;
        s.per_class = per_class;
        s.class_mean_separation = separation;
        s.noise_stddev = noise;
        s.seed = seed;
        s.shift = shift;
        return make_toy_corpus(s);
      },
      py::arg("feature_dim") = 64, py::arg("per_class") = 250, py::arg("separation") = 4.0,
      py::arg("noise") = 1.0, py::arg("seed") = 1, py::arg("shift") = 0.0);
  m.def("load_csv", [](const std::filesystem::path& p) { return load_csv(p); });
  m.def("save_csv", &save_csv);
  m.def("emotion_id", &emotion_id);
  m.def("emotion_name", [](int id) { return std::string(emotion_name(id)); });

  py::class_<GanModel>(m, "Model")
      .def_property_readonly("kind", [](const GanModel& g) { return std::string(to_string(g.kind)); })
      .def_readonly("feature_dim", &GanModel::feature_dim)
      .def_readonly("code_dim", &GanModel::code_dim)
      .def("encode", [](const GanModel& g, const Matrix& x) { return encode(g, x); })
      .def("decode", [](const GanModel& g, const Matrix& z) { return decode(g, z); })
      .def(
          "generate",
          [](const GanModel& g, std::size_t n, std::optional<int> cls, std::uint64_t seed) {
            SyntheticBatch b = generate(g, n, cls, seed);
            return py::make_tuple(b.features, b.labels);
          },
          py::arg("n"), py::arg("cls") = py::none(), py::arg("seed") = 0)
      .def("checksum", [](const GanModel& g) { return model_checksum(g); })
      .def("save", [](const GanModel& g, const std::filesystem::path& p) { save_model(p, g); });

  m.def(
      "build_model",
      [](const std::string& kind, int feature_dim, std::uint64_t seed, double width_ratio) {
        return build(model_kind_from_string(kind), feature_dim, ScaleProfile{width_ratio}, seed);
      },
      py::arg("kind"), py::arg("feature_dim"), py::arg("seed") = 0, py::arg("width_ratio") = 1.0);
  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); });
  m.def("train", &train_model, py::arg("model"), py::arg("train"), py::arg("validation"),
        py::arg("epochs") = 200, py::arg("batch_size") = 64, py::arg("seed") = 0);

  m.def("uwa", &uwa);
  m.def(
      "metric1",
      [](const Corpus& real_train, const Matrix& synth, const Labels& labels, std::uint64_t seed) {
        SvmOptions o;
        o.seed = seed;
        return metric1(real_train, synth, labels, o);
      },
      py::arg("real_train"), py::arg("synthetic"), py::arg("labels"), py::arg("seed") = 0);
  m.def(
      "metric2",
      [](const Matrix& synth, const Labels& labels, const Corpus& real_test, std::uint64_t seed) {
        SvmOptions o;
        o.seed = seed;
        return metric2(synth, labels, real_test, o);
      },
      py::arg("synthetic"), py::arg("labels"), py::arg("real_test"), py::arg("seed") = 0);
  m.def("fid", [](const Vector& mx, const Matrix& cx, const Vector& mg, const Matrix& cg) {
    return fid(stats_from(mx, cx), stats_from(mg, cg));
  });
  m.def(
      "fid_pipeline",
      [](const Corpus& reference, const Matrix& real, const Matrix& synth, std::uint64_t seed) {
        EvaluatorOptions o;
        o.seed = seed;
        const EvaluatorNet ev = evaluator_train(reference.features, reference.labels, o);
        return fid_pipeline(ev, real, synth);
      },
      py::arg("reference"), py::arg("real"), py::arg("synthetic"), py::arg("seed") = 0);

  m.def("config_text", [](const std::string& text) { return to_text(parse_config(text)); });
  m.def("run_experiment", &run_config, py::arg("config_text"), py::arg("out") = "");
}
