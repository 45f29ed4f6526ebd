#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdyn/io.hpp"

namespace py = pybind11;
using namespace qdyn;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> times(const TimeGrid& g) { return to_array(g.points()); }

py::array_t<Complex> to_array(const ComplexMatrix& a) {
  py::array_t<Complex> out({a.rows(), a.cols()});
  auto view = out.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) view(i, j) = a(i, j);
  return out;
}

ComplexMatrix from_array(const py::array_t<Complex, py::array::forcecast>& a, int d) {
  if (a.ndim() != 2 || a.shape(0) != d || a.shape(1) != d)
    throw std::invalid_argument("observable matrix must have shape (" + std::to_string(d) + ", " + std::to_string(d) + ")");
  ComplexMatrix c(d, d);
  auto view = a.unchecked<2>();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c(i, j) = view(i, j);
  return c;
}

/// A name, a Hermitian matrix, or a sequence of per-channel counting weights.
Observable observable(const py::object& obj, const LindbladModel& m) {
  if (obj.is_none()) return Observable::field();
  if (py::isinstance<py::str>(obj)) {
    const std::string name = obj.cast<std::string>();
    if (auto o = io::builtin_observable(name, m)) return *o;
    throw std::invalid_argument("unknown observable '" + name + "'");
  }
  py::array arr = py::array::ensure(obj);
  if (arr && arr.ndim() == 1) return Observable::field(obj.cast<std::vector<double>>(), "weights");
  return Observable::system(from_array(obj.cast<py::array_t<Complex, py::array::forcecast>>(), m.dim), "matrix");
}

Relation relation(const std::string& name) {
  if (auto r = relation_from_string(name)) return *r;
  throw std::invalid_argument("unknown relation '" + name + "'");
}

py::object loads(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_qdyn, mod) {
  mod.doc() = "Dynamical activity, counting statistics and uncertainty relations for Lindblad models";

  py::register_exception<io::SchemaError>(mod, "SchemaError", PyExc_ValueError);
  py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);

  py::class_<io::ModelFile>(mod, "Model")
      .def_property_readonly("dim", [](const io::ModelFile& f) { return f.model.dim; })
      .def_property_readonly("t_max", [](const io::ModelFile& f) { return f.grid.t_max; })
      .def_property_readonly("steps", [](const io::ModelFile& f) { return f.grid.steps; })
      .def_property_readonly("jumps", [](const io::ModelFile& f) { return f.model.jumps.size(); })
      .def_property_readonly("hamiltonian", [](const io::ModelFile& f) { return to_array(f.model.hamiltonian); })
      .def("with_grid",
           [](io::ModelFile f, double t_max, int steps) {
             f.grid = TimeGrid::make(t_max, steps);
             return f;
           },
           py::arg("t_max"), py::arg("steps"))
      .def("to_json", [](const io::ModelFile& f) { return io::serialize_model(f).dump(); })
      .def("hash", [](const io::ModelFile& f) { return io::model_hash(f); });

  mod.def("load_model", [](const std::string& path) { return io::load_model(path); }, py::arg("path"));
  mod.def("model_from_json", [](const std::string& text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw io::SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return io::parse_model(doc);
  }, py::arg("text"));

  mod.def("validate", [](const io::ModelFile& f) {
    const ValidationReport rep = validate_model(f.model);
    py::list issues;
    for (const Violation& v : rep.violations) issues.append(py::make_tuple(v.invariant, v.detail));
    return py::make_tuple(rep.ok(), issues);
  }, py::arg("model"));

  mod.def("evolve", [](const io::ModelFile& f) {
    const TimeSeries<ComplexMatrix> rho = evolve_density(f.model, f.grid);
    const int d = f.model.dim;
    py::array_t<Complex> out({rho.size(), d, d});
    auto view = out.mutable_unchecked<3>();
    for (int k = 0; k < rho.size(); ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) view(k, i, j) = rho[k](i, j);
    py::dict r;
    r["t"] = times(f.grid);
    r["rho"] = out;
    return r;
  }, py::arg("model"));

  mod.def("activity", [](const io::ModelFile& f) {
    const ActivityBundle b = dynamical_activity(f.model, f.grid);
    py::dict r;
    r["t"] = times(f.grid);
    r["A"] = to_array(b.A.values);
    r["Bq"] = to_array(b.Bq.values);
    r["B"] = to_array(b.B.values);
    r["J"] = to_array(b.J.values);
    return r;
  }, py::arg("model"));

  mod.def("qfi", [](const io::ModelFile& f, double t) { return qfi_oracle(f.model, t); }, py::arg("model"), py::arg("t"));

  mod.def("counting", [](const io::ModelFile& f, const py::object& obs) {
    const Observable o = observable(obs, f.model);
    if (o.kind != Observable::Kind::field) throw std::invalid_argument("counting needs a field observable");
    const CountingMoments c = counting_moments(f.model, f.grid, CountingTarget::rho, o.weights);
    py::dict r;
    r["t"] = times(f.grid);
    r["mean"] = to_array(c.mean.values);
    r["variance"] = to_array(c.variance.values);
    r["rate"] = to_array(c.rate.values);
    return r;
  }, py::arg("model"), py::arg("observable") = py::none());

  mod.def("bounds", [](const io::ModelFile& f, const std::string& name, const py::object& obs, double tolerance) {
    const Observable o = observable(obs, f.model);
    const Observable sys = o.kind == Observable::Kind::system ? o : io::default_system_observable(f.model);
    const BoundReport rep = evaluate(relation(name), f.model, f.grid, o, sys, BoundOptions{tolerance});
    py::dict r;
    r["t"] = times(f.grid);
    r["lhs"] = to_array(rep.lhs.values);
    r["rhs"] = to_array(rep.rhs.values);
    r["slack"] = to_array(rep.slack.values);
    py::list status;
    for (PointStatus s : rep.status)
      status.append(s == PointStatus::satisfied ? "satisfied" : s == PointStatus::violated ? "violated" : "inapplicable");
    r["status"] = status;
    r["summary"] = loads(io::report_summary(rep, io::model_hash(f)));
    return r;
  }, py::arg("model"), py::arg("relation"), py::arg("observable") = py::none(), py::arg("tolerance") = 1e-9);

  mod.def("trajectories", [](const io::ModelFile& f, std::int64_t n, std::uint64_t seed, int steps, int threads) {
    TrajectoryOptions opt;
    opt.steps = steps;
    opt.threads = threads;
    TrajectoryEnsemble e;
    {
      py::gil_scoped_release release;
      e = simulate_trajectories(f.model, f.grid.t_max, n, seed, opt);
    }
    py::dict r = loads(io::ensemble_summary(e));
    r["totals"] = to_array(e.totals);
    return r;
  }, py::arg("model"), py::arg("n"), py::arg("seed") = 1, py::arg("steps") = 200, py::arg("threads") = 0);

  mod.def("relations", [] {
    std::vector<std::string> names;
    for (Relation r : all_relations()) names.push_back(to_string(r));
    return names;
  });
}
