// Python bindings. Arrays cross as float64 numpy arrays; structured configs
// and reports cross as plain dicts in the same JSON layout the CLI uses.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hjbnn/error.hpp"
#include "hjbnn/harness.hpp"
#include "hjbnn/json_io.hpp"
#include "hjbnn/linalg.hpp"
#include "hjbnn/network.hpp"
#include "hjbnn/optimizers.hpp"

namespace py = pybind11;
using namespace hjbnn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) return Matrix(1, a.shape(0), std::vector<double>(a.data(), a.data() + a.size()));
  if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
  return Matrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
  return Vector(std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.span().begin(), m.span().end(), out.mutable_data());
  return out;
}

Array from_vector(const Vector& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Json to_json_value(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object from_json_value(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Network network_of(const std::string& arch, const Array& weights) {
  return unpack(parse_architecture(arch), to_vector(weights));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural-network training with HJB-derived weight-update laws";

  static py::exception<Error> base(m, "HjbnnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Dimension:
        case ErrorKind::Parameter:
        case ErrorKind::Parse:
          PyErr_SetString(PyExc_ValueError, e.what());
          return;
        case ErrorKind::Io:
          PyErr_SetString(PyExc_OSError, e.what());
          return;
        default:
          py::set_error(base, e.what());
      }
    }
  });

  // Network
  m.def("weight_count", [](const std::string& arch) { return parse_architecture(arch).weight_count(); });
  m.def("init_weights",
        [](const std::string& arch, std::uint64_t seed, double half_range) {
          return from_vector(pack(init_weights(parse_architecture(arch), seed, half_range)));
        },
        py::arg("arch"), py::arg("seed"), py::arg("half_range") = 1.0,
        "Packed weights (output layer first) drawn uniformly from (-half_range, half_range).");
  m.def("forward",
        [](const std::string& arch, const Array& w, const Array& x) {
          return from_vector(forward(network_of(arch, w), to_vector(x)).output);
        },
        py::arg("arch"), py::arg("weights"), py::arg("x"));
  m.def("jacobian",
        [](const std::string& arch, const Array& w, const Array& x) {
          return from_matrix(jacobian(network_of(arch, w), to_vector(x)));
        },
        py::arg("arch"), py::arg("weights"), py::arg("x"));
  m.def("finite_difference_jacobian",
        [](const std::string& arch, const Array& w, const Array& x, double h) {
          return from_matrix(finite_difference_jacobian(network_of(arch, w), to_vector(x), h));
        },
        py::arg("arch"), py::arg("weights"), py::arg("x"), py::arg("h") = 1e-6);

  // Linear algebra
  m.def("sym_eig",
        [](const Array& a) {
          const auto e = sym_eig(to_matrix(a));
          return py::make_tuple(from_vector(e.eigenvalues), from_matrix(e.u_matrix));
        },
        "Eigenvalues (descending) and orthonormal eigenvectors as columns.");
  m.def("build_c",
        [](const Array& j, double r, double mu, double eps) {
          return from_matrix(build_c(to_matrix(j), r, mu, eps));
        },
        py::arg("j"), py::arg("r"), py::arg("mu") = 0.0, py::arg("eps") = kDefaultEps);

  // Update laws
  m.def("step_bp", [](const Array& j, const Array& e, double eta) {
    return from_vector(step_bp(to_matrix(j), to_vector(e), eta));
  }, py::arg("j"), py::arg("e"), py::arg("eta"));
  m.def("step_lf", [](const Array& j, const Array& e, double mu) -> py::object {
    auto u = step_lf(to_matrix(j), to_vector(e), mu);
    return u ? py::object(from_vector(*u)) : py::none();
  }, py::arg("j"), py::arg("e"), py::arg("mu"));
  m.def("step_lm", [](const Array& j, const Array& e, double mu) {
    return from_vector(step_lm(to_matrix(j), to_vector(e), mu));
  }, py::arg("j"), py::arg("e"), py::arg("mu"));
  m.def("step_hjb", [](const Array& j, const Array& e, double r, double mu, double eps) {
    return from_vector(step_hjb(to_matrix(j), to_vector(e), r, mu, eps));
  }, py::arg("j"), py::arg("e"), py::arg("r"), py::arg("mu") = 0.0, py::arg("eps") = kDefaultEps);
  m.def("step_hjb_single", [](const Array& j, double e, double r) -> py::object {
    auto u = step_hjb_single(to_matrix(j), e, r);
    return u ? py::object(from_vector(*u)) : py::none();
  }, py::arg("j"), py::arg("e"), py::arg("r"));
  m.def("lyapunov_rate", [](const Array& j, const Array& e, const Array& u) {
    return lyapunov_rate(to_matrix(j), to_vector(e), to_vector(u));
  });

  // Data, training and experiments
  m.def("dataset", [](const py::dict& spec) {
    return from_json_value(Json(to_json_value(spec).get<DatasetSpec>().build()));
  }, py::arg("spec"), "Build a dataset from a spec dict, e.g. {'name': 'parity', 'bits': 4}.");
  m.def("train",
        [](const py::dict& dataset_spec, const std::string& arch, const py::dict& trainer,
           std::uint64_t seed, double half_range) {
          const Dataset data = to_json_value(dataset_spec).get<DatasetSpec>().build();
          const TrainerConfig config = to_json_value(trainer).get<TrainerConfig>();
          Network net = init_weights(parse_architecture(arch), seed, half_range);
          TrialResult result;
          {
            py::gil_scoped_release release;
            result = train(net, data, config);
          }
          py::dict out;
          out["result"] = from_json_value(Json(result));
          out["weights"] = from_vector(pack(net));
          return out;
        },
        py::arg("dataset_spec"), py::arg("arch"), py::arg("trainer"), py::arg("seed") = 0,
        py::arg("half_range") = 1.0);
  m.def("run_experiment",
        [](const py::dict& experiment, std::size_t jobs) {
          const Experiment exp = to_json_value(experiment).get<Experiment>();
          SuccessReport report;
          {
            py::gil_scoped_release release;
            RunOptions opt;
            opt.jobs = jobs;
            report = run_experiment(exp, opt);
          }
          return from_json_value(Json(report));
        },
        py::arg("experiment"), py::arg("jobs") = 1);
  m.def("basin",
        [](const std::string& rule, const std::vector<double>& grid, double eta, double r, double dt,
           std::size_t max_steps) {
          BasinSettings s;
          s.rule = parse_scalar_rule(rule);
          s.eta = eta;
          s.r = r;
          s.dt = dt;
          s.max_steps = max_steps;
          std::vector<double> terminals;
          for (const auto& p : basin_experiment(s, grid)) terminals.push_back(p.terminal);
          return terminals;
        },
        py::arg("rule"), py::arg("grid"), py::arg("eta") = 0.1, py::arg("r") = 1.0,
        py::arg("dt") = 1.0, py::arg("max_steps") = 1'000'000);
}
