#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catdec/harness.hpp"

namespace py = pybind11;
using namespace catdec;

namespace {

SystemPartition make_partition(const std::vector<std::size_t>& dims,
                               std::optional<std::vector<std::string>> labels) {
  std::vector<Factor> f;
  for (std::size_t i = 0; i < dims.size(); ++i)
    f.push_back({labels ? labels->at(i) : "S" + std::to_string(i), dims[i]});
  if (labels && labels->size() != dims.size())
    throw DimensionError("labels and dims differ in length");
  return SystemPartition(std::move(f));
}

py::dict entropy_dict(const EntropyValue& v) {
  py::dict d;
  d["value"] = v.infinite ? py::object(py::float_(INFINITY)) : py::object(py::float_(v.value));
  d["epsilon"] = v.epsilon;
  d["infinite"] = v.infinite;
  d["bound_kind"] = to_string(v.bound_kind);
  d["lower_bound"] = v.lower_bound;
  return d;
}

py::object parse_json(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Catalytic decoupling toolkit";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<LabelError>(m, "LabelError", PyExc_KeyError);
  py::register_exception<StateError>(m, "StateError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<DensityOperator>(m, "DensityOperator")
      .def(py::init([](const Matrix& mat, const std::vector<std::size_t>& dims,
                       std::optional<std::vector<std::string>> labels, bool subnormalized) {
             return DensityOperator(mat, make_partition(dims, std::move(labels)),
                                    subnormalized ? TraceMode::subnormalized
                                                  : TraceMode::normalized);
           }),
           py::arg("matrix"), py::arg("dims"), py::arg("labels") = py::none(),
           py::arg("subnormalized") = false)
      .def_property_readonly("matrix", &DensityOperator::matrix)
      .def_property_readonly("dims", [](const DensityOperator& r) { return r.partition().dims(); })
      .def_property_readonly("labels",
                             [](const DensityOperator& r) { return r.partition().labels(); })
      .def("trace", &DensityOperator::trace)
      .def("__repr__", [](const DensityOperator& r) {
        std::string s = "DensityOperator(";
        for (const auto& f : r.partition().factors())
          s += f.label + ":" + std::to_string(f.dim) + " ";
        s.back() = ')';
        return s;
      });

  m.def("maximally_entangled",
        [](std::size_t d, const std::string& a, const std::string& b) {
          return maximally_entangled(d, a, b).density();
        },
        py::arg("d"), py::arg("a") = "A", py::arg("b") = "B");
  m.def("random_state",
        [](const std::string& ensemble, const std::vector<std::size_t>& dims,
           std::optional<std::vector<std::string>> labels, std::uint64_t seed) {
          return harness::generate_state(harness::parse_ensemble(ensemble), dims,
                                         make_partition(dims, std::move(labels)).labels(), seed);
        },
        py::arg("ensemble"), py::arg("dims"), py::arg("labels") = py::none(), py::arg("seed"));
  m.def("partial_trace",
        [](const DensityOperator& r, const Labels& traced) { return partial_trace(r, traced); });
  m.def("tensor", [](const DensityOperator& a, const DensityOperator& b) { return tensor(a, b); });

  m.def("trace_distance",
        [](const DensityOperator& a, const DensityOperator& b) { return trace_distance(a, b); });
  m.def("purified_distance",
        [](const DensityOperator& a, const DensityOperator& b) { return purified_distance(a, b); });
  m.def("fidelity", [](const DensityOperator& a, const DensityOperator& b) {
    return generalized_fidelity(a, b);
  });

  m.def("von_neumann", &von_neumann, py::arg("rho"), py::arg("subsystems") = Labels{});
  m.def("mutual_info", [](const DensityOperator& r, const Labels& a, const Labels& b) {
    const auto mi = mutual_info(r, a, b);
    return py::make_tuple(mi.I, mi.V);
  });
  m.def("hmin", [](const DensityOperator& r, const Labels& a, const Labels& b) {
    return entropy_dict(hmin(r, a, b));
  });
  m.def("hmax", [](const DensityOperator& r, const Labels& a, const Labels& b) {
    return entropy_dict(hmax(r, a, b));
  });
  m.def("hmin_smooth", [](const DensityOperator& r, const Labels& a, const Labels& b,
                          double eps) { return entropy_dict(hmin_smooth(r, a, b, eps)); });
  m.def("hmax_smooth", [](const DensityOperator& r, const Labels& a, const Labels& b,
                          double eps) { return entropy_dict(hmax_smooth(r, a, b, eps)); });
  m.def("imax", [](const DensityOperator& r, const Labels& e, const Labels& a) {
    return entropy_dict(imax(r, e, a));
  });
  m.def("hmin_smooth_trace_classical", &hmin_smooth_trace_classical);
  m.def("hmax_smooth_classical", &hmax_smooth_classical);

  m.def("convex_split_error",
        [](const DensityOperator& r, const std::string& x, const DensityOperator& sigma,
           std::size_t n) { return convex_split_error(r, x, sigma, n); });
  m.def("convex_split_params", &convex_split_params);
  m.def(
      "catalytic_decouple",
      [](const DensityOperator& r, const std::string& a, const std::string& e, double eps,
         double delta, std::optional<std::size_t> n) {
        CatalyticOptions o;
        o.n_override = n;
        return parse_json(io::dump(io::to_json(catalytic_decouple_cs(r, a, e, eps, delta, o), false)));
      },
      py::arg("rho"), py::arg("a"), py::arg("e"), py::arg("eps") = 0.0, py::arg("delta") = 0.1,
      py::arg("n") = py::none());

  m.def("read_state", &io::read_state);
  m.def("state_json",
        [](const DensityOperator& r) { return parse_json(io::dump(io::to_json(r))); });

  m.def(
      "run",
      [](const std::string& task, std::uint64_t seed, double eps, double delta,
         std::optional<std::size_t> n, int trials, std::string ensemble,
         std::vector<std::size_t> dims, std::optional<std::string> state, int threads,
         const std::string& format) {
        harness::ExperimentConfig c;
        c.task = harness::parse_task(task);
        c.seed = seed;
        c.eps = eps;
        c.delta = delta;
        c.n = n;
        c.trials = trials;
        c.ensemble = std::move(ensemble);
        c.dims = std::move(dims);
        c.state_file = std::move(state);
        c.threads = threads;
        harness::RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = harness::run(c);
        }
        if (format == "csv") return py::object(py::str(harness::to_csv(rec)));
        if (format == "json") return parse_json(harness::to_json(rec));
        throw Error("format must be csv or json");
      },
      py::arg("task"), py::arg("seed") = harness::kDefaultSeed, py::arg("eps") = 0.1,
      py::arg("delta") = 0.1, py::arg("n") = py::none(), py::arg("trials") = 1,
      py::arg("ensemble") = "hs_mixed", py::arg("dims") = std::vector<std::size_t>{},
      py::arg("state") = py::none(), py::arg("threads") = 1, py::arg("format") = "json");
}
