#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "magthermo/box.hpp"
#include "magthermo/bulk.hpp"
#include "magthermo/errors.hpp"
#include "magthermo/fermi.hpp"
#include "magthermo/harness.hpp"
#include "magthermo/mehler.hpp"
#include "magthermo/parallel.hpp"

namespace py = pybind11;
using namespace magthermo;

namespace {

Point3 to_point(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

SpectrumOptions spectrum_options(const std::string& solver, const std::string& cache_dir) {
    SpectrumOptions o;
    if (solver == "dense") o.solver = SolverKind::dense;
    else if (solver == "band") o.solver = SolverKind::band;
    else if (solver == "lanczos") o.solver = SolverKind::lanczos;
    else if (solver != "auto") throw ValidationError("unknown solver '" + solver + "'");
    if (!cache_dir.empty()) o.cache_dir = std::filesystem::path(cache_dir);
    return o;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fermi gas thermodynamics in a constant magnetic field";

    static py::exception<Error> base(m, "MagthermoError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(base.ptr())(e.what());
            exc.attr("kind") = e.kind();
            exc.attr("numerical") = e.numerical();
            PyErr_SetObject(base.ptr(), exc.ptr());
        }
    });

    m.attr("code_version") = code_version;
    m.def("set_thread_count", &set_thread_count, py::arg("threads"));

    m.def("fermi_f", [](double alpha, cplx z) { return fermi_f(alpha, CutPlaneFugacity(z)); },
          py::arg("alpha"), py::arg("z"));

    m.def("pressure_bulk", [](double beta, cplx z, double omega) { return pressure_bulk(ThermoPoint(beta, z, omega)); },
          py::arg("beta"), py::arg("z"), py::arg("omega"));
    m.def("density_bulk", [](double beta, cplx z, double omega) { return density_bulk(ThermoPoint(beta, z, omega)); },
          py::arg("beta"), py::arg("z"), py::arg("omega"));
    m.def("susceptibility_bulk",
          [](double beta, cplx z, double omega, int n) { return susceptibility_bulk(ThermoPoint(beta, z, omega), n); },
          py::arg("beta"), py::arg("z"), py::arg("omega"), py::arg("n"));

    m.def("heat_diagonal", &heat_diagonal, py::arg("beta"), py::arg("omega"));
    m.def("heat_diagonal_domega", &heat_diagonal_domega, py::arg("beta"), py::arg("omega"));
    m.def("free_kernel",
          [](std::array<double, 3> x, std::array<double, 3> xp, double beta) {
              return free_kernel(to_point(x), to_point(xp), beta);
          },
          py::arg("x"), py::arg("xp"), py::arg("beta"));
    m.def("mehler",
          [](std::array<double, 3> x, std::array<double, 3> xp, double beta, double omega) {
              return mehler(to_point(x), to_point(xp), beta, omega).value;
          },
          py::arg("x"), py::arg("xp"), py::arg("beta"), py::arg("omega"));
    m.def("first_order_term_verify",
          [](double omega, double beta, double tol) {
              FirstOrderPolicy policy;
              policy.tol = tol;
              const auto r = first_order_term_verify(omega, beta, policy);
              py::dict d;
              d["analytic"] = r.analytic;
              d["quadrature"] = r.quadrature;
              d["rel_error"] = r.rel_error;
              d["nodes"] = r.nodes;
              return d;
          },
          py::arg("omega"), py::arg("beta"), py::arg("tol") = 1e-3);

    py::class_<BoxSpec>(m, "BoxSpec")
        .def(py::init([](double L, int n_perp, double e_max) {
                 BoxSpec s{L, n_perp, e_max, 1000};
                 s.validate();
                 return s;
             }),
             py::arg("L"), py::arg("n_perp"), py::arg("e_max"))
        .def_static("with_spacing",
                    [](double L, double h, double e_max) { return BoxSpec::with_spacing(L, h, e_max); },
                    py::arg("L"), py::arg("h"), py::arg("e_max"))
        .def_readonly("L", &BoxSpec::side_L)
        .def_readonly("n_perp", &BoxSpec::n_perp)
        .def_readonly("e_max", &BoxSpec::e_max)
        .def_property_readonly("h", &BoxSpec::h)
        .def("__repr__", [](const BoxSpec& s) {
            return "BoxSpec(L=" + std::to_string(s.side_L) + ", n_perp=" + std::to_string(s.n_perp) +
                   ", e_max=" + std::to_string(s.e_max) + ")";
        });

    m.def("spectrum",
          [](const BoxSpec& spec, double omega, const std::string& solver, const std::string& cache_dir) {
              return as_array(spectrum_3d(spec, omega, spectrum_options(solver, cache_dir)).eigenvalues);
          },
          py::arg("spec"), py::arg("omega"), py::arg("solver") = "auto", py::arg("cache_dir") = "");
    m.def("box_observables",
          [](const BoxSpec& spec, double beta, cplx z, double omega, int chi_order, const std::string& cache_dir) {
              const ThermoPoint tp(beta, z, omega);
              const auto opts = spectrum_options("auto", cache_dir);
              const auto sr = spectrum_3d(spec, omega, opts);
              const auto chi = susceptibility_box(spec, tp, chi_order, {}, default_spectrum_provider(spec, opts));
              py::dict d;
              d["n_eigs"] = sr.eigenvalues.size();
              d["pressure"] = pressure_box(spec, sr, tp);
              d["density"] = density_box(spec, sr, tp);
              d["chi"] = chi.value;
              d["error_estimate"] = chi.error_estimate;
              return d;
          },
          py::arg("spec"), py::arg("beta"), py::arg("z"), py::arg("omega"), py::arg("chi_order") = 1,
          py::arg("cache_dir") = "");

    m.def("fit_rate",
          [](const std::vector<double>& L, const std::vector<double>& diff) {
              if (L.size() != diff.size()) throw ValidationError("L and diff differ in length");
              std::vector<std::pair<double, double>> pts;
              for (std::size_t k = 0; k < L.size(); ++k) pts.emplace_back(L[k], diff[k]);
              const auto f = fit_rate(pts);
              return py::make_tuple(f.p, f.C, f.residual);
          },
          py::arg("L"), py::arg("diff"));
    m.def("_run_convergence_json",
          [](const std::string& study_json, const std::string& cache_dir) {
              HarnessOptions opts;
              if (!cache_dir.empty()) opts.cache_dir = std::filesystem::path(cache_dir);
              const auto study = study_from_json(json::parse(study_json));
              ConvergenceReport r;
              {
                  py::gil_scoped_release release;
                  r = run_convergence(study, opts);
              }
              return dump17(to_json(r));
          },
          py::arg("study_json"), py::arg("cache_dir") = "");
}
