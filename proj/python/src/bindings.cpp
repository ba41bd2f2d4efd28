#include "sem2d/error.hpp"
#include "sem2d/runner.hpp"
#include "sem2d/spectral.hpp"
#include "sem2d/steady.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;

namespace {

py::object to_python(const nlohmann::json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

sem::ScenarioConfig config_from(const py::object& source, std::optional<int> n)
{
    if (py::isinstance<py::dict>(source)) {
        const std::string text = py::module_::import("json").attr("dumps")(source).cast<std::string>();
        return sem::parse_config(nlohmann::json::parse(text), n);
    }
    return sem::load_config(source.cast<std::filesystem::path>(), n);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Spectral element solver on 2D multishapes";
    m.attr("__version__") = sem::kVersion;

    py::register_exception<sem::Error>(m, "Error");

    m.def("cheb_lobatto", [](int n) { return sem::NodeSet1D::cheb_lobatto(n).nodes(); }, py::arg("n"),
          "Chebyshev-Lobatto nodes on [-1, 1], descending.");
    m.def("diff_matrix", [](int n, int order) { return sem::diff_matrix(sem::NodeSet1D::cheb_lobatto(n), order); },
          py::arg("n"), py::arg("order") = 1);
    m.def("clenshaw_curtis", [](int n) { return sem::RowVector(sem::clenshaw_curtis_weights(sem::NodeSet1D::cheb_lobatto(n))); },
          py::arg("n"));

    py::class_<sem::MultiShape>(m, "MultiShape")
        .def_property_readonly("size", &sem::MultiShape::size)
        .def_property_readonly("num_elements", &sem::MultiShape::num_elements)
        .def_property_readonly("points", &sem::MultiShape::cart_points, "M x 2 Cartesian collocation points")
        .def_property_readonly("int_weights", [](const sem::MultiShape& ms) { return sem::RowVector(ms.int_row()); })
        .def_property_readonly("boundary", &sem::MultiShape::bound)
        .def("laplacian", [](const sem::MultiShape& ms) { return sem::SpMat(ms.lap()); })
        .def("gradient", [](const sem::MultiShape& ms) { return sem::SpMat(ms.grad()); })
        .def(
            "interpolate",
            [](const sem::MultiShape& ms, const sem::Vector& values, const sem::Matrix& targets) {
                std::vector<char> inside;
                const sem::SpMat p = ms.interpolation(targets, &inside);
                sem::Vector out = p * values;
                for (int k = 0; k < out.size(); ++k)
                    if (!inside[k]) out[k] = std::numeric_limits<double>::quiet_NaN();
                return out;
            },
            py::arg("values"), py::arg("targets"), "Interpolate nodal values; nan outside the domain.");

    m.def("validation_multishape", [](const std::string& c, int n) { return sem::make_validation_multishape(c, n); },
          py::arg("case"), py::arg("n_sigma"));
    m.def("validation_error", [](const std::string& c, const std::string& op, int n) { return sem::validation_error(c, op, n); },
          py::arg("case"), py::arg("operator"), py::arg("n_sigma"),
          "Error of one (case, operator) pair; operators: lap, grad, div, interp, int, conv, poisson.");
    m.def(
        "build_multishape",
        [](const py::object& config, std::optional<int> n) {
            const sem::ScenarioConfig cfg = config_from(config, n);
            return cfg.geometry.validation_case.empty()
                       ? sem::build_multishape(cfg.geometry)
                       : sem::make_validation_multishape(cfg.geometry.validation_case, cfg.geometry.validation_n);
        },
        py::arg("config"), py::arg("n") = py::none(), "Multishape of a scenario config (path or dict).");
    m.def(
        "run",
        [](const py::object& config, const std::string& out, std::optional<int> n, int threads) {
            const sem::ScenarioConfig cfg = config_from(config, n);
            sem::RunResult res;
            {
                py::gil_scoped_release release;
                res = sem::run_scenario(cfg, {out, threads});
            }
            return py::make_tuple(res.exit_code, to_python(res.manifest));
        },
        py::arg("config"), py::arg("out") = "", py::arg("n") = py::none(), py::arg("threads") = 0,
        "Run a scenario; returns (exit_code, manifest).");
    m.def("csv_schemas", [] { return to_python(sem::csv_schemas()); });
}
