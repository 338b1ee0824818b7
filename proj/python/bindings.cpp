#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "spe/experiment.hpp"

namespace py = pybind11;
using namespace spe;

namespace {

// Self-contained single-trajectory run: returns rows (t, |v|, ||v||, |eta|).
std::vector<std::tuple<double, double, double, double>> simulate_norms(const std::string& cfg_text, int n) {
    StudyConfig cfg = StudyConfig::from_string(cfg_text);
    Grid grid(cfg.grid_L, cfg.grid_h, cfg.grid_Nx, cfg.grid_Nz);
    NoiseModel noise = make_noise(noise_kind_from_string(cfg.noise_kind), cfg.noise_m_W,
                                  cfg.effective_sigma(), grid);
    SplitConfig sc;
    sc.T = cfg.scheme_T;
    sc.n = n;
    sc.eps = EpsilonSplit(cfg.scheme_eps);
    sc.micro_det = cfg.scheme_micro_steps;
    sc.micro_sto = cfg.scheme_micro_steps;
    sc.grid = &grid;
    sc.noise = &noise;
    sc.v0 = cfg.initial_field(grid);
    BrownianPath path = sample_path(noise, cfg.study_seed, n * sc.micro_sto, cfg.scheme_T);
    SchemeHistory hist = run_splitting(sc, path);

    std::vector<std::tuple<double, double, double, double>> rows;
    const double delta = cfg.scheme_T / (n * cfg.scheme_micro_steps);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cfg.scheme_micro_steps; ++j) {
            double t = (i * cfg.scheme_micro_steps + j) * delta;
            Norms nv = norms(hist.v_micro[i][j]);
            Norms ne = norms(hist.eta_micro[i][j]);
            rows.emplace_back(t, nv.h_norm, nv.v_seminorm, ne.h_norm);
        }
    return rows;
}

std::string study_json(const std::string& cfg_text) {
    StudyConfig cfg = StudyConfig::from_string(cfg_text);
    StudyResult result = convergence_study(cfg);
    std::ostringstream os;
    write_study_json(os, cfg, result);
    return os.str();
}

}  // namespace

PYBIND11_MODULE(_spe, m) {
    m.doc() = "splitting-up scheme for the 2D stochastic primitive equations";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<blow_up_error>(m, "BlowUpError", PyExc_RuntimeError);

    py::class_<Grid>(m, "Grid")
        .def(py::init<double, double, int, int>(), py::arg("L"), py::arg("h"), py::arg("nx"), py::arg("nz"))
        .def_property_readonly("L", &Grid::L)
        .def_property_readonly("h", &Grid::h)
        .def_property_readonly("nx", &Grid::nx)
        .def_property_readonly("nz", &Grid::nz)
        .def("lam", &Grid::lambda, py::arg("k"), py::arg("m"));

    py::class_<Field>(m, "Field")
        .def(py::init<const Grid&>(), py::keep_alive<1, 2>())
        .def("get", [](const Field& f, int k, int m) { return f.at(k, m); })
        .def("set", [](Field& f, int k, int m, double v) { f.at(k, m) = v; })
        .def("h_admissible", [](const Field& f) { return f.h_admissible(); })
        .def("norms", [](const Field& f) {
            Norms n = norms(f);
            return py::make_tuple(n.h_norm, n.v_seminorm, n.h2_norm);
        });

    m.def("project_H", &project_H, py::keep_alive<0, 1>());
    m.def("apply_A", &apply_A, py::keep_alive<0, 1>());
    m.def("nonlinear_B", &nonlinear_B, py::keep_alive<0, 1>());
    m.def("trilinear_b", &trilinear_b);
    m.def("eval_field", &eval_field);

    m.def("simulate_norms", &simulate_norms, py::arg("config_text"), py::arg("n"));
    m.def("study_json", &study_json, py::arg("config_text"));
    m.def("config_hash",
          [](const std::string& text) { return StudyConfig::from_string(text).content_hash(); });
}
