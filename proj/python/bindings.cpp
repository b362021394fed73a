#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nmdtsa/io.hpp"
#include "nmdtsa/tsa.hpp"

namespace py = pybind11;
using namespace nmdtsa;

namespace {

struct Loaded {
    ClassicalSystem system;
    Eigen::VectorXd guess;
    std::optional<Scenario> scenario;
};

Loaded load_any(const std::string& path) {
    const auto j = read_json_file(path);
    if (j.contains("postfault")) {
        Scenario s = scenario_from_json(j, std::filesystem::path(path).parent_path());
        const ContingencyRun run = run_contingency_full(s);
        return {s.postfault, run.prefault_sep.delta, std::move(s)};
    }
    ClassicalSystem sys = system_from_json(j);
    const int m = sys.size();
    return {std::move(sys), Eigen::VectorXd::Zero(m), std::nullopt};
}

TsaOptions make_options(int k, const std::vector<std::string>& methods, int rays, int L,
                        std::pair<double, double> phi, bool force_uniform) {
    TsaOptions o;
    o.k = k;
    o.methods.clear();
    for (const auto& m : methods) o.methods.push_back(boundary_method_from_string(m));
    o.search.M = rays;
    o.level.M = rays;
    o.zubov.L = L;
    o.zubov.c1 = phi.first;
    o.zubov.c2 = phi.second;
    o.force_uniform_damping = force_uniform;
    return o;
}

Eigen::MatrixXd polyline_array(const BoundaryEstimate& b) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(b.polyline.size()), 4);
    for (std::size_t i = 0; i < b.polyline.size(); ++i) {
        const auto& q = b.polyline[i];
        p.row(static_cast<Eigen::Index>(i)) << q.angle_deg, q.w1, q.w2, q.bounded ? 1.0 : 0.0;
    }
    return p;
}

py::dict postfault(const std::string& path, int k, const std::vector<int>& modes, const std::vector<std::string>& methods,
                   int rays, int L, std::pair<double, double> phi, bool force_uniform) {
    const Loaded in = load_any(path);
    const TsaOptions o = make_options(k, methods, rays, L, phi, force_uniform);
    const PostFaultModel pm = build_postfault_model(in.system, in.guess, modes, o);
    py::list mode_rows;
    for (const auto& md : pm.modes.modes)
        mode_rows.append(py::dict(py::arg("index") = md.index, py::arg("frequency_hz") = md.frequency_hz,
                                  py::arg("damping_ratio") = md.damping_ratio, py::arg("lambda") = md.lambda));
    py::list oscs;
    for (const auto& osc : pm.oscillators) {
        py::list bounds;
        for (const auto& b : estimate_boundaries(osc, o))
            bounds.append(py::dict(py::arg("method") = to_string(b.method), py::arg("critical") = b.critical,
                                   py::arg("polyline") = polyline_array(b), py::arg("meta") = b.meta.dump()));
        oscs.append(py::dict(py::arg("mode") = osc.mode, py::arg("lambda") = osc.lambda,
                             py::arg("row1") = bipoly_to_json(osc.row1).dump(),
                             py::arg("row2") = bipoly_to_json(osc.row2).dump(), py::arg("boundaries") = bounds));
    }
    return py::dict(py::arg("modes") = mode_rows, py::arg("oscillators") = oscs,
                    py::arg("decoupling_residual") = inter_modal_residual(pm.nmd.decoupled.field));
}

std::string tsa(const std::string& path, const std::string& procedure, const std::vector<int>& modes, int k,
                const std::vector<std::string>& methods, int rays, int L, std::pair<double, double> phi,
                bool force_uniform) {
    const Scenario s = load_scenario(path);
    const TsaOptions o = make_options(k, methods, rays, L, phi, force_uniform);
    if (procedure == "1") return nmd_tsa_1(s, o).to_json().dump();
    if (procedure == "2a" || procedure == "2b") return nmd_tsa_2(s, modes, procedure == "2b", o).to_json().dump();
    throw std::invalid_argument("procedure must be 1, 2a or 2b");
}

py::tuple simulate(const std::string& path) {
    const Trajectory t = run_contingency(load_scenario(path));
    return py::make_tuple(t.times, t.states, t.diverged);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonlinear modal decoupling and per-mode transient stability analysis";
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    m.def("postfault", &postfault, py::arg("path"), py::arg("k") = 3, py::arg("modes") = std::vector<int>{},
          py::arg("methods") = std::vector<std::string>{"fi"}, py::arg("rays") = 180, py::arg("L") = 16,
          py::arg("phi") = std::pair<double, double>{0.0002, 0.001}, py::arg("force_uniform_damping") = false);
    m.def("tsa", &tsa, py::arg("path"), py::arg("procedure") = "1", py::arg("modes") = std::vector<int>{},
          py::arg("k") = 3, py::arg("methods") = std::vector<std::string>{"sim"}, py::arg("rays") = 180,
          py::arg("L") = 16, py::arg("phi") = std::pair<double, double>{0.0002, 0.001},
          py::arg("force_uniform_damping") = false);
    m.def("simulate", &simulate, py::arg("path"));
}
