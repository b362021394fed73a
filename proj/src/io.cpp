#include "nmdtsa/io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace nmdtsa {

using json = nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw InputError(where + "." + key + ": missing field");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw InputError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(where + ": not finite");
    return v;
}

double number_field(const json& j, const std::string& key, const std::string& where) {
    return number(field(j, key, where), where + "." + key);
}

Eigen::VectorXd vector_of(const json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

Eigen::MatrixXd matrix_of(const json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? (j[0].is_array() ? j[0].size() : 0) : 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string wr = where + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != cols) throw InputError(wr + ": ragged or non-array row");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(j[r][c], wr + "[" + std::to_string(c) + "]");
    }
    return m;
}

std::vector<int> index_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array of indices");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer()) throw InputError(where + "[" + std::to_string(i) + "]: expected an integer");
        out.push_back(j[i].get<int>());
    }
    return out;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path.string() + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

ClassicalSystem system_from_json(const json& j, const std::string& where) {
    double omega_s = 0.0;
    if (j.contains("omega_s"))
        omega_s = number_field(j, "omega_s", where);
    else if (j.contains("frequency_hz"))
        omega_s = 2.0 * std::numbers::pi * number_field(j, "frequency_hz", where);
    else
        throw InputError(where + ".omega_s: missing field (or give frequency_hz)");

    const json& jm = field(j, "machines", where);
    if (!jm.is_array()) throw InputError(where + ".machines: expected an array");
    std::vector<Machine> machines;
    for (std::size_t i = 0; i < jm.size(); ++i) {
        const std::string w = where + ".machines[" + std::to_string(i) + "]";
        Machine mc;
        mc.id = jm[i].value("id", "G" + std::to_string(i + 1));
        mc.inertia_H = number_field(jm[i], "H", w);
        mc.damping_D = number_field(jm[i], "D", w);
        mc.emf_E = number_field(jm[i], "E", w);
        mc.pmech = number_field(jm[i], "Pm", w);
        if (!(mc.inertia_H > 0.0)) throw InputError(w + ".H: must be positive");
        if (!(mc.emf_E > 0.0)) throw InputError(w + ".E: must be positive");
        if (mc.damping_D < 0.0) throw InputError(w + ".D: must be non-negative");
        machines.push_back(std::move(mc));
    }
    const int m = static_cast<int>(machines.size());

    const std::string wn = where + ".network";
    const json& jn = field(j, "network", where);
    ReducedNetwork net;
    if (jn.contains("bus_admittance")) {
        const json& y = field(jn, "bus_admittance", wn);
        const Eigen::MatrixXd re = matrix_of(field(y, "real", wn + ".bus_admittance"), wn + ".bus_admittance.real");
        const Eigen::MatrixXd im = matrix_of(field(y, "imag", wn + ".bus_admittance"), wn + ".bus_admittance.imag");
        if (re.rows() != re.cols() || im.rows() != re.rows() || im.cols() != re.cols())
            throw InputError(wn + ".bus_admittance: real and imag must be equal square matrices");
        KronInput in;
        in.bus_admittance = re.cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
        in.machine_nodes = index_list(field(jn, "machine_nodes", wn), wn + ".machine_nodes");
        if (jn.contains("machine_reactances")) {
            const Eigen::VectorXd x = vector_of(jn["machine_reactances"], wn + ".machine_reactances");
            in.machine_reactances.assign(x.data(), x.data() + x.size());
        }
        if (jn.contains("grounded_buses")) in.grounded_buses = index_list(jn["grounded_buses"], wn + ".grounded_buses");
        if (static_cast<int>(in.machine_nodes.size()) != m)
            throw InputError(wn + ".machine_nodes: expected one node per machine (" + std::to_string(m) + ")");
        std::vector<double> emf;
        for (const auto& mc : machines) emf.push_back(mc.emf_E);
        try {
            net = kron_reduce(in, emf).network;
        } catch (const std::exception& e) {
            throw InputError(wn + ": " + e.what());
        }
    } else {
        net.g = vector_of(field(jn, "g", wn), wn + ".g");
        net.a = matrix_of(field(jn, "a", wn), wn + ".a");
        net.b = matrix_of(field(jn, "b", wn), wn + ".b");
        if (net.g.size() != m) throw InputError(wn + ".g: expected " + std::to_string(m) + " entries");
        if (net.a.rows() != m || net.a.cols() != m) throw InputError(wn + ".a: expected an m x m matrix");
        if (net.b.rows() != m || net.b.cols() != m) throw InputError(wn + ".b: expected an m x m matrix");
    }
    try {
        return ClassicalSystem(std::move(machines), std::move(net), omega_s, j.value("id", std::string{}));
    } catch (const std::invalid_argument& e) {
        throw InputError(where + ": " + e.what());
    }
}

json system_to_json(const ClassicalSystem& sys) {
    json machines = json::array();
    for (const auto& mc : sys.machines())
        machines.push_back({{"id", mc.id}, {"H", mc.inertia_H}, {"D", mc.damping_D}, {"E", mc.emf_E}, {"Pm", mc.pmech}});
    const auto& n = sys.network();
    auto rows = [](const Eigen::MatrixXd& m) {
        json out = json::array();
        for (int i = 0; i < m.rows(); ++i) {
            json r = json::array();
            for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
            out.push_back(r);
        }
        return out;
    };
    std::vector<double> g(n.g.data(), n.g.data() + n.g.size());
    return {{"id", sys.id()},
            {"omega_s", sys.omega_s()},
            {"machines", machines},
            {"network", {{"g", g}, {"a", rows(n.a)}, {"b", rows(n.b)}}}};
}

ClassicalSystem load_system(const std::filesystem::path& path) {
    return system_from_json(read_json_file(path), path.filename().string());
}

void save_system(const ClassicalSystem& sys, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError(path.string() + ": cannot write file");
    out << system_to_json(sys).dump(2) << '\n';
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir, const std::string& where) {
    auto system_ref = [&](const std::string& key) {
        const json& v = field(j, key, where);
        if (v.is_string()) {
            const std::filesystem::path p = base_dir / v.get<std::string>();
            if (!std::filesystem::exists(p)) throw InputError(where + "." + key + ": file not found: " + p.string());
            return system_from_json(read_json_file(p), where + "." + key);
        }
        return system_from_json(v, where + "." + key);
    };
    ClassicalSystem pre = system_ref("prefault");
    ClassicalSystem fault = system_ref("faulton");
    ClassicalSystem post = system_ref("postfault");
    double tc = 0.0;
    if (j.contains("clearing_time"))
        tc = number_field(j, "clearing_time", where);
    else if (j.contains("clearing_cycles"))
        tc = number_field(j, "clearing_cycles", where) * 2.0 * std::numbers::pi / pre.omega_s();
    else
        throw InputError(where + ".clearing_time: missing field (or give clearing_cycles)");
    Scenario s{std::move(pre), std::move(fault), std::move(post), tc, number_field(j, "horizon", where),
               j.contains("step") ? number_field(j, "step", where) : 1e-3, j.value("id", std::string{})};
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(where + ": " + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InputError(path.string() + ": file not found");
    return scenario_from_json(read_json_file(path), path.parent_path(), path.filename().string());
}

}  // namespace nmdtsa
