#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "nmdtsa/model.hpp"

namespace nmdtsa {

// Thrown for malformed input files; the message names the offending field.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// System file:
//   {"id": str, "omega_s": rad/s | "frequency_hz": Hz,
//    "machines": [{"id", "H", "D", "E", "Pm"}],
//    "network": {"g": [], "a": [[]], "b": [[]]}
//             | {"bus_admittance": {"real": [[]], "imag": [[]]}, "machine_nodes": [],
//                "machine_reactances": [], "grounded_buses": []}}
ClassicalSystem system_from_json(const nlohmann::json& j, const std::string& where = "system");
nlohmann::json system_to_json(const ClassicalSystem& sys);
ClassicalSystem load_system(const std::filesystem::path& path);
void save_system(const ClassicalSystem& sys, const std::filesystem::path& path);

// Scenario file: {"id", "prefault", "faulton", "postfault" (paths relative to
// the scenario file or inline system objects), "clearing_time" | "clearing_cycles",
// "horizon", "step"}.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                            const std::string& where = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace nmdtsa
