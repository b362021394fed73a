"""Writes the 3-machine 9-bus classical-model inputs.

Network and machine data are the widely published WSCC 3-machine 9-bus
values (Anderson and Fouad, Power System Control and Stability): line
impedances and charging, constant-impedance loads from the base-case power
flow, transient reactances x'_d, inertia H and internal EMFs E behind x'_d.

Contingency: three-phase fault at bus 5, cleared by tripping line 5-7.
Damping is uniform with D_i / (2 H_i) = 0.1 1/s (the source data carry no
damping; a uniform value is required by the analysis).

Run from this directory: python3 make_ninebus.py
"""
import cmath
import json
import math

LINES = [  # from, to, R, X, total charging B (p.u., 100 MVA base)
    (1, 4, 0.0, 0.0576, 0.0),
    (2, 7, 0.0, 0.0625, 0.0),
    (3, 9, 0.0, 0.0586, 0.0),
    (4, 5, 0.010, 0.085, 0.176),
    (4, 6, 0.017, 0.092, 0.158),
    (5, 7, 0.032, 0.161, 0.306),
    (6, 9, 0.039, 0.170, 0.358),
    (7, 8, 0.0085, 0.072, 0.149),
    (8, 9, 0.0119, 0.1008, 0.209),
]
VOLTAGE = {5: 0.996, 6: 1.013, 8: 1.016}       # load bus magnitudes from the power flow
LOADS = {5: (1.25, 0.5), 6: (0.9, 0.3), 8: (1.0, 0.35)}
H = [23.64, 6.40, 3.01]
XD = [0.0608, 0.1198, 0.1813]
E = [1.0566, 1.0502, 1.0170]
DELTA0_DEG = [2.2717, 19.7315, 13.1752]
GAMMA = 0.1
FREQ = 60.0


def bus_admittance(trip=None):
    y = [[0j] * 9 for _ in range(9)]
    for i, j, r, x, b in LINES:
        if trip and {i, j} == set(trip):
            continue
        yl = 1 / complex(r, x)
        a, c = i - 1, j - 1
        y[a][a] += yl + 0.5j * b
        y[c][c] += yl + 0.5j * b
        y[a][c] -= yl
        y[c][a] -= yl
    for bus, (p, q) in LOADS.items():
        y[bus - 1][bus - 1] += complex(p, -q) / VOLTAGE[bus] ** 2
    return y


def reduced_power(y):
    """Electrical power at the base-case angles, used to set P_m."""
    import numpy as np
    ya = np.zeros((12, 12), complex)
    ya[3:, 3:] = np.array(y)
    for g in range(3):
        yg = 1 / (1j * XD[g])
        ya[g, g] += yg
        ya[3 + g, 3 + g] += yg
        ya[g, 3 + g] -= yg
        ya[3 + g, g] -= yg
    yr = ya[:3, :3] - ya[:3, 3:] @ np.linalg.solve(ya[3:, 3:], ya[3:, :3])
    v = np.array([E[i] * cmath.exp(1j * math.radians(DELTA0_DEG[i])) for i in range(3)])
    return [float(p) for p in np.real(v * np.conj(yr @ v))]


def system(name, y, grounded):
    pm = reduced_power(bus_admittance())
    return {
        "id": name,
        "frequency_hz": FREQ,
        "machines": [
            {"id": f"G{i + 1}", "H": H[i], "D": 2 * GAMMA * H[i], "E": E[i], "Pm": round(pm[i], 9)}
            for i in range(3)
        ],
        "network": {
            "bus_admittance": {
                "real": [[v.real for v in row] for row in y],
                "imag": [[v.imag for v in row] for row in y],
            },
            "machine_nodes": [0, 1, 2],
            "machine_reactances": XD,
            "grounded_buses": grounded,
        },
    }


def dump(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    dump(system("ninebus_prefault", bus_admittance(), []), "prefault.json")
    dump(system("ninebus_faulton_bus5", bus_admittance(), [4]), "faulton.json")
    dump(system("ninebus_postfault_trip57", bus_admittance(trip=(5, 7)), []), "postfault.json")
    for cycles in (8, 9):
        dump({"id": f"ninebus_bus5_{cycles}cyc", "prefault": "prefault.json", "faulton": "faulton.json",
              "postfault": "postfault.json", "clearing_cycles": cycles, "horizon": 5.0, "step": 0.001},
             f"scenario_{cycles}cyc.json")
