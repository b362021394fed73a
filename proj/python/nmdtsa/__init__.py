"""Per-mode transient stability analysis by nonlinear modal decoupling."""

import json

from . import _core
from ._core import InputError, simulate

__all__ = ["InputError", "analyse", "simulate", "tsa"]


def analyse(path, k=3, modes=(), methods=("fi",), rays=180, L=16, phi=(0.0002, 0.001),
            force_uniform_damping=False):
    """Modes, mode oscillators and their boundaries for a system or scenario file."""
    out = _core.postfault(str(path), k, list(modes), list(methods), rays, L, tuple(phi), force_uniform_damping)
    for osc in out["oscillators"]:
        osc["row1"] = json.loads(osc["row1"])
        osc["row2"] = json.loads(osc["row2"])
        for b in osc["boundaries"]:
            b["meta"] = json.loads(b["meta"])
    return out


def tsa(path, procedure="1", modes=(), k=3, methods=("sim",), rays=180, L=16, phi=(0.0002, 0.001),
        force_uniform_damping=False):
    """Run procedure 1, 2a or 2b on a scenario file; returns the report as a dict."""
    return json.loads(_core.tsa(str(path), procedure, list(modes), k, list(methods), rays, L, tuple(phi),
                                force_uniform_damping))
