import math
from pathlib import Path

import pytest

nmdtsa = pytest.importorskip("nmdtsa")
np = pytest.importorskip("numpy")

DATA = Path(__file__).resolve().parents[2] / "data"


def test_smib_mode_and_boundaries():
    out = nmdtsa.analyse(DATA / "smib" / "smib.json", methods=("fi", "zubov"), rays=36)
    assert len(out["modes"]) == 1
    # damped frequency from the linear part of the SMIB oscillator
    k = 376.99111843077515 / 6.0 * 1.7 * math.cos(math.radians(15.0))
    assert out["modes"][0]["frequency_hz"] == pytest.approx(math.sqrt(k - 1 / 144) / (2 * math.pi), rel=1e-9)
    fi, zb = out["oscillators"][0]["boundaries"]
    assert fi["method"] == "first_integral"
    assert fi["critical"] == pytest.approx(101.3, rel=0.01)
    assert zb["critical"] == pytest.approx(0.1142, rel=0.05)
    assert fi["polyline"].shape == (36, 4)


def test_ninebus_modes_and_residual():
    out = nmdtsa.analyse(DATA / "ninebus" / "postfault.json")
    freqs = sorted(m["frequency_hz"] for m in out["modes"])
    assert freqs == pytest.approx([0.96, 2.05], abs=0.02)
    assert out["decoupling_residual"] == 0.0


def test_tsa_verdicts():
    ok = nmdtsa.tsa(DATA / "smib" / "smib_stable.json", methods=("fi",))
    bad = nmdtsa.tsa(DATA / "smib" / "smib_unstable.json", methods=("fi",))
    assert ok["overall"] == "stable"
    assert bad["overall"] == "unstable"
    rep = nmdtsa.tsa(DATA / "ninebus" / "scenario_8cyc.json", procedure="2b", modes=[0, 1], methods=("fi",))
    ratios = [m["ratio"] for m in rep["modal_energy"]["modes"]]
    assert sum(ratios) == pytest.approx(1.0)


def test_simulate_and_errors(tmp_path):
    t, x, diverged = nmdtsa.simulate(str(DATA / "smib" / "smib_stable.json"))
    assert not diverged
    assert x.shape == (len(t), 4)
    bad = tmp_path / "bad.json"
    bad.write_text('{"machines": []}')
    with pytest.raises(ValueError):
        nmdtsa.analyse(bad)
