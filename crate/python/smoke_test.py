"""Smoke test for the pfrac extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pfrac-*.whl
    python python/smoke_test.py
"""

import math
import pathlib
import sys
import tempfile

import pfrac


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    mat = pfrac.MaterialParams(210.0, 0.3, 5e-3)
    e22 = mat.constrained_uniaxial_modulus()
    assert close(e22, 282.6923076923077, 1e-12), e22

    at1 = pfrac.ModelConfig(1, 0.01)
    assert close(at1.critical_strain_energy(5e-3), 0.09375, 1e-12)
    q = pfrac.critical_quantities(at1, e22, 5e-3)
    assert close(q["eps_c"], 0.02575, 5e-3), q

    at2 = pfrac.ModelConfig(0, 0.01)
    x, d = pfrac.nonhomogeneous_profile(at2, e22, 5e-3, 0.0, 0.05)
    worst = max(abs(di - math.exp(-abs(xi) / 0.01)) for xi, di in zip(x, d))
    assert worst < 1e-6, worst

    try:
        pfrac.ModelConfig(3, 0.01)
    except pfrac.PfracError as e:
        assert "xi" in str(e)
    else:
        raise AssertionError("xi = 3 accepted")

    case1 = pfrac.failure_stress(pfrac.MaterialParams(210.0, 0.3, 2.7e-3), at2, 0.005, 0.5)
    assert close(case1["gc_eff"], 0.003375, 1e-12), case1
    assert close(case1["a0_eff"], 0.50628, 1e-5), case1

    mesh = pfrac.Mesh.structured(1.0, 1.0, 1, 1)
    sim = pfrac.Simulation(mesh, mat, at1, 0.1, 1000,
                           fixed=["bottom:xy", "top:x", "left:x", "right:x"], passes=2)
    curve = sim.run()
    peak = max(curve, key=lambda r: r[2])
    assert close(peak[1], 0.02575, 5e-3), peak
    assert all(0.0 <= v <= 1.0 for v in sim.d)

    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "snap.vtk"
        mesh.write_vtk(str(out), sim.u, sim.d)
        assert out.read_text().startswith("# vtk DataFile")

        preset = pathlib.Path(__file__).resolve().parent.parent / "presets" / "single-element-xi0.cfg"
        result = pfrac.simulate_config(str(preset), str(pathlib.Path(tmp) / "run"))
        assert close(result["displacement_at_peak"], 0.02428, 5e-3), result["displacement_at_peak"]

    print("pfrac smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
