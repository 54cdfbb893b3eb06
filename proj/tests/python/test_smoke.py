import json
import math

import numpy as np
import pytest

import platelab


def test_catalog_and_determinants():
    names = platelab.catalog_names()
    assert len(names) == 7
    assert platelab.determinant("hinged")["determinant"] == pytest.approx(-2j, abs=1e-12)
    assert platelab.determinant("clamped")["determinant"] == pytest.approx(-1j, abs=1e-12)
    assert platelab.determinant("ex4_id_dn2_A", a=0.5)["determinant"] == pytest.approx(-2.5j, abs=1e-12)
    with pytest.raises(ValueError):
        platelab.determinant("ex3_dn_dn3_A", a=2.0)


def test_quartic_roots_solve_the_expanded_polynomial():
    xi, tau, sigma, dt, dn = 0.7, 1.3, 0.4, 0.2, 1.1
    roots = platelab.quartic_roots([xi], tau, sigma, [dt], dn)
    a = 1j * tau * dn
    r = complex(xi, tau * dt) ** 2
    q1 = np.array([1.0, 2 * a, a * a + r - sigma**2])
    q2 = np.array([1.0, 2 * a, a * a + r + sigma**2])
    ref = np.roots(np.polymul(q1, q2))
    for z in roots:
        assert np.min(np.abs(ref - z)) < 1e-9


def test_conjugated_check_agrees_with_oracles():
    r = platelab.ls_conjugated("clamped", [1.0], 1.0, 0.5, [0.1], 1.0)
    assert r["verdict"] == (r["rank"] == 4) == (r["positivity"] > 1e-14)


def test_hinged_spectrum_and_symmetry():
    mu = platelab.spectrum("hinged", n=200, count=5)
    ref = (np.arange(1, 6) * math.pi) ** 4
    assert np.all(np.abs(mu / ref - 1) < 5e-3)
    assert platelab.symmetry_residual("ex5_dn2A_dn3", n=50) < 1e-10
    m = platelab.operator_matrix("clamped", n=20)
    assert m.shape == (19, 19)
    assert abs(m - m.T).max() < 1e-9 * abs(m).max()


def test_simulation_is_dissipative():
    r = platelab.simulate("clamped", n=40, T=2.0, dt=0.01)
    e = np.array(r["energy"])
    assert r["monotone"]
    assert np.all(np.diff(e) <= 1e-12 * e[0])
    assert e[0] - e[-1] == pytest.approx(r["dissipated"], rel=1e-8)
    c = platelab.decay_fit(r["t"], r["energy"], 1, r["amp_A1"])
    assert math.isfinite(c) and c > 0
    with pytest.raises(ValueError):
        platelab.decay_fit(r["t"], r["energy"], 1, 0.0)


def test_resolvent_sweep():
    s = platelab.resolvent_sweep("clamped", n=30, hi=20.0, step=1.0, threads=1)
    assert len(s["sigma"]) == 21
    assert math.isfinite(s["fitted_c"])
    assert s["min_re"] > 0


def test_gamma_search():
    res = json.loads(platelab.gamma_search(points=17))
    assert res["found"]


def test_cli_exit_codes():
    code, out, _ = platelab.run_cli(["catalog"])
    assert code == 0 and len(json.loads(out)["pairs"]) == 7
    assert platelab.run_cli(["ls-check", "--bc", "degenerate_equal", "--tau", "0"])[0] == 1
    assert platelab.run_cli(["spectrum", "--n", "2"])[0] == 2
