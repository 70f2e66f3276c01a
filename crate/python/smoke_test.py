"""Smoke test for the tractor_calc_py extension.

Build and install first, e.g.
    maturin build --release -m crates/py/Cargo.toml && pip install target/wheels/tractor_calc_py-*.whl
then run `python python/smoke_test.py`.
"""

import math

import tractor_calc_py as tc


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    hyp = tc.Metric("hyperbolic", 4)
    for p in hyp.sample(1, 3):
        assert close(hyp.curvature(p)["j"], -2.0, 1e-10)
    sph = tc.Metric("sphere", 4)
    c = sph.curvature(sph.sample(2, 1)[0])
    assert all(close(s, 0.5 * g, 1e-10) for s, g in zip(c["schouten"], c["metric"]))

    table = tc.DtnTable(n=3, k=2, lmax=20)
    assert len(table) == 21
    for l, lam, fit in table.rows():
        assert close(lam, -(l + 1), 1e-7) and fit < 1e-6
    assert table.ratio_spread(15, 20) < 0.02

    # n = 3, k = 4: Λ_l = l(l+1)(l+2)/3
    t4 = tc.DtnTable(n=3, k=4, lmax=6)
    assert all(close(lam, l * (l + 1) * (l + 2) / 3, 1e-7) for l, lam, _ in t4.rows())

    dec = tc.MatrixDecomposition([["2", "1"], ["1", "2"]], ["1", "3"])
    r = dec.project(["5", "-1/2"])
    assert r["components"] == [["11/4", "-11/4"], ["9/4", "9/4"]]
    assert dec.identity_residual(["7", "1/3"]) == "0"

    inv = tc.check_invariance("boxk", 5, seed=7, points=5)
    assert inv["max_rel_err"] < 1e-8

    rc = tc.robin_constant(4, "1/2")
    assert close(rc["c"], 1.0 / 3.0, 1e-9)

    g = tc.gjms_parameters(4, 4)
    assert g["s"] == ["3", "2"]

    tr = tc.twisted_translation(lmax=8, max_grad=2)
    assert tr["asymmetry"] < 1e-6 and tr["max_gain"] > 1e-3

    rep = tc.run("curvature", metric="hyperbolic", dim=4, points=2)
    assert rep["pass"] and rep["config"]["dim"] == "4"

    try:
        tc.DtnTable(n=4, k=3)
    except tc.TractorCalcError as e:
        assert "even k" in str(e)
    else:
        raise AssertionError("odd order accepted")

    assert math.isfinite(table.s)
    print("smoke test passed")


if __name__ == "__main__":
    main()
