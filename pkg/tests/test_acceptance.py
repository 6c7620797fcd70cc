"""Acceptance gate: one PASS/FAIL line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""
import math
import os
import statistics
import subprocess
import sys
import tempfile
import time

import pytest

from levyroot import experiments as E

TOL = E.DEFAULT_TOLERANCES


def _timed(fn, *a, **kw):
    t = time.perf_counter()
    ex = fn(*a, **kw)
    return ex, time.perf_counter() - t


def _checks(ex, *names):
    found = [c for c in ex.checks if any(c.name.startswith(n) for n in names)]
    assert len(found) == len(names)
    return found


def _fmt(checks):
    return "; ".join(f"{c.name} = {c.value:.3g} (limit {c.limit:.3g})" for c in checks)


def kernel_limits():
    ex, dt = _timed(E.kernel_limits, 1 - 1e-4, 0.5, TOL)
    return ex.passed and dt < 1.0, _fmt(ex.checks) + f"; runtime {dt:.2f} s (limit 1 s)"


def delta_action():
    ex = E.delta_action(1 - 1e-4, tol=TOL)
    return ex.passed, _fmt(ex.checks)


def theta_values():
    ex = E.theta_table((0.1, 0.5, 0.9, 0.999), TOL)
    return ex.passed, _fmt(ex.checks)


def deterministic_cesaro():
    ex = E.deterministic_cesaro(tol=TOL)
    return ex.passed and len(E.SMOOTH_COEFFS) == 9, _fmt(ex.checks)


_QV = {}


def _qv_theorem():
    if not _QV:
        _QV["ex"], _QV["dt"] = _timed(E.qv_theorem, range(20), 1 << 16, 4096, "brownian", TOL)
    return _QV["ex"], _QV["dt"]


def stochastic_cesaro():
    ex, dt = _qv_theorem()
    cs = _checks(ex, "seeds with Cesaro", "mean relative")
    ok = all(c.passed for c in cs) and dt < 60.0
    return ok, f"{cs[0].detail}; {_fmt(cs[1:])}; runtime {dt:.2f} s (limit 60 s)"


def abel_cesaro():
    ex, _ = _qv_theorem()
    cs = _checks(ex, "median |Abel")
    return cs[0].passed, _fmt(cs)


def scaling_identity():
    ex = E.scaling_identity(range(3), (0.5, 2.0, 3.0), tol=TOL)
    exact = [r["ulps"] for r in ex.rows if r["sigma"] != 3.0]
    worst3 = max(r["ulps"] for r in ex.rows if r["sigma"] == 3.0)
    ok = ex.passed and max(exact) == 0.0
    return ok, f"sigma in {{0.5, 2}}: bitwise equal; sigma = 3: worst {worst3:g} ulp (limit {TOL['scaling_ulps']:g})"


def gauss_suite():
    ex, dt = _timed(E.gauss_suite, 7, 20, 100, TOL)
    return ex.passed and dt < 10.0, _fmt(ex.checks) + f"; runtime {dt:.2f} s (limit 10 s)"


def spherical_kernel():
    ex = E.spherical_table((10, 50, 200), (0.1, 1.0), 1.0, TOL)
    return ex.passed, _fmt(ex.checks)


def difference_quotient():
    ex = E.difference_quotient((0.25, 1.0, 4.0), 1e-3, TOL)
    return ex.passed, _fmt(ex.checks)


def sandwich():
    ex = E.sandwich(range(10), 8, 14, tol=TOL)
    return ex.passed, ex.checks[0].detail


def schwarz():
    ex = E.schwarz_suite(12, 1000, 100, TOL)
    return ex.passed, _fmt(ex.checks)


CLI_RUNS = [
    ["paths-gen", "--kind", "brownian", "--seed", "1"],
    ["qv", "--kind", "brownian", "--seed", "1"],
    ["cesaro", "--kind", "brownian", "--seed", "1"],
    ["cesaro", "--kind", "smooth_fourier", "--steps", str(1 << 20)],
    ["abel", "--kind", "brownian", "--seed", "1"],
    ["kernels"],
    ["delta-action"],
    ["qv-theorem", "--seed", "0", "--seeds", "20"],
    ["gauss-suite", "--seed", "7"],
    ["spherical"],
    ["sandwich", "--seed", "0"],
    ["symbol-ensemble", "--seed", "0"],
]


def determinism():
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, argv in enumerate(CLI_RUNS):
            outs = []
            for rep in ("a", "b"):
                d = os.path.join(tmp, f"{i}{rep}")
                r = subprocess.run([sys.executable, "-m", "levyroot", "--out-dir", d, *argv],
                                   capture_output=True)
                if r.returncode != 0:
                    bad.append(f"{argv[0]} exit {r.returncode}")
                outs.append({n: open(os.path.join(d, n), "rb").read() for n in sorted(os.listdir(d))})
            if not outs[0] or outs[0] != outs[1]:
                bad.append(argv[0])
    files = "identical" if not bad else "differ: " + ", ".join(bad)
    return not bad, f"{len(CLI_RUNS)} command configurations run twice, artifacts {files}"


CRITERIA = [
    (1, "kernel moment limits", kernel_limits),
    (2, "approximate identity action", delta_action),
    (3, "kernel sign change theta_x", theta_values),
    (4, "finite-mode Cesaro means", deterministic_cesaro),
    (5, "Cesaro limit equals quadratic variation", stochastic_cesaro),
    (6, "Abel and Cesaro consistency", abel_cesaro),
    (7, "symbol scaling identity", scaling_identity),
    (8, "Gaussian calculus suite", gauss_suite),
    (9, "spherical kernel", spherical_kernel),
    (10, "difference quotient", difference_quotient),
    (11, "Riemann-sum sandwich", sandwich),
    (12, "Schwarz inequality", schwarz),
    (13, "reproducible artifacts", determinism),
]


def _line(num, name, fn):
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {num:2d} {name}: {detail}"


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"criterion_{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(num, name, fn, acceptance_log):
    ok, line = _line(num, name, fn)
    acceptance_log[num] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [_line(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
