import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levyroot import (ParameterError, TruncationError, abel_sum, cesaro_mean, cesaro_qv,
                      generate_path, path_abel, qv_limit_dyadic, tauberian_check)
from levyroot.summation import convergence_csv, schedules


def test_cesaro_constant():
    assert cesaro_mean(np.full(200, 2.0), 100) == pytest.approx(2.0 * 101 / 100)


def test_cesaro_impulse():
    assert cesaro_mean([1.0] + [0.0] * 200, 100) == pytest.approx(0.01)


def test_cesaro_needs_terms():
    with pytest.raises(ParameterError):
        cesaro_mean([1.0, 2.0], 5)
    with pytest.raises(ParameterError):
        cesaro_mean([1.0, 2.0], 0)


def test_abel_constant():
    for x in (0.0, 0.3, 0.9):
        assert abel_sum(np.full(2000, 3.0), x).value == pytest.approx(3.0, rel=1e-11)


def test_abel_impulse():
    assert abel_sum([1.0] + [0.0] * 100, 0.5).value == pytest.approx(0.5)


@pytest.mark.parametrize("x", [0.9, 0.99, 0.999])
def test_abel_alternating(x):
    seq = np.tile([1.0, 0.0], 40000)
    assert abel_sum(seq, x).value == pytest.approx(1 / (1 + x), rel=1e-10)


def test_abel_truncation_error_reports_achievable_bound():
    with pytest.raises(TruncationError) as e:
        abel_sum(np.ones(10), 0.99)
    assert e.value.achievable == pytest.approx(0.99 ** 10)


def test_abel_domain():
    with pytest.raises(ParameterError):
        abel_sum([1.0], 1.0)


def test_tauberian_constant_gap_vanishes():
    rep = tauberian_check(np.ones(1 << 16))
    assert rep.nonnegative
    assert rep.final_gap < 1e-3


def test_tauberian_negative_entry_flagged():
    seq = np.ones(4096)
    seq[5] = -1
    assert not tauberian_check(seq).nonnegative


def test_tauberian_brownian(bm42):
    from levyroot import coefficient_sequence
    seq = coefficient_sequence(bm42, 1 << 18).energy
    xs, ns = schedules(12, 8)
    rep = tauberian_check(seq, xs, ns)
    q = qv_limit_dyadic(bm42).qv
    assert rep.final_gap < 0.05 * q
    assert abs(rep.cesaro[-1] - q) < 0.15 * q


def test_cesaro_qv_linear():
    lin = generate_path("linear", 1.0, 1024)
    for n in (10, 100, 1000):
        assert cesaro_qv(lin, n) == pytest.approx(1 / n, rel=1e-12)


def test_cesaro_qv_smooth():
    c = [0.0, 0.8, -0.5, 0.3]
    p = generate_path("smooth_fourier", 1.0, 1 << 16, coeffs=c)
    for n in (16, 256):
        assert cesaro_qv(p, n) == pytest.approx(sum(v * v for v in c) / n, rel=1e-8)


def test_cesaro_qv_brownian(bm42):
    assert abs(cesaro_qv(bm42, 4096) - 1) < 0.15


def test_path_abel_grows_sequence(bm42):
    res = path_abel(bm42, 1 - 1 / 4096)
    assert res.terms > 64 and res.truncation_bound < 1e-12
    assert abs(res.value - cesaro_qv(bm42, 4096)) < 0.05


def test_convergence_csv():
    rows = [abel_sum([1.0, 1.0, 1.0], 0.0)]
    text = convergence_csv(rows)
    assert text.splitlines()[0].startswith("method")


@given(st.lists(st.floats(0, 100), min_size=5, max_size=50), st.integers(1, 4))
def test_cesaro_is_linear_and_monotone(seq, n):
    seq = np.array(seq)
    assert cesaro_mean(2 * seq, n) == pytest.approx(2 * cesaro_mean(seq, n))
    assert cesaro_mean(seq + 1, n) >= cesaro_mean(seq, n)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.floats(0, 0.5))
def test_abel_matches_direct_series(seq, x):
    padded = np.concatenate((seq, np.zeros(200)))
    direct = (1 - x) * math.fsum(v * x ** k for k, v in enumerate(seq))
    assert abel_sum(padded, x).value == pytest.approx(direct, abs=1e-11)
